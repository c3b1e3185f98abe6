//! Dense real vectors with the Euclidean inner product.
//!
//! [`Vector`] is the numeric substrate of the crate. Every constructor and
//! arithmetic operation rejects NaN and infinite entries, so an iterate that
//! blows up is caught at the first operation that produces it instead of
//! silently propagating through thousands of steps.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for equality comparisons.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A point of `R^n`, `n >= 1`, with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "vector construction",
            });
        }
        Ok(Vector(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    /// The zero vector of dimension `dim`.
    ///
    /// # Panics
    ///
    /// Panics if `dim == 0`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> + '_ {
        self.0.iter()
    }

    /// Builds a vector from a computed buffer, rejecting non-finite results.
    pub(crate) fn from_computed(entries: Vec<f64>, context: &'static str) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context });
        }
        Ok(Vector(entries))
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::Dimension {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }

    pub fn inner(&self, other: &Vector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        other.check_dim(self.dim())?;
        let out = self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect();
        Vector::from_computed(out, "vector addition")
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        other.check_dim(self.dim())?;
        let out = self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect();
        Vector::from_computed(out, "vector subtraction")
    }

    pub fn scale(&self, factor: f64) -> Result<Vector> {
        let out = self.0.iter().map(|a| factor * a).collect();
        Vector::from_computed(out, "vector scaling")
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Vector) -> Result<Vector> {
        other.check_dim(self.dim())?;
        let out = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a + factor * b)
            .collect();
        Vector::from_computed(out, "vector axpy")
    }

    /// The convex-style combination `t * self + (1 - t) * other`.
    ///
    /// Both the viscosity step and the anchored (Halpern) step go through
    /// this single routine, which keeps those two iterations bit-identical
    /// when the contraction is a constant map.
    pub fn mix(&self, t: f64, other: &Vector) -> Result<Vector> {
        other.check_dim(self.dim())?;
        let s = 1.0 - t;
        let out = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| t * a + s * b)
            .collect();
        Vector::from_computed(out, "vector combination")
    }

    pub fn distance(&self, other: &Vector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn max_abs_diff(&self, other: &Vector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &Vector, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other).is_ok_and(|d| d <= tol)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Vector::new(entries)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Vector").field(&self.0).finish()
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Euclidean inner product.
pub fn inner(x: &Vector, y: &Vector) -> Result<f64> {
    x.inner(y)
}

/// Euclidean norm.
pub fn norm(x: &Vector) -> f64 {
    x.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(), 11.0);
        assert_eq!(inner(&v(&[2.0, 3.0]), &v(&[5.0, 5.0])).unwrap(), 25.0);
        assert_eq!(inner(&v(&[-7.5, 2.0]), &Vector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn inner_dimension_mismatch() {
        let err = inner(&v(&[1.0, 2.0]), &v(&[1.0])).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&v(&[3.0, 4.0])), 5.0);
        assert_eq!(norm(&Vector::zeros(3)), 0.0);
        assert!((norm(&v(&[1.0, 1.0])) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(Vector::new(vec![]), Err(Error::EmptyVector)));
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        let big = v(&[f64::MAX]);
        assert!(big.scale(10.0).is_err());
    }

    #[test]
    fn serde_validates() {
        let ok: Vector = from_toml("[1.0, 2.0]");
        assert_eq!(ok, v(&[1.0, 2.0]));
    }

    fn from_toml(s: &str) -> Vector {
        #[derive(Deserialize)]
        struct W {
            x: Vector,
        }
        toml::from_str::<W>(&format!("x = {s}")).unwrap().x
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(-100.0..100.0f64, n),
                prop::collection::vec(-100.0..100.0f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn cauchy_schwarz((a, b) in pair()) {
            let (x, y) = (v(&a), v(&b));
            let lhs = x.inner(&y).unwrap().abs();
            prop_assert!(lhs <= x.norm() * y.norm() * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn convex_combination_of_squares((a, b) in pair(), t in 0.0..=1.0f64) {
            let (u, w) = (v(&a), v(&b));
            let lhs = u.mix(t, &w).unwrap().norm_squared();
            let rhs = t * u.norm_squared() + (1.0 - t) * w.norm_squared();
            prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs));
        }

        #[test]
        fn sum_square_bound((a, b) in pair()) {
            let (u, w) = (v(&a), v(&b));
            let s = u.add(&w).unwrap();
            let rhs = u.norm_squared() + 2.0 * w.inner(&s).unwrap();
            prop_assert!(s.norm_squared() <= rhs + 1e-9 * (1.0 + s.norm_squared()));
        }

        #[test]
        fn inner_is_symmetric((a, b) in pair()) {
            let (x, y) = (v(&a), v(&b));
            prop_assert_eq!(x.inner(&y).unwrap(), y.inner(&x).unwrap());
        }
    }
}
