//! Mappings and the operators built from them.
//!
//! A [`Mapping`] is a map on `R^n` tagged with the role it plays in a
//! [`Problem`] (contraction, nonexpansive, or inverse strongly monotone)
//! and the modulus certifying that role. On top of these sit the forward
//! step `x - lambda A x`, the projected forward operator
//! `P_Q(x - lambda A x)` and the one-parameter viscosity map
//! `t f(x) + (1 - t) S P_Q(x - mu A x)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projections::ConvexSet;
use crate::space::Vector;

/// Lipschitz bound of the two-dimensional test contraction.
pub const CONTRACTION_MODULUS: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Number of random pairs used to spot-check a declared modulus.
pub const MODULUS_CHECK_PAIRS: usize = 1000;

const POWER_ITERATION_TOL: f64 = 1e-12;
const POWER_ITERATION_MAX: usize = 10_000;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Parameter("matrix must be nonempty".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::Dimension {
                expected: n_cols,
                found: bad.len(),
            });
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "matrix construction",
            });
        }
        Ok(Matrix {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.cols)?;
        let out = self
            .data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
            .collect();
        Vector::from_computed(out, "matrix-vector product")
    }

    pub fn mul_transpose_vec(&self, y: &Vector) -> Result<Vector> {
        y.check_dim(self.rows)?;
        let mut out = vec![0.0; self.cols];
        for (row, yi) in self.data.chunks(self.cols).zip(y.iter()) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        Vector::from_computed(out, "transposed matrix-vector product")
    }

    /// `B^T B`, symmetric of size `cols x cols`.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = (0..self.rows)
                    .map(|r| self.get(r, i) * self.get(r, j))
                    .sum();
            }
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Matrix").field(&self.to_rows()).finish()
    }
}

/// Largest eigenvalue of `B^T B`, i.e. the Lipschitz constant of the
/// gradient of `x -> 1/2 |Bx - b|^2`.
///
/// Closed forms are used up to 3 columns; larger matrices fall back to
/// power iteration.
pub fn ls_lipschitz(b: &Matrix) -> f64 {
    let g = b.gram();
    match g.rows {
        1 => g.get(0, 0),
        2 => {
            let (a, c, off) = (g.get(0, 0), g.get(1, 1), g.get(0, 1));
            0.5 * (a + c) + (0.25 * (a - c) * (a - c) + off * off).sqrt()
        }
        3 => symmetric3_max_eigenvalue(&g),
        _ => power_iteration(&g),
    }
}

// Trigonometric solution of the characteristic cubic of a symmetric 3x3
// matrix.
fn symmetric3_max_eigenvalue(g: &Matrix) -> f64 {
    let a = |i, j| g.get(i, j);
    let p1 = a(0, 1).powi(2) + a(0, 2).powi(2) + a(1, 2).powi(2);
    let trace = a(0, 0) + a(1, 1) + a(2, 2);
    let q = trace / 3.0;
    if p1 == 0.0 {
        return a(0, 0).max(a(1, 1)).max(a(2, 2));
    }
    let p2 = (a(0, 0) - q).powi(2) + (a(1, 1) - q).powi(2) + (a(2, 2) - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let bm = |i, j| (a(i, j) - if i == j { q } else { 0.0 }) / p;
    let det = bm(0, 0) * (bm(1, 1) * bm(2, 2) - bm(1, 2) * bm(2, 1))
        - bm(0, 1) * (bm(1, 0) * bm(2, 2) - bm(1, 2) * bm(2, 0))
        + bm(0, 2) * (bm(1, 0) * bm(2, 1) - bm(1, 1) * bm(2, 0));
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

fn power_iteration(g: &Matrix) -> f64 {
    let n = g.rows;
    // slightly uneven start so it is not orthogonal to common eigenvectors
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * i as f64).collect();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_MAX {
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| g.get(i, j) * v[j]).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
            / v.iter().map(|x| x * x).sum::<f64>();
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - estimate).abs() <= POWER_ITERATION_TOL * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// The least-squares objective `phi(x) = 1/2 |Bx - b|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    matrix: Matrix,
    rhs: Vector,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(matrix: Matrix, rhs: Vector) -> Result<Self> {
        rhs.check_dim(matrix.rows())?;
        let lipschitz = ls_lipschitz(&matrix);
        if lipschitz <= 0.0 {
            return Err(Error::Parameter(
                "least-squares matrix must be nonzero".into(),
            ));
        }
        Ok(LeastSquares {
            matrix,
            rhs,
            lipschitz,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        let r = self.matrix.mul_vec(x)?.sub(&self.rhs)?;
        Ok(0.5 * r.norm_squared())
    }

    /// `B^T (Bx - b)`.
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        let r = self.matrix.mul_vec(x)?.sub(&self.rhs)?;
        self.matrix.mul_transpose_vec(&r)
    }
}

/// The role a mapping plays, with the modulus certifying it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// `|f x - f y| <= rho |x - y|`, `rho` in `[0, 1)`.
    Contraction,
    /// `|S x - S y| <= |x - y|`.
    Nonexpansive,
    /// `<Ax - Ay, x - y> >= nu |Ax - Ay|^2`, `nu > 0`.
    InverseStronglyMonotone,
}

type CustomFn = dyn Fn(&Vector) -> Result<Vector> + Send + Sync;

#[derive(Clone)]
pub enum MappingKind {
    Identity {
        dim: usize,
    },
    /// `f(x) = 1/2 (5 + cos(x1 + x2), 6 - sin(x1 + x2))` on `R^2`.
    PaperContraction,
    ConstantAnchor(Vector),
    LeastSquaresGradient(LeastSquares),
    Affine {
        matrix: Matrix,
        offset: Vector,
    },
    Custom {
        name: String,
        dim: usize,
        func: Arc<CustomFn>,
    },
}

impl fmt::Debug for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MappingKind::Identity { dim } => write!(f, "Identity({dim})"),
            MappingKind::PaperContraction => write!(f, "PaperContraction"),
            MappingKind::ConstantAnchor(u) => write!(f, "ConstantAnchor({u})"),
            MappingKind::LeastSquaresGradient(ls) => {
                write!(f, "LeastSquaresGradient({:?}, {})", ls.matrix, ls.rhs)
            }
            MappingKind::Affine { matrix, offset } => write!(f, "Affine({matrix:?}, {offset})"),
            MappingKind::Custom { name, dim, .. } => write!(f, "Custom({name}, {dim})"),
        }
    }
}

/// A map on `R^n` with a certified role.
#[derive(Debug, Clone)]
pub struct Mapping {
    kind: MappingKind,
    role: Role,
    modulus: f64,
}

impl Mapping {
    pub fn identity(dim: usize) -> Self {
        Mapping {
            kind: MappingKind::Identity { dim },
            role: Role::Nonexpansive,
            modulus: 1.0,
        }
    }

    pub fn paper_contraction() -> Self {
        Mapping {
            kind: MappingKind::PaperContraction,
            role: Role::Contraction,
            modulus: CONTRACTION_MODULUS,
        }
    }

    /// The constant map `x -> u`, a contraction with modulus 0.
    pub fn constant(anchor: Vector) -> Self {
        Mapping {
            kind: MappingKind::ConstantAnchor(anchor),
            role: Role::Contraction,
            modulus: 0.0,
        }
    }

    /// Gradient of `1/2 |Bx - b|^2`; its inverse strong monotonicity modulus
    /// is always `1 / L` with `L` from [`ls_lipschitz`].
    pub fn least_squares_gradient(matrix: Matrix, rhs: Vector) -> Result<Self> {
        let ls = LeastSquares::new(matrix, rhs)?;
        let modulus = 1.0 / ls.lipschitz();
        Ok(Mapping {
            kind: MappingKind::LeastSquaresGradient(ls),
            role: Role::InverseStronglyMonotone,
            modulus,
        })
    }

    /// `x -> Mx + c` with a declared role; the modulus is spot-checked.
    pub fn affine(matrix: Matrix, offset: Vector, role: Role, modulus: f64) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::Parameter(
                "affine map requires a square matrix".into(),
            ));
        }
        offset.check_dim(matrix.rows())?;
        let map = Mapping {
            kind: MappingKind::Affine { matrix, offset },
            role,
            modulus,
        };
        map.validate_modulus()?;
        verify_modulus(&map, None, MODULUS_CHECK_PAIRS, 0)?;
        Ok(map)
    }

    pub fn kind(&self) -> &MappingKind {
        &self.kind
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// `rho` for contractions, 1 for nonexpansive maps, `nu` for inverse
    /// strongly monotone maps.
    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    /// The dimension the mapping acts on.
    pub fn dim(&self) -> usize {
        match &self.kind {
            MappingKind::Identity { dim } | MappingKind::Custom { dim, .. } => *dim,
            MappingKind::PaperContraction => 2,
            MappingKind::ConstantAnchor(u) => u.dim(),
            MappingKind::LeastSquaresGradient(ls) => ls.matrix.cols(),
            MappingKind::Affine { matrix, .. } => matrix.cols(),
        }
    }

    pub fn least_squares(&self) -> Option<&LeastSquares> {
        match &self.kind {
            MappingKind::LeastSquaresGradient(ls) => Some(ls),
            _ => None,
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim())?;
        match &self.kind {
            MappingKind::Identity { .. } => Ok(x.clone()),
            MappingKind::PaperContraction => {
                let s = x[0] + x[1];
                Vector::from_computed(
                    vec![0.5 * (5.0 + s.cos()), 0.5 * (6.0 - s.sin())],
                    "contraction",
                )
            }
            MappingKind::ConstantAnchor(u) => Ok(u.clone()),
            MappingKind::LeastSquaresGradient(ls) => ls.gradient(x),
            MappingKind::Affine { matrix, offset } => matrix.mul_vec(x)?.add(offset),
            MappingKind::Custom { name, dim, func } => {
                let y = func(x)?;
                if y.dim() != *dim {
                    return Err(Error::Parameter(format!(
                        "custom mapping `{name}` returned dimension {}, expected {dim}",
                        y.dim()
                    )));
                }
                Ok(y)
            }
        }
    }

    fn validate_modulus(&self) -> Result<()> {
        let m = self.modulus;
        let ok = match self.role {
            Role::Contraction => (0.0..1.0).contains(&m),
            Role::Nonexpansive => m == 1.0,
            Role::InverseStronglyMonotone => m > 0.0 && m.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "modulus {m} is not admissible for role {:?}",
                self.role
            )))
        }
    }
}

/// Free-function form of [`Mapping::apply`].
pub fn apply(map: &Mapping, x: &Vector) -> Result<Vector> {
    map.apply(x)
}

/// Checks a mapping's declared modulus on random pairs drawn from `domain`
/// (or from `[-10, 10]^n` when no domain is given).
pub fn verify_modulus(
    map: &Mapping,
    domain: Option<&ConvexSet>,
    pairs: usize,
    seed: u64,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = map.dim();
    let draw = |rng: &mut ChaCha8Rng| -> Result<Vector> {
        match domain {
            Some(set) => set.sample(rng, 10.0),
            None => Vector::from_computed(
                (0..n).map(|_| 20.0 * rng.gen::<f64>() - 10.0).collect(),
                "sampling",
            ),
        }
    };
    for _ in 0..pairs {
        let x = draw(&mut rng)?;
        let y = draw(&mut rng)?;
        let dx = x.sub(&y)?;
        let dm = map.apply(&x)?.sub(&map.apply(&y)?)?;
        let scale = 1e-10 * (1.0 + dx.norm_squared() + dm.norm_squared());
        let holds = match map.role {
            Role::Contraction | Role::Nonexpansive => {
                dm.norm_squared() <= map.modulus * map.modulus * dx.norm_squared() + scale
            }
            Role::InverseStronglyMonotone => {
                dm.inner(&dx)? >= map.modulus * dm.norm_squared() - scale
            }
        };
        if !holds {
            return Err(Error::ModulusViolation(format!(
                "{:?} with modulus {} fails at x = {x}, y = {y}",
                map.role, map.modulus
            )));
        }
    }
    Ok(())
}

/// Named custom mappings with certified roles.
#[derive(Debug, Clone, Default)]
pub struct MappingRegistry {
    entries: BTreeMap<String, Mapping>,
}

impl MappingRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `func` under `name`. The declared modulus is spot-checked on
    /// [`MODULUS_CHECK_PAIRS`] random pairs from `domain`; registration is
    /// refused if any pair violates it.
    pub fn register<F>(
        &mut self,
        name: &str,
        dim: usize,
        role: Role,
        modulus: f64,
        domain: Option<&ConvexSet>,
        func: F,
    ) -> Result<()>
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::Parameter(
                "custom mapping dimension must be positive".into(),
            ));
        }
        let map = Mapping {
            kind: MappingKind::Custom {
                name: name.to_string(),
                dim,
                func: Arc::new(func),
            },
            role,
            modulus,
        };
        map.validate_modulus()?;
        verify_modulus(&map, domain, MODULUS_CHECK_PAIRS, 0)?;
        self.entries.insert(name.to_string(), map);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Mapping> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownMapping(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// What to do when a step size leaves `[0, 2 nu]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationPolicy {
    /// Compute anyway; callers record the violation.
    #[default]
    Warn,
    /// Refuse with [`Error::ScheduleViolation`].
    Deny,
}

/// Whether `lambda` lies in `[0, 2 nu]`; returns the violation otherwise.
pub fn check_step_size(lambda: f64, nu: f64) -> Option<Error> {
    let upper = 2.0 * nu;
    if (0.0..=upper).contains(&lambda) {
        None
    } else {
        Some(Error::ScheduleViolation { lambda, upper })
    }
}

/// `x - lambda A x`.
pub fn forward_step(
    x: &Vector,
    a: &Mapping,
    lambda: f64,
    policy: ViolationPolicy,
) -> Result<Vector> {
    if policy == ViolationPolicy::Deny {
        if let Some(err) = check_step_size(lambda, a.modulus()) {
            return Err(err);
        }
    }
    x.axpy(-lambda, &a.apply(x)?)
}

/// The data of a variational problem: find points of `Fix(S) ∩ VI(A, Q)`,
/// selecting the one singled out by the contraction `f`.
#[derive(Debug, Clone)]
pub struct Problem {
    set_q: ConvexSet,
    map_s: Mapping,
    map_a: Mapping,
    map_f: Mapping,
    omega: Option<ConvexSet>,
    policy: ViolationPolicy,
}

const INVARIANCE_SAMPLES: usize = 100;

impl Problem {
    /// Validates roles, dimensions and moduli, and spot-checks that `f` and
    /// `S` map `Q` into `Q`.
    pub fn new(
        set_q: ConvexSet,
        map_s: Mapping,
        map_a: Mapping,
        map_f: Mapping,
        omega: Option<ConvexSet>,
    ) -> Result<Self> {
        set_q.validate()?;
        let n = set_q.dim();
        for map in [&map_s, &map_a, &map_f] {
            if map.dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: map.dim(),
                });
            }
            map.validate_modulus()?;
        }
        if let Some(omega) = &omega {
            omega.validate()?;
            if omega.dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: omega.dim(),
                });
            }
        }
        if map_f.role() != Role::Contraction {
            return Err(Error::Parameter("f must be a contraction".into()));
        }
        if map_s.role() == Role::InverseStronglyMonotone {
            return Err(Error::Parameter("S must be nonexpansive".into()));
        }
        if map_a.role() != Role::InverseStronglyMonotone {
            return Err(Error::Parameter(
                "A must be inverse strongly monotone".into(),
            ));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..INVARIANCE_SAMPLES {
            let x = set_q.sample(&mut rng, 10.0)?;
            for (name, map) in [("f", &map_f), ("S", &map_s)] {
                let y = map.apply(&x)?;
                if !set_q.contains(&y, 1e-8)? {
                    return Err(Error::Parameter(format!(
                        "{name} maps {x} outside Q (to {y})"
                    )));
                }
            }
        }
        Ok(Problem {
            set_q,
            map_s,
            map_a,
            map_f,
            omega,
            policy: ViolationPolicy::default(),
        })
    }

    pub fn with_policy(mut self, policy: ViolationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn set_q(&self) -> &ConvexSet {
        &self.set_q
    }

    pub fn map_s(&self) -> &Mapping {
        &self.map_s
    }

    pub fn map_a(&self) -> &Mapping {
        &self.map_a
    }

    pub fn map_f(&self) -> &Mapping {
        &self.map_f
    }

    pub fn omega(&self) -> Option<&ConvexSet> {
        self.omega.as_ref()
    }

    pub fn policy(&self) -> ViolationPolicy {
        self.policy
    }

    pub fn dim(&self) -> usize {
        self.set_q.dim()
    }

    /// Contraction modulus `rho` of `f`.
    pub fn rho(&self) -> f64 {
        self.map_f.modulus()
    }

    /// `1 - rho`.
    pub fn sigma(&self) -> f64 {
        1.0 - self.rho()
    }

    /// Inverse strong monotonicity modulus of `A`.
    pub fn nu(&self) -> f64 {
        self.map_a.modulus()
    }

    /// Same problem with the contraction replaced.
    pub fn with_contraction(&self, map_f: Mapping) -> Result<Self> {
        Problem::new(
            self.set_q.clone(),
            self.map_s.clone(),
            self.map_a.clone(),
            map_f,
            self.omega.clone(),
        )
        .map(|p| p.with_policy(self.policy))
    }
}

/// `P_Q(x - lambda A x)`.
pub fn theta_map(x: &Vector, problem: &Problem, lambda: f64) -> Result<Vector> {
    let y = forward_step(x, &problem.map_a, lambda, problem.policy)?;
    problem.set_q.project(&y)
}

/// `S P_Q(x - lambda A x)`.
pub(crate) fn nonexpansive_part(x: &Vector, problem: &Problem, lambda: f64) -> Result<Vector> {
    problem.map_s.apply(&theta_map(x, problem, lambda)?)
}

/// `t f(x) + (1 - t) S P_Q(x - mu A x)`, a contraction with factor
/// `1 - sigma t` for `t` in `(0, 1]` and `mu` in `[0, 2 nu]`.
pub fn viscosity_map(x: &Vector, problem: &Problem, t: f64, mu: f64) -> Result<Vector> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Parameter(format!("t must lie in (0, 1], got {t}")));
    }
    let fx = problem.map_f.apply(x)?;
    fx.mix(t, &nonexpansive_part(x, problem, mu)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::build_section5_problem;
    use proptest::prelude::*;
    use rand::Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    fn ls_map() -> Mapping {
        Mapping::least_squares_gradient(
            Matrix::from_rows(vec![vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap(),
            v(&[3.0, 5.0]),
        )
        .unwrap()
    }

    #[test]
    fn apply_examples() {
        let g = ls_map();
        assert_eq!(g.apply(&v(&[2.0, 3.0])).unwrap(), v(&[12.0, 12.0]));
        // printed closed form 5 x1 + 5 x2 - 13 in both coordinates
        for (a, b) in [(0.0, 0.0), (1.5, -0.25), (0.96, 1.64)] {
            let expected = 5.0 * a + 5.0 * b - 13.0;
            let got = g.apply(&v(&[a, b])).unwrap();
            assert!((got[0] - expected).abs() < 1e-12 && (got[1] - expected).abs() < 1e-12);
        }
        let x = v(&[-1.0, 4.0, 0.5]);
        assert_eq!(Mapping::identity(3).apply(&x).unwrap(), x);
        let fx = Mapping::paper_contraction().apply(&v(&[2.0, 3.0])).unwrap();
        assert!(fx.approx_eq(&v(&[2.64183, 3.47946]), 1e-5));
        assert!(matches!(
            Mapping::identity(3).apply(&v(&[1.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn lipschitz_examples() {
        let b = Matrix::from_rows(vec![vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!((ls_lipschitz(&b) - 10.0).abs() < 1e-12);
        assert_eq!(ls_lipschitz(&Matrix::identity(2)), 1.0);
        assert_eq!(
            ls_lipschitz(&Matrix::from_rows(vec![vec![3.0]]).unwrap()),
            9.0
        );
        assert!((ls_map().modulus() - 0.1).abs() < 1e-15);
    }

    // Jacobi eigenvalue sweep as an independent oracle for the closed forms
    // and power iteration.
    #[allow(clippy::needless_range_loop)]
    fn jacobi_max_eigenvalue(g: &Matrix) -> f64 {
        let n = g.rows();
        let mut a: Vec<Vec<f64>> = g.to_rows();
        for _ in 0..100 {
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                    let (c, s) = (theta.cos(), theta.sin());
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).fold(f64::MIN, f64::max)
    }

    proptest! {
        #[test]
        fn lipschitz_matches_jacobi(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| 4.0 * rng.gen::<f64>() - 2.0).collect())
                .collect();
            let b = Matrix::from_rows(data).unwrap();
            let oracle = jacobi_max_eigenvalue(&b.gram());
            let got = ls_lipschitz(&b);
            prop_assert!((got - oracle).abs() <= 1e-8 * (1.0 + oracle), "{} vs {}", got, oracle);
        }
    }

    #[test]
    fn forward_step_examples() {
        let g = ls_map();
        let x = v(&[2.0, 3.0]);
        let y = forward_step(&x, &g, 0.1, ViolationPolicy::Warn).unwrap();
        assert!(y.approx_eq(&v(&[0.8, 1.8]), 1e-12));
        assert_eq!(forward_step(&x, &g, 0.0, ViolationPolicy::Warn).unwrap(), x);
        let q = v(&[1.0, 1.6]);
        assert!(forward_step(&q, &g, 0.1, ViolationPolicy::Warn)
            .unwrap()
            .approx_eq(&q, 1e-12));
        assert!(matches!(
            forward_step(&x, &g, 0.25, ViolationPolicy::Deny),
            Err(Error::ScheduleViolation { .. })
        ));
        assert!(forward_step(&x, &g, 0.25, ViolationPolicy::Warn).is_ok());
        assert!(check_step_size(0.2, 0.1).is_none());
        assert!(check_step_size(-0.01, 0.1).is_some());
    }

    #[test]
    fn theta_and_viscosity_examples() {
        let p = build_section5_problem();
        let x = v(&[2.0, 3.0]);
        assert!(theta_map(&x, &p, 0.1)
            .unwrap()
            .approx_eq(&v(&[0.8, 1.8]), 1e-12));
        let t1 = viscosity_map(&x, &p, 1.0, 0.07).unwrap();
        assert_eq!(t1, p.map_f().apply(&x).unwrap());
        let half = viscosity_map(&x, &p, 0.5, 0.1).unwrap();
        assert!(half.approx_eq(&v(&[1.72092, 2.63973]), 1e-5));
        assert!(viscosity_map(&x, &p, 0.0, 0.1).is_err());
        assert!(viscosity_map(&x, &p, 1.5, 0.1).is_err());

        // A = 0 reduces the projected forward operator to P_Q
        let zero = Mapping::affine(
            Matrix::from_rows(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap(),
            Vector::zeros(2),
            Role::InverseStronglyMonotone,
            1.0,
        )
        .unwrap();
        let p0 = Problem::new(
            ConvexSet::orthant(2),
            Mapping::identity(2),
            zero,
            Mapping::paper_contraction(),
            None,
        )
        .unwrap();
        let z = v(&[-3.0, 2.5]);
        assert_eq!(theta_map(&z, &p0, 0.7).unwrap(), v(&[0.0, 2.5]));
    }

    #[test]
    fn registry_refuses_false_modulus() {
        let mut reg = MappingRegistry::new();
        // x -> 0.5 x is a 0.5-contraction
        reg.register("half", 2, Role::Contraction, 0.5, None, |x: &Vector| {
            x.scale(0.5)
        })
        .unwrap();
        let half = reg.get("half").unwrap();
        assert_eq!(half.apply(&v(&[2.0, 4.0])).unwrap(), v(&[1.0, 2.0]));
        // x -> 0.9 x is not a 0.5-contraction
        let err = reg
            .register("liar", 2, Role::Contraction, 0.5, None, |x: &Vector| {
                x.scale(0.9)
            })
            .unwrap_err();
        assert!(matches!(err, Error::ModulusViolation(_)));
        assert!(matches!(reg.get("liar"), Err(Error::UnknownMapping(_))));
        assert!(reg
            .register("bad", 2, Role::Contraction, 1.0, None, |x: &Vector| Ok(
                x.clone()
            ))
            .is_err());
    }

    #[test]
    fn problem_rejects_bad_roles() {
        let err = Problem::new(
            ConvexSet::orthant(2),
            Mapping::identity(2),
            ls_map(),
            Mapping::identity(2),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
        // f escaping Q
        let escape = Mapping::constant(v(&[-1.0, 0.0]));
        assert!(Problem::new(
            ConvexSet::orthant(2),
            Mapping::identity(2),
            ls_map(),
            escape,
            None
        )
        .is_err());
    }

    fn pair() -> impl Strategy<Value = (Vector, Vector)> {
        (
            prop::collection::vec(-10.0..10.0f64, 2),
            prop::collection::vec(-10.0..10.0f64, 2),
        )
            .prop_map(|(a, b)| (Vector::new(a).unwrap(), Vector::new(b).unwrap()))
    }

    proptest! {
        #[test]
        fn ism_inequality((x, y) in pair()) {
            let a = ls_map();
            let da = a.apply(&x).unwrap().sub(&a.apply(&y).unwrap()).unwrap();
            let dx = x.sub(&y).unwrap();
            prop_assert!(da.inner(&dx).unwrap() >= 0.1 * da.norm_squared() - 1e-10);
        }

        #[test]
        fn descent_inequality((x, y) in pair(), lambda in 0.001..=0.2f64) {
            let a = ls_map();
            let fx = forward_step(&x, &a, lambda, ViolationPolicy::Deny).unwrap();
            let fy = forward_step(&y, &a, lambda, ViolationPolicy::Deny).unwrap();
            let da = a.apply(&x).unwrap().sub(&a.apply(&y).unwrap()).unwrap();
            let lhs = fx.sub(&fy).unwrap().norm_squared();
            let rhs = x.sub(&y).unwrap().norm_squared() - lambda * (0.2 - lambda) * da.norm_squared();
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
        }

        #[test]
        fn theta_nonexpansive((x, y) in pair(), lambda in 0.001..=0.2f64) {
            let p = build_section5_problem();
            let tx = theta_map(&x, &p, lambda).unwrap();
            let ty = theta_map(&y, &p, lambda).unwrap();
            prop_assert!(tx.distance(&ty).unwrap() <= x.distance(&y).unwrap() + 1e-10);
        }

        #[test]
        fn viscosity_contraction((x, y) in pair(), t in 0.001..=1.0f64, mu in 0.0..=0.2f64) {
            let p = build_section5_problem();
            let tx = viscosity_map(&x, &p, t, mu).unwrap();
            let ty = viscosity_map(&y, &p, t, mu).unwrap();
            let factor = 1.0 - p.sigma() * t;
            prop_assert!(tx.distance(&ty).unwrap() <= factor * x.distance(&y).unwrap() + 1e-10);
        }

        #[test]
        fn contraction_ratio((x, y) in pair()) {
            let f = Mapping::paper_contraction();
            let d = x.distance(&y).unwrap();
            prop_assume!(d > 1e-9);
            let ratio = f.apply(&x).unwrap().distance(&f.apply(&y).unwrap()).unwrap() / d;
            prop_assert!(ratio <= CONTRACTION_MODULUS + 1e-8);
        }

        #[test]
        fn gradient_matches_finite_differences(x in prop::collection::vec(-5.0..5.0f64, 2)) {
            let a = ls_map();
            let ls = a.least_squares().unwrap();
            let x = Vector::new(x).unwrap();
            let g = ls.gradient(&x).unwrap();
            let h = 1e-5;
            for i in 0..2 {
                let mut plus = x.clone().into_inner();
                let mut minus = plus.clone();
                plus[i] += h;
                minus[i] -= h;
                let fd = (ls.value(&Vector::new(plus).unwrap()).unwrap()
                    - ls.value(&Vector::new(minus).unwrap()).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
            }
        }
    }
}
