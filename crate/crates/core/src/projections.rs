//! Exact metric projections onto closed convex sets.
//!
//! Each [`ConvexSet`] variant has a closed-form (or sort-based, for the
//! simplex slice) nearest-point rule. None of them iterate, so the
//! projection error is at the level of floating-point rounding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Vector;

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// A closed convex subset of `R^n` with an exact projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    /// `{x : x_i >= 0}`.
    NonnegOrthant { dim: usize },
    /// `{x : lo_i <= x_i <= hi_i}`.
    Box { lo: Vector, hi: Vector },
    /// `{x : |x - center| <= radius}`.
    Ball { center: Vector, radius: f64 },
    /// `{x : <normal, x> <= offset}`.
    Halfspace { normal: Vector, offset: f64 },
    /// `{x : <normal, x> = offset}`.
    Hyperplane { normal: Vector, offset: f64 },
    /// The simplex slice `{x >= 0 : sum x_i = total}`, `total > 0`.
    Simplex { dim: usize, total: f64 },
}

impl ConvexSet {
    pub fn orthant(dim: usize) -> Self {
        ConvexSet::NonnegOrthant { dim }
    }

    pub fn simplex(dim: usize, total: f64) -> Self {
        ConvexSet::Simplex { dim, total }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::NonnegOrthant { dim } | ConvexSet::Simplex { dim, .. } => *dim,
            ConvexSet::Box { lo, .. } => lo.dim(),
            ConvexSet::Ball { center, .. } => center.dim(),
            ConvexSet::Halfspace { normal, .. } | ConvexSet::Hyperplane { normal, .. } => {
                normal.dim()
            }
        }
    }

    /// Checks the descriptor invariants.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidDescriptor(msg));
        match self {
            ConvexSet::NonnegOrthant { dim } if *dim == 0 => {
                invalid("orthant dimension must be positive".into())
            }
            ConvexSet::Simplex { dim, .. } if *dim == 0 => {
                invalid("simplex dimension must be positive".into())
            }
            ConvexSet::Simplex { total, .. } if !(total.is_finite() && *total > 0.0) => {
                invalid(format!("simplex total must be positive, got {total}"))
            }
            ConvexSet::Box { lo, hi } => {
                if lo.dim() != hi.dim() {
                    return invalid(format!(
                        "box bounds have dimensions {} and {}",
                        lo.dim(),
                        hi.dim()
                    ));
                }
                match lo.iter().zip(hi.iter()).position(|(l, h)| l > h) {
                    Some(i) => invalid(format!("box lower bound exceeds upper bound at index {i}")),
                    None => Ok(()),
                }
            }
            ConvexSet::Ball { radius, .. } if !(radius.is_finite() && *radius > 0.0) => {
                invalid(format!("ball radius must be positive, got {radius}"))
            }
            ConvexSet::Halfspace { normal, offset } | ConvexSet::Hyperplane { normal, offset } => {
                if normal.norm_squared() == 0.0 {
                    invalid("normal vector must be nonzero".into())
                } else if !offset.is_finite() {
                    invalid("offset must be finite".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// The nearest point of the set to `x`.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        self.validate()?;
        x.check_dim(self.dim())?;
        let out = match self {
            ConvexSet::NonnegOrthant { .. } => x.iter().map(|v| v.max(0.0)).collect(),
            ConvexSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            ConvexSet::Ball { center, radius } => {
                let d = x.sub(center)?;
                let dist = d.norm();
                if dist <= *radius {
                    return Ok(x.clone());
                }
                return center.axpy(radius / dist, &d);
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = normal.inner(x)? - offset;
                if excess <= 0.0 {
                    return Ok(x.clone());
                }
                return x.axpy(-excess / normal.norm_squared(), normal);
            }
            ConvexSet::Hyperplane { normal, offset } => {
                let excess = normal.inner(x)? - offset;
                return x.axpy(-excess / normal.norm_squared(), normal);
            }
            ConvexSet::Simplex { total, .. } => {
                let alpha = threshold(x.as_slice(), *total);
                x.iter().map(|v| (v - alpha).max(0.0)).collect()
            }
        };
        Vector::from_computed(out, "projection")
    }

    /// Whether every defining constraint is violated by at most `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        if !(tol >= 0.0) {
            return Err(Error::Parameter(format!(
                "tolerance must be >= 0, got {tol}"
            )));
        }
        self.validate()?;
        x.check_dim(self.dim())?;
        Ok(match self {
            ConvexSet::NonnegOrthant { .. } => x.iter().all(|v| *v >= -tol),
            ConvexSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            ConvexSet::Ball { center, radius } => x.distance(center)? <= radius + tol,
            ConvexSet::Halfspace { normal, offset } => normal.inner(x)? <= offset + tol,
            ConvexSet::Hyperplane { normal, offset } => (normal.inner(x)? - offset).abs() <= tol,
            ConvexSet::Simplex { total, .. } => {
                x.iter().all(|v| *v >= -tol) && (x.iter().sum::<f64>() - total).abs() <= tol
            }
        })
    }

    /// Draws a point of the set. Bounded sets are covered directly; unbounded
    /// sets are sampled by projecting a uniform draw from `[-spread, spread]^n`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> Result<Vector> {
        self.validate()?;
        let n = self.dim();
        match self {
            ConvexSet::Simplex { total, .. } => {
                // normalized exponentials are uniform on the simplex
                let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let sum: f64 = e.iter().sum();
                Vector::from_computed(e.iter().map(|v| total * v / sum).collect(), "sampling")
            }
            ConvexSet::Box { lo, hi } => Vector::from_computed(
                lo.iter()
                    .zip(hi.iter())
                    .map(|(l, h)| l + (h - l) * rng.gen::<f64>())
                    .collect(),
                "sampling",
            ),
            ConvexSet::Ball { center, radius } => {
                let raw = uniform_cube(rng, n, *radius);
                self.project(&center.add(&raw)?)
            }
            ConvexSet::NonnegOrthant { .. } => Vector::from_computed(
                (0..n).map(|_| spread * rng.gen::<f64>()).collect(),
                "sampling",
            ),
            _ => self.project(&uniform_cube(rng, n, spread)),
        }
    }
}

fn uniform_cube<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> Vector {
    Vector::from_computed(
        (0..n)
            .map(|_| spread * (2.0 * rng.gen::<f64>() - 1.0))
            .collect(),
        "sampling",
    )
    .expect("finite spread gives finite samples")
}

/// Free-function form of [`ConvexSet::project`].
pub fn project(set: &ConvexSet, x: &Vector) -> Result<Vector> {
    set.project(x)
}

/// Free-function form of [`ConvexSet::contains`].
pub fn contains(set: &ConvexSet, x: &Vector, tol: f64) -> Result<bool> {
    set.contains(x, tol)
}

/// The unique `alpha` with `sum_k max(x_k - alpha, 0) = total`.
///
/// Projection onto the simplex slice of mass `total` is then
/// `max(x_k - alpha, 0)` componentwise.
pub fn simplex_threshold(x: &Vector, total: f64) -> Result<f64> {
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Parameter(format!(
            "simplex total must be positive, got {total}"
        )));
    }
    Ok(threshold(x.as_slice(), total))
}

// Sort descending and scan for the breakpoint where the running threshold
// drops below the next coordinate.
fn threshold(x: &[f64], total: f64) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    for (j, value) in sorted.iter().enumerate() {
        cumulative += value;
        let alpha = (cumulative - total) / (j + 1) as f64;
        match sorted.get(j + 1) {
            Some(next) if *next > alpha => continue,
            _ => return alpha,
        }
    }
    unreachable!("scan always terminates at the last coordinate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    // Brute-force oracle: bisection on the monotone map
    // alpha -> sum max(x_k - alpha, 0).
    fn threshold_by_bisection(x: &[f64], total: f64) -> f64 {
        let mass = |a: f64| x.iter().map(|v| (v - a).max(0.0)).sum::<f64>();
        let max = x.iter().cloned().fold(f64::MIN, f64::max);
        let (mut lo, mut hi) = (max - total - 1.0, max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) > total {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    // Dense grid search over the segment {(s, total - s) : 0 <= s <= total}.
    fn grid_project_2d(x: &[f64], total: f64, steps: usize) -> (f64, f64) {
        let mut best = (f64::MAX, 0.0);
        for i in 0..=steps {
            let s = total * i as f64 / steps as f64;
            let d = (x[0] - s).powi(2) + (x[1] - (total - s)).powi(2);
            if d < best.0 {
                best = (d, s);
            }
        }
        (best.1, total - best.1)
    }

    #[test]
    fn orthant_clamps() {
        let p = ConvexSet::orthant(2).project(&v(&[-1.0, 2.0])).unwrap();
        assert_eq!(p, v(&[0.0, 2.0]));
    }

    #[test]
    fn simplex_examples() {
        let set = ConvexSet::simplex(2, 2.6);
        let p = set.project(&v(&[2.0, 3.0])).unwrap();
        assert!(p.approx_eq(&v(&[0.8, 1.8]), 1e-12));
        let (g0, g1) = grid_project_2d(&[2.0, 3.0], 2.6, 260_000);
        assert!((p[0] - g0).abs() < 1e-5 && (p[1] - g1).abs() < 1e-5);

        let p = set.project(&v(&[2.07155, 2.74225])).unwrap();
        assert!(p.approx_eq(&v(&[0.96465, 1.63535]), 1e-12));
    }

    #[test]
    fn threshold_examples() {
        let t = simplex_threshold(&v(&[2.0, 3.0]), 2.6).unwrap();
        assert!((t - 1.2).abs() < 1e-12);
        for c in [0.5, 1.0, 7.25] {
            assert_eq!(simplex_threshold(&v(&[c, c]), 2.0 * c).unwrap(), 0.0);
        }
        assert_eq!(simplex_threshold(&v(&[5.0, 0.0]), 1.0).unwrap(), 4.0);
        let p = ConvexSet::simplex(2, 1.0).project(&v(&[5.0, 0.0])).unwrap();
        assert_eq!(p, v(&[1.0, 0.0]));
        assert!(simplex_threshold(&v(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn contains_examples() {
        assert!(ConvexSet::orthant(2)
            .contains(&v(&[0.0, 0.0]), 0.0)
            .unwrap());
        assert!(ConvexSet::simplex(2, 2.6)
            .contains(&v(&[0.8, 1.8]), 1e-12)
            .unwrap());
        let ball = ConvexSet::Ball {
            center: Vector::zeros(2),
            radius: 1.0,
        };
        assert!(!ball.contains(&v(&[2.0, 0.0]), 1e-12).unwrap());
        assert!(ball.contains(&v(&[1.0, 0.0]), 0.0).unwrap());
    }

    #[test]
    fn descriptor_errors() {
        let ball = ConvexSet::Ball {
            center: Vector::zeros(2),
            radius: 0.0,
        };
        assert!(matches!(
            ball.project(&v(&[1.0, 1.0])),
            Err(Error::InvalidDescriptor(_))
        ));
        let plane = ConvexSet::Halfspace {
            normal: Vector::zeros(2),
            offset: 1.0,
        };
        assert!(plane.validate().is_err());
        let bx = ConvexSet::Box {
            lo: v(&[0.0, 2.0]),
            hi: v(&[1.0, 1.0]),
        };
        assert!(bx.validate().is_err());
        assert!(matches!(
            ConvexSet::orthant(2).project(&v(&[1.0])),
            Err(Error::Dimension { .. })
        ));
        assert!(ConvexSet::orthant(2)
            .contains(&v(&[1.0, 1.0]), -1.0)
            .is_err());
    }

    #[test]
    fn closed_forms() {
        let ball = ConvexSet::Ball {
            center: v(&[1.0, 1.0]),
            radius: 1.0,
        };
        let p = ball.project(&v(&[4.0, 5.0])).unwrap();
        assert!(p.approx_eq(&v(&[1.6, 1.8]), 1e-12));

        let half = ConvexSet::Halfspace {
            normal: v(&[1.0, 1.0]),
            offset: 2.0,
        };
        assert!(half
            .project(&v(&[3.0, 3.0]))
            .unwrap()
            .approx_eq(&v(&[1.0, 1.0]), 1e-12));
        assert_eq!(half.project(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));

        let plane = ConvexSet::Hyperplane {
            normal: v(&[0.0, 2.0]),
            offset: 2.0,
        };
        assert!(plane
            .project(&v(&[5.0, -3.0]))
            .unwrap()
            .approx_eq(&v(&[5.0, 1.0]), 1e-12));

        let bx = ConvexSet::Box {
            lo: v(&[0.0, -1.0]),
            hi: v(&[1.0, 1.0]),
        };
        assert_eq!(bx.project(&v(&[3.0, -3.0])).unwrap(), v(&[1.0, -1.0]));
    }

    #[test]
    fn samples_lie_in_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for set in all_sets(3) {
            for _ in 0..200 {
                let y = set.sample(&mut rng, 5.0).unwrap();
                assert!(set.contains(&y, MEMBERSHIP_TOL).unwrap(), "{set:?} {y}");
            }
        }
    }

    fn all_sets(n: usize) -> Vec<ConvexSet> {
        let ones = Vector::new(vec![1.0; n]).unwrap();
        vec![
            ConvexSet::orthant(n),
            ConvexSet::Box {
                lo: ones.scale(-1.0).unwrap(),
                hi: ones.scale(2.0).unwrap(),
            },
            ConvexSet::Ball {
                center: ones.clone(),
                radius: 1.5,
            },
            ConvexSet::Halfspace {
                normal: ones.clone(),
                offset: 1.0,
            },
            ConvexSet::Hyperplane {
                normal: ones.clone(),
                offset: -0.5,
            },
            ConvexSet::simplex(n, 2.6),
        ]
    }

    fn point(n: usize) -> impl Strategy<Value = Vector> {
        prop::collection::vec(-20.0..20.0f64, n).prop_map(|xs| Vector::new(xs).unwrap())
    }

    proptest! {
        #[test]
        fn simplex_matches_bisection(xs in prop::collection::vec(-10.0..10.0f64, 1..8), total in 0.1..10.0f64) {
            let x = Vector::new(xs.clone()).unwrap();
            let alpha = simplex_threshold(&x, total).unwrap();
            prop_assert!((alpha - threshold_by_bisection(&xs, total)).abs() < 1e-9);
            let p = ConvexSet::simplex(xs.len(), total).project(&x).unwrap();
            prop_assert!(p.iter().all(|v| *v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - total).abs() < 1e-10);
        }

        #[test]
        fn simplex_2d_matches_grid(a in -5.0..5.0f64, b in -5.0..5.0f64, total in 0.5..4.0f64) {
            let p = ConvexSet::simplex(2, total).project(&Vector::new(vec![a, b]).unwrap()).unwrap();
            let (g0, g1) = grid_project_2d(&[a, b], total, 400_000);
            prop_assert!((p[0] - g0).abs() < 1e-4 && (p[1] - g1).abs() < 1e-4);
        }

        #[test]
        fn projection_laws(x in point(3), y in point(3), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for set in all_sets(3) {
                let px = set.project(&x).unwrap();
                let py = set.project(&y).unwrap();
                prop_assert!(set.contains(&px, MEMBERSHIP_TOL).unwrap());
                // idempotence
                prop_assert!(set.project(&px).unwrap().approx_eq(&px, 1e-12));
                // variational characterization against a point of the set
                let z = set.sample(&mut rng, 10.0).unwrap();
                let lhs = px.sub(&x).unwrap().inner(&px.sub(&z).unwrap()).unwrap();
                prop_assert!(lhs <= 1e-10, "{:?}: {}", set, lhs);
                // firm nonexpansiveness
                let dp = px.sub(&py).unwrap();
                let dx = x.sub(&y).unwrap();
                prop_assert!(dp.inner(&dx).unwrap() >= dp.norm_squared() - 1e-10);
                prop_assert!(dp.norm() <= dx.norm() + 1e-10);
            }
        }
    }
}
