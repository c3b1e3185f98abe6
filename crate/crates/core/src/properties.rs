//! Randomized checks of the inequalities the convergence theory rests on,
//! run against a concrete [`Problem`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::operators::{forward_step, viscosity_map, Problem, ViolationPolicy};
use crate::projections::ConvexSet;
use crate::space::Vector;

/// Random pairs per check.
pub const PROPERTY_PAIRS: usize = 1000;
/// Step sizes at which the descent inequality is checked (for `nu = 0.1`
/// these sit inside `(0, 2 nu)`, the last one close to the edge).
pub const DESCENT_LAMBDAS: [f64; 3] = [0.05, 0.1, 0.19];
/// Rounding allowance, relative to the magnitude of the terms involved.
pub const ROUNDING_TOL: f64 = 1e-12;
pub const GRADIENT_REL_TOL: f64 = 1e-6;
const SPREAD: f64 = 10.0;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub trials: usize,
    /// Largest `(lhs - rhs) / scale` seen; a check passes when this stays
    /// at or below the tolerance.
    pub worst: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "property suite (seed {})", self.seed)?;
        for c in &self.checks {
            writeln!(
                f,
                "  {:<4} {:<40} trials {:>5}  worst {:+.3e}  tol {:.0e}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.trials,
                c.worst,
                c.tol
            )?;
        }
        Ok(())
    }
}

/// Accumulates `lhs <= rhs` comparisons, each scaled by the size of the
/// quantities involved.
struct Tally {
    name: String,
    trials: usize,
    worst: f64,
    tol: f64,
}

impl Tally {
    fn new(name: impl Into<String>, tol: f64) -> Self {
        Tally {
            name: name.into(),
            trials: 0,
            worst: f64::NEG_INFINITY,
            tol,
        }
    }

    fn le(&mut self, lhs: f64, rhs: f64, scale: f64) {
        self.trials += 1;
        self.worst = self.worst.max((lhs - rhs) / (1.0 + scale.abs()));
    }

    fn finish(self) -> PropertyCheck {
        PropertyCheck {
            passed: self.trials > 0 && self.worst <= self.tol,
            name: self.name,
            trials: self.trials,
            worst: self.worst,
            tol: self.tol,
        }
    }
}

fn cube(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::new((0..n).map(|_| rng.gen_range(-SPREAD..=SPREAD)).collect()).expect("finite draws")
}

/// The sets on which projection laws are checked: `Q`, `Omega` and a few
/// fixed shapes of the same dimension.
fn projection_sets(problem: &Problem) -> Vec<(String, ConvexSet)> {
    let n = problem.dim();
    let mut sets = vec![("Q".to_string(), problem.set_q().clone())];
    if let Some(omega) = problem.omega() {
        sets.push(("Omega".to_string(), omega.clone()));
    }
    sets.push((
        "box".to_string(),
        ConvexSet::Box {
            lo: Vector::new(vec![-1.0; n]).expect("finite"),
            hi: Vector::new(vec![2.0; n]).expect("finite"),
        },
    ));
    sets.push((
        "ball".to_string(),
        ConvexSet::Ball {
            center: Vector::new(vec![0.5; n]).expect("finite"),
            radius: 1.5,
        },
    ));
    sets.push((
        "halfspace".to_string(),
        ConvexSet::Halfspace {
            normal: Vector::new(vec![1.0; n]).expect("finite"),
            offset: 1.0,
        },
    ));
    sets
}

/// Runs every check with `pairs` random pairs drawn from `seed`.
pub fn property_suite(problem: &Problem, pairs: usize, seed: u64) -> Result<PropertyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.dim();
    let mut checks = Vec::new();

    for (label, set) in projection_sets(problem) {
        let mut idem = Tally::new(format!("projection idempotence ({label})"), ROUNDING_TOL);
        let mut vari = Tally::new(
            format!("variational characterization ({label})"),
            ROUNDING_TOL,
        );
        let mut firm = Tally::new(format!("firm nonexpansiveness ({label})"), ROUNDING_TOL);
        for _ in 0..pairs {
            let x = cube(&mut rng, n);
            let y = cube(&mut rng, n);
            let px = set.project(&x)?;
            let py = set.project(&y)?;
            idem.le(set.project(&px)?.distance(&px)?, 0.0, px.norm());

            let z = set.sample(&mut rng, SPREAD)?;
            let r = x.sub(&px)?;
            let w = z.sub(&px)?;
            vari.le(r.inner(&w)?, 0.0, r.norm() * w.norm());

            let dp = px.sub(&py)?;
            let dx = x.sub(&y)?;
            firm.le(dp.norm_squared(), dx.inner(&dp)?, dx.norm_squared());
        }
        checks.extend([idem.finish(), vari.finish(), firm.finish()]);
    }

    let a = problem.map_a();
    let nu = problem.nu();
    let mut ism = Tally::new(
        format!("inverse strong monotonicity (nu = {nu})"),
        ROUNDING_TOL,
    );
    let mut descent: Vec<Tally> = DESCENT_LAMBDAS
        .iter()
        .map(|l| Tally::new(format!("descent inequality (lambda = {l})"), ROUNDING_TOL))
        .collect();
    let mut contraction = Tally::new("viscosity map factor 1 - sigma t", ROUNDING_TOL);
    let mut f_modulus = Tally::new(
        format!("contraction modulus of f (rho = {:.6})", problem.rho()),
        ROUNDING_TOL,
    );
    for _ in 0..pairs {
        let x = cube(&mut rng, n);
        let y = cube(&mut rng, n);
        let dx = x.sub(&y)?;
        let da = a.apply(&x)?.sub(&a.apply(&y)?)?;
        ism.le(
            nu * da.norm_squared(),
            da.inner(&dx)?,
            dx.norm() * da.norm(),
        );

        for (lambda, tally) in DESCENT_LAMBDAS.iter().zip(descent.iter_mut()) {
            let gx = forward_step(&x, a, *lambda, ViolationPolicy::Warn)?;
            let gy = forward_step(&y, a, *lambda, ViolationPolicy::Warn)?;
            let lhs = gx.sub(&gy)?.norm_squared();
            let rhs = dx.norm_squared() + lambda * (lambda - 2.0 * nu) * da.norm_squared();
            tally.le(
                lhs,
                rhs,
                dx.norm_squared() + lambda * lambda * da.norm_squared(),
            );
        }

        let t: f64 = 1.0 - rng.gen::<f64>();
        let mu = rng.gen_range(0.0..=2.0 * nu);
        let tx = viscosity_map(&x, problem, t, mu)?;
        let ty = viscosity_map(&y, problem, t, mu)?;
        let d = dx.norm();
        contraction.le(tx.distance(&ty)?, (1.0 - problem.sigma() * t) * d, d);

        let f = problem.map_f();
        f_modulus.le(f.apply(&x)?.distance(&f.apply(&y)?)?, problem.rho() * d, d);
    }
    checks.push(ism.finish());
    checks.extend(descent.into_iter().map(Tally::finish));
    checks.push(contraction.finish());
    checks.push(f_modulus.finish());

    if let Some(ls) = a.least_squares() {
        let mut grad = Tally::new("gradient vs central differences", GRADIENT_REL_TOL);
        for _ in 0..pairs {
            let x = cube(&mut rng, n);
            let g = ls.gradient(&x)?;
            let mut fd = Vec::with_capacity(n);
            for i in 0..n {
                let mut plus = x.clone().into_inner();
                let mut minus = plus.clone();
                plus[i] += FD_STEP;
                minus[i] -= FD_STEP;
                let hi = ls.value(&Vector::new(plus)?)?;
                let lo = ls.value(&Vector::new(minus)?)?;
                fd.push((hi - lo) / (2.0 * FD_STEP));
            }
            let err = Vector::new(fd)?.distance(&g)?;
            grad.trials += 1;
            grad.worst = grad.worst.max(err / g.norm().max(1.0));
        }
        checks.push(grad.finish());
    }

    Ok(PropertyReport { seed, checks })
}
