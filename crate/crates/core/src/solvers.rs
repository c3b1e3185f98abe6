//! Iterative solvers.
//!
//! The explicit viscosity iteration
//!
//! ```text
//! x_{k+1} = alpha_k f(x_k) + (1 - alpha_k) S P_Q(x_k - lambda_k A x_k)
//! ```
//!
//! its perturbed and projected variant, the anchored baselines
//! (Takahashi-Toyoda, Halpern / Iiduka-Takahashi, and the two averaged
//! Yao-Liou-Chen forms), the implicit path `t -> x_t`, and the reference
//! solution `q*` computed as the fixed point of `P_Omega o f`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{check_step_size, forward_step, nonexpansive_part, Problem};
use crate::projections::{ConvexSet, MEMBERSHIP_TOL};
use crate::schedules::{Perturbation, Schedule, Sequence, PRNG_NAME};
use crate::space::Vector;

/// Default averaging weight for the Yao-Liou-Chen iterations.
pub const DEFAULT_BETA: f64 = 0.5;

const REFERENCE_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    /// `alpha f(x) + (1 - alpha) S P_Q(x - lambda A x)`.
    ExplicitViscosity,
    /// `P_Q(alpha f(x) + (1 - alpha) S P_Q(x - lambda A x) + e_k)`.
    Perturbed,
    /// `alpha x + (1 - alpha) S P_Q(x - lambda A x)`.
    TakahashiToyoda,
    /// `alpha u + (1 - alpha) S P_Q(x - lambda A x)`.
    Halpern { anchor: Vector },
    /// `beta x + (1 - beta) P_Q(alpha u + (1 - alpha) S P_Q(x - lambda A x))`.
    YaoOuter { anchor: Vector, beta: Sequence },
    /// `beta x + (1 - beta) S P_Q(alpha u + (1 - alpha) (x - lambda A x))`.
    YaoInner { anchor: Vector, beta: Sequence },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::ExplicitViscosity => "explicit",
            Algorithm::Perturbed => "perturbed",
            Algorithm::TakahashiToyoda => "takahashi-toyoda",
            Algorithm::Halpern { .. } => "halpern",
            Algorithm::YaoOuter { .. } => "yao-outer",
            Algorithm::YaoInner { .. } => "yao-inner",
        }
    }
}

/// Everything needed to run one iteration from `x1`.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub problem: Problem,
    pub schedule: Schedule,
    pub perturbation: Perturbation,
    pub x1: Vector,
    /// Number of iterates recorded, `x_1 ..= x_{n_max}`.
    pub n_max: usize,
    /// Point against which `rel_err_k = |x_k - reference| / |reference|`
    /// is tracked.
    pub reference: Option<Vector>,
    /// Stop at the first `k` with `rel_err_k <= target`.
    pub rel_err_target: Option<f64>,
    /// Record every `stride`-th row (plus the first and last).
    pub stride: usize,
    /// Digest of the configuration that produced this run.
    pub config_digest: String,
}

impl SolverConfig {
    pub fn new(
        algorithm: Algorithm,
        problem: Problem,
        schedule: Schedule,
        x1: Vector,
        n_max: usize,
    ) -> Self {
        SolverConfig {
            algorithm,
            problem,
            schedule,
            perturbation: Perturbation::None,
            x1,
            n_max,
            reference: None,
            rel_err_target: None,
            stride: 1,
            config_digest: String::new(),
        }
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn with_reference(mut self, reference: Vector) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.rel_err_target = Some(target);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.problem.set_q();
        if !q.contains(&self.x1, MEMBERSHIP_TOL)? {
            return Err(Error::Config(format!("x1 = {} is not in Q", self.x1)));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        self.schedule.validate()?;
        if let Some(h) = self.schedule.horizon() {
            if h < self.n_max {
                return Err(Error::TableExhausted {
                    index: self.n_max,
                    len: h,
                });
            }
        }
        if let Some(r) = &self.reference {
            r.check_dim(self.problem.dim())?;
            if r.norm() == 0.0 {
                return Err(Error::Config("reference point must be nonzero".into()));
            }
        }
        match &self.algorithm {
            Algorithm::Halpern { anchor } => check_anchor(anchor, q)?,
            Algorithm::YaoOuter { anchor, beta } | Algorithm::YaoInner { anchor, beta } => {
                check_anchor(anchor, q)?;
                beta.validate("beta")?;
                for k in 1..=self.n_max {
                    let b = beta.at(k)?;
                    if !(0.0..1.0).contains(&b) {
                        return Err(Error::Config(format!("beta_{k} = {b} must lie in [0, 1)")));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn step_params(&self, k: usize) -> Result<StepParams> {
        let alpha = self.schedule.alpha_at(k)?;
        let lambda = self.schedule.lambda_at(k)?;
        let beta = match &self.algorithm {
            Algorithm::YaoOuter { beta, .. } | Algorithm::YaoInner { beta, .. } => beta.at(k)?,
            _ => 0.0,
        };
        let error = match self.algorithm {
            Algorithm::Perturbed if !self.perturbation.is_none() => {
                Some(self.perturbation.at(k, self.problem.dim())?)
            }
            _ => None,
        };
        Ok(StepParams {
            alpha,
            lambda,
            beta,
            error,
        })
    }
}

fn check_anchor(anchor: &Vector, q: &ConvexSet) -> Result<()> {
    if !q.contains(anchor, MEMBERSHIP_TOL)? {
        return Err(Error::Config(format!("anchor u = {anchor} is not in Q")));
    }
    Ok(())
}

struct StepParams {
    alpha: f64,
    lambda: f64,
    beta: f64,
    error: Option<Vector>,
}

/// `alpha f(x) + (1 - alpha) S P_Q(x - lambda A x)`; `alpha` may be 0.
pub fn viscosity_step(problem: &Problem, x: &Vector, alpha: f64, lambda: f64) -> Result<Vector> {
    let y = nonexpansive_part(x, problem, lambda)?;
    problem.map_f().apply(x)?.mix(alpha, &y)
}

/// `P_Q(viscosity_step(x) + e)`.
pub fn perturbed_viscosity_step(
    problem: &Problem,
    x: &Vector,
    alpha: f64,
    lambda: f64,
    error: Option<&Vector>,
) -> Result<Vector> {
    let y = viscosity_step(problem, x, alpha, lambda)?;
    let y = match error {
        Some(e) => y.add(e)?,
        None => y,
    };
    problem.set_q().project(&y)
}

/// One step of the explicit viscosity iteration with the `k`-th parameters.
pub fn explicit_step(x: &Vector, k: usize, cfg: &SolverConfig) -> Result<Vector> {
    let alpha = cfg.schedule.alpha_at(k)?;
    let lambda = cfg.schedule.lambda_at(k)?;
    viscosity_step(&cfg.problem, x, alpha, lambda)
}

/// One step of the perturbed iteration: `P_Q(explicit_step(x, k) + e_k)`.
pub fn perturbed_step(x: &Vector, k: usize, cfg: &SolverConfig) -> Result<Vector> {
    let alpha = cfg.schedule.alpha_at(k)?;
    let lambda = cfg.schedule.lambda_at(k)?;
    let error = if cfg.perturbation.is_none() {
        None
    } else {
        Some(cfg.perturbation.at(k, cfg.problem.dim())?)
    };
    perturbed_viscosity_step(&cfg.problem, x, alpha, lambda, error.as_ref())
}

/// One step of whichever algorithm `cfg` selects.
pub fn step(x: &Vector, k: usize, cfg: &SolverConfig) -> Result<Vector> {
    let params = cfg.step_params(k)?;
    apply_step(x, cfg, &params)
}

fn apply_step(x: &Vector, cfg: &SolverConfig, p: &StepParams) -> Result<Vector> {
    let problem = &cfg.problem;
    match &cfg.algorithm {
        Algorithm::ExplicitViscosity => viscosity_step(problem, x, p.alpha, p.lambda),
        Algorithm::Perturbed => {
            perturbed_viscosity_step(problem, x, p.alpha, p.lambda, p.error.as_ref())
        }
        Algorithm::TakahashiToyoda => x.mix(p.alpha, &nonexpansive_part(x, problem, p.lambda)?),
        Algorithm::Halpern { anchor } => {
            anchor.mix(p.alpha, &nonexpansive_part(x, problem, p.lambda)?)
        }
        Algorithm::YaoOuter { anchor, .. } => {
            let inner = anchor.mix(p.alpha, &nonexpansive_part(x, problem, p.lambda)?)?;
            x.mix(p.beta, &problem.set_q().project(&inner)?)
        }
        Algorithm::YaoInner { anchor, .. } => {
            let fwd = forward_step(x, problem.map_a(), p.lambda, problem.policy())?;
            let inner = problem.set_q().project(&anchor.mix(p.alpha, &fwd)?)?;
            x.mix(p.beta, &problem.map_s().apply(&inner)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub x: Vector,
    pub alpha: f64,
    pub lambda: f64,
    pub e_norm: f64,
    pub rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub prng: String,
    pub config_digest: String,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Recorded iterates of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub metadata: TraceMetadata,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_point(&self) -> Option<&Vector> {
        self.rows.last().map(|r| &r.x)
    }

    /// Smallest recorded `rel_err_k`.
    pub fn min_rel_err(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.rel_err)
            .fold(None, |m, e| Some(m.map_or(e, |m: f64| m.min(e))))
    }

    /// First recorded `k` with `rel_err_k <= eps`.
    pub fn first_hit(&self, eps: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.rel_err.is_some_and(|e| e <= eps))
            .map(|r| r.k)
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.x.dim())
    }

    /// CSV with header `k,x1,...,xd,alpha,lambda,e_norm,rel_err`; an empty
    /// `rel_err` field means no reference point was tracked.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.dim();
        let mut header = String::from("k");
        for i in 1..=d {
            header.push_str(&format!(",x{i}"));
        }
        header.push_str(",alpha,lambda,e_norm,rel_err");
        writeln!(out, "{header}")?;
        for r in &self.rows {
            write!(out, "{}", r.k)?;
            for v in r.x.iter() {
                write!(out, ",{v}")?;
            }
            write!(out, ",{},{},{},", r.alpha, r.lambda, r.e_norm)?;
            if let Some(e) = r.rel_err {
                write!(out, "{e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Runs the configured iteration for `n_max` iterates (or until the
/// relative-error target is met).
pub fn run(cfg: &SolverConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let nu = cfg.problem.nu();
    let mut warnings = Vec::new();
    let mut first_violation = None;
    let mut violations = 0usize;
    let mut out_of_band = 0usize;

    let reference_norm = cfg.reference.as_ref().map(Vector::norm);
    let mut rows = Vec::with_capacity(cfg.n_max / cfg.stride + 2);
    let mut x = cfg.x1.clone();
    for k in 1..=cfg.n_max {
        let params = cfg.step_params(k)?;
        if check_step_size(params.lambda, nu).is_some() {
            violations += 1;
            first_violation.get_or_insert((k, params.lambda));
        }
        if !cfg.schedule.lambda_in_bounds(params.lambda) {
            out_of_band += 1;
        }
        let rel_err = match (&cfg.reference, reference_norm) {
            (Some(r), Some(n)) => Some(x.distance(r)? / n),
            _ => None,
        };
        let hit = matches!((rel_err, cfg.rel_err_target), (Some(e), Some(t)) if e <= t);
        let last = k == cfg.n_max || hit;
        if k == 1 || last || k % cfg.stride == 0 {
            rows.push(TraceRow {
                k,
                x: x.clone(),
                alpha: params.alpha,
                lambda: params.lambda,
                e_norm: params.error.as_ref().map_or(0.0, Vector::norm),
                rel_err,
            });
        }
        if last {
            break;
        }
        x = match apply_step(&x, cfg, &params) {
            Ok(next) => next,
            Err(Error::NonFinite { .. }) => return Err(Error::Divergence { k, last: x }),
            Err(e) => return Err(e),
        };
    }
    if let Some((k, lambda)) = first_violation {
        warnings.push(format!(
            "step size outside [0, 2 nu] = [0, {}] at {violations} indices, first at k = {k} (lambda = {lambda})",
            2.0 * nu
        ));
    }
    if out_of_band > 0 {
        let (a, b) = cfg.schedule.bounds();
        warnings.push(format!(
            "step size outside the band [{a}, {b}] at {out_of_band} indices"
        ));
    }
    Ok(RunTrace {
        rows,
        metadata: TraceMetadata {
            algorithm: cfg.algorithm.name().to_string(),
            seed: match cfg.algorithm {
                Algorithm::Perturbed => cfg.perturbation.seed(),
                _ => None,
            },
            prng: PRNG_NAME.to_string(),
            config_digest: cfg.config_digest.clone(),
            warnings,
        },
    })
}

/// Step-size rule `t -> lambda(t)` for the implicit path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Constant(f64),
    /// `lambda(t) = at_zero + (at_one - at_zero) t`.
    Linear {
        at_zero: f64,
        at_one: f64,
    },
}

impl StepRule {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            StepRule::Constant(v) => *v,
            StepRule::Linear { at_zero, at_one } => at_zero + (at_one - at_zero) * t,
        }
    }

    /// The band `[a, b]` the rule ranges over for `t` in `(0, 1]`.
    pub fn band(&self) -> (f64, f64) {
        match self {
            StepRule::Constant(v) => (*v, *v),
            StepRule::Linear { at_zero, at_one } => (at_zero.min(*at_one), at_zero.max(*at_one)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitConfig {
    /// Strictly decreasing values in `(0, 1]`.
    pub t_values: Vec<f64>,
    pub lambda_of_t: StepRule,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Cold-start point for the first solve.
    pub start: Vector,
}

impl ImplicitConfig {
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if self.t_values.is_empty() {
            return Err(Error::Config("t_values must be nonempty".into()));
        }
        if let Some(t) = self.t_values.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::Config(format!("t = {t} is outside (0, 1]")));
        }
        if self.t_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("t_values must be strictly decreasing".into()));
        }
        let (a, b) = self.lambda_of_t.band();
        let upper = 2.0 * problem.nu();
        if !(a > 0.0 && b < upper) {
            return Err(Error::Config(format!(
                "lambda(t) ranges over [{a}, {b}], which must lie inside (0, {upper})"
            )));
        }
        if !(self.inner_tol > 0.0) || self.inner_max_iter == 0 {
            return Err(Error::Config(
                "inner_tol and inner_max_iter must be positive".into(),
            ));
        }
        self.start.check_dim(problem.dim())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitSolution {
    pub t: f64,
    pub x: Vector,
    /// `|x - T(x)|`.
    pub residual: f64,
    /// Certified bound on `|x - x_t|` from the contraction factor.
    pub error_bound: f64,
    pub iterations: usize,
}

/// Solves `x = t f(x) + (1 - t) S P_Q(x - lambda(t) A x)` by Banach
/// iteration from `cfg.start`.
pub fn implicit_solve(t: f64, cfg: &ImplicitConfig, problem: &Problem) -> Result<ImplicitSolution> {
    cfg.validate(problem)?;
    implicit_solve_from(t, cfg, problem, &cfg.start)
}

/// As [`implicit_solve`], starting from `start`.
///
/// The map is a contraction with factor `q = 1 - sigma t`, so
/// `|x_{k+1} - x_t| <= q / (1 - q) |x_{k+1} - x_k|`; iteration stops once
/// that bound is below `inner_tol`.
pub fn implicit_solve_from(
    t: f64,
    cfg: &ImplicitConfig,
    problem: &Problem,
    start: &Vector,
) -> Result<ImplicitSolution> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Parameter(format!("t must lie in (0, 1], got {t}")));
    }
    let lambda = cfg.lambda_of_t.at(t);
    let factor = 1.0 - problem.sigma() * t;
    let amplification = factor / (1.0 - factor);
    let map = |x: &Vector| viscosity_step(problem, x, t, lambda);

    let mut x = start.clone();
    let mut residual = f64::INFINITY;
    for iteration in 1..=cfg.inner_max_iter {
        let next = map(&x)?;
        let step = next.distance(&x)?;
        x = next;
        let bound = amplification * step;
        if bound <= cfg.inner_tol {
            residual = x.distance(&map(&x)?)?;
            if residual <= cfg.inner_tol {
                return Ok(ImplicitSolution {
                    t,
                    x,
                    residual,
                    error_bound: bound,
                    iterations: iteration,
                });
            }
        } else {
            residual = factor * step;
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.inner_max_iter,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub solution: ImplicitSolution,
    /// `|x_t - q*|` when the problem carries `Omega`.
    pub distance_to_reference: Option<f64>,
}

/// `x_t` for every `t` in `cfg.t_values`, each solve warm-started from the
/// previous one.
pub fn implicit_path(cfg: &ImplicitConfig, problem: &Problem) -> Result<Vec<PathPoint>> {
    cfg.validate(problem)?;
    let reference = match problem.omega() {
        Some(_) => Some(reference_qstar(problem, 1e-12)?),
        None => None,
    };
    let mut start = cfg.start.clone();
    let mut out = Vec::with_capacity(cfg.t_values.len());
    for &t in &cfg.t_values {
        let solution = implicit_solve_from(t, cfg, problem, &start)?;
        start = solution.x.clone();
        let distance_to_reference = match &reference {
            Some(q) => Some(solution.x.distance(q)?),
            None => None,
        };
        out.push(PathPoint {
            solution,
            distance_to_reference,
        });
    }
    Ok(out)
}

/// The unique `q*` in `Omega` with `<f(q*) - q*, x - q*> <= 0` for all
/// `x` in `Omega`, as the fixed point of `P_Omega o f`.
///
/// Iterates until `|x_{k+1} - x_k| <= tol (1 - rho) / rho`, which bounds
/// the distance to `q*` by `tol`.
pub fn reference_qstar(problem: &Problem, tol: f64) -> Result<Vector> {
    let omega = problem
        .omega()
        .ok_or_else(|| Error::Config("reference solution needs an Omega descriptor".into()))?;
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let rho = problem.rho();
    let f = problem.map_f();
    let mut x = omega.project(&Vector::zeros(problem.dim()))?;
    let threshold = if rho == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - rho) / rho
    };
    for _ in 0..REFERENCE_MAX_ITER {
        let next = omega.project(&f.apply(&x)?)?;
        let step = next.distance(&x)?;
        x = next;
        if step <= threshold {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: REFERENCE_MAX_ITER,
        residual: x.distance(&omega.project(&f.apply(&x)?)?)?,
    })
}

/// The sequence `a_{n+1} = (1 - gamma_n) a_n + gamma_n r_n + delta_n`,
/// i.e. the recursion with equality, for `n = 1 .. len - 1`.
///
/// When `gamma_n` is not summable, `limsup r_n <= 0` and `delta_n` is
/// summable the sequence tends to zero; it majorizes any sequence obeying
/// the recursion as an inequality.
pub fn xu_recursion(
    a1: f64,
    gamma: impl Fn(usize) -> f64,
    r: impl Fn(usize) -> f64,
    delta: impl Fn(usize) -> f64,
    len: usize,
) -> Result<Vec<f64>> {
    if !(a1 >= 0.0) {
        return Err(Error::Parameter(format!("a1 must be >= 0, got {a1}")));
    }
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return Ok(out);
    }
    out.push(a1);
    let mut a = a1;
    for n in 1..len {
        let g = gamma(n);
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::Parameter(format!(
                "gamma_{n} = {g} is outside [0, 1]"
            )));
        }
        a = (1.0 - g) * a + g * r(n) + delta(n);
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{build_section5_problem, BENCHMARK_LAMBDA, BENCHMARK_START};
    use crate::operators::{theta_map, Mapping};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    fn benchmark_cfg(algorithm: Algorithm, theta: f64, n_max: usize) -> SolverConfig {
        SolverConfig::new(
            algorithm,
            build_section5_problem(),
            Schedule::power(theta, BENCHMARK_LAMBDA),
            v(&BENCHMARK_START),
            n_max,
        )
    }

    // Scalar oracle: the fixed point of f has coordinate sum s solving
    // s = (11 + cos s - sin s) / 2, itself a contraction in s.
    fn fixed_point_of_f() -> Vector {
        let mut s: f64 = 5.0;
        for _ in 0..200 {
            s = 0.5 * (11.0 + s.cos() - s.sin());
        }
        v(&[0.5 * (5.0 + s.cos()), 0.5 * (6.0 - s.sin())])
    }

    #[test]
    fn first_step_lands_on_contraction() {
        let cfg = benchmark_cfg(Algorithm::ExplicitViscosity, 0.37, 2);
        let x2 = explicit_step(&cfg.x1, 1, &cfg).unwrap();
        assert!(x2.approx_eq(&v(&[2.64183, 3.47946]), 1e-5));
        assert_eq!(x2, cfg.problem.map_f().apply(&cfg.x1).unwrap());
    }

    #[test]
    fn fixed_points_are_stationary() {
        // a point of Omega that f also fixes: take f constant at q
        let p = build_section5_problem();
        let q = v(&[1.0, 1.6]);
        let p = p.with_contraction(Mapping::constant(q.clone())).unwrap();
        let cfg = SolverConfig::new(
            Algorithm::ExplicitViscosity,
            p,
            Schedule::power(0.5, 0.1),
            q.clone(),
            3,
        );
        for k in 1..5 {
            assert!(explicit_step(&q, k, &cfg).unwrap().approx_eq(&q, 1e-12));
        }
    }

    #[test]
    fn zero_alpha_is_theta_map() {
        let p = build_section5_problem();
        let x = v(&[0.3, 4.0]);
        let y = viscosity_step(&p, &x, 0.0, 0.1).unwrap();
        assert_eq!(y, theta_map(&x, &p, 0.1).unwrap());
    }

    #[test]
    fn perturbed_step_examples() {
        let cfg = benchmark_cfg(Algorithm::Perturbed, 0.9, 10);
        let x = v(&[1.5, 0.5]);
        for k in 1..6 {
            let a = perturbed_step(&x, k, &cfg).unwrap();
            let b = cfg
                .problem
                .set_q()
                .project(&explicit_step(&x, k, &cfg).unwrap())
                .unwrap();
            assert_eq!(a, b);
        }
        // extreme draw e_1 = (1, 1)
        let p = &cfg.problem;
        let y = perturbed_viscosity_step(p, &cfg.x1, 1.0, 0.1, Some(&v(&[1.0, 1.0]))).unwrap();
        assert!(y.approx_eq(&v(&[3.64183, 4.47946]), 1e-5));
        // a draw pushing below zero is clamped back into Q
        let y = perturbed_viscosity_step(p, &cfg.x1, 1.0, 0.1, Some(&v(&[-3.0, 0.0]))).unwrap();
        assert_eq!(y[0], 0.0);
    }

    #[test]
    fn run_records_dense_rows() {
        let cfg = benchmark_cfg(Algorithm::ExplicitViscosity, 0.9, 50)
            .with_reference(v(&[0.9647, 1.6353]));
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.rows.len(), 50);
        assert!(trace.rows.iter().enumerate().all(|(i, r)| r.k == i + 1));
        assert_eq!(trace.rows[0].x, cfg.x1);
        assert_eq!(trace.rows[0].alpha, 1.0);
        assert!(trace
            .rows
            .iter()
            .all(|r| r.rel_err.is_some() && r.e_norm == 0.0));
        assert!(trace.metadata.warnings.is_empty());
        let csv = trace.to_csv();
        assert!(csv.starts_with("k,x1,x2,alpha,lambda,e_norm,rel_err\n1,2,3,1,0.1,0,"));
        assert_eq!(csv.lines().count(), 51);
    }

    #[test]
    fn run_stops_at_target_and_strides() {
        let q = reference_qstar(&build_section5_problem(), 1e-12).unwrap();
        let cfg = benchmark_cfg(Algorithm::ExplicitViscosity, 0.9, 6000)
            .with_reference(q)
            .with_target(0.05);
        let trace = run(&cfg).unwrap();
        let last = trace.last().unwrap();
        assert!(last.rel_err.unwrap() <= 0.05);
        assert!(trace.rows[..trace.rows.len() - 1]
            .iter()
            .all(|r| r.rel_err.unwrap() > 0.05));

        let strided =
            run(&benchmark_cfg(Algorithm::ExplicitViscosity, 0.9, 100).with_stride(7)).unwrap();
        let ks: Vec<usize> = strided.rows.iter().map(|r| r.k).collect();
        assert_eq!(ks[..3], [1, 7, 14]);
        assert_eq!(*ks.last().unwrap(), 100);
    }

    #[test]
    fn run_records_step_size_violation() {
        let mut cfg = benchmark_cfg(Algorithm::ExplicitViscosity, 0.9, 20);
        cfg.schedule = Schedule::power(0.9, 0.25);
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.rows.len(), 20);
        assert!(trace.metadata.warnings[0].contains("outside [0, 2 nu]"));
    }

    #[test]
    fn divergence_is_reported_with_last_state() {
        // Q = {x1 - x2 <= 1} is invariant under steps along (1, 1), so an
        // absurd step size blows the iterates up instead of being clamped
        let base = build_section5_problem();
        let problem = Problem::new(
            ConvexSet::Halfspace {
                normal: v(&[1.0, -1.0]),
                offset: 1.0,
            },
            base.map_s().clone(),
            base.map_a().clone(),
            base.map_f().clone(),
            None,
        )
        .unwrap();
        let mut cfg = benchmark_cfg(Algorithm::TakahashiToyoda, 1.0, 5000);
        cfg.problem = problem;
        cfg.schedule = Schedule::new(
            crate::schedules::AlphaSchedule::Power(50.0),
            Sequence::Constant(1e6),
        );
        match run(&cfg) {
            Err(Error::Divergence { k, last }) => {
                assert!(k > 1);
                assert!(last.iter().all(|c| c.is_finite()));
            }
            other => panic!("expected divergence, got {:?}", other.map(|t| t.rows.len())),
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = benchmark_cfg(Algorithm::ExplicitViscosity, 0.9, 10);
        cfg.x1 = v(&[-1.0, 3.0]);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let cfg = benchmark_cfg(
            Algorithm::Halpern {
                anchor: v(&[-1.0, 0.0]),
            },
            0.9,
            10,
        );
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let cfg = benchmark_cfg(
            Algorithm::YaoOuter {
                anchor: v(&[1.0, 1.0]),
                beta: Sequence::Constant(1.0),
            },
            0.9,
            10,
        );
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let mut cfg = benchmark_cfg(Algorithm::ExplicitViscosity, 0.9, 10);
        cfg.schedule.alpha = crate::schedules::AlphaSchedule::Table(vec![0.5; 5]);
        assert!(matches!(run(&cfg), Err(Error::TableExhausted { .. })));
    }

    #[test]
    fn halpern_matches_constant_contraction() {
        let u = v(&[1.5, 2.5]);
        let halpern = benchmark_cfg(Algorithm::Halpern { anchor: u.clone() }, 0.8, 500);
        let mut viscous = benchmark_cfg(Algorithm::ExplicitViscosity, 0.8, 500);
        viscous.problem = viscous
            .problem
            .with_contraction(Mapping::constant(u))
            .unwrap();
        let a = run(&halpern).unwrap();
        let b = run(&viscous).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.x, rb.x);
        }
    }

    #[test]
    fn baselines_approach_omega() {
        let p = build_section5_problem();
        let omega = p.omega().unwrap().clone();
        let u = v(&[1.0, 1.0]);
        for alg in [
            Algorithm::TakahashiToyoda,
            Algorithm::Halpern { anchor: u.clone() },
            Algorithm::YaoOuter {
                anchor: u.clone(),
                beta: Sequence::Constant(DEFAULT_BETA),
            },
            Algorithm::YaoInner {
                anchor: u.clone(),
                beta: Sequence::Constant(DEFAULT_BETA),
            },
        ] {
            let name = alg.name();
            let trace = run(&benchmark_cfg(alg, 0.9, 3000)).unwrap();
            let last = trace.final_point().unwrap();
            let dist = last.distance(&omega.project(last).unwrap()).unwrap();
            assert!(dist < 1e-2, "{name}: distance {dist}");
        }
    }

    #[test]
    fn halpern_converges_to_projection_of_anchor() {
        // with f = u, the selected point is P_Omega(u)
        let u = v(&[3.0, 0.2]);
        let p = build_section5_problem();
        let target = p.omega().unwrap().project(&u).unwrap();
        let trace = run(&benchmark_cfg(Algorithm::Halpern { anchor: u }, 1.0, 6000)).unwrap();
        assert!(trace.final_point().unwrap().distance(&target).unwrap() < 1e-2);
    }

    #[test]
    fn reference_point() {
        let p = build_section5_problem();
        let q = reference_qstar(&p, 1e-12).unwrap();
        assert!(q.approx_eq(&v(&[0.9647, 1.6353]), 5e-5));
        let fq = p.map_f().apply(&q).unwrap();
        let residual = q
            .distance(&p.omega().unwrap().project(&fq).unwrap())
            .unwrap();
        assert!(residual <= 1e-10);

        // one hand iteration from the simplex line
        let x = v(&[1.3, 1.3]);
        let fx = p.map_f().apply(&x).unwrap();
        assert!(fx.approx_eq(&v(&[2.07155, 2.74225]), 1e-5));
        let px = p.omega().unwrap().project(&fx).unwrap();
        assert!(px.approx_eq(&q, 1e-4));

        // constant contraction in Omega
        let c = v(&[2.0, 0.6]);
        let pc = p.with_contraction(Mapping::constant(c.clone())).unwrap();
        assert!(reference_qstar(&pc, 1e-12).unwrap().approx_eq(&c, 1e-15));

        let no_omega = Problem::new(
            p.set_q().clone(),
            p.map_s().clone(),
            p.map_a().clone(),
            p.map_f().clone(),
            None,
        )
        .unwrap();
        assert!(matches!(
            reference_qstar(&no_omega, 1e-8),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn vp_certificate() {
        use rand::SeedableRng;
        let p = build_section5_problem();
        let q = reference_qstar(&p, 1e-12).unwrap();
        let d = p.map_f().apply(&q).unwrap().sub(&q).unwrap();
        let omega = p.omega().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = omega.sample(&mut rng, 1.0).unwrap();
            assert!(d.inner(&x.sub(&q).unwrap()).unwrap() <= 1e-8);
        }
        assert!(theta_map(&q, &p, 0.1).unwrap().approx_eq(&q, 1e-6));
        assert!(p.map_s().apply(&q).unwrap().approx_eq(&q, 1e-6));
    }

    fn implicit_cfg(t_values: Vec<f64>) -> ImplicitConfig {
        ImplicitConfig {
            t_values,
            lambda_of_t: StepRule::Constant(0.1),
            inner_tol: 1e-10,
            inner_max_iter: 10_000_000,
            start: v(&BENCHMARK_START),
        }
    }

    #[test]
    fn implicit_at_one_is_fixed_point_of_f() {
        let p = build_section5_problem();
        let sol = implicit_solve(1.0, &implicit_cfg(vec![1.0]), &p).unwrap();
        assert!(sol.x.approx_eq(&fixed_point_of_f(), 1e-9));
        assert!(sol.x.approx_eq(&v(&[2.99047, 3.09716]), 1e-5));
        assert!(sol.residual <= 1e-10);
        let path = implicit_path(&implicit_cfg(vec![1.0]), &p).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path[0].solution, sol);
    }

    #[test]
    fn implicit_small_t_near_reference() {
        let p = build_section5_problem();
        let q = reference_qstar(&p, 1e-12).unwrap();
        let cfg = implicit_cfg(vec![1e-4]);
        let sol = implicit_solve_from(1e-4, &cfg, &p, &q).unwrap();
        assert!(sol.x.distance(&q).unwrap() < 1e-2);
        assert!(sol.residual <= cfg.inner_tol);
    }

    #[test]
    fn implicit_path_decreases() {
        let p = build_section5_problem();
        let path = implicit_path(&implicit_cfg(vec![1.0, 0.5, 0.1, 0.01, 0.001]), &p).unwrap();
        let d: Vec<f64> = path
            .iter()
            .map(|pt| pt.distance_to_reference.unwrap())
            .collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
        assert!(path.iter().all(|pt| pt.solution.residual <= 1e-10));
    }

    #[test]
    fn implicit_errors() {
        let p = build_section5_problem();
        let mut cfg = implicit_cfg(vec![0.01]);
        cfg.inner_max_iter = 3;
        assert!(matches!(
            implicit_solve(0.01, &cfg, &p),
            Err(Error::NonConvergence { iterations: 3, .. })
        ));
        assert!(implicit_solve(0.0, &implicit_cfg(vec![1.0]), &p).is_err());
        let mut bad = implicit_cfg(vec![0.5, 0.5]);
        assert!(bad.validate(&p).is_err());
        bad.t_values = vec![1.0];
        bad.lambda_of_t = StepRule::Constant(0.2);
        assert!(bad.validate(&p).is_err());
    }

    #[test]
    fn xu_examples() {
        let a = xu_recursion(1.0, |n| 1.0 / (n as f64 + 1.0), |_| 0.0, |_| 0.0, 1000).unwrap();
        for (i, an) in a.iter().enumerate() {
            let n = (i + 1) as f64;
            assert!((an * n - 1.0).abs() <= 1e-12, "a_{n} = {an}");
        }
        let c = xu_recursion(0.7, |_| 0.0, |_| 0.0, |_| 0.0, 50).unwrap();
        assert!(c.iter().all(|x| *x == 0.7));
        assert!(xu_recursion(1.0, |_| 1.5, |_| 0.0, |_| 0.0, 3).is_err());
    }
}
