//! Parameter sequences and diagnostics for their convergence hypotheses.
//!
//! Sequences are indexed from `k = 1`. The mixing weights `alpha_k` are
//! either the power law `k^-theta` or an explicit table; step sizes
//! `lambda_k` and averaging weights `beta_k` are constants or tables.
//! Perturbations `e_k = X_k / k^2` are drawn from a ChaCha20 stream that is
//! addressed by word position, so `e_k` depends only on `(seed, k)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Vector;

/// Name of the generator behind [`Perturbation::UniformSquareOverKsq`],
/// recorded in every output artifact.
pub const PRNG_NAME: &str =
    "ChaCha20 (rand_chacha 0.3, seed_from_u64; e_k reads 2*dim words from position 2*dim*(k-1))";

/// Largest tail ratio `|a_{k+1} - a_k| / alpha_k` accepted as numerical
/// evidence that the ratio tends to zero.
pub const TAIL_RATIO_TOL: f64 = 0.05;

/// Mixing weights `alpha_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSchedule {
    /// `alpha_k = k^-theta`.
    Power(f64),
    Table(Vec<f64>),
}

impl AlphaSchedule {
    pub fn at(&self, k: usize) -> Result<f64> {
        check_index(k)?;
        match self {
            AlphaSchedule::Power(theta) => Ok((k as f64).powf(-theta)),
            AlphaSchedule::Table(values) => table_at(values, k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlphaSchedule::Power(theta) if !(theta.is_finite() && *theta > 0.0) => Err(
                Error::Parameter(format!("power exponent must be positive, got {theta}")),
            ),
            AlphaSchedule::Table(values) => {
                if values.is_empty() {
                    return Err(Error::Parameter("alpha table is empty".into()));
                }
                match values.iter().find(|a| !(**a >= 0.0 && **a <= 1.0)) {
                    Some(bad) => Err(Error::Parameter(format!(
                        "alpha values must lie in [0, 1], got {bad}"
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            AlphaSchedule::Power(_) => None,
            AlphaSchedule::Table(v) => Some(v.len()),
        }
    }
}

/// A constant or tabulated sequence (step sizes, averaging weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    Constant(f64),
    Table(Vec<f64>),
}

impl Sequence {
    pub fn at(&self, k: usize) -> Result<f64> {
        check_index(k)?;
        match self {
            Sequence::Constant(v) => Ok(*v),
            Sequence::Table(values) => table_at(values, k),
        }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        let bad = match self {
            Sequence::Constant(v) => (!v.is_finite()).then_some(*v),
            Sequence::Table(values) if values.is_empty() => {
                return Err(Error::Parameter(format!("{what} table is empty")))
            }
            Sequence::Table(values) => values.iter().copied().find(|v| !v.is_finite()),
        };
        match bad {
            Some(v) => Err(Error::Parameter(format!("{what} value {v} is not finite"))),
            None => Ok(()),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            Sequence::Constant(v) => (*v, *v),
            Sequence::Table(values) => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                }),
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Sequence::Constant(_) => None,
            Sequence::Table(v) => Some(v.len()),
        }
    }
}

fn check_index(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("sequences are indexed from k = 1".into()));
    }
    Ok(())
}

fn table_at(values: &[f64], k: usize) -> Result<f64> {
    values.get(k - 1).copied().ok_or(Error::TableExhausted {
        index: k,
        len: values.len(),
    })
}

/// The pair of sequences driving an iteration, with the step-size band
/// `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub alpha: AlphaSchedule,
    pub lambda: Sequence,
    /// `(a, b)`; defaults to the range of `lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(f64, f64)>,
}

impl Schedule {
    pub fn new(alpha: AlphaSchedule, lambda: Sequence) -> Self {
        Schedule {
            alpha,
            lambda,
            bounds: None,
        }
    }

    /// `k^-theta` weights with a constant step size.
    pub fn power(theta: f64, lambda: f64) -> Self {
        Self::new(AlphaSchedule::Power(theta), Sequence::Constant(lambda))
    }

    pub fn with_bounds(mut self, a: f64, b: f64) -> Self {
        self.bounds = Some((a, b));
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        self.lambda.validate("lambda")?;
        if let Some((a, b)) = self.bounds {
            if !(a > 0.0 && a <= b) {
                return Err(Error::Parameter(format!(
                    "step-size bounds must satisfy 0 < a <= b, got ({a}, {b})"
                )));
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds.unwrap_or_else(|| self.lambda.range())
    }

    pub fn alpha_at(&self, k: usize) -> Result<f64> {
        self.alpha.at(k)
    }

    pub fn lambda_at(&self, k: usize) -> Result<f64> {
        self.lambda.at(k)
    }

    pub fn lambda_in_bounds(&self, value: f64) -> bool {
        let (a, b) = self.bounds();
        (a..=b).contains(&value)
    }

    /// Number of indices for which both sequences are defined.
    pub fn horizon(&self) -> Option<usize> {
        match (self.alpha.len(), self.lambda.len()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Free-function form of [`Schedule::alpha_at`].
pub fn alpha_at(s: &Schedule, k: usize) -> Result<f64> {
    s.alpha_at(k)
}

/// Free-function form of [`Schedule::lambda_at`].
pub fn lambda_at(s: &Schedule, k: usize) -> Result<f64> {
    s.lambda_at(k)
}

/// Additive errors `e_k` injected into the perturbed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    None,
    /// `e_k = X_k / k^2` with `X_k` uniform on `[-1, 1]^dim`.
    UniformSquareOverKsq { seed: u64 },
}

impl Perturbation {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Perturbation::None => None,
            Perturbation::UniformSquareOverKsq { seed } => Some(*seed),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Perturbation::None)
    }

    /// `e_k`; a pure function of `(seed, k, dim)`.
    pub fn at(&self, k: usize, dim: usize) -> Result<Vector> {
        check_index(k)?;
        match self {
            Perturbation::None => Ok(Vector::zeros(dim)),
            Perturbation::UniformSquareOverKsq { seed } => {
                let mut rng = ChaCha20Rng::seed_from_u64(*seed);
                // each f64 draw consumes one u64, i.e. two 32-bit words
                rng.set_word_pos(2 * dim as u128 * (k as u128 - 1));
                let scale = 1.0 / (k as f64 * k as f64);
                let out = (0..dim)
                    .map(|_| (2.0 * rng.gen::<f64>() - 1.0) * scale)
                    .collect();
                Vector::from_computed(out, "perturbation")
            }
        }
    }
}

/// Free-function form of [`Perturbation::at`].
pub fn perturbation_at(p: &Perturbation, k: usize, dim: usize) -> Result<Vector> {
    p.at(k, dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AnalyticallySatisfied,
    NumericallyConsistent,
    Violated,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self != Verdict::Violated
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::AnalyticallySatisfied => "analytically-satisfied",
            Verdict::NumericallyConsistent => "numerically-consistent",
            Verdict::Violated => "violated",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub id: &'static str,
    pub statement: &'static str,
    pub verdict: Verdict,
    pub evidence: String,
}

/// Finite-horizon evidence for the five hypotheses on
/// `(alpha_n, lambda_n, e_n)`.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub horizon: usize,
    pub alpha_partial_sum: f64,
    pub alpha_variation: f64,
    pub alpha_tail_ratio: f64,
    pub lambda_variation: f64,
    pub lambda_tail_ratio: f64,
    pub lambda_liminf: f64,
    pub lambda_limsup: f64,
    pub perturbation_partial_sum: f64,
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.holds())
    }

    pub fn check(&self, id: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hypotheses over the first {} indices", self.horizon)?;
        for c in &self.checks {
            writeln!(f, "  ({:>3}) {:<24} {}", c.id, c.verdict, c.statement)?;
            writeln!(f, "        {}", c.evidence)?;
        }
        Ok(())
    }
}

/// Evaluates the hypotheses on the first `n` indices (fewer if a table
/// runs out). Power-law weights, constant step sizes and the two
/// perturbation kinds get analytic verdicts; tables get numeric ones.
pub fn hypothesis_report(
    s: &Schedule,
    p: &Perturbation,
    nu: f64,
    n: usize,
    dim: usize,
) -> Result<HypothesisReport> {
    if n < 2 {
        return Err(Error::Parameter(
            "hypothesis report needs at least 2 indices".into(),
        ));
    }
    s.validate()?;
    let n = s.horizon().map_or(n, |h| h.min(n));
    if n < 2 {
        return Err(Error::Parameter(
            "schedule tables are shorter than 2 entries".into(),
        ));
    }
    let alphas: Vec<f64> = (1..=n).map(|k| s.alpha_at(k)).collect::<Result<_>>()?;
    let lambdas: Vec<f64> = (1..=n).map(|k| s.lambda_at(k)).collect::<Result<_>>()?;
    let tail_start = n / 2;

    let alpha_partial_sum: f64 = alphas.iter().sum();
    let alpha_variation: f64 = alphas.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let alpha_tail_ratio = alphas[tail_start..]
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[0])
        .fold(0.0, f64::max);
    let lambda_variation: f64 = lambdas.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let lambda_tail_ratio = lambdas[tail_start..]
        .windows(2)
        .zip(&alphas[tail_start..])
        .map(|(w, a)| (w[1] - w[0]).abs() / a)
        .fold(0.0, f64::max);
    let lambda_liminf = lambdas[tail_start..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let lambda_limsup = lambdas[tail_start..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut perturbation_partial_sum = 0.0;
    for k in 1..=n {
        perturbation_partial_sum += p.at(k, dim)?.norm();
    }

    let mut checks = Vec::with_capacity(5);

    let (verdict, evidence) = match &s.alpha {
        AlphaSchedule::Power(theta) if *theta <= 1.0 => (
            Verdict::AnalyticallySatisfied,
            format!("k^-{theta} -> 0 and the series diverges for theta <= 1; partial sum {alpha_partial_sum}"),
        ),
        AlphaSchedule::Power(theta) => (
            Verdict::Violated,
            format!("sum k^-{theta} converges for theta > 1; partial sum {alpha_partial_sum}"),
        ),
        AlphaSchedule::Table(_) => {
            let m = tail_start.max(1);
            let decay = (alphas[m - 1] / alphas[n - 1]).ln() / (n as f64 / m as f64).ln();
            let in_range = alphas.iter().all(|a| *a > 0.0 && *a <= 1.0);
            let verdict = if in_range && decay > 0.0 && decay <= 1.05 {
                Verdict::NumericallyConsistent
            } else {
                Verdict::Violated
            };
            (
                verdict,
                format!("tail decay exponent {decay}; partial sum {alpha_partial_sum}"),
            )
        }
    };
    checks.push(HypothesisCheck {
        id: "i",
        statement: "alpha_n -> 0 and sum alpha_n = +inf",
        verdict,
        evidence,
    });

    let upper = 2.0 * nu;
    let band_ok = lambda_liminf > 0.0 && lambda_limsup < upper;
    let verdict = match (&s.lambda, band_ok) {
        (_, false) => Verdict::Violated,
        (Sequence::Constant(_), true) => Verdict::AnalyticallySatisfied,
        (Sequence::Table(_), true) => Verdict::NumericallyConsistent,
    };
    checks.push(HypothesisCheck {
        id: "ii",
        statement: "0 < liminf lambda_n <= limsup lambda_n < 2 nu",
        verdict,
        evidence: format!("tail range [{lambda_liminf}, {lambda_limsup}] against 2 nu = {upper}"),
    });

    let verdict = match &s.alpha {
        AlphaSchedule::Power(_) => Verdict::AnalyticallySatisfied,
        AlphaSchedule::Table(_) if alpha_tail_ratio <= TAIL_RATIO_TOL => {
            Verdict::NumericallyConsistent
        }
        AlphaSchedule::Table(_) => Verdict::Violated,
    };
    checks.push(HypothesisCheck {
        id: "iii",
        statement: "(alpha_{n+1} - alpha_n) / alpha_n -> 0 or sum |alpha_{n+1} - alpha_n| < inf",
        verdict,
        evidence: format!("tail ratio {alpha_tail_ratio}; total variation {alpha_variation}"),
    });

    let verdict = match &s.lambda {
        Sequence::Constant(_) => Verdict::AnalyticallySatisfied,
        Sequence::Table(_) if lambda_tail_ratio <= TAIL_RATIO_TOL => Verdict::NumericallyConsistent,
        Sequence::Table(_) => Verdict::Violated,
    };
    checks.push(HypothesisCheck {
        id: "iv",
        statement:
            "(lambda_{n+1} - lambda_n) / alpha_n -> 0 or sum |lambda_{n+1} - lambda_n| < inf",
        verdict,
        evidence: format!("tail ratio {lambda_tail_ratio}; total variation {lambda_variation}"),
    });

    let evidence = match p {
        Perturbation::None => "e_n = 0".to_string(),
        Perturbation::UniformSquareOverKsq { .. } => format!(
            "|e_n| <= sqrt({dim}) / n^2 is summable; partial sum {perturbation_partial_sum}"
        ),
    };
    checks.push(HypothesisCheck {
        id: "v",
        statement: "|e_n| / alpha_n -> 0 or sum |e_n| < inf",
        verdict: Verdict::AnalyticallySatisfied,
        evidence,
    });

    Ok(HypothesisReport {
        horizon: n,
        alpha_partial_sum,
        alpha_variation,
        alpha_tail_ratio,
        lambda_variation,
        lambda_tail_ratio,
        lambda_liminf,
        lambda_limsup,
        perturbation_partial_sum,
        checks,
    })
}
