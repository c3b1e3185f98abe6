//! The two-dimensional benchmark and its `theta` sweep.
//!
//! The benchmark minimizes `1/2 |Bx - b|^2` over the nonnegative quadrant
//! with `B = [[1, 1], [2, 2]]`, `b = (3, 5)`, selecting among the minimizers
//! (the segment `x1 + x2 = 2.6`) the one picked out by the contraction
//! `f(x) = 1/2 (5 + cos(x1 + x2), 6 - sin(x1 + x2))`. The perturbed
//! iteration is run from `(2, 3)` with `alpha_k = k^-theta`,
//! `lambda_k = 0.1` and `e_k = X_k / k^2` for a grid of `theta` and seeds.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{Mapping, Matrix, Problem};
use crate::projections::ConvexSet;
use crate::schedules::{AlphaSchedule, Perturbation, Schedule, Sequence, PRNG_NAME};
use crate::solvers::{reference_qstar, run, Algorithm, RunTrace, SolverConfig};
use crate::space::Vector;

pub const BENCHMARK_LAMBDA: f64 = 0.1;
pub const BENCHMARK_START: [f64; 2] = [2.0, 3.0];
pub const BENCHMARK_NMAX: usize = 6000;
pub const BENCHMARK_OMEGA_TOTAL: f64 = 2.6;
pub const SMALL_THETAS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
pub const LARGE_THETAS: [f64; 4] = [0.6, 0.8, 0.9, 1.0];
pub const DEFAULT_EPSILONS: [f64; 6] = [0.5, 0.10, 0.05, 0.01, 0.005, 0.001];
pub const DEFAULT_SEED_COUNT: u64 = 20;
/// Tolerance of the reference solution used for relative errors.
pub const REFERENCE_TOL: f64 = 1e-12;
/// Thetas above this go to the "near 1" table and the first-hit grid.
pub const LARGE_THETA_CUTOFF: f64 = 0.5;

/// The benchmark problem: `Q` the quadrant, `S` the identity, `A` the
/// least-squares gradient (`nu = 1/10`), `Omega` the simplex slice of mass
/// 2.6.
pub fn build_section5_problem() -> Problem {
    let matrix = Matrix::from_rows(vec![vec![1.0, 1.0], vec![2.0, 2.0]]).expect("valid matrix");
    let rhs = Vector::new(vec![3.0, 5.0]).expect("finite");
    Problem::new(
        ConvexSet::orthant(2),
        Mapping::identity(2),
        Mapping::least_squares_gradient(matrix, rhs).expect("nonzero matrix"),
        Mapping::paper_contraction(),
        Some(ConvexSet::simplex(2, BENCHMARK_OMEGA_TOTAL)),
    )
    .expect("benchmark problem is well formed")
}

pub fn default_seeds() -> Vec<u64> {
    (1..=DEFAULT_SEED_COUNT).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub thetas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_max: usize,
    pub epsilons: Vec<f64>,
    pub problem: Problem,
    pub x1: Vector,
    pub lambda: Sequence,
    /// Run with `e_k = 0`; seeds are then ignored.
    pub deterministic: bool,
    /// Where per-cell traces go, if anywhere.
    pub trace_dir: Option<PathBuf>,
    pub stride: usize,
    pub config_digest: String,
}

impl ExperimentConfig {
    /// The benchmark sweep over the given thetas with the default seeds and
    /// thresholds.
    pub fn benchmark_cfg(thetas: Vec<f64>) -> Self {
        ExperimentConfig {
            thetas,
            seeds: default_seeds(),
            n_max: BENCHMARK_NMAX,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            problem: build_section5_problem(),
            x1: Vector::new(BENCHMARK_START.to_vec()).expect("finite"),
            lambda: Sequence::Constant(BENCHMARK_LAMBDA),
            deterministic: false,
            trace_dir: None,
            stride: 1,
            config_digest: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(Error::Config("experiment needs at least one theta".into()));
        }
        if let Some(t) = self.thetas.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::Config(format!("theta = {t} is outside (0, 1]")));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be positive".into()));
        }
        if !self.deterministic && self.seeds.is_empty() {
            return Err(Error::Config("experiment needs at least one seed".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0)) {
            return Err(Error::Config(format!("epsilon = {e} must be positive")));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(f64, Option<u64>)> {
        let seeds: Vec<Option<u64>> = if self.deterministic {
            vec![None]
        } else {
            self.seeds.iter().copied().map(Some).collect()
        };
        self.thetas
            .iter()
            .flat_map(|t| seeds.iter().map(move |s| (*t, *s)))
            .collect()
    }

    fn solver_config(&self, theta: f64, seed: Option<u64>, reference: &Vector) -> SolverConfig {
        let perturbation = match seed {
            Some(seed) => Perturbation::UniformSquareOverKsq { seed },
            None => Perturbation::None,
        };
        let mut cfg = SolverConfig::new(
            Algorithm::Perturbed,
            self.problem.clone(),
            Schedule::new(AlphaSchedule::Power(theta), self.lambda.clone()),
            self.x1.clone(),
            self.n_max,
        )
        .with_perturbation(perturbation)
        .with_reference(reference.clone());
        cfg.config_digest = self.config_digest.clone();
        cfg
    }
}

/// `N(eps, theta)`: first `k` with `rel_err_k <= eps`, or not defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FirstHit {
    At(usize),
    NotDefined,
}

impl FirstHit {
    pub fn from_option(k: Option<usize>) -> Self {
        k.map_or(FirstHit::NotDefined, FirstHit::At)
    }

    pub fn iteration(self) -> Option<usize> {
        match self {
            FirstHit::At(k) => Some(k),
            FirstHit::NotDefined => None,
        }
    }
}

impl std::fmt::Display for FirstHit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FirstHit::At(k) => write!(f, "{k}"),
            FirstHit::NotDefined => f.write_str("ND"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub min_rel_err: f64,
    pub argmin_k: usize,
    /// Aligned with the report's epsilons.
    pub first_hit: Vec<FirstHit>,
    /// `(k, rel_err_k)` for every recorded row.
    pub series: Vec<(usize, f64)>,
    pub trace_path: Option<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub theta: f64,
    pub seed: Option<u64>,
    /// Failed cells keep the error message; the sweep carries on.
    pub outcome: std::result::Result<CellResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSummary {
    pub theta: f64,
    pub runs: usize,
    pub failures: usize,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Lower median over seeds, with ND ranked above every iteration count.
    pub first_hit: Vec<FirstHit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub reference: Vector,
    pub epsilons: Vec<f64>,
    pub n_max: usize,
    pub deterministic: bool,
    pub cells: Vec<Cell>,
    pub summaries: Vec<ThetaSummary>,
    pub config_digest: String,
    pub seeds: Vec<u64>,
}

impl ExperimentReport {
    pub fn summary(&self, theta: f64) -> Option<&ThetaSummary> {
        self.summaries.iter().find(|s| s.theta == theta)
    }

    pub fn cells_for(&self, theta: f64) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.theta == theta)
    }
}

fn trace_file_name(theta: f64, seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("theta_{theta}_seed_{s}.csv"),
        None => format!("theta_{theta}_seed_none.csv"),
    }
}

/// Keeps the first, last and every `stride`-th row.
fn thin(mut trace: RunTrace, stride: usize) -> RunTrace {
    if stride > 1 {
        let last = trace.rows.last().map_or(0, |r| r.k);
        trace
            .rows
            .retain(|r| r.k == 1 || r.k == last || r.k % stride == 0);
    }
    trace
}

fn run_cell(
    cfg: &ExperimentConfig,
    theta: f64,
    seed: Option<u64>,
    reference: &Vector,
) -> Result<CellResult> {
    let solver = cfg.solver_config(theta, seed, reference);
    let trace = run(&solver)?;
    let warnings = trace.metadata.warnings.clone();
    let series: Vec<(usize, f64)> = trace
        .rows
        .iter()
        .map(|r| (r.k, r.rel_err.expect("reference is always tracked")))
        .collect();
    let (argmin_k, min_rel_err) = series.iter().copied().fold(
        (0, f64::INFINITY),
        |best, (k, e)| if e < best.1 { (k, e) } else { best },
    );
    let first_hit = cfg
        .epsilons
        .iter()
        .map(|eps| FirstHit::from_option(trace.first_hit(*eps)))
        .collect();
    let trace_path = match &cfg.trace_dir {
        Some(dir) => {
            let path = dir.join(trace_file_name(theta, seed));
            emit_trace(&thin(trace, cfg.stride), &path)?;
            Some(path)
        }
        None => None,
    };
    Ok(CellResult {
        min_rel_err,
        argmin_k,
        first_hit,
        series,
        trace_path,
        warnings,
    })
}

/// Runs every `(theta, seed)` cell of the sweep.
///
/// Cells run in parallel; the report lists them in config order, so its
/// contents do not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let reference = reference_qstar(&cfg.problem, REFERENCE_TOL)?;
    if let Some(dir) = &cfg.trace_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let cells: Vec<Cell> = cfg
        .cells()
        .into_par_iter()
        .map(|(theta, seed)| Cell {
            theta,
            seed,
            outcome: run_cell(cfg, theta, seed, &reference).map_err(|e| e.to_string()),
        })
        .collect();

    let summaries = cfg
        .thetas
        .iter()
        .map(|&theta| summarize(theta, &cells, cfg.epsilons.len()))
        .collect();
    Ok(ExperimentReport {
        reference,
        epsilons: cfg.epsilons.clone(),
        n_max: cfg.n_max,
        deterministic: cfg.deterministic,
        cells,
        summaries,
        config_digest: cfg.config_digest.clone(),
        seeds: if cfg.deterministic {
            Vec::new()
        } else {
            cfg.seeds.clone()
        },
    })
}

fn summarize(theta: f64, cells: &[Cell], n_eps: usize) -> ThetaSummary {
    let ok: Vec<&CellResult> = cells
        .iter()
        .filter(|c| c.theta == theta)
        .filter_map(|c| c.outcome.as_ref().ok())
        .collect();
    let failures = cells
        .iter()
        .filter(|c| c.theta == theta && c.outcome.is_err())
        .count();
    let mut errs: Vec<f64> = ok.iter().map(|c| c.min_rel_err).collect();
    errs.sort_by(f64::total_cmp);
    let first_hit = (0..n_eps)
        .map(|i| {
            let mut hits: Vec<FirstHit> = ok.iter().map(|c| c.first_hit[i]).collect();
            hits.sort();
            hits.get(hits.len().saturating_sub(1) / 2)
                .copied()
                .unwrap_or(FirstHit::NotDefined)
        })
        .collect();
    ThetaSummary {
        theta,
        runs: ok.len(),
        failures,
        median: median(&errs),
        min: errs.first().copied().unwrap_or(f64::NAN),
        max: errs.last().copied().unwrap_or(f64::NAN),
        first_hit,
    }
}

/// Median of a sorted slice (mean of the middle pair for even lengths).
fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => sorted[n / 2],
        _ => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

/// One table in CSV and aligned-text form.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTable {
    pub name: &'static str,
    pub csv: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tables {
    /// Minimal relative error for small thetas.
    pub small_theta: Option<RenderedTable>,
    /// Minimal relative error for thetas near 1.
    pub large_theta: Option<RenderedTable>,
    /// First-hit grid `N(eps, theta)` over the thetas near 1.
    pub first_hit: Option<RenderedTable>,
}

impl Tables {
    pub fn iter(&self) -> impl Iterator<Item = &RenderedTable> {
        [&self.small_theta, &self.large_theta, &self.first_hit]
            .into_iter()
            .flatten()
    }
}

fn min_err_table(name: &'static str, rows: &[&ThetaSummary], spread: bool) -> RenderedTable {
    let mut csv = String::from("theta,median_min_rel_err,min,max,runs\n");
    let mut text = String::new();
    let label = if spread {
        "median min_k rel_err   [min, max]"
    } else {
        "min_k rel_err"
    };
    writeln!(text, "{:>6}  {}", "theta", label).unwrap();
    for s in rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            s.theta, s.median, s.min, s.max, s.runs
        )
        .unwrap();
        if spread {
            writeln!(
                text,
                "{:>6}  {:<20.4e}   [{:.4e}, {:.4e}]",
                s.theta, s.median, s.min, s.max
            )
            .unwrap();
        } else {
            writeln!(text, "{:>6}  {:.4e}", s.theta, s.median).unwrap();
        }
    }
    RenderedTable { name, csv, text }
}

/// Renders the small-theta and near-1 error tables and the first-hit grid.
/// The grid is omitted when there are no thresholds.
pub fn emit_tables(report: &ExperimentReport) -> Tables {
    let spread = !report.deterministic && report.seeds.len() > 1;
    let small: Vec<&ThetaSummary> = report
        .summaries
        .iter()
        .filter(|s| s.theta <= LARGE_THETA_CUTOFF)
        .collect();
    let large: Vec<&ThetaSummary> = report
        .summaries
        .iter()
        .filter(|s| s.theta > LARGE_THETA_CUTOFF)
        .collect();

    let first_hit = (!report.epsilons.is_empty() && !large.is_empty()).then(|| {
        let mut csv = String::from("epsilon");
        let mut text = format!("{:>8}", "eps");
        for s in &large {
            write!(csv, ",theta_{}", s.theta).unwrap();
            write!(text, " {:>8}", format!("{}", s.theta)).unwrap();
        }
        csv.push('\n');
        text.push('\n');
        for (i, eps) in report.epsilons.iter().enumerate() {
            write!(csv, "{eps}").unwrap();
            write!(text, "{:>8}", format!("{eps}")).unwrap();
            for s in &large {
                write!(csv, ",{}", s.first_hit[i]).unwrap();
                write!(text, " {:>8}", s.first_hit[i].to_string()).unwrap();
            }
            csv.push('\n');
            text.push('\n');
        }
        RenderedTable {
            name: "table3",
            csv,
            text,
        }
    });

    Tables {
        small_theta: (!small.is_empty()).then(|| min_err_table("table1", &small, spread)),
        large_theta: (!large.is_empty()).then(|| min_err_table("table2", &large, spread)),
        first_hit,
    }
}

/// Writes the trace CSV to `path`, a plot-ready `(k, rel_err)` series next
/// to it (`<stem>.series.csv`) and the run metadata (`<stem>.meta.toml`).
pub fn emit_trace(trace: &RunTrace, path: &Path) -> Result<()> {
    if trace.rows.is_empty() {
        return Err(Error::Parameter("cannot emit an empty trace".into()));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    trace
        .write_csv(BufWriter::new(file))
        .map_err(|e| Error::io(path, e))?;

    let mut series = String::from("k,rel_err\n");
    for r in &trace.rows {
        if let Some(e) = r.rel_err {
            writeln!(series, "{},{}", r.k, e).unwrap();
        }
    }
    let series_path = sibling(path, "series.csv");
    fs::write(&series_path, series).map_err(|e| Error::io(&series_path, e))?;

    let meta_path = sibling(path, "meta.toml");
    let meta = toml::to_string(&trace.metadata).expect("metadata serializes");
    fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "trace".to_string(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Serialize)]
struct ExperimentMeta<'a> {
    prng: &'a str,
    config_digest: &'a str,
    deterministic: bool,
    seeds: &'a [u64],
    thetas: Vec<f64>,
    epsilons: &'a [f64],
    n_max: usize,
    reference: &'a Vector,
    reference_tol: f64,
    aggregation: &'a str,
    failures: Vec<String>,
    warnings: Vec<String>,
}

/// Writes `report.csv`, the table CSV/text files, `figure1.csv` and
/// `meta.txt` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let put = |name: &str, contents: &str| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(path, e))
    };

    let mut csv = String::from("theta,seed,min_rel_err,argmin_k");
    for eps in &report.epsilons {
        write!(csv, ",N_{eps}").unwrap();
    }
    csv.push_str(",status\n");
    for cell in &report.cells {
        let seed = cell.seed.map_or("none".to_string(), |s| s.to_string());
        write!(csv, "{},{seed}", cell.theta).unwrap();
        match &cell.outcome {
            Ok(r) => {
                write!(csv, ",{},{}", r.min_rel_err, r.argmin_k).unwrap();
                for h in &r.first_hit {
                    write!(csv, ",{h}").unwrap();
                }
                csv.push_str(",ok\n");
            }
            Err(msg) => {
                csv.push_str(",,");
                for _ in &report.epsilons {
                    csv.push(',');
                }
                writeln!(csv, ",\"error: {}\"", msg.replace('"', "'")).unwrap();
            }
        }
    }
    put("report.csv", &csv)?;

    let tables = emit_tables(report);
    for t in tables.iter() {
        put(&format!("{}.csv", t.name), &t.csv)?;
        put(&format!("{}.txt", t.name), &t.text)?;
    }
    put("figure1.csv", &figure_series(report))?;

    let meta = ExperimentMeta {
        prng: PRNG_NAME,
        config_digest: &report.config_digest,
        deterministic: report.deterministic,
        seeds: &report.seeds,
        thetas: report.summaries.iter().map(|s| s.theta).collect(),
        epsilons: &report.epsilons,
        n_max: report.n_max,
        reference: &report.reference,
        reference_tol: REFERENCE_TOL,
        aggregation: "min_rel_err: median over seeds (mean of middle pair); first hit: lower median, ND ranked last",
        failures: report
            .cells
            .iter()
            .filter_map(|c| {
                c.outcome
                    .as_ref()
                    .err()
                    .map(|m| format!("theta {} seed {:?}: {m}", c.theta, c.seed))
            })
            .collect(),
        warnings: {
            let mut w: Vec<String> = report
                .cells
                .iter()
                .filter_map(|c| c.outcome.as_ref().ok())
                .flat_map(|r| r.warnings.iter().cloned())
                .collect();
            w.sort();
            w.dedup();
            w
        },
    };
    put(
        "meta.txt",
        &toml::to_string(&meta).expect("metadata serializes"),
    )
}

/// `k` against the per-theta median of `rel_err_k` over seeds, for a
/// log-scale convergence plot.
fn figure_series(report: &ExperimentReport) -> String {
    let mut out = String::from("k");
    let columns: Vec<Vec<&CellResult>> = report
        .summaries
        .iter()
        .map(|s| {
            report
                .cells_for(s.theta)
                .filter_map(|c| c.outcome.as_ref().ok())
                .collect()
        })
        .collect();
    for s in &report.summaries {
        write!(out, ",theta_{}", s.theta).unwrap();
    }
    out.push('\n');
    let ks: Vec<usize> = columns
        .iter()
        .find_map(|c| c.first())
        .map(|c| c.series.iter().map(|(k, _)| *k).collect())
        .unwrap_or_default();
    for (row, k) in ks.iter().enumerate() {
        write!(out, "{k}").unwrap();
        for col in &columns {
            let mut vals: Vec<f64> = col
                .iter()
                .filter_map(|c| c.series.get(row).map(|(_, e)| *e))
                .collect();
            vals.sort_by(f64::total_cmp);
            if vals.is_empty() {
                out.push(',');
            } else {
                write!(out, ",{}", median(&vals)).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_constants() {
        let p = build_section5_problem();
        assert!((p.nu() - 0.1).abs() < 1e-15);
        assert_eq!(p.omega(), Some(&ConvexSet::simplex(2, 2.6)));
        assert_eq!(p.set_q(), &ConvexSet::orthant(2));
        let q = reference_qstar(&p, REFERENCE_TOL).unwrap();
        assert!((q[0] - 0.9647).abs() < 5e-5 && (q[1] - 1.6353).abs() < 5e-5);
    }

    #[test]
    fn median_and_lower_median() {
        assert_eq!(median(&[1.0, 2.0, 4.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 4.0, 10.0]), 3.0);
        let cells: Vec<Cell> = [Some(5), None, Some(3), None]
            .into_iter()
            .map(|k| Cell {
                theta: 0.9,
                seed: Some(1),
                outcome: Ok(CellResult {
                    min_rel_err: 0.1,
                    argmin_k: 1,
                    first_hit: vec![FirstHit::from_option(k)],
                    series: vec![],
                    trace_path: None,
                    warnings: vec![],
                }),
            })
            .collect();
        let s = summarize(0.9, &cells, 1);
        assert_eq!(s.first_hit, vec![FirstHit::At(5)]);
        assert_eq!(s.runs, 4);
    }

    #[test]
    fn small_deterministic_sweep() {
        let mut cfg = ExperimentConfig::benchmark_cfg(vec![0.3, 0.9]);
        cfg.deterministic = true;
        cfg.n_max = 200;
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            let r = cell.outcome.as_ref().unwrap();
            assert_eq!(r.series.len(), 200);
            // first-hit entries are consistent with the series
            for (eps, hit) in cfg.epsilons.iter().zip(&r.first_hit) {
                match hit {
                    FirstHit::At(k) => {
                        assert!(r.series[k - 1].1 <= *eps);
                        assert!(r.series[..k - 1].iter().all(|(_, e)| e > eps));
                    }
                    FirstHit::NotDefined => assert!(r.series.iter().all(|(_, e)| e > eps)),
                }
            }
            // ND absorbing and monotone in eps
            let ks: Vec<FirstHit> = r.first_hit.clone();
            assert!(ks.windows(2).all(|w| w[0] <= w[1]));
        }
        let tables = emit_tables(&report);
        assert!(tables
            .small_theta
            .unwrap()
            .csv
            .starts_with("theta,median_min_rel_err"));
        let grid = tables.first_hit.unwrap();
        assert!(grid.csv.starts_with("epsilon,theta_0.9\n0.5,"));
        assert!(grid.csv.contains("ND"));
    }

    #[test]
    fn tables_without_epsilons() {
        let mut cfg = ExperimentConfig::benchmark_cfg(vec![0.2, 0.8]);
        cfg.deterministic = true;
        cfg.n_max = 50;
        cfg.epsilons.clear();
        let tables = emit_tables(&run_experiment(&cfg).unwrap());
        assert!(tables.small_theta.is_some() && tables.large_theta.is_some());
        assert!(tables.first_hit.is_none());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::benchmark_cfg(vec![]);
        assert!(cfg.validate().is_err());
        cfg.thetas = vec![1.5];
        assert!(cfg.validate().is_err());
        cfg.thetas = vec![0.5];
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        cfg.deterministic = true;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn sibling_names() {
        let p = Path::new("out/traces/theta_0.9_seed_1.csv");
        assert_eq!(
            sibling(p, "series.csv"),
            PathBuf::from("out/traces/theta_0.9_seed_1.series.csv")
        );
    }
}
