//! TOML run configuration.
//!
//! Every section is optional; omitted fields take the benchmark defaults.
//! A resolved configuration (all defaults filled in, generated seeds
//! included) serializes back to a file that reproduces the same run.
//!
//! ```toml
//! [problem]
//! set = { kind = "nonneg_orthant", dim = 2 }
//! omega = { kind = "simplex", dim = 2, total = 2.6 }
//! S = { kind = "identity", dim = 2 }
//! A = { kind = "least_squares", B = [[1.0, 1.0], [2.0, 2.0]], b = [3.0, 5.0] }
//! f = { kind = "paper_contraction" }
//!
//! [schedule]
//! alpha = { power = 0.9 }
//! lambda = { constant = 0.1 }
//!
//! [perturbation]
//! kind = "uniform_square_over_ksq"
//! seed = 42
//!
//! [solver]
//! algorithm = "perturbed"
//! x1 = [2.0, 3.0]
//! nmax = 6000
//!
//! [experiment]
//! thetas = [0.6, 0.8, 0.9, 1.0]
//! seeds = [1, 2, 3]
//!
//! [implicit]
//! t_values = [1.0, 0.1, 0.01]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiment::{
    default_seeds, ExperimentConfig, BENCHMARK_LAMBDA, BENCHMARK_NMAX, BENCHMARK_OMEGA_TOTAL,
    BENCHMARK_START, DEFAULT_EPSILONS, LARGE_THETAS, SMALL_THETAS,
};
use crate::operators::{Mapping, Matrix, Problem, Role, ViolationPolicy};
use crate::projections::ConvexSet;
use crate::schedules::{AlphaSchedule, Perturbation, Schedule, Sequence};
use crate::solvers::{Algorithm, ImplicitConfig, SolverConfig, StepRule, DEFAULT_BETA};
use crate::space::Vector;

/// A mapping as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MappingSpec {
    Identity {
        dim: usize,
    },
    PaperContraction,
    Constant {
        point: Vector,
    },
    /// Gradient of `1/2 |Bx - b|^2`.
    LeastSquares {
        #[serde(rename = "B")]
        matrix: Matrix,
        #[serde(rename = "b")]
        rhs: Vector,
    },
    Affine {
        matrix: Matrix,
        offset: Vector,
        role: Role,
        modulus: f64,
    },
}

impl MappingSpec {
    pub fn build(&self) -> Result<Mapping> {
        match self {
            MappingSpec::Identity { dim } => {
                if *dim == 0 {
                    return Err(Error::Config("identity dimension must be positive".into()));
                }
                Ok(Mapping::identity(*dim))
            }
            MappingSpec::PaperContraction => Ok(Mapping::paper_contraction()),
            MappingSpec::Constant { point } => Ok(Mapping::constant(point.clone())),
            MappingSpec::LeastSquares { matrix, rhs } => {
                Mapping::least_squares_gradient(matrix.clone(), rhs.clone())
            }
            MappingSpec::Affine {
                matrix,
                offset,
                role,
                modulus,
            } => Mapping::affine(matrix.clone(), offset.clone(), *role, *modulus),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub set: ConvexSet,
    #[serde(rename = "S")]
    pub s: MappingSpec,
    #[serde(rename = "A")]
    pub a: MappingSpec,
    pub f: MappingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<ConvexSet>,
    #[serde(default)]
    pub policy: ViolationPolicy,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            set: ConvexSet::orthant(2),
            s: MappingSpec::Identity { dim: 2 },
            a: MappingSpec::LeastSquares {
                matrix: Matrix::from_rows(vec![vec![1.0, 1.0], vec![2.0, 2.0]])
                    .expect("valid matrix"),
                rhs: Vector::new(vec![3.0, 5.0]).expect("finite"),
            },
            f: MappingSpec::PaperContraction,
            omega: Some(ConvexSet::simplex(2, BENCHMARK_OMEGA_TOTAL)),
            policy: ViolationPolicy::Warn,
        }
    }
}

impl ProblemSection {
    pub fn build(&self) -> Result<Problem> {
        Problem::new(
            self.set.clone(),
            self.s.build()?,
            self.a.build()?,
            self.f.build()?,
            self.omega.clone(),
        )
        .map(|p| p.with_policy(self.policy))
        .map_err(|e| Error::Config(format!("problem: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    None,
    UniformSquareOverKsq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSection {
    pub kind: PerturbationKind,
    /// Generated (and printed) when missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        PerturbationSection {
            kind: PerturbationKind::UniformSquareOverKsq,
            seed: None,
        }
    }
}

impl PerturbationSection {
    pub fn build(&self) -> Result<Perturbation> {
        match (self.kind, self.seed) {
            (PerturbationKind::None, _) => Ok(Perturbation::None),
            (PerturbationKind::UniformSquareOverKsq, Some(seed)) => {
                Ok(Perturbation::UniformSquareOverKsq { seed })
            }
            (PerturbationKind::UniformSquareOverKsq, None) => {
                Err(Error::Config("perturbation.seed is unresolved".into()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    Explicit,
    Perturbed,
    TakahashiToyoda,
    Halpern,
    YaoOuter,
    YaoInner,
}

impl AlgorithmName {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmName::Explicit => "explicit",
            AlgorithmName::Perturbed => "perturbed",
            AlgorithmName::TakahashiToyoda => "takahashi-toyoda",
            AlgorithmName::Halpern => "halpern",
            AlgorithmName::YaoOuter => "yao-outer",
            AlgorithmName::YaoInner => "yao-inner",
        }
    }
}

impl std::str::FromStr for AlgorithmName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let quoted = toml::Value::String(s.to_string());
        AlgorithmName::deserialize(quoted).map_err(|_| {
            Error::Config(format!(
                "unknown algorithm `{s}` (expected explicit, perturbed, takahashi-toyoda, halpern, yao-outer or yao-inner)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: AlgorithmName,
    /// Defaults to `(2, 3)` on two-dimensional problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vector>,
    pub nmax: usize,
    pub stride: usize,
    /// Required by the anchored algorithms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vector>,
    /// Averaging weights of the two-step algorithms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Sequence>,
    /// Track `rel_err` against `q*` (needs `problem.omega`).
    pub track_reference: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            algorithm: AlgorithmName::Perturbed,
            x1: None,
            nmax: BENCHMARK_NMAX,
            stride: 1,
            anchor: None,
            beta: None,
            track_reference: true,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub thetas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub nmax: usize,
    pub deterministic: bool,
    pub stride: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            thetas: SMALL_THETAS.iter().chain(&LARGE_THETAS).copied().collect(),
            seeds: default_seeds(),
            epsilons: DEFAULT_EPSILONS.to_vec(),
            nmax: BENCHMARK_NMAX,
            deterministic: false,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImplicitSection {
    pub t_values: Vec<f64>,
    pub lambda: StepRule,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Defaults to `solver.x1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vector>,
}

impl Default for ImplicitSection {
    fn default() -> Self {
        ImplicitSection {
            t_values: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            lambda: StepRule::Constant(BENCHMARK_LAMBDA),
            inner_tol: 1e-10,
            inner_max_iter: 10_000_000,
            start: None,
        }
    }
}

/// The whole file. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemSection,
    pub schedule: Schedule,
    pub perturbation: PerturbationSection,
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
    pub implicit: ImplicitSection,
    /// Run metadata written next to outputs; ignored on input.
    #[serde(skip_serializing)]
    pub metadata: Option<toml::Table>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            problem: ProblemSection::default(),
            schedule: Schedule::power(0.9, BENCHMARK_LAMBDA),
            perturbation: PerturbationSection::default(),
            solver: SolverSection::default(),
            experiment: ExperimentSection::default(),
            implicit: ImplicitSection::default(),
            metadata: None,
        }
    }
}

/// Command-line overrides, applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub theta: Option<f64>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub nmax: Option<usize>,
    pub algorithm: Option<AlgorithmName>,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
    pub stride: Option<usize>,
}

impl Overrides {
    /// Parses `key=value` pairs; keys are `theta`, `seed`, `seeds`,
    /// `nmax`, `algorithm`, `out`, `deterministic` and `stride`.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[S]) -> Result<Self> {
        let mut o = Overrides::default();
        for pair in pairs {
            let pair = pair.as_ref();
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{pair}` is not key=value")))?;
            o.set(key.trim(), value.trim())?;
        }
        Ok(o)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("override {key}: cannot parse `{value}`")))
        }
        match key {
            "theta" => self.theta = Some(num(key, value)?),
            "seed" => self.seed = Some(num(key, value)?),
            "seeds" => self.seeds = Some(parse_seed_list(value)?),
            "nmax" => self.nmax = Some(num(key, value)?),
            "algorithm" => self.algorithm = Some(value.parse()?),
            "out" => self.out = Some(PathBuf::from(value)),
            "deterministic" => self.deterministic = num(key, value)?,
            "stride" => self.stride = Some(num(key, value)?),
            _ => return Err(Error::Config(format!("unknown override key `{key}`"))),
        }
        Ok(())
    }

    pub fn apply(&self, cfg: &mut Config) {
        if let Some(theta) = self.theta {
            cfg.schedule.alpha = AlphaSchedule::Power(theta);
            cfg.experiment.thetas = vec![theta];
        }
        if let Some(seed) = self.seed {
            cfg.perturbation.seed = Some(seed);
            if cfg.perturbation.kind == PerturbationKind::None {
                cfg.perturbation.kind = PerturbationKind::UniformSquareOverKsq;
            }
            cfg.experiment.seeds = vec![seed];
        }
        if let Some(seeds) = &self.seeds {
            cfg.experiment.seeds = seeds.clone();
        }
        if let Some(n) = self.nmax {
            cfg.solver.nmax = n;
            cfg.experiment.nmax = n;
        }
        if let Some(a) = self.algorithm {
            cfg.solver.algorithm = a;
        }
        if self.deterministic {
            cfg.experiment.deterministic = true;
            cfg.perturbation = PerturbationSection {
                kind: PerturbationKind::None,
                seed: None,
            };
        }
        if let Some(s) = self.stride {
            cfg.solver.stride = s;
            cfg.experiment.stride = s;
        }
    }
}

/// `"1..20"` (inclusive), `"1-20"` or `"3,5,8"`.
pub fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seed list `{s}`"));
    let range = s.split_once("..").or_else(|| s.split_once('-'));
    if let Some((lo, hi)) = range {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi
            .trim_start_matches('=')
            .trim()
            .parse()
            .map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    let seeds: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    Ok(seeds)
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Canonical TOML (metadata excluded).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Config::to_toml`], hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Fills in defaults that depend on other fields.
    pub fn resolve(&mut self) {
        if self.solver.x1.is_none() && self.problem.set.dim() == 2 {
            self.solver.x1 = Some(Vector::new(BENCHMARK_START.to_vec()).expect("finite"));
        }
        if self.implicit.start.is_none() {
            self.implicit.start = self.solver.x1.clone();
        }
    }

    /// Generates a perturbation seed if one is needed and missing, and
    /// returns it.
    pub fn ensure_seed(&mut self) -> Option<u64> {
        if self.perturbation.kind == PerturbationKind::UniformSquareOverKsq
            && self.perturbation.seed.is_none()
        {
            // TOML integers are signed 64-bit
            let seed = rand::random::<u64>() >> 1;
            self.perturbation.seed = Some(seed);
            return Some(seed);
        }
        None
    }

    pub fn build_problem(&self) -> Result<Problem> {
        self.problem.build()
    }

    fn x1(&self) -> Result<Vector> {
        self.solver
            .x1
            .clone()
            .ok_or_else(|| Error::Config("solver.x1 is required for this problem".into()))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let problem = self.build_problem()?;
        let s = &self.solver;
        let anchor = || {
            s.anchor.clone().ok_or_else(|| {
                Error::Config(format!(
                    "solver.anchor is required by algorithm `{}`",
                    s.algorithm.name()
                ))
            })
        };
        let beta = || s.beta.clone().unwrap_or(Sequence::Constant(DEFAULT_BETA));
        let algorithm = match s.algorithm {
            AlgorithmName::Explicit => Algorithm::ExplicitViscosity,
            AlgorithmName::Perturbed => Algorithm::Perturbed,
            AlgorithmName::TakahashiToyoda => Algorithm::TakahashiToyoda,
            AlgorithmName::Halpern => Algorithm::Halpern { anchor: anchor()? },
            AlgorithmName::YaoOuter => Algorithm::YaoOuter {
                anchor: anchor()?,
                beta: beta(),
            },
            AlgorithmName::YaoInner => Algorithm::YaoInner {
                anchor: anchor()?,
                beta: beta(),
            },
        };
        let reference = match (s.track_reference, problem.omega()) {
            (true, Some(_)) => Some(crate::solvers::reference_qstar(
                &problem,
                crate::experiment::REFERENCE_TOL,
            )?),
            _ => None,
        };
        let mut cfg = SolverConfig::new(
            algorithm,
            problem,
            self.schedule.clone(),
            self.x1()?,
            s.nmax,
        )
        .with_perturbation(match s.algorithm {
            AlgorithmName::Perturbed => self.perturbation.build()?,
            _ => Perturbation::None,
        })
        .with_stride(s.stride);
        cfg.reference = reference;
        cfg.rel_err_target = s.target;
        cfg.config_digest = self.digest();
        cfg.validate().map_err(as_config)?;
        Ok(cfg)
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let problem = self.build_problem()?;
        if problem.omega().is_none() {
            return Err(Error::Config(
                "experiment needs problem.omega to compute the reference point".into(),
            ));
        }
        let e = &self.experiment;
        let cfg = ExperimentConfig {
            thetas: e.thetas.clone(),
            seeds: e.seeds.clone(),
            n_max: e.nmax,
            epsilons: e.epsilons.clone(),
            problem,
            x1: self.x1()?,
            lambda: self.schedule.lambda.clone(),
            deterministic: e.deterministic,
            trace_dir: None,
            stride: e.stride,
            config_digest: self.digest(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn implicit_config(&self) -> Result<(ImplicitConfig, Problem)> {
        let problem = self.build_problem()?;
        let i = &self.implicit;
        let start = match &i.start {
            Some(s) => s.clone(),
            None => self.x1()?,
        };
        let cfg = ImplicitConfig {
            t_values: i.t_values.clone(),
            lambda_of_t: i.lambda.clone(),
            inner_tol: i.inner_tol,
            inner_max_iter: i.inner_max_iter,
            start,
        };
        cfg.validate(&problem).map_err(as_config)?;
        Ok((cfg, problem))
    }

    /// The resolved config followed by a `[metadata]` table; parsing the
    /// result gives back an identical config.
    pub fn to_meta_toml(&self, metadata: &toml::Table) -> String {
        let mut out = self.to_toml();
        let mut wrapper = toml::Table::new();
        wrapper.insert("metadata".into(), toml::Value::Table(metadata.clone()));
        out.push('\n');
        out.push_str(&toml::to_string(&wrapper).expect("metadata serializes"));
        out
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) | Error::Io { .. } => e,
        other => Error::Config(other.to_string()),
    }
}

/// Reads `path` (or starts from defaults), applies the overrides and
/// resolves the remaining defaults. Perturbation seeds are left alone; see
/// [`Config::ensure_seed`].
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<Config> {
    let mut cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.metadata = None;
    overrides.apply(&mut cfg);
    cfg.resolve();
    Ok(cfg)
}
