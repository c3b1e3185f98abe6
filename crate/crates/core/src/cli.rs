//! The `viscosity` command line.
//!
//! ```text
//! viscosity solve      [--config FILE] [--out DIR] [--theta T] [--seed S] [--nmax N] [--algorithm A] [--stride K]
//! viscosity implicit   [--config FILE] [--out DIR]
//! viscosity experiment [--config FILE] [--out DIR] [--theta T] [--seed S | --seeds 1..20] [--deterministic]
//! viscosity tables     (as experiment, without per-cell traces)
//! viscosity check      [--config FILE]
//! ```
//!
//! Exit codes: 0 success, 1 failed check, 2 configuration error,
//! 3 numerical divergence, 4 I/O failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, AlgorithmName, Config, Overrides};
use crate::error::{Error, Result};
use crate::experiment::{emit_tables, emit_trace, run_experiment, write_report};
use crate::properties::{property_suite, PROPERTY_PAIRS};
use crate::schedules::{hypothesis_report, PRNG_NAME};
use crate::solvers::{implicit_path, run};

pub const DEFAULT_OUT: &str = "viscosity-out";
pub const OUT_ENV: &str = "VISCOSITY_OUT";
pub const META_FILE: &str = "run.meta.toml";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "viscosity",
    version,
    about = "Viscosity approximation solvers and experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, ValueEnum)]
pub enum Command {
    /// Run one iteration and write its trace.
    Solve,
    /// Follow the implicit path x_t as t decreases.
    Implicit,
    /// Sweep theta and seeds; write the report, tables and traces.
    Experiment,
    /// As `experiment`, without per-cell traces.
    Tables,
    /// Check the schedule hypotheses and the operator inequalities.
    Check,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file; defaults reproduce the benchmark.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Seed list for experiments: `1..20` or `3,5,8`.
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    #[arg(long, global = true)]
    pub algorithm: Option<String>,
    /// Drop the perturbation (e_k = 0).
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Record every k-th iterate.
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
}

/// A parsed invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub overrides: Overrides,
}

impl Cli {
    pub fn into_cli_config(self) -> Result<CliConfig> {
        let a = self.args;
        let mut overrides = Overrides::from_pairs(&a.set)?;
        if let Some(t) = a.theta {
            overrides.theta = Some(t);
        }
        if let Some(s) = a.seed {
            overrides.seed = Some(s);
        }
        if let Some(s) = &a.seeds {
            overrides.set("seeds", s)?;
        }
        if let Some(n) = a.nmax {
            overrides.nmax = Some(n);
        }
        if let Some(alg) = &a.algorithm {
            overrides.algorithm = Some(alg.parse::<AlgorithmName>()?);
        }
        if let Some(o) = a.out {
            overrides.out = Some(o);
        }
        overrides.deterministic |= a.deterministic;
        if let Some(s) = a.stride {
            overrides.stride = Some(s);
        }
        Ok(CliConfig {
            command: self.command,
            config_path: a.config,
            overrides,
        })
    }
}

/// Exit code for an error category.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Divergence { .. } | Error::NonConvergence { .. } | Error::NonFinite { .. } => {
            EXIT_DIVERGENCE
        }
        _ => EXIT_CONFIG,
    }
}

fn out_dir(cli: &CliConfig) -> PathBuf {
    cli.overrides
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_meta(dir: &Path, cfg: &Config, command: Command, warnings: &[String]) -> Result<()> {
    let mut meta = toml::Table::new();
    let name = command.to_possible_value().expect("named command");
    meta.insert("command".into(), name.get_name().into());
    meta.insert("config_digest".into(), cfg.digest().into());
    meta.insert("prng".into(), PRNG_NAME.into());
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert(
        "warnings".into(),
        toml::Value::Array(warnings.iter().map(|w| w.as_str().into()).collect()),
    );
    write_file(&dir.join(META_FILE), &cfg.to_meta_toml(&meta))
}

fn announce_seed(cfg: &mut Config) {
    if let Some(seed) = cfg.ensure_seed() {
        eprintln!("no seed given; using generated seed {seed}");
    }
}

/// Runs the command; returns the process exit code. Progress and results
/// go to stdout, warnings to stderr.
pub fn run_command(cli: &CliConfig) -> Result<i32> {
    let mut cfg = parse_config(cli.config_path.as_deref(), &cli.overrides)?;
    let out = out_dir(cli);
    match cli.command {
        Command::Solve => {
            if cfg.solver.algorithm == AlgorithmName::Perturbed {
                announce_seed(&mut cfg);
            }
            let solver = cfg.solver_config()?;
            let trace = run(&solver)?;
            for w in &trace.metadata.warnings {
                eprintln!("warning: {w}");
            }
            emit_trace(&trace, &out.join("trace.csv"))?;
            write_meta(&out, &cfg, cli.command, &trace.metadata.warnings)?;
            let last = trace.last().expect("nonempty trace");
            println!("algorithm {}", trace.metadata.algorithm);
            println!("iterates  {}", last.k);
            println!("final x   {}", last.x);
            if let Some(e) = trace.min_rel_err() {
                println!("min rel_err {e:.6e}");
            }
            println!("trace written to {}", out.join("trace.csv").display());
        }
        Command::Implicit => {
            let (icfg, problem) = cfg.implicit_config()?;
            let path = implicit_path(&icfg, &problem)?;
            let d = problem.dim();
            let mut csv = String::from("t");
            for i in 1..=d {
                write!(csv, ",x{i}").unwrap();
            }
            csv.push_str(",residual,error_bound,iterations,distance_to_reference\n");
            println!(
                "{:>10}  {:>12}  {:>10}  {:>12}",
                "t", "|x_t - q*|", "residual", "iterations"
            );
            for p in &path {
                let s = &p.solution;
                write!(csv, "{}", s.t).unwrap();
                for v in s.x.iter() {
                    write!(csv, ",{v}").unwrap();
                }
                write!(csv, ",{},{},{},", s.residual, s.error_bound, s.iterations).unwrap();
                if let Some(dist) = p.distance_to_reference {
                    write!(csv, "{dist}").unwrap();
                }
                csv.push('\n');
                let dist = p
                    .distance_to_reference
                    .map_or("-".to_string(), |v| format!("{v:.4e}"));
                println!(
                    "{:>10}  {:>12}  {:>10.2e}  {:>12}",
                    s.t, dist, s.residual, s.iterations
                );
            }
            write_file(&out.join("implicit.csv"), &csv)?;
            write_meta(&out, &cfg, cli.command, &[])?;
        }
        Command::Experiment | Command::Tables => {
            let mut ecfg = cfg.experiment_config()?;
            if cli.command == Command::Experiment {
                ecfg.trace_dir = Some(out.join("traces"));
            }
            let report = run_experiment(&ecfg)?;
            for cell in &report.cells {
                if let Err(msg) = &cell.outcome {
                    eprintln!(
                        "warning: theta {} seed {:?} failed: {msg}",
                        cell.theta, cell.seed
                    );
                }
            }
            write_report(&report, &out)?;
            write_meta(&out, &cfg, cli.command, &[])?;
            for t in emit_tables(&report).iter() {
                println!("{}\n{}", t.name, t.text);
            }
            println!("reference q* = {}", report.reference);
            println!("results written to {}", out.display());
        }
        Command::Check => {
            announce_seed(&mut cfg);
            let problem = cfg.build_problem()?;
            let perturbation = cfg.perturbation.build()?;
            let hyp = hypothesis_report(
                &cfg.schedule,
                &perturbation,
                problem.nu(),
                cfg.solver.nmax.max(2),
                problem.dim(),
            )?;
            let props = property_suite(&problem, PROPERTY_PAIRS, 0)?;
            println!("{hyp}");
            println!("{props}");
            if !(hyp.all_hold() && props.all_pass()) {
                println!("check FAILED");
                return Ok(EXIT_CHECK_FAILED);
            }
            println!("all checks hold");
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.into_cli_config().and_then(|c| run_command(&c)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
