//! Runs the theta sweep and prints the three tables.
//!
//! `cargo run --release --example reproduce_tables -- [SEEDS] [OUT_DIR]`
//! (SEEDS = 0 for the unperturbed run; default 20).

use std::path::PathBuf;

use viscosity::experiment::{emit_tables, run_experiment, write_report, ExperimentConfig};
use viscosity::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(20, |s| s.parse().expect("seed count"));
    let out = args.next().map(PathBuf::from);

    let mut cfg = ExperimentConfig::benchmark_cfg(vec![0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 0.9, 1.0]);
    cfg.deterministic = seeds == 0;
    cfg.seeds = (1..=seeds).collect();
    cfg.trace_dir = out.as_ref().map(|d| d.join("traces"));
    let report = run_experiment(&cfg)?;
    for table in emit_tables(&report).iter() {
        println!("{}\n{}", table.name, table.text);
    }
    if let Some(dir) = out {
        write_report(&report, &dir)?;
        println!("written to {}", dir.display());
    }
    Ok(())
}
