//! The explicit viscosity iteration on the benchmark problem, next to the
//! Takahashi-Toyoda, Halpern and two-step baselines.

use viscosity::experiment::{build_section5_problem, BENCHMARK_START};
use viscosity::solvers::reference_qstar;
use viscosity::{run, Algorithm, Result, Schedule, Sequence, SolverConfig, Vector};

fn main() -> Result<()> {
    let p = build_section5_problem();
    let q = reference_qstar(&p, 1e-12)?;
    let omega = p.omega().expect("benchmark has Omega").clone();
    let x1 = Vector::from_slice(&BENCHMARK_START)?;
    let u = Vector::from_slice(&[0.0, 4.0])?;
    println!("q* = {q}, P_Omega(u) = {}", omega.project(&u)?);

    let algorithms = [
        Algorithm::ExplicitViscosity,
        Algorithm::TakahashiToyoda,
        Algorithm::Halpern { anchor: u.clone() },
        Algorithm::YaoOuter {
            anchor: u.clone(),
            beta: Sequence::Constant(0.5),
        },
        Algorithm::YaoInner {
            anchor: u.clone(),
            beta: Sequence::Constant(0.5),
        },
    ];
    println!(
        "{:<18} {:>26} {:>12} {:>14}",
        "algorithm", "x_6000", "|x - q*|", "dist to Omega"
    );
    for alg in algorithms {
        let cfg = SolverConfig::new(alg, p.clone(), Schedule::power(0.9, 0.1), x1.clone(), 6000);
        let trace = run(&cfg)?;
        let x = trace.final_point().expect("nonempty");
        println!(
            "{:<18} {:>26} {:>12.3e} {:>14.3e}",
            trace.metadata.algorithm,
            format!("({:.6}, {:.6})", x[0], x[1]),
            x.distance(&q)?,
            x.distance(&omega.project(x)?)?
        );
    }
    Ok(())
}
