//! The implicit path `x_t = t f(x_t) + (1 - t) S P_Q(x_t - lambda A x_t)`
//! approaching `q*` as `t -> 0`.

use viscosity::experiment::{build_section5_problem, BENCHMARK_START};
use viscosity::solvers::{implicit_path, ImplicitConfig, StepRule};
use viscosity::{Result, Vector};

fn main() -> Result<()> {
    let p = build_section5_problem();
    let cfg = ImplicitConfig {
        t_values: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
        lambda_of_t: StepRule::Linear {
            at_zero: 0.1,
            at_one: 0.05,
        },
        inner_tol: 1e-10,
        inner_max_iter: 10_000_000,
        start: Vector::from_slice(&BENCHMARK_START)?,
    };
    println!(
        "{:>8} {:>40} {:>12} {:>10} {:>10}",
        "t", "x_t", "|x_t - q*|", "residual", "iters"
    );
    for point in implicit_path(&cfg, &p)? {
        let s = &point.solution;
        println!(
            "{:>8} {:>40} {:>12.3e} {:>10.1e} {:>10}",
            s.t,
            s.x.to_string(),
            point.distance_to_reference.unwrap_or(f64::NAN),
            s.residual,
            s.iterations
        );
    }
    Ok(())
}
