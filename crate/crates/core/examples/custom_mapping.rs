//! Registering a user-supplied nonexpansive map and solving with it.
//!
//! `S` swaps the coordinates, so `Fix(S)` is the diagonal and the common
//! solution set shrinks to the single point `(1.3, 1.3)`.

use viscosity::experiment::build_section5_problem;
use viscosity::operators::MappingRegistry;
use viscosity::{run, Algorithm, ConvexSet, Problem, Result, Role, Schedule, SolverConfig, Vector};

fn main() -> Result<()> {
    let base = build_section5_problem();
    let q = ConvexSet::orthant(2);

    let mut registry = MappingRegistry::new();
    registry.register(
        "swap",
        2,
        Role::Nonexpansive,
        1.0,
        Some(&q),
        |x: &Vector| Vector::from_slice(&[x[1], x[0]]),
    )?;
    // a false modulus is refused
    let refused = registry.register("double", 2, Role::Nonexpansive, 1.0, None, |x: &Vector| {
        x.scale(2.0)
    });
    println!(
        "registering `double` as nonexpansive: {}",
        refused.unwrap_err()
    );

    let omega = ConvexSet::Box {
        lo: Vector::from_slice(&[1.3, 1.3])?,
        hi: Vector::from_slice(&[1.3, 1.3])?,
    };
    let problem = Problem::new(
        q,
        registry.get("swap")?,
        base.map_a().clone(),
        base.map_f().clone(),
        Some(omega),
    )?;
    let x1 = Vector::from_slice(&[2.0, 3.0])?;
    let cfg = SolverConfig::new(
        Algorithm::ExplicitViscosity,
        problem,
        Schedule::power(0.9, 0.1),
        x1,
        6000,
    )
    .with_reference(Vector::from_slice(&[1.3, 1.3])?);
    let trace = run(&cfg)?;
    println!(
        "x_6000 = {}, rel_err = {:.3e}",
        trace.final_point().expect("nonempty"),
        trace.last().and_then(|r| r.rel_err).unwrap_or(f64::NAN)
    );
    Ok(())
}
