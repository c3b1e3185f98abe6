//! The selected solution `q*`: the fixed point of `P_Omega o f`, checked
//! against the variational inequality over `Omega`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use viscosity::experiment::build_section5_problem;
use viscosity::operators::theta_map;
use viscosity::solvers::reference_qstar;
use viscosity::Result;

fn main() -> Result<()> {
    let p = build_section5_problem();
    let start = std::time::Instant::now();
    let q = reference_qstar(&p, 1e-12)?;
    let elapsed = start.elapsed();
    let omega = p.omega().expect("benchmark has Omega");
    let fq = p.map_f().apply(&q)?;
    println!("q* = {q}  ({elapsed:?})");
    println!(
        "|q* - P_Omega f(q*)| = {:.3e}",
        q.distance(&omega.project(&fq)?)?
    );
    println!(
        "|q* - Theta_0.1(q*)| = {:.3e}",
        q.distance(&theta_map(&q, &p, 0.1)?)?
    );

    let d = fq.sub(&q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let x = omega.sample(&mut rng, 1.0)?;
        worst = worst.max(d.inner(&x.sub(&q)?)?);
    }
    println!("max over 1000 points of <f(q*) - q*, x - q*> = {worst:.3e}");
    Ok(())
}
