//! The mappings of the benchmark problem, their moduli and the operators
//! built from them.

use viscosity::experiment::build_section5_problem;
use viscosity::operators::{
    forward_step, ls_lipschitz, theta_map, verify_modulus, viscosity_map, ViolationPolicy,
};
use viscosity::{Matrix, Result, Vector};

fn main() -> Result<()> {
    let b = Matrix::from_rows(vec![vec![1.0, 1.0], vec![2.0, 2.0]])?;
    println!("L = lambda_max(B^T B) = {}", ls_lipschitz(&b));

    let p = build_section5_problem();
    println!(
        "nu = {}  rho = {:.6}  sigma = 1 - rho = {:.6}",
        p.nu(),
        p.rho(),
        p.sigma()
    );
    for map in [p.map_a(), p.map_f(), p.map_s()] {
        verify_modulus(map, None, 1000, 1)?;
        println!(
            "{:?} with modulus {:.6}: holds on 1000 pairs",
            map.role(),
            map.modulus()
        );
    }

    let x = Vector::from_slice(&[2.0, 3.0])?;
    println!("A(x)         = {}", p.map_a().apply(&x)?);
    println!("f(x)         = {}", p.map_f().apply(&x)?);
    println!(
        "x - 0.1 A x  = {}",
        forward_step(&x, p.map_a(), 0.1, ViolationPolicy::Warn)?
    );
    println!("Theta_0.1(x) = {}", theta_map(&x, &p, 0.1)?);

    // the viscosity map contracts with factor 1 - sigma t
    let y = Vector::from_slice(&[0.0, 5.0])?;
    for t in [1.0, 0.5, 0.1, 0.01] {
        let d = viscosity_map(&x, &p, t, 0.1)?.distance(&viscosity_map(&y, &p, t, 0.1)?)?;
        println!(
            "t = {t:<5} |Tx - Ty| / |x - y| = {:.6}  <= {:.6}",
            d / x.distance(&y)?,
            1.0 - p.sigma() * t
        );
    }

    // a step outside [0, 2 nu] is refused under the strict policy
    let strict = forward_step(&x, p.map_a(), 0.25, ViolationPolicy::Deny);
    println!("lambda = 0.25 under Deny: {}", strict.unwrap_err());
    Ok(())
}
