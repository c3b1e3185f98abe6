//! Projecting onto the simplex slice `{x >= 0 : sum x = a}` and the other
//! supported sets.

use viscosity::projections::simplex_threshold;
use viscosity::{ConvexSet, Result, Vector};

fn main() -> Result<()> {
    let omega = ConvexSet::simplex(2, 2.6);
    for p in [[2.0, 3.0], [2.07155, 2.74225], [-1.0, 5.0], [0.5, 0.5]] {
        let x = Vector::from_slice(&p)?;
        let px = omega.project(&x)?;
        println!(
            "P({x}) = {px}   threshold {:.6}   |x - Px| = {:.6}",
            simplex_threshold(&x, 2.6)?,
            x.distance(&px)?
        );
    }

    let x = Vector::from_slice(&[3.0, -2.0])?;
    let sets = [
        ConvexSet::orthant(2),
        ConvexSet::Box {
            lo: Vector::from_slice(&[0.0, 0.0])?,
            hi: Vector::from_slice(&[1.0, 1.0])?,
        },
        ConvexSet::Ball {
            center: Vector::zeros(2),
            radius: 1.0,
        },
        ConvexSet::Halfspace {
            normal: Vector::from_slice(&[1.0, 1.0])?,
            offset: 0.5,
        },
        ConvexSet::Hyperplane {
            normal: Vector::from_slice(&[1.0, 1.0])?,
            offset: 0.5,
        },
    ];
    for set in &sets {
        let px = set.project(&x)?;
        println!(
            "{set:?}\n    P({x}) = {px}  contained: {}",
            set.contains(&px, 1e-12)?
        );
    }
    Ok(())
}
