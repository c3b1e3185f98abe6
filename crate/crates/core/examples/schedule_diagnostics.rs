//! Finite-horizon verdicts on the five schedule hypotheses.

use viscosity::schedules::hypothesis_report;
use viscosity::{AlphaSchedule, Perturbation, Result, Schedule, Sequence};

fn main() -> Result<()> {
    let e = Perturbation::UniformSquareOverKsq { seed: 1 };
    for theta in [0.5, 0.9, 1.0, 1.5] {
        let s = Schedule::power(theta, 0.1);
        let report = hypothesis_report(&s, &e, 0.1, 6000, 2)?;
        println!("alpha_n = n^-{theta}: all hold = {}", report.all_hold());
    }

    // a tabulated schedule gets numeric verdicts
    let n = 5000;
    let alpha: Vec<f64> = (1..=n).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let lambda: Vec<f64> = (1..=n).map(|k| 0.1 + 0.05 / k as f64).collect();
    let s = Schedule::new(AlphaSchedule::Table(alpha), Sequence::Table(lambda));
    print!("{}", hypothesis_report(&s, &Perturbation::None, 0.1, n, 2)?);

    // a step size above 2 nu violates (ii)
    let s = Schedule::power(0.9, 0.25);
    print!("{}", hypothesis_report(&s, &e, 0.1, 6000, 2)?);
    Ok(())
}
