//! `a_{n+1} = (1 - gamma_n) a_n + gamma_n r_n + delta_n` driven to zero.

use viscosity::solvers::xu_recursion;
use viscosity::Result;

fn main() -> Result<()> {
    // closed form: gamma_n = 1/(n+1) gives a_n = 1/n
    let a = xu_recursion(1.0, |n| 1.0 / (n as f64 + 1.0), |_| 0.0, |_| 0.0, 10)?;
    println!("a_1..a_10 = {a:?}");

    let n = 100_000;
    let a = xu_recursion(
        1.0,
        |n| (n as f64).powf(-0.9),
        |n| (n as f64).powf(-0.5),
        |n| (n as f64).powi(-2),
        n,
    )?;
    for k in [10, 100, 1000, 10_000, 100_000] {
        println!("a_{k:<6} = {:.4e}", a[k - 1]);
    }

    // a summable gamma does not drive the sequence to zero
    let a = xu_recursion(1.0, |n| (n as f64 + 1.0).powi(-2), |_| 0.0, |_| 0.0, n)?;
    println!("summable gamma: a_N = {:.4}", a[n - 1]);
    Ok(())
}
