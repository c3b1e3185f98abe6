//! Viscosity approximation for variational inequalities over the common
//! solutions of a fixed-point problem and a monotone inclusion.
//!
//! The central iteration is
//!
//! ```text
//! x_{n+1} = alpha_n f(x_n) + (1 - alpha_n) S P_Q(x_n - lambda_n A x_n + e_n)
//! ```
//!
//! with `f` a contraction, `S` nonexpansive, `A` inverse strongly monotone
//! and `e_n` a summable error. See the `examples/` directory for one
//! runnable program per capability.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod operators;
pub mod projections;
pub mod properties;
pub mod schedules;
pub mod solvers;
pub mod space;

pub use error::{Error, Result};
pub use operators::{Mapping, Matrix, Problem, Role};
pub use projections::ConvexSet;
pub use schedules::{AlphaSchedule, Perturbation, Schedule, Sequence};
pub use solvers::{run, Algorithm, RunTrace, SolverConfig};
pub use space::Vector;
