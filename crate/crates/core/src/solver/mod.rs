//! Mild solutions of the delay equation by Picard iteration, and the Markovian lift.

mod lift;
mod picard;
mod problem;

pub use lift::markov_lift_solve;
pub use picard::{mild_evaluate, picard_solve, PicardConfig, PicardDiagnostics, Quadrature, Solution};
pub use problem::{drift_phi, lipschitz_constant, DelayKernel, DelayProblem, Drift, ScalarMap};

pub(crate) use picard::drift_series;
