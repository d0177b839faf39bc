//! Numerical residual checks of the weak / mild / strong formulations, and
//! oracle comparisons.

mod bounds;
mod covariance;
mod functional;
mod generator;
mod report;
mod residual;

pub use bounds::{gronwall_bound, moment_sup, paired_moment_sup, path_modulus};
pub use covariance::{covariance_oracle_check, covariance_oracle_check_with, CovarianceReport, ProbeVariance};
pub use functional::{bump, functional_suite, TestFunctional, FIXED_BUMPS};
pub use generator::{DiscreteGenerator, BOUNDARY_CONDITION_LIMIT};
pub use report::{
    equivalence_report, equivalence_report_against, LevelResiduals, ReportConfig, ResidualKind, ResidualReport, Verdict,
};
pub use residual::{mild_residual, strong_residual, weak_residual};
