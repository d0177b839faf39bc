//! Configuration, scenario registry and batch runs for `stochdelay`.

pub mod config;
pub mod error;
pub mod output;
pub mod profile;
pub mod run;

pub use config::{Config, Fault, Scenario};
pub use error::{CliError, Result};
