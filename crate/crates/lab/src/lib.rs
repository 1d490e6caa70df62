//! Scenario catalog, JSON reports and the command line driver around
//! `obstruction-core`.
//!
//! Load a scenario with [`scenario::load`], resolve it, then hand it to
//! [`run::run`] together with a [`exec::Pool`].

pub mod error;
pub mod exec;
pub mod report;
pub mod run;
pub mod scenario;

pub use error::LabError;
pub use exec::Pool;
pub use report::{Real, Report};
pub use run::{Command, RunConfig};
pub use scenario::{Resolved, Scenario};
