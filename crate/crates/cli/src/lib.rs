//! Library half of the `cubayes` binary: experiment plans and the sweep
//! runner (CSV + JSON + SVG artifacts), integrand construction by name,
//! TOML configuration, and the dense/fast verification suite.

pub mod error;
pub mod experiment;
pub mod factory;
pub mod plot;
pub mod settings;
pub mod suite;

pub use error::{CliError, Result};
pub use experiment::{run_experiment, EngineSettings, ExperimentPlan, ExperimentSummary};
pub use factory::IntegrandRequest;
pub use suite::{run_equivalence_suite, SuiteReport};
