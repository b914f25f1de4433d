//! Experiment orchestration for the lattice bump multiplier toolkit:
//! configuration, the end-to-end norm-equivalence experiment, and
//! deterministic report emission.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{ExperimentConfig, MatrixSource, Thresholds};
pub use error::{CliError, CliResult};
pub use experiment::{run_equivalence, EquivalenceReport};
pub use report::{emit_report, render_report, ReportFormat};
