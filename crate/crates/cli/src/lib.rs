//! Harness library: configuration parsing, backend instantiation, run
//! manifests, the simulate/verify/export-plots/calibrate commands, and the
//! statistical machinery for the stochastic backend.

pub mod artifacts;
pub mod backend;
pub mod calibrate;
pub mod config;
pub mod error;
pub mod lppstats;
pub mod manifest;
pub mod plots;
pub mod suites;

pub use artifacts::{cmd_simulate, default_out_dir, SimulateOutcome, ARTIFACTS};
pub use backend::BackendInstance;
pub use calibrate::cmd_calibrate;
pub use config::{BackendKind, Config, RunConfig};
pub use error::{CliError, Result};
pub use manifest::{sha256_hex, write_atomic, CheckLine, RunManifest};
pub use plots::cmd_export_plots;
pub use suites::{cmd_verify, select_suites, SUITES};
