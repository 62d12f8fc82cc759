//! Library side of the `mimocap` command-line tool: scenario files, the
//! capacity sweep, and output rendering. The binary in `main.rs` is a thin
//! wrapper over these.

pub mod error;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use error::{CliError, CliResult};
pub use scenario::{load_covariance, parse_regime, Scenario};
pub use sweep::{sweep, sweep_to_writer, SweepRow, CSV_HEADER};
