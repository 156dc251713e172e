//! Pipeline pieces behind the `riesne` command: CSV ingestion, rolling
//! covariances, embedding-quality metrics, output emission, and synthetic
//! fixtures. The binary in `main.rs` wires these around `riesne-core`.

pub mod config;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod metrics;
pub mod outputs;

pub use error::{CliError, Result};
