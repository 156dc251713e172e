//! Optional JSON run configuration; command-line flags override file values.

use std::path::Path;

use serde::Deserialize;

use crate::error::{CliError, Result};

/// Subset of run parameters that may come from a JSON config file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub perplexity: Option<f64>,
    pub dim: Option<usize>,
    pub sparse: Option<bool>,
    pub theta: Option<f64>,
    pub iters: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum_early: Option<f64>,
    pub momentum_late: Option<f64>,
    pub exaggeration_factor: Option<f64>,
    pub exaggeration_iters: Option<usize>,
    pub seed: Option<u64>,
}

pub fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

/// Flag value if given, else config-file value, else the built-in default.
pub fn resolve<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
