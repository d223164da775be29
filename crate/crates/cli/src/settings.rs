//! TOML configuration files. Any key present in the file overrides the
//! corresponding command-line flag (config-over-flags is this tool's
//! documented precedence); the `CUBAYES_OUT_DIR` environment variable
//! overrides the output directory last of all.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub run: Option<RunTable>,
    pub engine: Option<EngineTable>,
    /// Integrand parameter block, merged over the `--params` flag and the
    /// dedicated `--baker`/`--path` flags key-by-key.
    pub params: Option<toml::Table>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunTable {
    pub integrand: Option<String>,
    pub dim: Option<usize>,
    pub tolerances: Option<Vec<f64>>,
    pub replications: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub min_success: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineTable {
    pub r: Option<u32>,
    pub joint_r: Option<bool>,
    pub min_log2_n: Option<u32>,
    pub max_log2_n: Option<u32>,
    pub gamma_grid: Option<usize>,
    pub inflation: Option<f64>,
    pub gen_vector: Option<Vec<u64>>,
}

pub fn load(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}
