use std::path::{Path, PathBuf};

use elastica::flow::Terminal;
use elastica::FlowConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one flow run, written into its output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: Vec<String>,
    pub config: FlowConfig,
    pub input: PathBuf,
    pub outputs: Vec<PathBuf>,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_energy: f64,
    pub final_grad_norm: f64,
    pub terminal: Terminal,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| CliError::output(&path, e))?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::input(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }
}
