//! Run configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use layerneat::evolution::Trainer;
use layerneat::genome::EvolutionConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// ```text
/// dataset = "credit.csv"
/// schema = "credit.schema.toml"
/// trainer = "tensor"
///
/// [evolution]
/// population_size = 50
/// generations = 20
/// seed = 7
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub trainer: Trainer,
    pub evolution: EvolutionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            schema: PathBuf::new(),
            trainer: Trainer::Tensor,
            evolution: EvolutionConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn to_text(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Runtime(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.dataset.as_os_str().is_empty() {
            return Err(CliError::Usage(
                "no dataset given (--dataset or `dataset` in --config)".into(),
            ));
        }
        if self.schema.as_os_str().is_empty() {
            return Err(CliError::Usage(
                "no schema given (--schema or `schema` in --config)".into(),
            ));
        }
        self.evolution.validate().map_err(|e| CliError::Usage(e.to_string()))
    }
}
