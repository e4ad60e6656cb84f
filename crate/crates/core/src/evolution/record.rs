//! Run directory layout.
//!
//! ```text
//! <run>/config.toml              verbatim run configuration
//! <run>/generations/gen_0000.json one report per generation
//! <run>/best_genome.txt          best genome in the text format
//! <run>/predictions.csv          test-set scores
//! <run>/record.json              seed, config digest, metrics
//! <run>/timings.csv              per-genome epoch times (not reproducible)
//! ```
//!
//! Every file except `timings.csv` is byte-identical across reruns with the
//! same configuration and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EvolutionError, GenerationReport, Trainer};
use crate::bench::ComplexityReport;
use crate::genome::Genome;

pub const TIMINGS_FILE: &str = "timings.csv";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Row index in the source table.
    pub row: usize,
    pub target: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub iteration: usize,
    pub trainer: Trainer,
    pub dataset: String,
    pub config_digest: String,
    pub generations_run: usize,
    pub best_generation: usize,
    pub best_validation_auc: f64,
    pub test_auc: f64,
    pub complexity: Option<ComplexityReport>,
    /// Always false for a well-behaved run: set if the test rows were read
    /// before predictions were written.
    pub test_accessed_early: bool,
}

/// Hex SHA-256 of a configuration text.
pub fn config_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub struct RunDirectory {
    root: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvolutionError + '_ {
    move |source| EvolutionError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl RunDirectory {
    /// Creates a fresh directory. Existing directories are never reused.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, EvolutionError> {
        let root = root.into();
        if root.exists() {
            return Err(EvolutionError::RunDirExists(root.display().to_string()));
        }
        let gens = root.join("generations");
        fs::create_dir_all(&gens).map_err(io_err(&gens))?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, EvolutionError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        Ok(path)
    }

    fn json<T: Serialize>(value: &T) -> Result<String, EvolutionError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| EvolutionError::Runtime(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_config(&self, text: &str) -> Result<PathBuf, EvolutionError> {
        self.write("config.toml", text)
    }

    pub fn write_generation(&self, report: &GenerationReport) -> Result<PathBuf, EvolutionError> {
        self.write(
            &format!("generations/gen_{:04}.json", report.generation),
            &Self::json(report)?,
        )
    }

    pub fn write_best_genome(&self, g: &Genome, seed: u64) -> Result<PathBuf, EvolutionError> {
        self.write("best_genome.txt", &g.to_text_with_comments(&[format!("seed {seed}")]))
    }

    pub fn write_predictions(&self, seed: u64, rows: &[Prediction]) -> Result<PathBuf, EvolutionError> {
        let mut out = String::from("seed,row,target,score\n");
        for p in rows {
            let _ = writeln!(out, "{seed},{},{},{}", p.row, p.target, p.score);
        }
        self.write("predictions.csv", &out)
    }

    pub fn write_record(&self, record: &RunRecord) -> Result<PathBuf, EvolutionError> {
        self.write("record.json", &Self::json(record)?)
    }

    pub fn write_timings(&self, seed: u64, history: &[GenerationReport]) -> Result<PathBuf, EvolutionError> {
        let mut out = String::from("seed,generation,genome,epochs,seconds_per_epoch,depth,size,width\n");
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        for t in history.iter().flat_map(|r| &r.timings) {
            let _ = writeln!(
                out,
                "{seed},{},{},{},{:e},{},{},{}",
                t.generation,
                t.genome,
                t.epochs,
                t.seconds_per_epoch,
                opt(t.depth),
                opt(t.size),
                opt(t.width)
            );
        }
        self.write(TIMINGS_FILE, &out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_existing_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let run = tmp.path().join("run");
        let dir = RunDirectory::create(&run).unwrap();
        assert!(dir.path().join("generations").is_dir());
        assert!(matches!(
            RunDirectory::create(&run),
            Err(EvolutionError::RunDirExists(_))
        ));
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(
            config_digest(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn predictions_carry_seed() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = RunDirectory::create(tmp.path().join("r")).unwrap();
        let p = dir
            .write_predictions(
                7,
                &[Prediction {
                    row: 3,
                    target: 1.0,
                    score: 0.25,
                }],
            )
            .unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "seed,row,target,score\n7,3,1,0.25\n");
    }
}
