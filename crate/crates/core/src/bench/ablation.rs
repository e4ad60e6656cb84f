//! Tensor vs naive vs genetic training at a matched budget.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::PreparedDataset;
use crate::evolution::{run_evolution, test_predictions, EvolutionError, Trainer};
use crate::genome::EvolutionConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub trainer: Trainer,
    pub generations: usize,
    pub test_auc: f64,
    pub validation_auc: f64,
    pub wall_seconds: f64,
}

/// Runs every trainer on the same data and configuration. The genetic
/// trainer runs `generations × epochs_per_generation` generations.
pub fn run_ablation(data: &PreparedDataset, cfg: &EvolutionConfig) -> Result<Vec<AblationRow>, EvolutionError> {
    let mut runs = Vec::with_capacity(Trainer::ALL.len());
    for trainer in Trainer::ALL {
        let start = Instant::now();
        let result = run_evolution(cfg, data, trainer)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        runs.push((trainer, result, wall_seconds));
    }
    // test rows are read only once every run has finished
    runs.into_iter()
        .map(|(trainer, result, wall_seconds)| {
            let (_, test_auc) = test_predictions(&result.best, data, trainer)?;
            Ok(AblationRow {
                trainer,
                generations: trainer.generations(cfg),
                test_auc,
                validation_auc: result.best.fitness.unwrap_or(f64::NAN),
                wall_seconds,
            })
        })
        .collect()
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = String::from("trainer,generations,test_auc,validation_auc,wall_seconds\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.3}",
            r.trainer, r.generations, r.test_auc, r.validation_auc, r.wall_seconds
        );
    }
    out
}
