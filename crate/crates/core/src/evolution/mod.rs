//! The generational loop: reproduce, train, evaluate, speciate.
//!
//! Offspring are trained after crossover and mutation and before
//! evaluation, and their trained weights are written back into the genome
//! so they carry over to later generations. Fitness is validation AUC.

mod record;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{auc, complexity, ComplexityReport, MetricError};
use crate::compiler::{compile, minimal_covering, readback, CompileError, LayeredModel, MinimalCoveringNetwork};
use crate::data::{Partition, PreparedDataset, Samples};
use crate::genome::{
    crossover, mutate_add_connection, mutate_add_node, mutate_remove_connection, mutate_remove_node, perturb_weights,
    reinit_weights, speciate, ConfigError, EvolutionConfig, Genome, GenomeError, InnovationTracker, Species,
};
use crate::graphplan::PlanError;
use crate::naive::{predict_naive, train_naive, NaiveError};
use crate::train::{predict, train, EarlyStopping, TrainConfig, TrainError};

pub use record::{config_digest, Prediction, RunDirectory, RunRecord, TIMINGS_FILE};

/// Fitness assigned to genomes with no input-to-output path.
pub const UNTRAINABLE_FITNESS: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trainer {
    /// Compiled layered tensors with backpropagation.
    Tensor,
    /// Node-by-node backpropagation on the genome.
    Naive,
    /// No gradient training; weights evolve by mutation.
    Genetic,
}

impl Trainer {
    pub const ALL: [Trainer; 3] = [Trainer::Tensor, Trainer::Naive, Trainer::Genetic];

    pub fn as_str(self) -> &'static str {
        match self {
            Trainer::Tensor => "tensor",
            Trainer::Naive => "naive",
            Trainer::Genetic => "genetic",
        }
    }

    pub fn uses_backprop(self) -> bool {
        self != Trainer::Genetic
    }

    /// Generations actually run: the genetic trainer gets
    /// `generations × epochs_per_generation` to match the backprop budget.
    pub fn generations(self, cfg: &EvolutionConfig) -> usize {
        match self {
            Trainer::Genetic => cfg.generations * cfg.epochs_per_generation,
            _ => cfg.generations,
        }
    }
}

impl fmt::Display for Trainer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Trainer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Trainer::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown trainer `{s}` (expected tensor, naive or genetic)"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Naive(#[from] NaiveError),
    #[error("metric: {0}")]
    Metric(#[from] MetricError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run directory {0} already exists")]
    RunDirExists(String),
    #[error("{0}")]
    Runtime(String),
}

/// `base + i`, the seed of repeat `i` of an experiment.
pub fn iteration_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add(i as u64)
}

/// Mini-batch shuffle seed for one training session.
fn session_seed(seed: u64, generation: usize, index: usize) -> u64 {
    let mut z = seed ^ ((generation as u64) << 32 | index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Predicted probabilities from the evaluator matching `trainer`.
pub fn predictions(g: &Genome, x: &crate::tensor::Matrix, trainer: Trainer) -> Result<Vec<f64>, EvolutionError> {
    Ok(match trainer {
        Trainer::Tensor => predict(&compile(g)?, x)?,
        Trainer::Naive | Trainer::Genetic => predict_naive(g, x)?,
    })
}

/// AUC of `g` on `samples`, or [`UNTRAINABLE_FITNESS`] if `g` has no
/// input-to-output path.
pub fn score(g: &Genome, samples: &Samples, trainer: Trainer) -> Result<f64, EvolutionError> {
    if matches!(crate::graphplan::plan(g), Err(PlanError::UntrainableGenome)) {
        return Ok(UNTRAINABLE_FITNESS);
    }
    Ok(auc(&predictions(g, &samples.x, trainer)?, &samples.y)?)
}

pub fn validation_fitness(g: &Genome, data: &PreparedDataset, trainer: Trainer) -> Result<f64, EvolutionError> {
    score(g, data.samples(Partition::Validation), trainer)
}

#[derive(Clone, Debug)]
pub struct Population {
    pub generation: usize,
    pub genomes: Vec<Genome>,
    pub species: Vec<Species>,
    next_species_id: usize,
    pub tracker: InnovationTracker,
    rng: ChaCha8Rng,
}

impl Population {
    /// Minimal genomes with every input wired to the single output.
    pub fn new(inputs: usize, cfg: &EvolutionConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let init = cfg.weight_init();
        let dist = Normal::new(init.mean, init.std).expect("finite init");
        let genomes: Vec<Genome> = (0..cfg.population_size)
            .map(|_| Genome::minimal(inputs, 1, || dist.sample(&mut rng)))
            .collect();
        let tracker = InnovationTracker::after(&genomes);
        Self {
            generation: 0,
            genomes,
            species: Vec::new(),
            next_species_id: 0,
            tracker,
            rng,
        }
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }

    pub fn best(&self) -> Option<(usize, &Genome)> {
        let mut best: Option<(usize, &Genome)> = None;
        for (i, g) in self.genomes.iter().enumerate() {
            let f = g.fitness.unwrap_or(f64::NEG_INFINITY);
            if best.is_none_or(|(_, b)| f > b.fitness.unwrap_or(f64::NEG_INFINITY)) {
                best = Some((i, g));
            }
        }
        best
    }

    fn speciate(&mut self, cfg: &EvolutionConfig) -> Vec<usize> {
        let assignment = speciate(
            &self.genomes,
            &mut self.species,
            &mut self.next_species_id,
            cfg.compatibility_threshold,
            cfg.compatibility(),
        );
        for (g, &s) in self.genomes.iter_mut().zip(&assignment) {
            g.species = Some(s);
        }
        assignment
    }

    /// Replaces the population with elites and offspring. Returns which
    /// genomes are new and the number of weight-mutation changes made.
    fn reproduce(&mut self, cfg: &EvolutionConfig, trainer: Trainer) -> Result<(Vec<bool>, usize), EvolutionError> {
        self.tracker.new_generation();
        let fitness = |g: &Genome| g.fitness.unwrap_or(UNTRAINABLE_FITNESS);
        let means: Vec<f64> = self
            .species
            .iter()
            .map(|s| s.members.iter().map(|&i| fitness(&self.genomes[i])).sum::<f64>() / s.members.len() as f64)
            .collect();
        let quotas = apportion(cfg.population_size, &means);
        let rates = cfg.mutation_rates();
        let init = cfg.weight_init();

        let mut next = Vec::with_capacity(cfg.population_size);
        let mut fresh = Vec::with_capacity(cfg.population_size);
        let mut weight_changes = 0;
        for (s, &quota) in self.species.iter().zip(&quotas) {
            if quota == 0 {
                continue;
            }
            let mut ranked = s.members.clone();
            ranked.sort_by(|&a, &b| {
                fitness(&self.genomes[b])
                    .total_cmp(&fitness(&self.genomes[a]))
                    .then(a.cmp(&b))
            });
            next.push(self.genomes[ranked[0]].clone());
            fresh.push(false);

            let keep =
                ((ranked.len() as f64 * (1.0 - cfg.elimination_fraction)).ceil() as usize).clamp(1, ranked.len());
            let survivors = &ranked[..keep];
            for _ in 1..quota {
                let a = &self.genomes[*survivors.choose(&mut self.rng).expect("non-empty")];
                let b = &self.genomes[*survivors.choose(&mut self.rng).expect("non-empty")];
                let mut child = crossover(a, b, &mut self.rng)?;
                child.fitness = None;
                child.species = None;
                let rng = &mut self.rng;
                if rng.random_bool(rates.add_connection) {
                    mutate_add_connection(&mut child, &mut self.tracker, init, rng);
                }
                if rng.random_bool(rates.remove_connection) {
                    mutate_remove_connection(&mut child, rng);
                }
                if rng.random_bool(rates.add_node) {
                    mutate_add_node(&mut child, &mut self.tracker, rng);
                }
                if rng.random_bool(rates.remove_node) {
                    mutate_remove_node(&mut child, rng);
                }
                if rng.random_bool(rates.reinit_weights) {
                    reinit_weights(&mut child, init, rng);
                }
                if !trainer.uses_backprop() {
                    weight_changes += perturb_weights(&mut child, cfg.weight_mutation(), init, rng);
                }
                next.push(child);
                fresh.push(true);
            }
        }
        self.genomes = next;
        self.generation += 1;
        Ok((fresh, weight_changes))
    }
}

/// Largest-remainder split of `total` proportional to `weights`; ties go to
/// the lower index. Equal shares when every weight is zero.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    if weights.is_empty() {
        return Vec::new();
    }
    let sum: f64 = weights.iter().sum();
    let shares: Vec<f64> = if sum > 0.0 {
        weights.iter().map(|w| total as f64 * w / sum).collect()
    } else {
        vec![total as f64 / weights.len() as f64; weights.len()]
    };
    let mut out: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        (shares[b] - shares[b].floor())
            .total_cmp(&(shares[a] - shares[a].floor()))
            .then(a.cmp(&b))
    });
    let assigned: usize = out.iter().sum();
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

/// Training time of one genome in one generation. Not deterministic, so
/// kept out of the generation reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenomeTiming {
    pub generation: usize,
    pub genome: usize,
    pub epochs: usize,
    pub seconds_per_epoch: f64,
    pub depth: Option<usize>,
    pub size: Option<usize>,
    pub width: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub seed: u64,
    pub generation: usize,
    pub trainer: Trainer,
    pub fitness: Vec<f64>,
    pub species: Vec<usize>,
    pub trained: Vec<bool>,
    pub untrainable: Vec<bool>,
    /// Post-epoch training loss per genome; empty when not trained.
    pub loss_curves: Vec<Vec<f64>>,
    pub complexity: Vec<Option<ComplexityReport>>,
    pub species_count: usize,
    pub best_index: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Values changed by weight mutation; zero for backprop trainers.
    pub weight_mutations: usize,
    #[serde(skip)]
    pub timings: Vec<GenomeTiming>,
}

struct Outcome {
    genome: Genome,
    fitness: f64,
    untrainable: bool,
    loss: Vec<f64>,
    epoch_seconds: Vec<f64>,
}

fn train_one(
    mut g: Genome,
    data: &PreparedDataset,
    cfg: &EvolutionConfig,
    trainer: Trainer,
    seed: u64,
) -> Result<Outcome, EvolutionError> {
    let tcfg = TrainConfig {
        epochs: cfg.epochs_per_generation,
        batch_size: cfg.batch_size,
        adadelta: cfg.adadelta(),
        shuffle_seed: seed,
        early_stopping: None,
    };
    let samples = data.samples(Partition::Train);
    let mut loss = Vec::new();
    let mut epoch_seconds = Vec::new();
    let untrainable = matches!(crate::graphplan::plan(&g), Err(PlanError::UntrainableGenome));
    if !untrainable {
        match trainer {
            Trainer::Tensor => {
                let mut net = compile(&g)?;
                let report = train(&mut net, samples, None, &tcfg)?;
                g = readback(&net, &g)?;
                loss = report.loss_history;
                epoch_seconds = report.epoch_seconds;
            }
            Trainer::Naive => {
                let (trained, report) = train_naive(&g, samples, &tcfg)?;
                g = trained;
                loss = report.loss_history;
                epoch_seconds = report.epoch_seconds;
            }
            Trainer::Genetic => {}
        }
    }
    let fitness = validation_fitness(&g, data, trainer)?;
    g.fitness = Some(fitness);
    Ok(Outcome {
        genome: g,
        fitness,
        untrainable,
        loss,
        epoch_seconds,
    })
}

fn pool(cfg: &EvolutionConfig) -> Result<rayon::ThreadPool, EvolutionError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| EvolutionError::Runtime(format!("thread pool: {e}")))
}

/// Trains every genome flagged in `fresh`, scores it and speciates the
/// population.
fn evaluate(
    pop: &mut Population,
    fresh: &[bool],
    weight_mutations: usize,
    data: &PreparedDataset,
    cfg: &EvolutionConfig,
    trainer: Trainer,
    workers: &rayon::ThreadPool,
) -> Result<GenerationReport, EvolutionError> {
    let generation = pop.generation;
    let genomes = std::mem::take(&mut pop.genomes);
    let outcomes: Vec<Result<Outcome, EvolutionError>> = workers.install(|| {
        genomes
            .into_par_iter()
            .zip(fresh.par_iter())
            .enumerate()
            .map(|(i, (g, &new))| {
                if new {
                    train_one(g, data, cfg, trainer, session_seed(cfg.seed, generation, i))
                } else {
                    let fitness = g.fitness.unwrap_or(UNTRAINABLE_FITNESS);
                    let untrainable = matches!(crate::graphplan::plan(&g), Err(PlanError::UntrainableGenome));
                    Ok(Outcome {
                        genome: g,
                        fitness,
                        untrainable,
                        loss: Vec::new(),
                        epoch_seconds: Vec::new(),
                    })
                }
            })
            .collect()
    });

    let mut report = GenerationReport {
        seed: cfg.seed,
        generation,
        trainer,
        fitness: Vec::new(),
        species: Vec::new(),
        trained: fresh.to_vec(),
        untrainable: Vec::new(),
        loss_curves: Vec::new(),
        complexity: Vec::new(),
        species_count: 0,
        best_index: 0,
        best_fitness: f64::NEG_INFINITY,
        mean_fitness: 0.0,
        weight_mutations,
        timings: Vec::new(),
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        let shape = complexity(&o.genome).ok();
        if !o.epoch_seconds.is_empty() {
            report.timings.push(GenomeTiming {
                generation,
                genome: i,
                epochs: o.epoch_seconds.len(),
                seconds_per_epoch: o.epoch_seconds.iter().sum::<f64>() / o.epoch_seconds.len() as f64,
                depth: shape.as_ref().map(|c| c.depth),
                size: shape.as_ref().map(|c| c.parameter_size),
                width: shape.as_ref().map(|c| c.width),
            });
        }
        if o.fitness > report.best_fitness {
            report.best_fitness = o.fitness;
            report.best_index = i;
        }
        report.fitness.push(o.fitness);
        report.untrainable.push(o.untrainable);
        report.loss_curves.push(o.loss);
        report.complexity.push(shape);
        pop.genomes.push(o.genome);
    }
    report.mean_fitness = report.fitness.iter().sum::<f64>() / report.fitness.len().max(1) as f64;
    report.species = pop.speciate(cfg);
    report.species_count = pop.species.len();
    Ok(report)
}

/// Trains and scores the initial population (generation 0).
pub fn initialize(
    data: &PreparedDataset,
    cfg: &EvolutionConfig,
    trainer: Trainer,
) -> Result<(Population, GenerationReport), EvolutionError> {
    cfg.validate()?;
    let workers = pool(cfg)?;
    let mut pop = Population::new(data.dim(), cfg);
    let fresh = vec![true; pop.len()];
    let report = evaluate(&mut pop, &fresh, 0, data, cfg, trainer, &workers)?;
    Ok((pop, report))
}

/// One generation: elimination and reproduction, training of the new
/// genomes, evaluation and speciation.
pub fn run_generation(
    pop: &mut Population,
    data: &PreparedDataset,
    cfg: &EvolutionConfig,
    trainer: Trainer,
) -> Result<GenerationReport, EvolutionError> {
    cfg.validate()?;
    let workers = pool(cfg)?;
    let (fresh, changes) = pop.reproduce(cfg, trainer)?;
    evaluate(pop, &fresh, changes, data, cfg, trainer, &workers)
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    /// Highest validation fitness seen in any generation (earliest on ties).
    pub best: Genome,
    pub best_generation: usize,
    pub history: Vec<GenerationReport>,
    pub wall_seconds: f64,
}

pub fn run_evolution(
    cfg: &EvolutionConfig,
    data: &PreparedDataset,
    trainer: Trainer,
) -> Result<EvolutionResult, EvolutionError> {
    run_evolution_with(cfg, data, trainer, |_, _| Ok(()))
}

/// As [`run_evolution`], calling `observe` after every generation.
pub fn run_evolution_with(
    cfg: &EvolutionConfig,
    data: &PreparedDataset,
    trainer: Trainer,
    mut observe: impl FnMut(&GenerationReport, &Population) -> Result<(), EvolutionError>,
) -> Result<EvolutionResult, EvolutionError> {
    cfg.validate()?;
    let start = Instant::now();
    let workers = pool(cfg)?;
    let mut pop = Population::new(data.dim(), cfg);
    let fresh = vec![true; pop.len()];
    let first = evaluate(&mut pop, &fresh, 0, data, cfg, trainer, &workers)?;
    observe(&first, &pop)?;
    let mut best = (pop.genomes[first.best_index].clone(), 0);
    let mut history = vec![first];
    for _ in 0..trainer.generations(cfg) {
        let (fresh, changes) = pop.reproduce(cfg, trainer)?;
        let report = evaluate(&mut pop, &fresh, changes, data, cfg, trainer, &workers)?;
        observe(&report, &pop)?;
        if report.best_fitness > best.0.fitness.unwrap_or(f64::NEG_INFINITY) {
            best = (pop.genomes[report.best_index].clone(), report.generation);
        }
        history.push(report);
    }
    Ok(EvolutionResult {
        best: best.0,
        best_generation: best.1,
        history,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Scores on the held-out test rows. This is the only place the test
/// partition is read.
pub fn test_predictions(
    g: &Genome,
    data: &PreparedDataset,
    trainer: Trainer,
) -> Result<(Vec<Prediction>, f64), EvolutionError> {
    let test = data.test_samples();
    let scores = predictions(g, &test.x, trainer)?;
    let value = auc(&scores, &test.y)?;
    let rows = data
        .test
        .iter()
        .zip(&scores)
        .zip(&test.y)
        .map(|((&row, &score), &target)| Prediction { row, target, score })
        .collect();
    Ok((rows, value))
}

/// Test AUC of a layered model (used for retrained dense networks).
pub fn model_test_auc<M: LayeredModel + ?Sized>(
    model: &M,
    data: &PreparedDataset,
) -> Result<(Vec<Prediction>, f64), EvolutionError> {
    let test = data.test_samples();
    let scores = predict(model, &test.x)?;
    let value = auc(&scores, &test.y)?;
    let rows = data
        .test
        .iter()
        .zip(&scores)
        .zip(&test.y)
        .map(|((&row, &score), &target)| Prediction { row, target, score })
        .collect();
    Ok((rows, value))
}

/// Runs evolution into a fresh run directory: configuration first, one
/// report per generation as it completes, then test predictions, the best
/// genome, timings and the run record. `data` should be freshly prepared:
/// the record's audit flag reports any earlier read of its test rows.
pub fn evolve_into(
    dir: &Path,
    config_text: &str,
    dataset: &str,
    iteration: usize,
    cfg: &EvolutionConfig,
    data: &PreparedDataset,
    trainer: Trainer,
) -> Result<RunRecord, EvolutionError> {
    let run = RunDirectory::create(dir)?;
    run.write_config(config_text)?;
    let result = run_evolution_with(cfg, data, trainer, |report, _| run.write_generation(report).map(|_| ()))?;
    let test_accessed_early = data.test_accessed();
    let (rows, test_auc) = test_predictions(&result.best, data, trainer)?;
    run.write_predictions(cfg.seed, &rows)?;
    run.write_best_genome(&result.best, cfg.seed)?;
    run.write_timings(cfg.seed, &result.history)?;
    let record = RunRecord {
        seed: cfg.seed,
        iteration,
        trainer,
        dataset: dataset.to_string(),
        config_digest: config_digest(config_text),
        generations_run: result.history.len(),
        best_generation: result.best_generation,
        best_validation_auc: result.best.fitness.unwrap_or(f64::NAN),
        test_auc,
        complexity: complexity(&result.best).ok(),
        test_accessed_early,
    };
    run.write_record(&record)?;
    Ok(record)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for RetrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 200,
            patience: 10,
            batch_size: Some(32),
            seed: 0,
        }
    }
}

/// Compiles `g`, unmasks and reinitialises every weight, then trains with
/// early stopping on validation loss. The result no longer maps back to a
/// genome.
pub fn retrain(
    g: &Genome,
    data: &PreparedDataset,
    cfg: &RetrainConfig,
    adadelta: crate::tensor::AdadeltaConfig,
) -> Result<(MinimalCoveringNetwork, crate::train::TrainReport), EvolutionError> {
    let net = compile(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = minimal_covering(&net, &mut rng);
    let tcfg = TrainConfig {
        epochs: cfg.max_epochs,
        batch_size: cfg.batch_size,
        adadelta,
        shuffle_seed: cfg.seed,
        early_stopping: Some(EarlyStopping {
            patience: cfg.patience,
            min_delta: 0.0,
        }),
    };
    let report = train(
        &mut model,
        data.samples(Partition::Train),
        Some(data.samples(Partition::Validation)),
        &tcfg,
    )?;
    Ok((model, report))
}
