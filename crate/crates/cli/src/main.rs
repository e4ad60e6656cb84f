//! `layerneat` command-line interface.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use layerneat::bench::synthetic::{credit_like, xor_gaussians};
use layerneat::bench::{
    ablation_table, characterize_timing, complexity, depth_family, plot_data_csv, run_ablation, timing_samples,
    TimingConfig,
};
use layerneat::compiler::{compile, LayeredModel};
use layerneat::data::{load_csv, prepare, PreparedDataset, Schema, SplitConfig};
use layerneat::evolution::{
    config_digest, evolve_into, iteration_seed, model_test_auc, retrain, test_predictions, EvolutionError, Prediction,
    RetrainConfig, RunRecord, Trainer,
};
use layerneat::genome::Genome;
use layerneat::graphplan::plan;
use serde::Serialize;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "layerneat",
    version,
    about = "Evolve sparse networks and train them as layered tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run evolution and write a run directory.
    Evolve(EvolveArgs),
    /// Retrain a genome as a fully unmasked network with fresh weights.
    Retrain(RetrainArgs),
    /// Compare tensor, naive and genetic training at a matched budget.
    Ablate(RunArgs),
    /// Time training epochs across genome depths at fixed size.
    BenchTiming(TimingArgs),
    /// Print the layer plan, complexity and mask density of a genome.
    Inspect { genome: PathBuf },
    /// Write a synthetic table as `<output>/data.csv` and `<output>/schema.toml`.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum SynthKind {
    /// XOR-arranged Gaussian blobs in two features.
    Xor,
    /// Mixed-type credit-approval-like table.
    Credit,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 1000)]
    rows: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra pure-noise columns (xor only).
    #[arg(long, default_value_t = 0)]
    noise_features: usize,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Key-value run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    trainer: Option<Trainer>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output directory; must not exist yet.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Independent repeats; repeat i uses seed + i and writes to `<output>/seed_<seed+i>`.
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args, Debug)]
struct RetrainArgs {
    /// Genome file, usually `best_genome.txt` of a run.
    #[arg(long)]
    genome: PathBuf,
    /// Configuration of the source run (its `config.toml`).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value_t = RetrainConfig::default().max_epochs)]
    max_epochs: usize,
    #[arg(long, default_value_t = RetrainConfig::default().patience)]
    patience: usize,
}

#[derive(Args, Debug)]
struct TimingArgs {
    #[arg(long, value_delimiter = ',', default_value = "3,6,12,24")]
    depths: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    size: usize,
    #[arg(long, default_value_t = 8)]
    inputs: usize,
    #[arg(long, default_value_t = 2000)]
    rows: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 15)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plot-data CSV destination.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::Config(_) => CliError::Usage(e.to_string()),
            EvolutionError::RunDirExists(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Retrain(a) => cmd_retrain(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::BenchTiming(a) => cmd_bench_timing(a),
        Command::Inspect { genome } => cmd_inspect(&genome),
        Command::Synth(a) => cmd_synth(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn resolve(a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let e = &mut cfg.evolution;
    if let Some(v) = &a.dataset {
        cfg.dataset = v.clone();
    }
    if let Some(v) = &a.schema {
        cfg.schema = v.clone();
    }
    if let Some(v) = a.trainer {
        cfg.trainer = v;
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {$(if let Some(v) = a.$flag { e.$field = v; })*};
    }
    set!(seed => seed, generations => generations, population => population_size,
         epochs => epochs_per_generation, parallelism => parallelism);
    if a.batch_size.is_some() {
        e.batch_size = a.batch_size;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(cfg: &RunConfig) -> Result<PreparedDataset> {
    let data_err = |e: layerneat::data::DataError| CliError::Data(e.to_string());
    let schema = Schema::load(&cfg.schema).map_err(data_err)?;
    let raw = load_csv(&cfg.dataset, &schema).map_err(data_err)?;
    prepare(&raw, cfg.evolution.seed, SplitConfig::default()).map_err(data_err)
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn fresh_dir(path: &Path) -> Result<()> {
    if path.exists() {
        return Err(CliError::Usage(format!("output {} already exists", path.display())));
    }
    fs::create_dir_all(path).map_err(io(path))
}

fn cmd_evolve(a: EvolveArgs) -> Result<()> {
    let base = resolve(&a.run)?;
    let iterations = a.iterations.unwrap_or(1);
    if iterations == 0 {
        return Err(CliError::Usage("--iterations must be at least 1".into()));
    }
    if iterations > 1 {
        fresh_dir(&a.run.output)?;
    }
    for i in 0..iterations {
        let mut cfg = base.clone();
        cfg.evolution.seed = iteration_seed(base.evolution.seed, i);
        let dir = if iterations == 1 {
            a.run.output.clone()
        } else {
            a.run.output.join(format!("seed_{}", cfg.evolution.seed))
        };
        let data = load_data(&cfg)?;
        let record = evolve_once(&cfg, &data, &dir, i)?;
        println!(
            "{}: seed {} best validation AUC {:.4} (generation {}), test AUC {:.4}",
            dir.display(),
            record.seed,
            record.best_validation_auc,
            record.best_generation,
            record.test_auc
        );
    }
    Ok(())
}

fn evolve_once(cfg: &RunConfig, data: &PreparedDataset, dir: &Path, iteration: usize) -> Result<RunRecord> {
    let text = cfg.to_text()?;
    let dataset = cfg.dataset.display().to_string();
    Ok(evolve_into(
        dir,
        &text,
        &dataset,
        iteration,
        &cfg.evolution,
        data,
        cfg.trainer,
    )?)
}

#[derive(Serialize)]
struct RetrainRecord {
    seed: u64,
    config_digest: String,
    source_test_auc: f64,
    test_auc: f64,
    epochs_run: usize,
    best_epoch: Option<usize>,
    stopped_early: bool,
    layer_shapes: Vec<(usize, usize)>,
}

fn read_genome(path: &Path) -> Result<Genome> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Genome::from_text(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_predictions(path: &Path, seed: u64, rows: &[Prediction]) -> Result<()> {
    let mut out = String::from("seed,row,target,score\n");
    for p in rows {
        let _ = writeln!(out, "{seed},{},{},{}", p.row, p.target, p.score);
    }
    fs::write(path, out).map_err(io(path))
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn cmd_retrain(a: RetrainArgs) -> Result<()> {
    let genome = read_genome(&a.genome)?;
    let cfg = RunConfig::load(&a.config)?;
    cfg.validate()?;
    let data = load_data(&cfg)?;
    fresh_dir(&a.output)?;
    let rc = RetrainConfig {
        max_epochs: a.max_epochs,
        patience: a.patience,
        batch_size: cfg.evolution.batch_size,
        seed: cfg.evolution.seed,
    };
    let (model, report) = retrain(&genome, &data, &rc, cfg.evolution.adadelta())?;
    let (rows, test_auc) = model_test_auc(&model, &data)?;
    let (_, source_test_auc) = test_predictions(&genome, &data, Trainer::Tensor)?;
    write_predictions(&a.output.join("predictions.csv"), rc.seed, &rows)?;
    let record = RetrainRecord {
        seed: rc.seed,
        config_digest: config_digest(&cfg.to_text()?),
        source_test_auc,
        test_auc,
        epochs_run: report.epochs_run(),
        best_epoch: report.best_epoch,
        stopped_early: report.stopped_early,
        layer_shapes: model.layers().iter().map(|l| l.weights.shape()).collect(),
    };
    let path = a.output.join("record.json");
    fs::write(&path, json(&record)?).map_err(io(&path))?;
    let best = record.best_epoch.map_or("none".to_string(), |e| e.to_string());
    println!(
        "retrained for {} epochs (best epoch {best}): test AUC {:.4}, source genome {:.4}",
        record.epochs_run, test_auc, source_test_auc
    );
    Ok(())
}

fn cmd_ablate(a: RunArgs) -> Result<()> {
    let cfg = resolve(&a)?;
    let data = load_data(&cfg)?;
    fresh_dir(&a.output)?;
    let text = cfg.to_text()?;
    let path = a.output.join("config.toml");
    fs::write(&path, &text).map_err(io(&path))?;
    let rows = run_ablation(&data, &cfg.evolution)?;
    let table = ablation_table(&rows);
    let path = a.output.join("ablation.csv");
    fs::write(&path, &table).map_err(io(&path))?;
    print!("{table}");
    Ok(())
}

fn cmd_bench_timing(a: TimingArgs) -> Result<()> {
    let genomes = depth_family(a.inputs, &a.depths, a.size, a.seed).ok_or_else(|| {
        CliError::Usage(format!(
            "no genome of size {} fits depths {:?} with {} inputs",
            a.size, a.depths, a.inputs
        ))
    })?;
    let data = timing_samples(a.inputs, a.rows, a.seed);
    let cfg = TimingConfig {
        epochs: a.epochs,
        repeats: a.repeats,
        batch_size: Some(a.batch_size),
    };
    let study = characterize_timing(&genomes, &data, &cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&a.output, plot_data_csv(&study.records)).map_err(io(&a.output))?;
    for (name, fit) in [
        ("depth", study.depth_fit),
        ("size", study.size_fit),
        ("width", study.width_fit),
    ] {
        let r = fit.pearson.map_or("undefined".to_string(), |p| format!("{p:.4}"));
        println!(
            "{name}: slope {:.3e} s, intercept {:.3e} s, pearson {r}, max relative residual {:.3}",
            fit.slope, fit.intercept, fit.max_relative_residual
        );
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let raw = match a.kind {
        SynthKind::Xor => xor_gaussians(a.rows, 0.5, a.noise_features, a.seed),
        SynthKind::Credit => credit_like(a.rows, a.seed),
    };
    fs::create_dir_all(&a.output).map_err(io(&a.output))?;
    for (name, text) in [("data.csv", raw.to_csv()), ("schema.toml", raw.schema().to_text())] {
        let path = a.output.join(name);
        fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    let g = read_genome(path)?;
    let p = plan(&g).map_err(|e| CliError::Data(e.to_string()))?;
    let c = complexity(&g).map_err(|e| CliError::Data(e.to_string()))?;
    let net = compile(&g).map_err(|e| CliError::Data(e.to_string()))?;
    print!("{}", p.dump());
    println!("layers {}", c.depth);
    println!("nodes {}", c.nodes);
    println!("connections {}", c.connections);
    println!("parameter_size {}", c.parameter_size);
    println!("width {}", c.width);
    println!("average_width {:.4}", c.average_width);
    println!("skippiness {:.6}", c.skippiness);
    println!("mask_density {:.6}", net.mask_density());
    Ok(())
}
