//! Per-epoch training time against genome shape.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::complexity::complexity_of_plan;
use crate::compiler::compile;
use crate::data::Samples;
use crate::genome::Genome;
use crate::train::{train, TrainConfig, TrainError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    /// Measured epochs per repeat; one extra warm-up epoch runs first.
    pub epochs: usize,
    pub repeats: usize,
    pub batch_size: Option<usize>,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            repeats: 5,
            batch_size: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub depth: usize,
    pub size: usize,
    pub width: usize,
    /// Every measured epoch, repeats concatenated.
    pub epoch_seconds: Vec<f64>,
    /// Median over repeats of each repeat's mean epoch time.
    pub seconds_per_epoch: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when either variable is constant.
    pub pearson: Option<f64>,
    /// Largest `|y - fit| / fit` over the points.
    pub max_relative_residual: f64,
}

/// Ordinary least squares `y ≈ intercept + slope · x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let pearson = (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt());
    let max_relative_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let fit = intercept + slope * x;
            (y - fit).abs() / fit.abs()
        })
        .fold(0.0, f64::max);
    LinearFit {
        slope,
        intercept,
        pearson,
        max_relative_residual,
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

struct Timed {
    net: crate::compiler::CompiledNetwork,
    epoch_seconds: Vec<f64>,
    means: Vec<f64>,
}

impl Timed {
    fn new(g: &Genome) -> Result<Self, TrainError> {
        Ok(Self {
            net: compile(g)?,
            epoch_seconds: Vec::new(),
            means: Vec::new(),
        })
    }

    fn repeat(&mut self, data: &Samples, cfg: &TimingConfig) -> Result<(), TrainError> {
        let tcfg = TrainConfig {
            epochs: cfg.epochs + 1,
            batch_size: cfg.batch_size,
            ..Default::default()
        };
        let mut model = self.net.clone();
        let report = train(&mut model, data, None, &tcfg)?;
        let measured = &report.epoch_seconds[1..];
        self.means
            .push(measured.iter().sum::<f64>() / measured.len().max(1) as f64);
        self.epoch_seconds.extend_from_slice(measured);
        Ok(())
    }

    fn finish(self) -> TimingRecord {
        let shape = complexity_of_plan(self.net.plan());
        TimingRecord {
            depth: shape.depth,
            size: shape.parameter_size,
            width: shape.width,
            epoch_seconds: self.epoch_seconds,
            seconds_per_epoch: median(&self.means),
        }
    }
}

/// Times the epoch loop of the compiled genome. Compilation and the warm-up
/// epoch are outside the measured window.
pub fn time_genome(g: &Genome, data: &Samples, cfg: &TimingConfig) -> Result<TimingRecord, TrainError> {
    let mut t = Timed::new(g)?;
    for _ in 0..cfg.repeats.max(1) {
        t.repeat(data, cfg)?;
    }
    Ok(t.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingStudy {
    pub records: Vec<TimingRecord>,
    pub depth_fit: LinearFit,
    pub size_fit: LinearFit,
    pub width_fit: LinearFit,
}

/// Measures the genomes on the calling thread, one repeat of each in turn,
/// and fits time per epoch against depth, size and width.
pub fn characterize_timing(genomes: &[Genome], data: &Samples, cfg: &TimingConfig) -> Result<TimingStudy, TrainError> {
    let mut timed = genomes.iter().map(Timed::new).collect::<Result<Vec<_>, _>>()?;
    for _ in 0..cfg.repeats.max(1) {
        for t in &mut timed {
            t.repeat(data, cfg)?;
        }
    }
    let records: Vec<TimingRecord> = timed.into_iter().map(Timed::finish).collect();
    let t: Vec<f64> = records.iter().map(|r| r.seconds_per_epoch).collect();
    let fit = |f: fn(&TimingRecord) -> usize| {
        let xs: Vec<f64> = records.iter().map(|r| f(r) as f64).collect();
        linear_fit(&xs, &t)
    };
    Ok(TimingStudy {
        depth_fit: fit(|r| r.depth),
        size_fit: fit(|r| r.size),
        width_fit: fit(|r| r.width),
        records,
    })
}

/// Uniform random features with alternating labels; timing ignores content.
pub fn timing_samples(inputs: usize, rows: usize, seed: u64) -> Samples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..inputs).map(|_| rng.random::<f64>()).collect())
        .collect();
    Samples::from_rows(&x, (0..rows).map(|i| (i % 2) as f64).collect())
}

/// Plot data: one row per genome.
pub fn plot_data_csv(records: &[TimingRecord]) -> String {
    let mut out = String::from("depth,size,width,time_per_epoch\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{:e}", r.depth, r.size, r.width, r.seconds_per_epoch);
    }
    out
}
