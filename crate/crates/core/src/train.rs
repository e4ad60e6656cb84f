//! Gradient training of layered models with masked Adadelta.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compiler::{CompileError, DenseLayer, LayeredModel};
use crate::data::Samples;
use crate::tensor::{bce_loss, Activation, AdadeltaConfig, AdadeltaState, Matrix, Tape, TensorError, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("no training samples")]
    EmptyData,
    #[error("early stopping needs validation samples")]
    MissingValidation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    /// Epochs without improvement tolerated before halting.
    pub patience: usize,
    pub min_delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// `None` trains full-batch in sample order.
    pub batch_size: Option<usize>,
    pub adadelta: AdadeltaConfig,
    /// Seeds the per-epoch shuffle when mini-batching.
    pub shuffle_seed: u64,
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            batch_size: None,
            adadelta: AdadeltaConfig::default(),
            shuffle_seed: 0,
            early_stopping: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Full training-set loss after each completed epoch.
    pub loss_history: Vec<f64>,
    /// Validation loss after each epoch, when validation was supplied.
    pub validation_history: Vec<f64>,
    /// Wall time of each epoch's update loop.
    pub epoch_seconds: Vec<f64>,
    pub stopped_early: bool,
    /// Epoch (0-based) whose weights were kept, under early stopping.
    pub best_epoch: Option<usize>,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.loss_history.len()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }
}

/// Per-epoch batch order shared by every trainer so that identical seeds
/// visit identical batches.
pub struct BatchSchedule {
    n: usize,
    batch_size: Option<usize>,
    rng: ChaCha8Rng,
}

impl BatchSchedule {
    pub fn new(n: usize, batch_size: Option<usize>, seed: u64) -> Self {
        Self {
            n,
            batch_size,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `None` means one full batch in sample order.
    pub fn next_epoch(&mut self) -> Option<Vec<Vec<usize>>> {
        match self.batch_size {
            Some(b) if b < self.n => {
                let mut idx: Vec<usize> = (0..self.n).collect();
                idx.shuffle(&mut self.rng);
                Some(idx.chunks(b).map(<[usize]>::to_vec).collect())
            }
            _ => None,
        }
    }
}

/// Parameter gradients for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Mean BCE over the batch and its gradient with respect to every layer's
/// weights and biases, via the tape.
pub fn loss_and_gradients<M: LayeredModel + ?Sized>(
    model: &M,
    x: &Matrix,
    y: &[f64],
) -> Result<(f64, Vec<LayerGradient>), TrainError> {
    if y.is_empty() {
        return Err(TrainError::EmptyData);
    }
    if x.rows() != model.input_dim() {
        return Err(TensorError::DimensionMismatch {
            op: "train_input",
            left: (model.input_dim(), y.len()),
            right: x.shape(),
        }
        .into());
    }
    let mut tape = Tape::new();
    let mut outputs: Vec<Var> = vec![tape.leaf(x.clone())];
    let mut params = Vec::with_capacity(model.layers().len());
    for layer in model.layers() {
        let w = tape.leaf(layer.weights.clone());
        let b = tape.leaf(Matrix::column(&layer.bias));
        let parts: Vec<Var> = layer.sources.iter().map(|s| outputs[s.layer]).collect();
        let input = tape.concat(&parts)?;
        let z = tape.matmul(w, input)?;
        let z = tape.add_bias(z, b)?;
        let out = match layer.activation {
            Activation::Relu => tape.relu(z),
            Activation::Sigmoid => tape.sigmoid(z),
        };
        outputs.push(out);
        params.push((w, b));
    }
    let pred = *outputs.last().expect("input leaf");
    let loss = tape.bce_loss(pred, y)?;
    let value = tape.value(loss).get(0, 0);
    let mut grads = tape.backward(loss)?;
    let layer_grads = params
        .into_iter()
        .zip(model.layers())
        .map(|((w, b), layer)| LayerGradient {
            weights: grads
                .take(w)
                .unwrap_or_else(|| Matrix::zeros(layer.weights.rows(), layer.weights.cols())),
            bias: grads
                .take(b)
                .map(Matrix::into_vec)
                .unwrap_or_else(|| vec![0.0; layer.bias.len()]),
        })
        .collect();
    Ok((value, layer_grads))
}

/// First-row model outputs for a feature-major batch.
pub fn predict<M: LayeredModel + ?Sized>(model: &M, x: &Matrix) -> Result<Vec<f64>, TrainError> {
    Ok(model.forward(x)?.row(0).to_vec())
}

pub fn mean_loss<M: LayeredModel + ?Sized>(model: &M, samples: &Samples) -> Result<f64, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyData);
    }
    Ok(bce_loss(&predict(model, &samples.x)?, &samples.y)?)
}

/// Optimiser state for every layer of one model.
pub struct LayeredOptimizer {
    states: Vec<(AdadeltaState, AdadeltaState)>,
}

impl LayeredOptimizer {
    pub fn new(layers: &[DenseLayer], cfg: AdadeltaConfig) -> Self {
        Self {
            states: layers
                .iter()
                .map(|l| {
                    (
                        AdadeltaState::new(l.weights.len(), cfg),
                        AdadeltaState::new(l.bias.len(), cfg),
                    )
                })
                .collect(),
        }
    }

    /// Applies one update; weights are projected onto their mask.
    pub fn step(&mut self, layers: &mut [DenseLayer], grads: &[LayerGradient]) -> Result<(), TensorError> {
        for ((layer, g), (ws, bs)) in layers.iter_mut().zip(grads).zip(&mut self.states) {
            ws.step(
                layer.weights.as_mut_slice(),
                g.weights.as_slice(),
                Some(layer.mask.as_slice()),
            )?;
            bs.step(&mut layer.bias, &g.bias, None)?;
        }
        Ok(())
    }
}

/// Trains `model` in place. With early stopping the weights of the best
/// validation epoch are restored at the end.
pub fn train<M: LayeredModel + ?Sized>(
    model: &mut M,
    data: &Samples,
    validation: Option<&Samples>,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    if cfg.early_stopping.is_some() && validation.is_none_or(Samples::is_empty) {
        return Err(TrainError::MissingValidation);
    }
    let mut opt = LayeredOptimizer::new(model.layers(), cfg.adadelta);
    let mut schedule = BatchSchedule::new(data.len(), cfg.batch_size, cfg.shuffle_seed);
    let mut report = TrainReport::default();
    let mut best: Option<(f64, Vec<DenseLayer>)> = None;
    let mut stale = 0;

    for epoch in 0..cfg.epochs {
        let batches = schedule.next_epoch();
        let start = Instant::now();
        match &batches {
            None => {
                let (_, grads) = loss_and_gradients(model, &data.x, &data.y)?;
                opt.step(model.layers_mut(), &grads)?;
            }
            Some(batches) => {
                for idx in batches {
                    let batch = data.select(idx);
                    let (_, grads) = loss_and_gradients(model, &batch.x, &batch.y)?;
                    opt.step(model.layers_mut(), &grads)?;
                }
            }
        }
        report.epoch_seconds.push(start.elapsed().as_secs_f64());
        report.loss_history.push(mean_loss(model, data)?);

        if let Some(val) = validation.filter(|v| !v.is_empty()) {
            let vloss = mean_loss(model, val)?;
            report.validation_history.push(vloss);
            if let Some(es) = cfg.early_stopping {
                let improved = best.as_ref().is_none_or(|(b, _)| vloss < b - es.min_delta);
                if improved {
                    best = Some((vloss, model.layers().to_vec()));
                    report.best_epoch = Some(epoch);
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= es.patience {
                        report.stopped_early = epoch + 1 < cfg.epochs;
                        break;
                    }
                }
            }
        }
    }
    if let Some((_, layers)) = best {
        model.layers_mut().clone_from_slice(&layers);
    }
    Ok(report)
}
