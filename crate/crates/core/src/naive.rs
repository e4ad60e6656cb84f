//! Node-by-node evaluation and backpropagation straight off the genome.
//!
//! Each node computes `activation(bias + Σ w · in)` in topological order,
//! with ReLU on hidden nodes and sigmoid on outputs. Hidden nodes that no
//! input can reach output 0, which matches their removal from compiled
//! tensors. This path is deliberately unoptimised: values live in hash maps
//! keyed by node id and every sample is processed on its own.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use crate::data::Samples;
use crate::genome::{Genome, GenomeError, InnovationId, NodeId, NodeKind};
use crate::graphplan::{plan, PlanError};
use crate::tensor::{bce_grad, bce_loss, relu, sigmoid, AdadeltaState, Matrix, TensorError};
use crate::train::{BatchSchedule, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NaiveError {
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("no training samples")]
    EmptyData,
}

/// One inbound edge of a scheduled node.
#[derive(Clone, Debug, PartialEq)]
pub struct Inbound {
    pub id: InnovationId,
    pub from: NodeId,
}

/// Topological evaluation order over the enabled graph.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSchedule {
    pub order: Vec<NodeId>,
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
    kinds: HashMap<NodeId, NodeKind>,
    inbound: HashMap<NodeId, Vec<Inbound>>,
    live: HashSet<NodeId>,
}

impl NodeSchedule {
    pub fn new(g: &Genome) -> Result<Self, NaiveError> {
        let order = g.topological_order()?;
        let mut inbound: HashMap<NodeId, Vec<Inbound>> = HashMap::new();
        for c in g.enabled_connections() {
            inbound
                .entry(c.to)
                .or_default()
                .push(Inbound { id: c.id, from: c.from });
        }
        let kinds: HashMap<NodeId, NodeKind> = g.nodes().map(|n| (n.id, n.kind)).collect();
        let mut live = HashSet::new();
        for &id in &order {
            let reached = kinds[&id] == NodeKind::Input
                || inbound
                    .get(&id)
                    .is_some_and(|ins| ins.iter().any(|e| live.contains(&e.from)));
            if reached {
                live.insert(id);
            }
        }
        Ok(Self {
            order,
            inputs: g.input_ids(),
            outputs: g.output_ids(),
            kinds,
            inbound,
            live,
        })
    }

    pub fn inbound(&self, id: NodeId) -> &[Inbound] {
        self.inbound.get(&id).map_or(&[], Vec::as_slice)
    }

    /// Whether some input reaches `id`.
    pub fn is_live(&self, id: NodeId) -> bool {
        self.live.contains(&id)
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.kinds[&id]
    }
}

/// Current weights and biases, keyed by gene.
#[derive(Clone, Debug)]
struct Params {
    weights: HashMap<InnovationId, f64>,
    biases: HashMap<NodeId, f64>,
}

impl Params {
    fn of(g: &Genome) -> Self {
        Self {
            weights: g.enabled_connections().map(|c| (c.id, c.weight)).collect(),
            biases: g.nodes().map(|n| (n.id, n.bias)).collect(),
        }
    }
}

fn forward(s: &NodeSchedule, p: &Params, input: &[f64]) -> Result<HashMap<NodeId, f64>, NaiveError> {
    if input.len() != s.inputs.len() {
        return Err(NaiveError::InputLength {
            expected: s.inputs.len(),
            got: input.len(),
        });
    }
    let mut out: HashMap<NodeId, f64> = HashMap::with_capacity(s.order.len());
    for (id, &v) in s.inputs.iter().zip(input) {
        out.insert(*id, v);
    }
    for &id in &s.order {
        let kind = s.kind(id);
        if kind == NodeKind::Input {
            continue;
        }
        let value = if kind == NodeKind::Hidden && !s.is_live(id) {
            0.0
        } else {
            let mut z = p.biases[&id];
            for e in s.inbound(id) {
                z += p.weights[&e.id] * out[&e.from];
            }
            if kind == NodeKind::Output {
                sigmoid(z)
            } else {
                relu(z)
            }
        };
        out.insert(id, value);
    }
    Ok(out)
}

/// Output values (ascending output id) for one input vector, ordered by
/// input id.
pub fn evaluate_naive(g: &Genome, input: &[f64]) -> Result<Vec<f64>, NaiveError> {
    let s = NodeSchedule::new(g)?;
    let values = forward(&s, &Params::of(g), input)?;
    Ok(s.outputs.iter().map(|o| values[o]).collect())
}

/// First-output prediction for every column of a feature-major batch.
pub fn predict_naive(g: &Genome, x: &Matrix) -> Result<Vec<f64>, NaiveError> {
    let s = NodeSchedule::new(g)?;
    let p = Params::of(g);
    (0..x.cols())
        .map(|j| Ok(forward(&s, &p, &x.col(j))?[&s.outputs[0]]))
        .collect()
}

/// Per-gene gradients accumulated over a batch.
struct GeneGradients {
    weights: HashMap<InnovationId, f64>,
    biases: HashMap<NodeId, f64>,
}

fn batch_gradients(s: &NodeSchedule, p: &Params, data: &Samples, idx: &[usize]) -> Result<GeneGradients, NaiveError> {
    let n = idx.len() as f64;
    let out_id = s.outputs[0];
    let mut gw: HashMap<InnovationId, f64> = p.weights.keys().map(|&k| (k, 0.0)).collect();
    let mut gb: HashMap<NodeId, f64> = p.biases.keys().map(|&k| (k, 0.0)).collect();
    for &j in idx {
        let values = forward(s, p, &data.sample(j))?;
        let pred = values[&out_id];
        let mut delta: HashMap<NodeId, f64> = HashMap::new();
        delta.insert(out_id, bce_grad(pred, data.y[j]) / n);
        for &id in s.order.iter().rev() {
            let kind = s.kind(id);
            if kind == NodeKind::Input || !s.is_live(id) {
                continue;
            }
            let upstream = delta.get(&id).copied().unwrap_or(0.0);
            let v = values[&id];
            let dz = match kind {
                NodeKind::Output => upstream * v * (1.0 - v),
                _ if v > 0.0 => upstream,
                _ => 0.0,
            };
            *gb.get_mut(&id).expect("bias") += dz;
            for e in s.inbound(id) {
                *gw.get_mut(&e.id).expect("weight") += dz * values[&e.from];
                *delta.entry(e.from).or_insert(0.0) += dz * p.weights[&e.id];
            }
        }
    }
    Ok(GeneGradients {
        weights: gw,
        biases: gb,
    })
}

fn mean_loss(s: &NodeSchedule, p: &Params, data: &Samples) -> Result<f64, NaiveError> {
    let preds = (0..data.len())
        .map(|j| Ok(forward(s, p, &data.sample(j))?[&s.outputs[0]]))
        .collect::<Result<Vec<f64>, NaiveError>>()?;
    Ok(bce_loss(&preds, &data.y)?)
}

/// Trains a genome gene by gene with the same batches, loss and optimiser
/// as [`crate::train::train`]. Early stopping is not supported here.
pub fn train_naive(g: &Genome, data: &Samples, cfg: &TrainConfig) -> Result<(Genome, TrainReport), NaiveError> {
    if data.is_empty() {
        return Err(NaiveError::EmptyData);
    }
    plan(g)?;
    let s = NodeSchedule::new(g)?;
    let mut p = Params::of(g);

    let mut conn_ids: Vec<InnovationId> = p.weights.keys().copied().collect();
    conn_ids.sort_unstable();
    let bias_ids: Vec<NodeId> = g.nodes().filter(|n| n.kind != NodeKind::Input).map(|n| n.id).collect();
    let mut state = AdadeltaState::new(conn_ids.len() + bias_ids.len(), cfg.adadelta);
    let mut flat = vec![0.0; state.len()];
    let mut grad = vec![0.0; state.len()];

    let mut schedule = BatchSchedule::new(data.len(), cfg.batch_size, cfg.shuffle_seed);
    let all: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport::default();
    for _ in 0..cfg.epochs {
        let batches = schedule.next_epoch().unwrap_or_else(|| vec![all.clone()]);
        let start = Instant::now();
        for idx in &batches {
            let gg = batch_gradients(&s, &p, data, idx)?;
            for (k, id) in conn_ids.iter().enumerate() {
                flat[k] = p.weights[id];
                grad[k] = gg.weights[id];
            }
            for (k, id) in bias_ids.iter().enumerate() {
                flat[conn_ids.len() + k] = p.biases[id];
                grad[conn_ids.len() + k] = gg.biases[id];
            }
            state.step(&mut flat, &grad, None)?;
            for (k, id) in conn_ids.iter().enumerate() {
                p.weights.insert(*id, flat[k]);
            }
            for (k, id) in bias_ids.iter().enumerate() {
                p.biases.insert(*id, flat[conn_ids.len() + k]);
            }
        }
        report.epoch_seconds.push(start.elapsed().as_secs_f64());
        report.loss_history.push(mean_loss(&s, &p, data)?);
    }

    let mut out = g.clone();
    for (id, w) in &p.weights {
        out.set_weight(*id, *w);
    }
    for id in &bias_ids {
        out.set_bias(*id, p.biases[id]);
    }
    Ok((out, report))
}
