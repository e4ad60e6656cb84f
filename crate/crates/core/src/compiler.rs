//! Genome ↔ tensor mapping.
//!
//! Every connected layer owns a dense `output_dim × input_dim` weight matrix
//! whose columns follow the concatenation of its source layers in
//! increasing depth. A node's column is the offset of its source layer plus
//! its position (ascending gene id) inside that layer. Positions with no
//! connection gene are zero and masked, so training never moves them and
//! the trained tensors can be written back into the genome.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::genome::{Genome, InnovationId, NodeId, NodeKind};
use crate::graphplan::{plan, LayerKind, LayerPlan, PlanError, SourceBlock};
use crate::tensor::{Activation, Matrix, TensorError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("genome does not match the compiled network: {0}")]
    MapMismatch(String),
}

/// Weights, bias and mask for one connected layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub index: usize,
    pub sources: Vec<SourceBlock>,
    /// `output_dim × input_dim`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// 1 where a weight is trainable, 0 where it is held at zero.
    pub mask: Matrix,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn trainable_weights(&self) -> usize {
        self.mask.as_slice().iter().filter(|&&m| m != 0.0).count()
    }
}

/// Anything made of dense layers over a fixed input width.
pub trait LayeredModel {
    fn input_dim(&self) -> usize;
    fn layers(&self) -> &[DenseLayer];
    fn layers_mut(&mut self) -> &mut [DenseLayer];

    /// Evaluates a column batch (`input_dim × n`); returns `output_dim × n`.
    fn forward(&self, batch: &Matrix) -> Result<Matrix, CompileError> {
        forward_layers(self.input_dim(), self.layers(), batch)
    }

    fn parameter_count(&self) -> usize {
        self.layers().iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Number of layer-level matrix products per forward pass.
    fn tensor_op_count(&self) -> usize {
        self.layers().len()
    }

    /// Structured text dump of shapes, masks and weights.
    fn export(&self) -> String {
        let mut out = format!("input_dim {}\n", self.input_dim());
        for l in self.layers() {
            let sources: Vec<String> = l
                .sources
                .iter()
                .map(|s| format!("{}@{}+{}", s.layer, s.offset, s.width))
                .collect();
            let _ = writeln!(
                out,
                "layer {} shape {}x{} activation {:?} sources [{}]",
                l.index,
                l.output_dim(),
                l.input_dim(),
                l.activation,
                sources.join(",")
            );
            for r in 0..l.output_dim() {
                let mask: String = l
                    .mask
                    .row(r)
                    .iter()
                    .map(|&m| if m != 0.0 { '1' } else { '0' })
                    .collect();
                let weights: Vec<String> = l.weights.row(r).iter().map(|w| w.to_string()).collect();
                let _ = writeln!(
                    out,
                    "  row {r} mask {mask} bias {} weights [{}]",
                    l.bias[r],
                    weights.join(",")
                );
            }
        }
        out
    }
}

pub(crate) fn forward_layers(input_dim: usize, layers: &[DenseLayer], batch: &Matrix) -> Result<Matrix, CompileError> {
    if batch.rows() != input_dim {
        return Err(TensorError::DimensionMismatch {
            op: "forward",
            left: (input_dim, batch.cols()),
            right: batch.shape(),
        }
        .into());
    }
    let mut outputs: Vec<Matrix> = Vec::with_capacity(layers.len() + 1);
    outputs.push(batch.clone());
    for layer in layers {
        let parts: Vec<&Matrix> = layer.sources.iter().map(|s| &outputs[s.layer]).collect();
        let input = if parts.len() == 1 {
            layer.weights.matmul(parts[0])?
        } else {
            layer.weights.matmul(&Matrix::concat_rows(&parts)?)?
        };
        let mut z = input;
        for r in 0..z.rows() {
            let b = layer.bias[r];
            for v in z.row_mut(r) {
                *v = layer.activation.apply(*v + b);
            }
        }
        outputs.push(z);
    }
    Ok(outputs.pop().expect("at least the input"))
}

/// Location of one connection gene inside the tensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightSlot {
    /// Position in [`CompiledNetwork::layers`] (layer index − 1).
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

/// A genome compiled to masked dense layers, with the map back to its genes.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledNetwork {
    plan: LayerPlan,
    layers: Vec<DenseLayer>,
    input_ids: Vec<NodeId>,
    output_ids: Vec<NodeId>,
    slots: BTreeMap<InnovationId, WeightSlot>,
}

impl LayeredModel for CompiledNetwork {
    fn input_dim(&self) -> usize {
        self.input_ids.len()
    }

    fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }
}

impl CompiledNetwork {
    pub fn plan(&self) -> &LayerPlan {
        &self.plan
    }

    pub fn input_ids(&self) -> &[NodeId] {
        &self.input_ids
    }

    pub fn output_ids(&self) -> &[NodeId] {
        &self.output_ids
    }

    pub fn slot(&self, id: InnovationId) -> Option<WeightSlot> {
        self.slots.get(&id).copied()
    }

    /// `(layer index, position within layer)` of a placed node.
    pub fn node_position(&self, id: NodeId) -> Option<(usize, usize)> {
        self.plan.position(id)
    }

    pub fn weight_of(&self, id: InnovationId) -> Option<f64> {
        self.slot(id).map(|s| self.layers[s.layer].weights.get(s.row, s.col))
    }

    pub fn bias_of(&self, id: NodeId) -> Option<f64> {
        match self.plan.position(id)? {
            (0, _) => None,
            (l, pos) => Some(self.layers[l - 1].bias[pos]),
        }
    }

    /// Fraction of weight positions backed by a connection gene.
    pub fn mask_density(&self) -> f64 {
        let total: usize = self.layers.iter().map(|l| l.mask.len()).sum();
        let on: usize = self.layers.iter().map(DenseLayer::trainable_weights).sum();
        if total == 0 {
            0.0
        } else {
            on as f64 / total as f64
        }
    }
}

/// Builds the layer plan, allocates zero tensors and overwrites the slot of
/// every placed connection with its gene weight.
pub fn compile(g: &Genome) -> Result<CompiledNetwork, CompileError> {
    let plan = plan(g)?;
    let mut layers: Vec<DenseLayer> = plan
        .layers
        .iter()
        .skip(1)
        .map(|l| DenseLayer {
            index: l.index,
            sources: l.sources.clone(),
            weights: Matrix::zeros(l.output_dim(), l.input_dim),
            bias: l
                .nodes
                .iter()
                .map(|&n| g.node(n).expect("placed node exists").bias)
                .collect(),
            mask: Matrix::zeros(l.output_dim(), l.input_dim),
            activation: if l.kind == LayerKind::Output {
                Activation::Sigmoid
            } else {
                Activation::Relu
            },
        })
        .collect();

    let mut slots = BTreeMap::new();
    for c in &plan.connections {
        let (_, row) = plan.position(c.to).expect("placed target");
        let col = plan
            .input_column(c.to_layer, c.from)
            .expect("source layer listed for placed connection");
        let layer = c.to_layer - 1;
        let weight = g.connection(c.id).expect("placed connection exists").weight;
        layers[layer].weights.set(row, col, weight);
        layers[layer].mask.set(row, col, 1.0);
        slots.insert(c.id, WeightSlot { layer, row, col });
    }

    Ok(CompiledNetwork {
        input_ids: plan.input_layer().nodes.clone(),
        output_ids: plan.output_layer().nodes.clone(),
        plan,
        layers,
        slots,
    })
}

/// Copies tensor weights and biases back into the genes they came from.
/// Genes outside the plan keep their values.
pub fn readback(net: &CompiledNetwork, g: &Genome) -> Result<Genome, CompileError> {
    for placed in &net.plan.connections {
        match g.connection(placed.id) {
            Some(c) if c.enabled && c.from == placed.from && c.to == placed.to => {}
            _ => {
                return Err(CompileError::MapMismatch(format!(
                    "connection {} is not mapped",
                    placed.id
                )))
            }
        }
    }
    for id in net.plan.placed_nodes() {
        if g.node(id).is_none() {
            return Err(CompileError::MapMismatch(format!("node {id} is missing")));
        }
    }
    for c in g.enabled_connections() {
        let both_placed = net.plan.position(c.from).is_some() && net.plan.position(c.to).is_some();
        if both_placed && !net.slots.contains_key(&c.id) {
            return Err(CompileError::MapMismatch(format!(
                "connection {} has no tensor slot",
                c.id
            )));
        }
    }

    let mut out = g.clone();
    for (&id, s) in &net.slots {
        out.set_weight(id, net.layers[s.layer].weights.get(s.row, s.col));
    }
    for id in net.plan.placed_nodes() {
        if g.node(id).map(|n| n.kind) == Some(NodeKind::Input) {
            continue;
        }
        if let Some(b) = net.bias_of(id) {
            out.set_bias(id, b);
        }
    }
    Ok(out)
}

/// A dense network with the compiled shapes, every position trainable.
/// Has no map back to a genome.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimalCoveringNetwork {
    input_dim: usize,
    layers: Vec<DenseLayer>,
}

impl LayeredModel for MinimalCoveringNetwork {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }
}

/// Unmasks every weight and redraws it from `N(0, 2 / fan_in)` (He normal);
/// biases start at zero.
pub fn minimal_covering<R: Rng + ?Sized>(net: &CompiledNetwork, rng: &mut R) -> MinimalCoveringNetwork {
    let layers = net
        .layers
        .iter()
        .map(|l| {
            let (rows, cols) = l.weights.shape();
            let std = kaiming_std(cols);
            let dist = Normal::new(0.0, std).expect("finite std");
            let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
            DenseLayer {
                index: l.index,
                sources: l.sources.clone(),
                weights: Matrix::from_vec(rows, cols, data).expect("shape"),
                bias: vec![0.0; rows],
                mask: Matrix::filled(rows, cols, 1.0),
                activation: l.activation,
            }
        })
        .collect();
    MinimalCoveringNetwork {
        input_dim: net.input_dim(),
        layers,
    }
}

pub fn kaiming_std(fan_in: usize) -> f64 {
    (2.0 / fan_in.max(1) as f64).sqrt()
}
