//! Graph analysis of a genome (depth, reachability, connectivity) and the
//! layer plan derived from it.
//!
//! A node's layer is its depth: the longest path from any input. Nodes that
//! cannot be reached from an input, or cannot reach an output, are left out
//! of the plan. Inputs always form layer 0 and outputs always form the last
//! layer, `k`, where `k` is the depth of the deepest reachable output.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::genome::{Genome, GenomeError, InnovationId, NodeId, NodeKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("enabled connections contain a cycle")]
    CycleDetected,
    #[error("no input-to-output path exists")]
    UntrainableGenome,
}

impl From<GenomeError> for PlanError {
    fn from(_: GenomeError) -> Self {
        PlanError::CycleDetected
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeAnalysis {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Longest input-to-node path length; `None` when no input reaches the node.
    pub depth: Option<usize>,
    pub reachable_forward: bool,
    pub reachable_backward: bool,
    pub inbound: Vec<InnovationId>,
    pub outbound: Vec<InnovationId>,
    pub inbound_depths: Vec<Option<usize>>,
    pub outbound_depths: Vec<Option<usize>>,
}

impl NodeAnalysis {
    pub fn is_input(&self) -> bool {
        self.kind == NodeKind::Input
    }

    pub fn is_output(&self) -> bool {
        self.kind == NodeKind::Output
    }

    pub fn reachable_both(&self) -> bool {
        self.reachable_forward && self.reachable_backward
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeRef {
    pub id: InnovationId,
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphAnalysis {
    nodes: BTreeMap<NodeId, NodeAnalysis>,
    /// Enabled connections in innovation order.
    edges: Vec<EdgeRef>,
}

impl GraphAnalysis {
    pub fn node(&self, id: NodeId) -> Option<&NodeAnalysis> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeAnalysis> + '_ {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[EdgeRef] {
        &self.edges
    }
}

/// Forward and backward traversal over enabled connections. Disabled
/// connections are ignored.
pub fn analyze(g: &Genome) -> Result<GraphAnalysis, PlanError> {
    let order = g.topological_order()?;

    let edges: Vec<EdgeRef> = g
        .enabled_connections()
        .map(|c| EdgeRef {
            id: c.id,
            from: c.from,
            to: c.to,
        })
        .collect();

    let mut nodes: BTreeMap<NodeId, NodeAnalysis> = g
        .nodes()
        .map(|n| {
            (
                n.id,
                NodeAnalysis {
                    id: n.id,
                    kind: n.kind,
                    depth: None,
                    reachable_forward: false,
                    reachable_backward: false,
                    inbound: Vec::new(),
                    outbound: Vec::new(),
                    inbound_depths: Vec::new(),
                    outbound_depths: Vec::new(),
                },
            )
        })
        .collect();

    let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut pred: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for e in &edges {
        succ.entry(e.from).or_default().push(e.to);
        pred.entry(e.to).or_default().push(e.from);
        nodes.get_mut(&e.from).expect("validated endpoint").outbound.push(e.id);
        nodes.get_mut(&e.to).expect("validated endpoint").inbound.push(e.id);
    }

    // forward reachability, breadth-first from the inputs
    let mut queue: VecDeque<NodeId> = g.input_ids().into();
    while let Some(n) = queue.pop_front() {
        let a = nodes.get_mut(&n).expect("known node");
        if a.reachable_forward {
            continue;
        }
        a.reachable_forward = true;
        queue.extend(succ.get(&n).into_iter().flatten());
    }

    // longest-path depth, relaxed in topological order
    for &n in &order {
        let a = &nodes[&n];
        if !a.reachable_forward {
            continue;
        }
        let depth = if a.is_input() {
            0
        } else {
            pred.get(&n)
                .into_iter()
                .flatten()
                .filter_map(|p| nodes[p].depth)
                .map(|d| d + 1)
                .max()
                .expect("forward-reachable non-input has a reachable predecessor")
        };
        nodes.get_mut(&n).expect("known node").depth = Some(depth);
    }

    // backward reachability, breadth-first from the outputs
    let mut queue: VecDeque<NodeId> = g.output_ids().into();
    while let Some(n) = queue.pop_front() {
        let a = nodes.get_mut(&n).expect("known node");
        if a.reachable_backward {
            continue;
        }
        a.reachable_backward = true;
        queue.extend(pred.get(&n).into_iter().flatten());
    }

    let depths: BTreeMap<NodeId, Option<usize>> = nodes.iter().map(|(k, v)| (*k, v.depth)).collect();
    for e in &edges {
        let (df, dt) = (depths[&e.from], depths[&e.to]);
        nodes.get_mut(&e.from).expect("known").outbound_depths.push(dt);
        nodes.get_mut(&e.to).expect("known").inbound_depths.push(df);
    }

    Ok(GraphAnalysis { nodes, edges })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Input,
    Connected,
    Output,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Input => "input",
            LayerKind::Connected => "connected",
            LayerKind::Output => "output",
        }
    }
}

/// One source layer feeding a layer, and where its outputs start in the
/// concatenated input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceBlock {
    pub layer: usize,
    pub offset: usize,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub index: usize,
    pub kind: LayerKind,
    /// Ascending node id.
    pub nodes: Vec<NodeId>,
    /// Source layers in increasing depth; empty for the input layer.
    pub sources: Vec<SourceBlock>,
    pub input_dim: usize,
    pub has_skip_inputs: bool,
    pub has_skip_outputs: bool,
    /// Layers fed by this one, in increasing depth.
    pub targets: Vec<usize>,
}

impl Layer {
    pub fn output_dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn source(&self, layer: usize) -> Option<&SourceBlock> {
        self.sources.iter().find(|s| s.layer == layer)
    }
}

/// A connection that survives into the layered network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlacedConnection {
    pub id: InnovationId,
    pub from: NodeId,
    pub to: NodeId,
    pub from_layer: usize,
    pub to_layer: usize,
}

impl PlacedConnection {
    pub fn layer_gap(&self) -> usize {
        self.to_layer - self.from_layer
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerPlan {
    pub layers: Vec<Layer>,
    pub connections: Vec<PlacedConnection>,
    node_index: BTreeMap<NodeId, (usize, usize)>,
}

impl LayerPlan {
    /// `(layer, position within layer)` of a placed node.
    pub fn position(&self, id: NodeId) -> Option<(usize, usize)> {
        self.node_index.get(&id).copied()
    }

    pub fn placed_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_index.keys().copied()
    }

    pub fn placed_node_count(&self) -> usize {
        self.node_index.len()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn input_layer(&self) -> &Layer {
        &self.layers[0]
    }

    pub fn output_layer(&self) -> &Layer {
        self.layers.last().expect("plan has at least two layers")
    }

    /// Column of `node` in the concatenated input of `layer`.
    pub fn input_column(&self, layer: usize, node: NodeId) -> Option<usize> {
        let (src, pos) = self.position(node)?;
        self.layers[layer].source(src).map(|b| b.offset + pos)
    }

    /// Structured text dump used for debugging and golden tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for l in &self.layers {
            let nodes: Vec<String> = l.nodes.iter().map(|n| n.0.to_string()).collect();
            let sources: Vec<String> = l
                .sources
                .iter()
                .map(|s| format!("{}@{}+{}", s.layer, s.offset, s.width))
                .collect();
            let _ = writeln!(
                out,
                "layer {} kind={} nodes=[{}] out_dim={} in_dim={} sources=[{}] skip_in={} skip_out={}",
                l.index,
                l.kind.as_str(),
                nodes.join(","),
                l.output_dim(),
                l.input_dim,
                sources.join(","),
                l.has_skip_inputs,
                l.has_skip_outputs
            );
        }
        out
    }
}

/// Groups placed nodes by depth and derives per-layer connectivity.
pub fn build_layer_plan(a: &GraphAnalysis) -> Result<LayerPlan, PlanError> {
    let k = a
        .nodes()
        .filter(|n| n.is_output())
        .filter_map(|n| n.depth)
        .max()
        .ok_or(PlanError::UntrainableGenome)?;

    let mut node_layer: BTreeMap<NodeId, usize> = BTreeMap::new();
    for n in a.nodes() {
        let layer = match n.kind {
            NodeKind::Input => Some(0),
            NodeKind::Output => Some(k),
            NodeKind::Hidden if n.reachable_both() => n.depth,
            NodeKind::Hidden => None,
        };
        if let Some(l) = layer {
            node_layer.insert(n.id, l);
        }
    }

    let connections: Vec<PlacedConnection> = a
        .edges()
        .iter()
        .filter_map(|e| {
            let from_layer = *node_layer.get(&e.from)?;
            let to_layer = *node_layer.get(&e.to)?;
            Some(PlacedConnection {
                id: e.id,
                from: e.from,
                to: e.to,
                from_layer,
                to_layer,
            })
        })
        .collect();

    let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); k + 1];
    // BTreeMap iteration is ascending id, so each layer is already ordered
    for (&id, &l) in &node_layer {
        members[l].push(id);
    }
    let node_index = node_layer
        .iter()
        .map(|(&id, &l)| {
            let pos = members[l].binary_search(&id).expect("member of its layer");
            (id, (l, pos))
        })
        .collect();

    let mut source_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k + 1];
    let mut target_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k + 1];
    for c in &connections {
        debug_assert!(c.from_layer < c.to_layer);
        source_sets[c.to_layer].insert(c.from_layer);
        target_sets[c.from_layer].insert(c.to_layer);
    }

    let layers = (0..=k)
        .map(|index| {
            let kind = if index == 0 {
                LayerKind::Input
            } else if index == k {
                LayerKind::Output
            } else {
                LayerKind::Connected
            };
            let mut offset = 0;
            let sources: Vec<SourceBlock> = source_sets[index]
                .iter()
                .map(|&src| {
                    let width = members[src].len();
                    let block = SourceBlock {
                        layer: src,
                        offset,
                        width,
                    };
                    offset += width;
                    block
                })
                .collect();
            let targets: Vec<usize> = target_sets[index].iter().copied().collect();
            Layer {
                index,
                kind,
                nodes: members[index].clone(),
                has_skip_inputs: sources.iter().any(|s| s.layer + 1 < index),
                has_skip_outputs: targets.iter().any(|&t| t > index + 1),
                sources,
                input_dim: offset,
                targets,
            }
        })
        .collect();

    Ok(LayerPlan {
        layers,
        connections,
        node_index,
    })
}

/// `analyze` followed by `build_layer_plan`.
pub fn plan(g: &Genome) -> Result<LayerPlan, PlanError> {
    build_layer_plan(&analyze(g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{worked_example, ConnectionGene, NodeGene};

    const O: NodeId = NodeId(3);
    const fn h(k: u64) -> NodeId {
        NodeId(10 + k)
    }

    /// The unreachable-node example: the worked example plus a node X that
    /// only feeds node 3, and a node Y fed by node 1 that reaches nothing.
    fn unreachable_example() -> Genome {
        let mut g = worked_example(|_| 0.5);
        let (x, y) = (NodeId(20), NodeId(21));
        for id in [x, y] {
            g.add_node(NodeGene {
                id,
                kind: NodeKind::Hidden,
                bias: 0.3,
            })
            .unwrap();
        }
        g.add_connection(ConnectionGene {
            id: InnovationId(50),
            from: x,
            to: h(3),
            weight: 0.9,
            enabled: true,
        })
        .unwrap();
        g.add_connection(ConnectionGene {
            id: InnovationId(51),
            from: h(1),
            to: y,
            weight: 0.9,
            enabled: true,
        })
        .unwrap();
        g
    }

    #[test]
    fn unreachable_nodes_flagged() {
        let a = analyze(&unreachable_example()).unwrap();
        let x = a.node(NodeId(20)).unwrap();
        assert!(!x.reachable_forward && x.reachable_backward);
        assert_eq!(x.depth, None);
        let y = a.node(NodeId(21)).unwrap();
        assert!(y.reachable_forward && !y.reachable_backward);
        let p = build_layer_plan(&a).unwrap();
        assert!(p.position(NodeId(20)).is_none());
        assert!(p.position(NodeId(21)).is_none());
        assert_eq!(p.connections.len(), 13);
    }

    #[test]
    fn worked_example_depths() {
        let a = analyze(&worked_example(|_| 1.0)).unwrap();
        let depth = |id| a.node(id).unwrap().depth.unwrap();
        for i in 0..3 {
            assert_eq!(depth(NodeId(i)), 0);
        }
        assert_eq!((depth(h(1)), depth(h(2))), (1, 1));
        assert_eq!((depth(h(3)), depth(h(4)), depth(h(5))), (2, 2, 2));
        assert_eq!(depth(O), 3);
        let n2 = a.node(h(2)).unwrap();
        assert_eq!(n2.inbound.len(), 3);
        assert_eq!(n2.outbound_depths, vec![Some(2), Some(2), Some(3)]);
    }

    #[test]
    fn isolated_hidden_node() {
        let mut g = worked_example(|_| 1.0);
        g.add_node(NodeGene {
            id: NodeId(30),
            kind: NodeKind::Hidden,
            bias: 0.0,
        })
        .unwrap();
        let a = analyze(&g).unwrap();
        let n = a.node(NodeId(30)).unwrap();
        assert!(!n.reachable_forward && !n.reachable_backward);
    }

    #[test]
    fn worked_example_plan() {
        let p = plan(&worked_example(|_| 1.0)).unwrap();
        assert_eq!(p.layer_count(), 4);
        let dims: Vec<_> = p.layers.iter().map(|l| (l.output_dim(), l.input_dim)).collect();
        assert_eq!(dims, vec![(3, 0), (2, 3), (3, 2), (1, 5)]);
        let out = p.output_layer();
        assert!(out.has_skip_inputs);
        assert_eq!(
            out.sources,
            vec![
                SourceBlock {
                    layer: 1,
                    offset: 0,
                    width: 2
                },
                SourceBlock {
                    layer: 2,
                    offset: 2,
                    width: 3
                }
            ]
        );
        assert!(p.layers[1].has_skip_outputs);
        assert!(!p.layers[2].has_skip_outputs);
        assert_eq!(p.layers[1].kind, LayerKind::Connected);
        assert_eq!(p.position(h(2)), Some((1, 1)));
        assert_eq!(p.input_column(3, h(2)), Some(1));
        assert_eq!(p.input_column(3, h(4)), Some(3));
        assert_eq!(
            p.dump().lines().last().unwrap(),
            "layer 3 kind=output nodes=[3] out_dim=1 in_dim=5 sources=[1@0+2,2@2+3] skip_in=true skip_out=false"
        );
    }

    #[test]
    fn passthrough_plan() {
        let p = plan(&Genome::minimal(1, 1, || 1.0)).unwrap();
        assert_eq!(p.layer_count(), 2);
        assert!(!p.output_layer().has_skip_inputs);
        assert_eq!(p.output_layer().input_dim, 1);
    }

    #[test]
    fn removing_skip_edge_removes_skip_input() {
        let mut g = worked_example(|_| 1.0);
        let id = g.enabled_pair(h(2), O).unwrap().id;
        g.remove_connection_gene(id);
        let p = plan(&g).unwrap();
        assert!(!p.output_layer().has_skip_inputs);
        assert_eq!(p.output_layer().input_dim, 3);
    }

    #[test]
    fn untrainable_without_path() {
        let mut g = Genome::minimal(2, 1, || 1.0);
        for id in [InnovationId(0), InnovationId(1)] {
            g.set_enabled(id, false);
        }
        assert_eq!(plan(&g).unwrap_err(), PlanError::UntrainableGenome);
    }

    #[test]
    fn unconnected_input_stays_in_input_layer() {
        let mut g = Genome::minimal(3, 1, || 1.0);
        g.remove_connection_gene(InnovationId(1));
        let p = plan(&g).unwrap();
        assert_eq!(p.input_layer().output_dim(), 3);
        assert_eq!(p.output_layer().input_dim, 3);
    }
}
