//! NEAT genome model and genetic operators.

mod config;
mod crossover;
mod innovation;
mod io;
mod mutation;
mod species;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{CompatibilityCoeffs, ConfigError, EvolutionConfig, MutationRates, WeightInit, WeightMutation};
pub use crossover::crossover;
pub use innovation::{InnovationTracker, SplitInnovation};
pub use io::FORMAT_VERSION;
pub use mutation::{
    add_connection_between, mutate_add_connection, mutate_add_node, mutate_remove_connection, mutate_remove_node,
    perturb_weights, reinit_weights, split_connection,
};
pub use species::{compatibility_distance, speciate, Species};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InnovationId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for InnovationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Input,
    Hidden,
    Output,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Input => "input",
            NodeKind::Hidden => "hidden",
            NodeKind::Output => "output",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Ignored for inputs.
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub id: InnovationId,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenomeError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate innovation id {0}")]
    DuplicateConnection(InnovationId),
    #[error("connection refers to unknown node {0}")]
    UnknownNode(NodeId),
    #[error("illegal connection endpoints {from} -> {to}")]
    InvalidEndpoint { from: NodeId, to: NodeId },
    #[error("an enabled connection {from} -> {to} already exists")]
    DuplicatePair { from: NodeId, to: NodeId },
    #[error("enabled connections contain a cycle")]
    CycleDetected,
    #[error("fitness is not set")]
    FitnessUnset,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Node and connection genes plus evolutionary bookkeeping.
///
/// Genes are kept in id order so iteration is deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Genome {
    nodes: BTreeMap<NodeId, NodeGene>,
    connections: BTreeMap<InnovationId, ConnectionGene>,
    pub fitness: Option<f64>,
    pub species: Option<usize>,
}

impl Genome {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inputs fully connected to outputs. Inputs take ids `0..inputs`,
    /// outputs the following ids, and the connection from input `i` to
    /// output `o` has innovation `i * outputs + o`, so every minimal genome
    /// of the same shape aligns gene-for-gene.
    pub fn minimal(inputs: usize, outputs: usize, mut weight: impl FnMut() -> f64) -> Self {
        let mut g = Genome::new();
        for i in 0..inputs {
            g.nodes.insert(
                NodeId(i as u64),
                NodeGene {
                    id: NodeId(i as u64),
                    kind: NodeKind::Input,
                    bias: 0.0,
                },
            );
        }
        for o in 0..outputs {
            let id = NodeId((inputs + o) as u64);
            g.nodes.insert(
                id,
                NodeGene {
                    id,
                    kind: NodeKind::Output,
                    bias: 0.0,
                },
            );
        }
        for i in 0..inputs {
            for o in 0..outputs {
                let id = InnovationId((i * outputs + o) as u64);
                g.connections.insert(
                    id,
                    ConnectionGene {
                        id,
                        from: NodeId(i as u64),
                        to: NodeId((inputs + o) as u64),
                        weight: weight(),
                        enabled: true,
                    },
                );
            }
        }
        g
    }

    pub fn add_node(&mut self, node: NodeGene) -> Result<(), GenomeError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GenomeError::DuplicateNode(node.id));
        }
        self.nodes.insert(node.id, node);
        Ok(())
    }

    /// Inserts a connection gene after checking every genome invariant the
    /// new gene could break.
    pub fn add_connection(&mut self, conn: ConnectionGene) -> Result<(), GenomeError> {
        if self.connections.contains_key(&conn.id) {
            return Err(GenomeError::DuplicateConnection(conn.id));
        }
        self.check_endpoints(conn.from, conn.to)?;
        if conn.enabled {
            if self.enabled_pair(conn.from, conn.to).is_some() {
                return Err(GenomeError::DuplicatePair {
                    from: conn.from,
                    to: conn.to,
                });
            }
            if self.would_create_cycle(conn.from, conn.to) {
                return Err(GenomeError::CycleDetected);
            }
        }
        self.connections.insert(conn.id, conn);
        Ok(())
    }

    pub(crate) fn insert_connection_unchecked(&mut self, conn: ConnectionGene) {
        self.connections.insert(conn.id, conn);
    }

    pub(crate) fn remove_connection_gene(&mut self, id: InnovationId) -> Option<ConnectionGene> {
        self.connections.remove(&id)
    }

    pub(crate) fn remove_node_gene(&mut self, id: NodeId) -> Option<NodeGene> {
        self.nodes.remove(&id)
    }

    pub(crate) fn check_endpoints(&self, from: NodeId, to: NodeId) -> Result<(), GenomeError> {
        let src = self.nodes.get(&from).ok_or(GenomeError::UnknownNode(from))?;
        let dst = self.nodes.get(&to).ok_or(GenomeError::UnknownNode(to))?;
        if from == to || src.kind == NodeKind::Output || dst.kind == NodeKind::Input {
            return Err(GenomeError::InvalidEndpoint { from, to });
        }
        Ok(())
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes.get(&id)
    }

    pub fn connection(&self, id: InnovationId) -> Option<&ConnectionGene> {
        self.connections.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeGene> + '_ {
        self.nodes.values()
    }

    pub fn connections(&self) -> impl Iterator<Item = &ConnectionGene> + '_ {
        self.connections.values()
    }

    pub fn connections_mut(&mut self) -> impl Iterator<Item = &mut ConnectionGene> + '_ {
        self.connections.values_mut()
    }

    pub fn nodes_mut(&mut self) -> impl Iterator<Item = &mut NodeGene> + '_ {
        self.nodes.values_mut()
    }

    pub fn enabled_connections(&self) -> impl Iterator<Item = &ConnectionGene> + '_ {
        self.connections.values().filter(|c| c.enabled)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn connection_count(&self) -> usize {
        self.connections.len()
    }

    pub fn enabled_count(&self) -> usize {
        self.enabled_connections().count()
    }

    fn ids_of(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes.values().filter(|n| n.kind == kind).map(|n| n.id).collect()
    }

    pub fn input_ids(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Input)
    }

    pub fn output_ids(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Output)
    }

    pub fn hidden_ids(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Hidden)
    }

    pub fn set_weight(&mut self, id: InnovationId, weight: f64) -> bool {
        match self.connections.get_mut(&id) {
            Some(c) => {
                c.weight = weight;
                true
            }
            None => false,
        }
    }

    pub fn set_enabled(&mut self, id: InnovationId, enabled: bool) -> bool {
        match self.connections.get_mut(&id) {
            Some(c) => {
                c.enabled = enabled;
                true
            }
            None => false,
        }
    }

    pub fn set_bias(&mut self, id: NodeId, bias: f64) -> bool {
        match self.nodes.get_mut(&id) {
            Some(n) => {
                n.bias = bias;
                true
            }
            None => false,
        }
    }

    pub fn max_node_id(&self) -> Option<NodeId> {
        self.nodes.keys().next_back().copied()
    }

    pub fn max_innovation(&self) -> Option<InnovationId> {
        self.connections.keys().next_back().copied()
    }

    /// The enabled connection between `from` and `to`, if any.
    pub fn enabled_pair(&self, from: NodeId, to: NodeId) -> Option<&ConnectionGene> {
        self.connections
            .values()
            .find(|c| c.enabled && c.from == from && c.to == to)
    }

    pub fn any_pair(&self, from: NodeId, to: NodeId) -> Option<&ConnectionGene> {
        self.connections.values().find(|c| c.from == from && c.to == to)
    }

    /// Enabled adjacency lists, each sorted by target id.
    pub fn enabled_adjacency(&self) -> HashMap<NodeId, Vec<NodeId>> {
        let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for c in self.enabled_connections() {
            adj.entry(c.from).or_default().push(c.to);
        }
        for v in adj.values_mut() {
            v.sort_unstable();
        }
        adj
    }

    /// Whether adding an enabled edge `from -> to` would close a cycle,
    /// i.e. whether `to` already reaches `from`.
    pub fn would_create_cycle(&self, from: NodeId, to: NodeId) -> bool {
        if from == to {
            return true;
        }
        let adj = self.enabled_adjacency();
        let mut stack = vec![to];
        let mut seen = HashSet::new();
        while let Some(n) = stack.pop() {
            if n == from {
                return true;
            }
            if !seen.insert(n) {
                continue;
            }
            if let Some(next) = adj.get(&n) {
                stack.extend(next.iter().copied());
            }
        }
        false
    }

    /// Kahn's algorithm over enabled connections, ties broken by ascending
    /// node id. Fails when the enabled graph has a cycle.
    pub fn topological_order(&self) -> Result<Vec<NodeId>, GenomeError> {
        let mut indegree: BTreeMap<NodeId, usize> = self.nodes.keys().map(|&k| (k, 0)).collect();
        for c in self.enabled_connections() {
            *indegree.get_mut(&c.to).ok_or(GenomeError::UnknownNode(c.to))? += 1;
        }
        let adj = self.enabled_adjacency();
        let mut ready: std::collections::BTreeSet<NodeId> =
            indegree.iter().filter(|(_, &d)| d == 0).map(|(&k, _)| k).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_first() {
            order.push(n);
            if let Some(next) = adj.get(&n) {
                for m in next {
                    let d = indegree.get_mut(m).expect("target checked above");
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(*m);
                    }
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(GenomeError::CycleDetected);
        }
        Ok(order)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), GenomeError> {
        let mut pairs = HashSet::new();
        for c in self.connections.values() {
            self.check_endpoints(c.from, c.to)?;
            if c.enabled && !pairs.insert((c.from, c.to)) {
                return Err(GenomeError::DuplicatePair { from: c.from, to: c.to });
            }
        }
        self.topological_order().map(|_| ())
    }

    /// Same node/connection ids, endpoints and enabled flags.
    pub fn same_topology(&self, other: &Genome) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.connections.len() == other.connections.len()
            && self
                .nodes
                .values()
                .zip(other.nodes.values())
                .all(|(a, b)| a.id == b.id && a.kind == b.kind)
            && self
                .connections
                .values()
                .zip(other.connections.values())
                .all(|(a, b)| a.id == b.id && a.from == b.from && a.to == b.to && a.enabled == b.enabled)
    }
}


/// The worked example network: inputs a, b, c, hidden 1..5 and output O
/// with connections a→1, a→2, b→1, b→2, c→2, 1→3, 1→4, 2→3, 2→5, 2→O,
/// 3→O, 4→O, 5→O. Node ids: a=0, b=1, c=2, O=3, hidden k=10+k.
pub fn worked_example(mut weight: impl FnMut(InnovationId) -> f64) -> Genome {
    let mut g = Genome::new();
    for (id, kind) in [(0, NodeKind::Input), (1, NodeKind::Input), (2, NodeKind::Input)] {
        g.add_node(NodeGene {
            id: NodeId(id),
            kind,
            bias: 0.0,
        })
        .expect("fresh id");
    }
    g.add_node(NodeGene {
        id: NodeId(3),
        kind: NodeKind::Output,
        bias: 0.0,
    })
    .expect("fresh id");
    for k in 1..=5 {
        g.add_node(NodeGene {
            id: NodeId(10 + k),
            kind: NodeKind::Hidden,
            bias: 0.0,
        })
        .expect("fresh id");
    }
    let h = |k: u64| 10 + k;
    let edges: [(u64, u64); 13] = [
        (0, h(1)),
        (0, h(2)),
        (1, h(1)),
        (1, h(2)),
        (2, h(2)),
        (h(1), h(3)),
        (h(1), h(4)),
        (h(2), h(3)),
        (h(2), h(5)),
        (h(2), 3),
        (h(3), 3),
        (h(4), 3),
        (h(5), 3),
    ];
    for (i, (from, to)) in edges.into_iter().enumerate() {
        let id = InnovationId(i as u64);
        g.add_connection(ConnectionGene {
            id,
            from: NodeId(from),
            to: NodeId(to),
            weight: weight(id),
            enabled: true,
        })
        .expect("example is a valid DAG");
    }
    g
}
