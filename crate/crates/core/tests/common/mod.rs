//! Random genomes and an independent per-node reference evaluator.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use layerneat::data::Samples;
use layerneat::genome::{ConnectionGene, Genome, InnovationId, NodeGene, NodeId, NodeKind};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub struct Limits {
    pub max_inputs: usize,
    pub max_nodes: usize,
    pub max_connections: usize,
}

pub const ORACLE_LIMITS: Limits = Limits {
    max_inputs: 8,
    max_nodes: 30,
    max_connections: 80,
};

/// A random DAG genome: inputs `0..k`, output `k`, hidden after. Hidden
/// nodes get a random rank; connections only run from lower to higher
/// rank, about one in ten disabled. May have no input-output path.
pub fn random_genome<R: Rng>(rng: &mut R, lim: &Limits) -> Genome {
    let unit = Normal::new(0.0, 1.0).unwrap();
    let inputs = rng.random_range(1..=lim.max_inputs);
    let hidden = rng.random_range(0..=lim.max_nodes - inputs - 1);
    let mut g = Genome::new();
    let node = |g: &mut Genome, id: u64, kind: NodeKind, bias: f64| {
        g.add_node(NodeGene {
            id: NodeId(id),
            kind,
            bias,
        })
        .unwrap();
    };
    for i in 0..inputs {
        node(&mut g, i as u64, NodeKind::Input, 0.0);
    }
    node(&mut g, inputs as u64, NodeKind::Output, unit.sample(rng));
    let mut order: Vec<u64> = (0..hidden).map(|h| (inputs + 1 + h) as u64).collect();
    for &h in &order {
        node(&mut g, h, NodeKind::Hidden, unit.sample(rng));
    }
    order.shuffle(rng);
    // rank: inputs 0, hidden 1.., output last
    let mut rank: HashMap<u64, usize> = (0..inputs as u64).map(|i| (i, 0)).collect();
    for (r, &h) in order.iter().enumerate() {
        rank.insert(h, r + 1);
    }
    rank.insert(inputs as u64, hidden + 1);
    let ids: Vec<u64> = rank.keys().copied().collect();
    let mut pairs: Vec<(u64, u64)> = ids
        .iter()
        .flat_map(|&a| ids.iter().map(move |&b| (a, b)))
        .filter(|(a, b)| rank[a] < rank[b])
        .collect();
    pairs.sort_unstable();
    pairs.shuffle(rng);
    let m = rng.random_range(1..=lim.max_connections).min(pairs.len());
    for (k, &(a, b)) in pairs[..m].iter().enumerate() {
        g.add_connection(ConnectionGene {
            id: InnovationId(k as u64),
            from: NodeId(a),
            to: NodeId(b),
            weight: unit.sample(rng),
            enabled: !rng.random_bool(0.1),
        })
        .unwrap();
    }
    g
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Each node is the activation of its bias plus the weighted sum of its
/// enabled inbound sources; nodes with no path from an input output 0.
/// Hidden nodes use ReLU, outputs the logistic function.
pub fn reference_output(g: &Genome, x: &HashMap<NodeId, f64>) -> f64 {
    let enabled: Vec<&ConnectionGene> = g.connections().filter(|c| c.enabled).collect();
    let mut fed: HashSet<NodeId> = HashSet::new();
    let mut queue: VecDeque<NodeId> = g.nodes().filter(|n| n.kind == NodeKind::Input).map(|n| n.id).collect();
    while let Some(n) = queue.pop_front() {
        if fed.insert(n) {
            queue.extend(enabled.iter().filter(|c| c.from == n).map(|c| c.to));
        }
    }
    fn value(
        n: NodeId,
        g: &Genome,
        enabled: &[&ConnectionGene],
        fed: &HashSet<NodeId>,
        x: &HashMap<NodeId, f64>,
        memo: &mut HashMap<NodeId, f64>,
    ) -> f64 {
        if let Some(&v) = memo.get(&n) {
            return v;
        }
        let node = g.node(n).unwrap();
        let v = if node.kind == NodeKind::Input {
            x[&n]
        } else if !fed.contains(&n) {
            0.0
        } else {
            let z = node.bias
                + enabled
                    .iter()
                    .filter(|c| c.to == n)
                    .map(|c| c.weight * value(c.from, g, enabled, fed, x, memo))
                    .sum::<f64>();
            if node.kind == NodeKind::Output {
                sigmoid(z)
            } else {
                z.max(0.0)
            }
        };
        memo.insert(n, v);
        v
    }
    let out = g.nodes().find(|n| n.kind == NodeKind::Output).unwrap().id;
    value(out, g, &enabled, &fed, x, &mut HashMap::new())
}

pub fn random_samples<R: Rng>(rng: &mut R, inputs: usize, rows: usize) -> Samples {
    let unit = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..inputs).map(|_| unit.sample(rng)).collect())
        .collect();
    let y = (0..rows).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
    Samples::from_rows(&x, y)
}

/// The worked example built directly from its gene list. Ids: a=0, b=1,
/// c=2, O=3, hidden k=10+k. Weights and biases come from `draw`.
pub type GeneWeights = Vec<((u64, u64), f64)>;

pub fn figure_genome(mut draw: impl FnMut() -> f64) -> (Genome, GeneWeights) {
    let mut g = Genome::new();
    for (id, kind) in [
        (0, NodeKind::Input),
        (1, NodeKind::Input),
        (2, NodeKind::Input),
        (3, NodeKind::Output),
    ] {
        let bias = if kind == NodeKind::Input { 0.0 } else { draw() };
        g.add_node(NodeGene {
            id: NodeId(id),
            kind,
            bias,
        })
        .unwrap();
    }
    for k in 1..=5 {
        g.add_node(NodeGene {
            id: NodeId(10 + k),
            kind: NodeKind::Hidden,
            bias: draw(),
        })
        .unwrap();
    }
    let genes: [(u64, u64); 13] = [
        (0, 11),
        (0, 12),
        (1, 11),
        (1, 12),
        (2, 12),
        (11, 13),
        (11, 14),
        (12, 13),
        (12, 15),
        (12, 3),
        (13, 3),
        (14, 3),
        (15, 3),
    ];
    let mut weights = Vec::new();
    for (k, &(a, b)) in genes.iter().enumerate() {
        let w = draw();
        weights.push(((a, b), w));
        g.add_connection(ConnectionGene {
            id: InnovationId(k as u64),
            from: NodeId(a),
            to: NodeId(b),
            weight: w,
            enabled: true,
        })
        .unwrap();
    }
    (g, weights)
}
