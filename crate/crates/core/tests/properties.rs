mod common;

use std::collections::{BTreeMap, HashMap, HashSet};

use common::{random_genome, random_samples, reference_output, Limits, ORACLE_LIMITS};
use layerneat::compiler::{compile, readback, LayeredModel};
use layerneat::genome::{ConnectionGene, Genome, InnovationId, NodeGene, NodeId, NodeKind};
use layerneat::graphplan::{plan, LayerPlan, PlanError};
use layerneat::naive::evaluate_naive;
use layerneat::tensor::Matrix;
use layerneat::train::{train, TrainConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn genome(seed: u64, lim: &Limits) -> Genome {
    random_genome(&mut ChaCha8Rng::seed_from_u64(seed), lim)
}

fn trainable(seed: u64, lim: &Limits) -> Option<(Genome, LayerPlan)> {
    let g = genome(seed, lim);
    match plan(&g) {
        Ok(p) => Some((g, p)),
        Err(PlanError::UntrainableGenome) => None,
        Err(e) => panic!("{e}"),
    }
}

/// Longest input path of every forward-reachable node, by a DP over Kahn
/// order, and the set of nodes that can reach the output.
fn depth_oracle(g: &Genome) -> (BTreeMap<NodeId, usize>, HashSet<NodeId>) {
    let edges: Vec<(NodeId, NodeId)> = g.connections().filter(|c| c.enabled).map(|c| (c.from, c.to)).collect();
    let mut indegree: HashMap<NodeId, usize> = g.nodes().map(|n| (n.id, 0)).collect();
    for &(_, b) in &edges {
        *indegree.get_mut(&b).unwrap() += 1;
    }
    let mut ready: Vec<NodeId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
    let mut order = Vec::new();
    while let Some(n) = ready.pop() {
        order.push(n);
        for &(a, b) in &edges {
            if a == n {
                let d = indegree.get_mut(&b).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(b);
                }
            }
        }
    }
    let mut depth: BTreeMap<NodeId, usize> = BTreeMap::new();
    for n in &order {
        if g.node(*n).unwrap().kind == NodeKind::Input {
            depth.insert(*n, 0);
        }
        if let Some(&d) = depth.get(n) {
            for &(a, b) in &edges {
                if a == *n {
                    let e = depth.entry(b).or_insert(0);
                    *e = (*e).max(d + 1);
                }
            }
        }
    }
    let out = g.output_ids()[0];
    let mut reaches: HashSet<NodeId> = HashSet::from([out]);
    for n in order.iter().rev() {
        if edges.iter().any(|&(a, b)| a == *n && reaches.contains(&b)) {
            reaches.insert(*n);
        }
    }
    (depth, reaches)
}

/// Drops every hidden node that is not both fed by an input and feeding the
/// output, along with its connections.
fn pruned(g: &Genome) -> Genome {
    let (depth, reaches) = depth_oracle(g);
    let keep = |id: NodeId| {
        let kind = g.node(id).unwrap().kind;
        kind != NodeKind::Hidden || (depth.contains_key(&id) && reaches.contains(&id))
    };
    let mut p = Genome::new();
    for n in g.nodes().filter(|n| keep(n.id)) {
        p.add_node(n.clone()).unwrap();
    }
    for c in g.connections().filter(|c| keep(c.from) && keep(c.to)) {
        p.add_connection(c.clone()).unwrap();
    }
    p
}

fn inputs_for(g: &Genome, seed: u64) -> Vec<HashMap<NodeId, f64>> {
    let s = random_samples(&mut ChaCha8Rng::seed_from_u64(seed), g.input_ids().len(), 4);
    (0..s.len())
        .map(|j| g.input_ids().into_iter().zip(s.sample(j)).collect())
        .collect()
}

const SMALL: Limits = Limits {
    max_inputs: 4,
    max_nodes: 14,
    max_connections: 30,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn placement_matches_depth_dp(seed in any::<u64>()) {
        let Some((g, p)) = trainable(seed, &ORACLE_LIMITS) else { return Ok(()) };
        let (depth, reaches) = depth_oracle(&g);
        let out = g.output_ids()[0];
        for n in g.nodes() {
            let expect = match n.kind {
                NodeKind::Input => Some(0),
                NodeKind::Output => Some(depth[&out]),
                NodeKind::Hidden => depth.get(&n.id).filter(|_| reaches.contains(&n.id)).copied(),
            };
            prop_assert_eq!(p.position(n.id).map(|(l, _)| l), expect, "node {:?}", n.id);
        }
        prop_assert_eq!(p.layer_count(), depth[&out] + 1);
        for l in &p.layers {
            let at = p.placed_nodes().filter(|&n| p.position(n).unwrap().0 == l.index).count();
            prop_assert_eq!(l.nodes.len(), at);
            prop_assert!(!l.nodes.is_empty());
        }
        for c in &p.connections {
            prop_assert!(p.position(c.from).unwrap().0 < p.position(c.to).unwrap().0);
        }
    }

    #[test]
    fn pruning_never_changes_the_output(seed in any::<u64>()) {
        let g = genome(seed, &ORACLE_LIMITS);
        if plan(&g).is_err() {
            return Ok(());
        }
        let p = pruned(&g);
        for x in inputs_for(&g, seed) {
            let full = reference_output(&g, &x);
            prop_assert_eq!(full, reference_output(&p, &x));
            let ordered: Vec<f64> = g.input_ids().iter().map(|i| x[i]).collect();
            let naive = evaluate_naive(&g, &ordered).unwrap()[0];
            prop_assert!((naive - full).abs() < 1e-12, "{} vs {}", naive, full);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn splitting_a_connection_never_adds_skipped_layers(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let Some((g, p)) = trainable(seed, &ORACLE_LIMITS) else { return Ok(()) };
        let c = *pick.get(&p.connections);
        let layer = |p: &LayerPlan, n: NodeId| p.position(n).unwrap().0;
        let before = layer(&p, c.to) - layer(&p, c.from) - 1;

        let mut s = g.clone();
        let mid = NodeId(g.max_node_id().unwrap().0 + 1);
        let next = g.connections().map(|c| c.id.0).max().unwrap() + 1;
        s.set_enabled(c.id, false);
        s.add_node(NodeGene { id: mid, kind: NodeKind::Hidden, bias: 0.0 }).unwrap();
        for (k, (a, b)) in [(c.from, mid), (mid, c.to)].into_iter().enumerate() {
            s.add_connection(ConnectionGene { id: InnovationId(next + k as u64), from: a, to: b, weight: 1.0, enabled: true }).unwrap();
        }
        let q = plan(&s).unwrap();
        let after = (layer(&q, mid) - layer(&q, c.from) - 1) + (layer(&q, c.to) - layer(&q, mid) - 1);
        prop_assert!(after <= before, "{} > {}", after, before);
    }

    #[test]
    fn training_keeps_masked_weights_at_zero_and_roundtrips(seed in any::<u64>(), epochs in 1usize..30) {
        let Some((g, _)) = trainable(seed, &SMALL) else { return Ok(()) };
        let mut net = compile(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let data = random_samples(&mut rng, g.input_ids().len(), 12);
        let cfg = TrainConfig { epochs, batch_size: Some(5), shuffle_seed: seed, ..Default::default() };
        train(&mut net, &data, None, &cfg).unwrap();
        for l in net.layers() {
            for (w, m) in l.weights.as_slice().iter().zip(l.mask.as_slice()) {
                if *m == 0.0 {
                    prop_assert_eq!(w.to_bits(), 0.0f64.to_bits());
                }
            }
        }
        let again = compile(&readback(&net, &g).unwrap()).unwrap();
        let probe = random_samples(&mut rng, g.input_ids().len(), 6).x;
        let diff = net.forward(&probe).unwrap().max_abs_diff(&again.forward(&probe).unwrap());
        prop_assert!(diff <= 1e-12, "{}", diff);
        prop_assert_eq!(again.layers(), net.layers());
    }

    #[test]
    fn skip_concat_equals_blockwise_sum(seed in any::<u64>()) {
        let Some((g, _)) = trainable(seed, &ORACLE_LIMITS) else { return Ok(()) };
        let net = compile(&g).unwrap();
        let x = random_samples(&mut ChaCha8Rng::seed_from_u64(seed), g.input_ids().len(), 3).x;
        // recompute every layer by summing per-source products
        let mut outs: Vec<Matrix> = vec![x.clone()];
        for l in net.layers() {
            let mut z = Matrix::zeros(l.output_dim(), x.cols());
            for s in &l.sources {
                let block = Matrix::from_rows(
                    &(0..l.output_dim()).map(|r| l.weights.row(r)[s.offset..s.offset + s.width].to_vec()).collect::<Vec<_>>(),
                ).unwrap();
                z.add_assign(&block.matmul(&outs[s.layer]).unwrap()).unwrap();
            }
            for r in 0..z.rows() {
                for v in z.row_mut(r) {
                    *v = l.activation.apply(*v + l.bias[r]);
                }
            }
            outs.push(z);
        }
        let diff = outs.last().unwrap().max_abs_diff(&net.forward(&x).unwrap());
        prop_assert!(diff < 1e-12, "{}", diff);
    }
}
