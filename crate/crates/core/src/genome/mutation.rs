//! Structural and weight mutations. Each mutation edits the genome in place
//! and reports whether anything changed.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{
    ConnectionGene, Genome, GenomeError, InnovationId, InnovationTracker, NodeGene, NodeId, NodeKind, WeightInit,
    WeightMutation,
};

const ADD_CONNECTION_ATTEMPTS: usize = 32;

fn normal(mean: f64, std: f64) -> Normal<f64> {
    Normal::new(mean, std.max(0.0)).expect("finite normal parameters")
}

/// Adds (or re-enables) the edge `from -> to`.
///
/// A disabled gene for the same pair is re-enabled with the new weight so a
/// genome never holds two genes for one pair.
pub fn add_connection_between(
    g: &mut Genome,
    from: NodeId,
    to: NodeId,
    weight: f64,
    tracker: &mut InnovationTracker,
) -> Result<InnovationId, GenomeError> {
    g.check_endpoints(from, to)?;
    if g.enabled_pair(from, to).is_some() {
        return Err(GenomeError::DuplicatePair { from, to });
    }
    if g.would_create_cycle(from, to) {
        return Err(GenomeError::CycleDetected);
    }
    if let Some(id) = g.any_pair(from, to).map(|c| c.id) {
        g.set_weight(id, weight);
        g.set_enabled(id, true);
        return Ok(id);
    }
    let mut id = tracker.connection(from, to);
    if g.connection(id).is_some() {
        id = tracker.fresh_connection();
    }
    g.insert_connection_unchecked(ConnectionGene {
        id,
        from,
        to,
        weight,
        enabled: true,
    });
    Ok(id)
}

/// Tries up to a fixed number of uniformly drawn ordered pairs and adds the
/// first legal one.
pub fn mutate_add_connection<R: Rng + ?Sized>(
    g: &mut Genome,
    tracker: &mut InnovationTracker,
    init: WeightInit,
    rng: &mut R,
) -> bool {
    let sources: Vec<NodeId> = g.nodes().filter(|n| n.kind != NodeKind::Output).map(|n| n.id).collect();
    let targets: Vec<NodeId> = g.nodes().filter(|n| n.kind != NodeKind::Input).map(|n| n.id).collect();
    if sources.is_empty() || targets.is_empty() {
        return false;
    }
    let dist = normal(init.mean, init.std);
    for _ in 0..ADD_CONNECTION_ATTEMPTS {
        let from = *sources.choose(rng).expect("non-empty");
        let to = *targets.choose(rng).expect("non-empty");
        let weight = dist.sample(rng);
        if add_connection_between(g, from, to, weight, tracker).is_ok() {
            return true;
        }
    }
    false
}

/// Classic NEAT split: `u -> v` is disabled and replaced by `u -> m`
/// (weight 1) and `m -> v` (the old weight); `m` starts with bias 0.
pub fn split_connection(g: &mut Genome, id: InnovationId, tracker: &mut InnovationTracker) -> Option<NodeId> {
    let conn = g.connection(id).filter(|c| c.enabled)?.clone();
    let mut split = tracker.split(id);
    if g.node(split.node).is_some() || g.connection(split.incoming).is_some() || g.connection(split.outgoing).is_some()
    {
        split.node = tracker.fresh_node();
        split.incoming = tracker.fresh_connection();
        split.outgoing = tracker.fresh_connection();
    }
    g.set_enabled(id, false);
    g.add_node(NodeGene {
        id: split.node,
        kind: NodeKind::Hidden,
        bias: 0.0,
    })
    .expect("split node id is fresh");
    g.insert_connection_unchecked(ConnectionGene {
        id: split.incoming,
        from: conn.from,
        to: split.node,
        weight: 1.0,
        enabled: true,
    });
    g.insert_connection_unchecked(ConnectionGene {
        id: split.outgoing,
        from: split.node,
        to: conn.to,
        weight: conn.weight,
        enabled: true,
    });
    Some(split.node)
}

pub fn mutate_add_node<R: Rng + ?Sized>(g: &mut Genome, tracker: &mut InnovationTracker, rng: &mut R) -> bool {
    let enabled: Vec<InnovationId> = g.enabled_connections().map(|c| c.id).collect();
    match enabled.choose(rng) {
        Some(&id) => split_connection(g, id, tracker).is_some(),
        None => false,
    }
}

pub fn mutate_remove_connection<R: Rng + ?Sized>(g: &mut Genome, rng: &mut R) -> bool {
    let enabled: Vec<InnovationId> = g.enabled_connections().map(|c| c.id).collect();
    match enabled.choose(rng) {
        Some(&id) => g.remove_connection_gene(id).is_some(),
        None => false,
    }
}

/// Deletes a uniformly chosen hidden node and every connection touching it.
pub fn mutate_remove_node<R: Rng + ?Sized>(g: &mut Genome, rng: &mut R) -> bool {
    let hidden = g.hidden_ids();
    let Some(&node) = hidden.choose(rng) else {
        return false;
    };
    let incident: Vec<InnovationId> = g
        .connections()
        .filter(|c| c.from == node || c.to == node)
        .map(|c| c.id)
        .collect();
    for id in incident {
        g.remove_connection_gene(id);
    }
    g.remove_node_gene(node).is_some()
}

/// Redraws every connection weight from `init` and zeroes every bias.
pub fn reinit_weights<R: Rng + ?Sized>(g: &mut Genome, init: WeightInit, rng: &mut R) {
    let dist = normal(init.mean, init.std);
    for c in g.connections_mut() {
        c.weight = dist.sample(rng);
    }
    for n in g.nodes_mut() {
        n.bias = 0.0;
    }
}

/// Genetic weight search: each connection weight and non-input bias is
/// perturbed with probability `perturb_prob`, otherwise replaced with
/// probability `replace_prob`. Returns the number of values changed.
pub fn perturb_weights<R: Rng + ?Sized>(
    g: &mut Genome,
    params: WeightMutation,
    init: WeightInit,
    rng: &mut R,
) -> usize {
    let perturb = normal(0.0, params.perturb_std);
    let replace = normal(init.mean, init.std);
    let mut changed = 0;
    let mut mutate = |v: &mut f64, rng: &mut R| {
        let r: f64 = rng.random();
        if r < params.perturb_prob {
            *v += perturb.sample(rng);
            changed += 1;
        } else if r < params.perturb_prob + params.replace_prob {
            *v = replace.sample(rng);
            changed += 1;
        }
    };
    for c in g.connections_mut() {
        mutate(&mut c.weight, rng);
    }
    for n in g.nodes_mut().filter(|n| n.kind != NodeKind::Input) {
        mutate(&mut n.bias, rng);
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::worked_example;
    use super::*;
    use crate::graphplan::analyze;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tracker_for(g: &Genome) -> InnovationTracker {
        InnovationTracker::after([g])
    }

    #[test]
    fn fully_connected_minimal_is_unchanged() {
        let mut g = Genome::minimal(1, 1, || 0.3);
        let before = g.clone();
        let mut t = tracker_for(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(!mutate_add_connection(&mut g, &mut t, WeightInit::default(), &mut rng));
        assert_eq!(g, before);
    }

    #[test]
    fn forced_pair_stays_acyclic() {
        let mut g = worked_example(|_| 0.5);
        let mut t = tracker_for(&g);
        let id = add_connection_between(&mut g, h(1), h(5), 0.1, &mut t).unwrap();
        assert_eq!(g.connection(id).unwrap().from, h(1));
        g.validate().unwrap();
        // independent check: DFS from every node never returns to itself
        let adj = g.enabled_adjacency();
        for start in g.nodes().map(|n| n.id) {
            let mut stack: Vec<NodeId> = adj.get(&start).cloned().unwrap_or_default();
            let mut seen = std::collections::HashSet::new();
            while let Some(n) = stack.pop() {
                assert_ne!(n, start, "cycle through {start}");
                if seen.insert(n) {
                    stack.extend(adj.get(&n).cloned().unwrap_or_default());
                }
            }
        }
    }

    #[test]
    fn output_cannot_be_source() {
        let mut g = worked_example(|_| 0.5);
        let mut t = tracker_for(&g);
        assert!(matches!(
            add_connection_between(&mut g, O, h(2), 0.1, &mut t),
            Err(GenomeError::InvalidEndpoint { .. })
        ));
    }

    #[test]
    fn random_add_connection_keeps_dag() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut g = worked_example(|_| 0.5);
        let mut t = tracker_for(&g);
        for _ in 0..50 {
            mutate_add_connection(&mut g, &mut t, WeightInit::default(), &mut rng);
            g.validate().unwrap();
        }
    }

    #[test]
    fn split_single_connection() {
        let mut g = Genome::minimal(1, 1, || 0.7);
        let mut t = tracker_for(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(mutate_add_node(&mut g, &mut t, &mut rng));
        g.validate().unwrap();
        let old = g.connection(InnovationId(0)).unwrap();
        assert!(!old.enabled);
        let m = g.hidden_ids()[0];
        assert_eq!(g.node(m).unwrap().bias, 0.0);
        assert_eq!(g.enabled_pair(NodeId(0), m).unwrap().weight, 1.0);
        assert_eq!(g.enabled_pair(m, NodeId(1)).unwrap().weight, 0.7);
        assert!(g.max_innovation().unwrap().0 > 0);
    }

    #[test]
    fn split_skip_connection_depth() {
        let mut g = worked_example(|_| 0.5);
        let before = analyze(&g).unwrap();
        let skip = g.enabled_pair(h(2), O).unwrap().id;
        let mut t = tracker_for(&g);
        let m = split_connection(&mut g, skip, &mut t).unwrap();
        let after = analyze(&g).unwrap();
        let d = after.node(m).unwrap().depth.unwrap();
        assert!(d > 1 && d < 3);
        assert!(after.node(O).unwrap().depth >= before.node(O).unwrap().depth);
    }

    #[test]
    fn empty_genome_add_node_noop() {
        let mut g = Genome::minimal(2, 1, || 1.0);
        let ids: Vec<_> = g.connections().map(|c| c.id).collect();
        for id in ids {
            g.remove_connection_gene(id);
        }
        let before = g.clone();
        let mut t = tracker_for(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(!mutate_add_node(&mut g, &mut t, &mut rng));
        assert!(!mutate_remove_connection(&mut g, &mut rng));
        assert_eq!(g, before);
    }

    #[test]
    fn remove_node_without_hidden_is_noop() {
        let mut g = Genome::minimal(3, 1, || 1.0);
        let before = g.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(!mutate_remove_node(&mut g, &mut rng));
        assert_eq!(g, before);
    }

    #[test]
    fn removing_node_four_drops_incident_edges() {
        let mut g = worked_example(|_| 0.5);
        // drive the random choice until node 4 is removed
        for seed in 0.. {
            let mut trial = g.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            mutate_remove_node(&mut trial, &mut rng);
            if trial.node(h(4)).is_none() {
                g = trial;
                break;
            }
        }
        assert!(g.any_pair(h(1), h(4)).is_none());
        assert!(g.any_pair(h(4), O).is_none());
        assert_eq!(g.connection_count(), 11);
        assert_eq!(g.input_ids().len(), 3);
        assert_eq!(g.output_ids().len(), 1);
        g.validate().unwrap();
    }

    #[test]
    fn removing_node_three_output_edge_strands_node_three() {
        let mut g = worked_example(|_| 0.5);
        let id = g.enabled_pair(h(3), O).unwrap().id;
        g.remove_connection_gene(id);
        let a = analyze(&g).unwrap();
        assert!(!a.node(h(3)).unwrap().reachable_backward);
        assert!(a.node(h(3)).unwrap().reachable_forward);
    }

    #[test]
    fn perturb_counts_changes() {
        let mut g = worked_example(|_| 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let none = WeightMutation {
            perturb_prob: 0.0,
            perturb_std: 0.5,
            replace_prob: 0.0,
        };
        let before = g.clone();
        assert_eq!(perturb_weights(&mut g, none, WeightInit::default(), &mut rng), 0);
        assert_eq!(g, before);
        let all = WeightMutation {
            perturb_prob: 1.0,
            ..none
        };
        // 13 weights + 6 non-input biases
        assert_eq!(perturb_weights(&mut g, all, WeightInit::default(), &mut rng), 19);
    }
}
