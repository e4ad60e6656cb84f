//! Synthetic layered genomes of controlled depth, width and size.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::genome::{ConnectionGene, Genome, InnovationId, NodeGene, NodeId, NodeKind};

/// Inputs, dense hidden layers of the given widths and one output. Each
/// layer is fully connected to the next; then `skips` extra connections
/// jumping exactly two layers are added round-robin over the depth.
///
/// Returns `None` when fewer than `skips` two-layer jumps exist.
pub fn layered_genome<R: Rng + ?Sized>(inputs: usize, hidden: &[usize], skips: usize, rng: &mut R) -> Option<Genome> {
    let mut g = Genome::new();
    let mut layers: Vec<Vec<NodeId>> = Vec::with_capacity(hidden.len() + 2);
    let mut next = 0u64;
    let mut fresh = |kind: NodeKind, g: &mut Genome| {
        let id = NodeId(next);
        next += 1;
        g.add_node(NodeGene { id, kind, bias: 0.0 }).expect("fresh id");
        id
    };
    layers.push((0..inputs).map(|_| fresh(NodeKind::Input, &mut g)).collect());
    let output = fresh(NodeKind::Output, &mut g);
    for &w in hidden {
        layers.push((0..w).map(|_| fresh(NodeKind::Hidden, &mut g)).collect());
    }
    layers.push(vec![output]);

    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for pair in layers.windows(2) {
        for &u in &pair[0] {
            for &v in &pair[1] {
                edges.push((u, v));
            }
        }
    }
    let mut candidates: Vec<Vec<(NodeId, NodeId)>> = layers
        .windows(3)
        .map(|t| t[0].iter().flat_map(|&u| t[2].iter().map(move |&v| (u, v))).collect())
        .collect();
    let mut added = 0;
    while added < skips {
        let mut progressed = false;
        for c in candidates.iter_mut() {
            if added == skips {
                break;
            }
            if !c.is_empty() {
                edges.push(c.remove(0));
                added += 1;
                progressed = true;
            }
        }
        if !progressed {
            return None;
        }
    }

    let mut fan_in = std::collections::HashMap::new();
    for &(_, v) in &edges {
        *fan_in.entry(v).or_insert(0usize) += 1;
    }
    for (i, (from, to)) in edges.into_iter().enumerate() {
        let std = (1.0 / fan_in[&to] as f64).sqrt();
        let weight = Normal::new(0.0, std).expect("finite").sample(rng);
        g.add_connection(ConnectionGene {
            id: InnovationId(i as u64),
            from,
            to,
            weight,
            enabled: true,
        })
        .expect("layered edges are acyclic");
    }
    Some(g)
}

/// Parameter size (nodes + connections) of [`layered_genome`] before skips.
pub fn dense_size(inputs: usize, hidden: &[usize]) -> usize {
    let mut widths = vec![inputs];
    widths.extend_from_slice(hidden);
    widths.push(1);
    let nodes: usize = widths.iter().sum();
    let conns: usize = widths.windows(2).map(|w| w[0] * w[1]).sum();
    nodes + conns
}

/// A genome with exactly `depth` layers (input and output included) and
/// parameter size `target_size`: hidden layers share the largest width that
/// keeps the dense size within target, and skip connections make up the
/// rest.
pub fn fixed_size_genome<R: Rng + ?Sized>(
    inputs: usize,
    depth: usize,
    target_size: usize,
    rng: &mut R,
) -> Option<Genome> {
    if depth < 2 {
        return None;
    }
    let hidden_layers = depth - 2;
    if hidden_layers == 0 {
        return (dense_size(inputs, &[]) == target_size)
            .then(|| layered_genome(inputs, &[], 0, rng))
            .flatten();
    }
    let mut width = 1;
    while dense_size(inputs, &vec![width + 1; hidden_layers]) <= target_size {
        width += 1;
    }
    let hidden = vec![width; hidden_layers];
    let base = dense_size(inputs, &hidden);
    if base > target_size {
        return None;
    }
    layered_genome(inputs, &hidden, target_size - base, rng)
}

/// Hidden widths for a skip-free layered genome of `depth` layers whose
/// size is as close to `target_size` as possible without exceeding it.
/// Widths start equal and grow one layer at a time from the front.
pub fn adjacent_widths(inputs: usize, depth: usize, target_size: usize) -> Option<Vec<usize>> {
    let mut hidden = vec![1; depth.checked_sub(2)?];
    if dense_size(inputs, &hidden) > target_size {
        return None;
    }
    loop {
        let mut grown = false;
        for i in 0..hidden.len() {
            hidden[i] += 1;
            if dense_size(inputs, &hidden) > target_size {
                hidden[i] -= 1;
            } else {
                grown = true;
            }
        }
        if !grown {
            return Some(hidden);
        }
    }
}

/// One skip-free genome per depth with size near `target_size`, so that
/// depth is the only structural variable. All draw from one seeded stream.
pub fn depth_family(inputs: usize, depths: &[usize], target_size: usize, seed: u64) -> Option<Vec<Genome>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    depths
        .iter()
        .map(|&d| layered_genome(inputs, &adjacent_widths(inputs, d, target_size)?, 0, &mut rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::complexity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layered_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = layered_genome(3, &[4, 2], 0, &mut rng).unwrap();
        let c = complexity(&g).unwrap();
        assert_eq!((c.depth, c.width, c.skippiness), (4, 4, 0.0));
        assert_eq!(c.parameter_size, dense_size(3, &[4, 2]));
    }

    #[test]
    fn fixed_size_family_hits_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for depth in [3, 6, 12, 24] {
            let g = fixed_size_genome(8, depth, 200, &mut rng).unwrap();
            let c = complexity(&g).unwrap();
            assert_eq!(c.depth, depth);
            assert_eq!(c.parameter_size, 200);
        }
    }

    #[test]
    fn adjacent_family_is_skip_free_and_near_target() {
        let family = depth_family(8, &[3, 6, 12, 24], 200, 0).unwrap();
        for (g, depth) in family.iter().zip([3, 6, 12, 24]) {
            let c = complexity(g).unwrap();
            assert_eq!(c.depth, depth);
            assert_eq!(c.skippiness, 0.0);
            assert!((180..=200).contains(&c.parameter_size), "{}", c.parameter_size);
        }
        assert_eq!(adjacent_widths(8, 2, 200), Some(vec![]));
        assert_eq!(adjacent_widths(8, 30, 50), None);
    }

    #[test]
    fn too_many_skips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(layered_genome(1, &[1], 5, &mut rng).is_none());
    }
}
