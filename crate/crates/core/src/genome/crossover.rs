use rand::Rng;

use super::{Genome, GenomeError, NodeKind};

/// Gene-aligned crossover.
///
/// Matching genes (same id) take their weight, bias and enabled flag from a
/// uniformly chosen parent. Disjoint and excess genes come from the fitter
/// parent; on equal fitness `a` counts as fitter. Inherited enabled edges
/// that would duplicate a pair or close a cycle are dropped, visiting genes
/// in ascending innovation order.
pub fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> Result<Genome, GenomeError> {
    let fa = a.fitness.ok_or(GenomeError::FitnessUnset)?;
    let fb = b.fitness.ok_or(GenomeError::FitnessUnset)?;
    let (fitter, other) = if fa >= fb { (a, b) } else { (b, a) };

    let mut child = Genome::new();
    for node in fitter.nodes() {
        let mut gene = node.clone();
        if node.kind != NodeKind::Input {
            if let Some(o) = other.node(node.id) {
                if rng.random_bool(0.5) {
                    gene.bias = o.bias;
                }
            }
        }
        child.add_node(gene)?;
    }

    for conn in fitter.connections() {
        let gene = match other.connection(conn.id) {
            Some(o) if rng.random_bool(0.5) => {
                let mut g = conn.clone();
                g.weight = o.weight;
                g.enabled = o.enabled;
                g
            }
            _ => conn.clone(),
        };
        if gene.enabled
            && (child.enabled_pair(gene.from, gene.to).is_some() || child.would_create_cycle(gene.from, gene.to))
        {
            continue;
        }
        child.insert_connection_unchecked(gene);
    }
    Ok(child)
}
