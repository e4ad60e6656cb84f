use super::{CompatibilityCoeffs, Genome};

/// `c1·E/N + c2·D/N + c3·W̄` over connection genes, where `E` counts excess
/// genes, `D` disjoint genes, `N` the larger gene count (at least 1) and
/// `W̄` the mean absolute weight difference of matching genes.
pub fn compatibility_distance(a: &Genome, b: &Genome, coeffs: CompatibilityCoeffs) -> f64 {
    let max_a = a.max_innovation();
    let max_b = b.max_innovation();
    let mut excess = 0usize;
    let mut disjoint = 0usize;
    let mut matching = 0usize;
    let mut weight_diff = 0.0;

    let mut ia = a.connections().peekable();
    let mut ib = b.connections().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (None, None) => break,
            (Some(x), Some(y)) if x.id == y.id => {
                matching += 1;
                weight_diff += (x.weight - y.weight).abs();
                ia.next();
                ib.next();
            }
            (Some(x), Some(y)) if x.id < y.id => {
                disjoint += 1;
                ia.next();
            }
            (Some(_), Some(_)) => {
                disjoint += 1;
                ib.next();
            }
            (Some(x), None) => {
                if max_b.is_none_or(|m| x.id > m) {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
                ia.next();
            }
            (None, Some(y)) => {
                if max_a.is_none_or(|m| y.id > m) {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
                ib.next();
            }
        }
    }
    let n = a.connection_count().max(b.connection_count()).max(1) as f64;
    let mean_diff = if matching > 0 {
        weight_diff / matching as f64
    } else {
        0.0
    };
    coeffs.excess * excess as f64 / n + coeffs.disjoint * disjoint as f64 / n + coeffs.weight * mean_diff
}

#[derive(Clone, Debug)]
pub struct Species {
    pub id: usize,
    pub representative: Genome,
    /// Indices into the population slice passed to [`speciate`].
    pub members: Vec<usize>,
}

/// Assigns each genome, in order, to the first species whose representative
/// is closer than `threshold`, founding a new species otherwise. Empty
/// species are removed and each surviving species' representative becomes
/// its first member. Returns the species id of every genome.
pub fn speciate(
    population: &[Genome],
    species: &mut Vec<Species>,
    next_species_id: &mut usize,
    threshold: f64,
    coeffs: CompatibilityCoeffs,
) -> Vec<usize> {
    for s in species.iter_mut() {
        s.members.clear();
    }
    let mut assignment = Vec::with_capacity(population.len());
    for (i, g) in population.iter().enumerate() {
        let found = species
            .iter_mut()
            .find(|s| compatibility_distance(&s.representative, g, coeffs) < threshold);
        match found {
            Some(s) => {
                s.members.push(i);
                assignment.push(s.id);
            }
            None => {
                let id = *next_species_id;
                *next_species_id += 1;
                species.push(Species {
                    id,
                    representative: g.clone(),
                    members: vec![i],
                });
                assignment.push(id);
            }
        }
    }
    species.retain(|s| !s.members.is_empty());
    for s in species.iter_mut() {
        s.representative = population[s.members[0]].clone();
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::super::{worked_example, ConnectionGene, InnovationId, NodeId};
    use super::*;

    fn coeffs(excess: f64, disjoint: f64, weight: f64) -> CompatibilityCoeffs {
        CompatibilityCoeffs {
            excess,
            disjoint,
            weight,
        }
    }

    fn genome_with(ids: &[u64], weight: f64) -> Genome {
        let mut g = Genome::minimal(8, 1, || 0.0);
        let all: Vec<_> = g.connections().map(|c| c.id).collect();
        for id in all {
            g.remove_connection_gene(id);
        }
        for &id in ids {
            g.add_connection(ConnectionGene {
                id: InnovationId(id),
                from: NodeId(id % 8),
                to: NodeId(8),
                weight,
                enabled: true,
            })
            .unwrap();
        }
        g
    }

    #[test]
    fn self_distance_is_zero() {
        let g = worked_example(|id| id.0 as f64);
        assert_eq!(compatibility_distance(&g, &g, CompatibilityCoeffs::default()), 0.0);
    }

    #[test]
    fn disjoint_term() {
        // ids {1, 3} vs {2, 3}: genes 1 and 2 are disjoint, 3 matches
        let a = genome_with(&[1, 3], 0.5);
        let b = genome_with(&[2, 3], 0.5);
        assert_eq!(compatibility_distance(&a, &b, coeffs(0.0, 1.0, 0.0)), 2.0 / 2.0);
        assert_eq!(compatibility_distance(&a, &b, coeffs(1.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn excess_term() {
        let a = genome_with(&[1, 2], 0.5);
        let b = genome_with(&[1, 2, 5, 6], 0.5);
        assert_eq!(compatibility_distance(&a, &b, coeffs(1.0, 0.0, 0.0)), 2.0 / 4.0);
        assert_eq!(compatibility_distance(&a, &b, coeffs(0.0, 1.0, 0.0)), 0.0);
    }

    #[test]
    fn weight_term() {
        let a = genome_with(&[4], 0.5);
        let b = genome_with(&[4], -0.5);
        assert_eq!(compatibility_distance(&a, &b, coeffs(0.0, 0.0, 1.0)), 1.0);
    }

    #[test]
    fn identical_genomes_form_one_species() {
        let pop = vec![worked_example(|_| 0.1); 5];
        let mut species = Vec::new();
        let mut next = 0;
        let a = speciate(&pop, &mut species, &mut next, 3.0, CompatibilityCoeffs::default());
        assert_eq!(a, vec![0; 5]);
        assert_eq!(species.len(), 1);
    }

    #[test]
    fn zero_threshold_splits_distinct_genomes() {
        let pop = vec![genome_with(&[1], 0.1), genome_with(&[2], 0.1)];
        let mut species = Vec::new();
        let mut next = 0;
        let a = speciate(&pop, &mut species, &mut next, 0.0, CompatibilityCoeffs::default());
        assert_eq!(a, vec![0, 1]);
    }

    #[test]
    fn infinite_threshold_single_species() {
        let pop = vec![
            genome_with(&[1], 0.1),
            genome_with(&[2, 7], -3.0),
            genome_with(&[], 0.0),
        ];
        let mut species = Vec::new();
        let mut next = 0;
        let a = speciate(
            &pop,
            &mut species,
            &mut next,
            f64::INFINITY,
            CompatibilityCoeffs::default(),
        );
        assert_eq!(a, vec![0, 0, 0]);
    }

    #[test]
    fn empty_species_are_dropped_and_representatives_refreshed() {
        let first = vec![genome_with(&[1], 0.1), genome_with(&[2], 0.1)];
        let mut species = Vec::new();
        let mut next = 0;
        speciate(&first, &mut species, &mut next, 0.5, CompatibilityCoeffs::default());
        assert_eq!(species.len(), 2);
        let second = vec![genome_with(&[2], 0.2), genome_with(&[2], 0.3)];
        let a = speciate(&second, &mut species, &mut next, 0.5, CompatibilityCoeffs::default());
        assert_eq!(a, vec![1, 1]);
        assert_eq!(species.len(), 1);
        assert_eq!(species[0].representative, second[0]);
    }
}
