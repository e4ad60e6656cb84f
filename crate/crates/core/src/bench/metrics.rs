use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("scores and labels differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("labels contain a single class")]
    SingleClass,
}

/// 1-based ranks in ascending order of `values`; ties share their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]].total_cmp(&values[idx[i]]) == Ordering::Equal {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Area under the ROC curve from the Mann–Whitney rank sum: the probability
/// that a random positive outscores a random negative, ties counting half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::Length(scores.len(), labels.len()));
    }
    let pos = labels.iter().filter(|&&y| y != 0.0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y != 0.0)
        .map(|(r, _)| r)
        .sum();
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// One finished run of one method on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub dataset: String,
    pub method: String,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub dataset: String,
    pub method: String,
    pub runs: usize,
    pub mean: f64,
    pub max: f64,
    /// Sample standard deviation; 0 for a single run.
    pub sd: f64,
    /// Rank of the mean among methods on this dataset, 1 = best.
    pub rank: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub per_dataset: Vec<MethodSummary>,
    /// Method → mean rank over datasets.
    pub mean_ranks: BTreeMap<String, f64>,
}

pub fn summarize_runs(runs: &[RunOutcome]) -> RunSummary {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.dataset.clone(), r.method.clone()))
            .or_default()
            .push(r.auc);
    }
    let mut per_dataset: Vec<MethodSummary> = groups
        .into_iter()
        .map(|((dataset, method), aucs)| {
            let n = aucs.len() as f64;
            let mean = aucs.iter().sum::<f64>() / n;
            let max = aucs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sd = if aucs.len() > 1 {
                (aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            MethodSummary {
                dataset,
                method,
                runs: aucs.len(),
                mean,
                max,
                sd,
                rank: 0.0,
            }
        })
        .collect();

    let mut by_dataset: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in per_dataset.iter().enumerate() {
        by_dataset.entry(s.dataset.clone()).or_default().push(i);
    }
    let mut rank_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for members in by_dataset.values() {
        let neg: Vec<f64> = members.iter().map(|&i| -per_dataset[i].mean).collect();
        for (&i, r) in members.iter().zip(midranks(&neg)) {
            per_dataset[i].rank = r;
            let e = rank_sums.entry(per_dataset[i].method.clone()).or_insert((0.0, 0));
            e.0 += r;
            e.1 += 1;
        }
    }
    let mean_ranks = rank_sums.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect();
    RunSummary {
        per_dataset,
        mean_ranks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(scores: &[f64], labels: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (s1, y1) in scores.iter().zip(labels) {
            for (s0, y0) in scores.iter().zip(labels) {
                if *y1 == 1.0 && *y0 == 0.0 {
                    den += 1.0;
                    num += match s1.partial_cmp(s0).unwrap() {
                        Ordering::Greater => 1.0,
                        Ordering::Equal => 0.5,
                        Ordering::Less => 0.0,
                    };
                }
            }
        }
        num / den
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 4], &[0.0, 1.0, 0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.75);
        assert_eq!(auc(&[0.1, 0.2], &[1.0, 1.0]), Err(MetricError::SingleClass));
        assert_eq!(auc(&[0.1], &[1.0, 0.0]), Err(MetricError::Length(1, 2)));
    }

    #[test]
    fn midrank_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn summary_examples() {
        let one = summarize_runs(&[RunOutcome {
            dataset: "d".into(),
            method: "m".into(),
            auc: 0.7,
        }]);
        let s = &one.per_dataset[0];
        assert_eq!((s.mean, s.max, s.sd, s.rank), (0.7, 0.7, 0.0, 1.0));

        let r = |m: &str, a: f64| RunOutcome {
            dataset: "d".into(),
            method: m.into(),
            auc: a,
        };
        let two = summarize_runs(&[r("a", 0.9), r("b", 0.8)]);
        assert_eq!(two.mean_ranks["a"], 1.0);
        assert_eq!(two.mean_ranks["b"], 2.0);
        let tied = summarize_runs(&[r("a", 0.8), r("b", 0.8)]);
        assert_eq!(tied.mean_ranks["a"], 1.5);
        assert_eq!(tied.mean_ranks["b"], 1.5);

        let sd = summarize_runs(&[r("a", 0.6), r("a", 0.8)]);
        assert!((sd.per_dataset[0].sd - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(sd.per_dataset[0].max, 0.8);
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise(data in prop::collection::vec((0u8..20, any::<bool>()), 2..200)) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| f64::from(*s) / 7.0).collect();
            let labels: Vec<f64> = data.iter().map(|(_, y)| f64::from(u8::from(*y))).collect();
            match auc(&scores, &labels) {
                Ok(a) => prop_assert!((a - brute(&scores, &labels)).abs() < 1e-12),
                Err(e) => prop_assert_eq!(e, MetricError::SingleClass),
            }
        }
    }
}
