use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Error, Result};

const MAX_COVERAGE_DRAWS: usize = 100;

/// Disjoint node sets of one experiment. Each set is sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSplit {
    pub labeled: Vec<usize>,
    /// Training-pool nodes that did not receive a label.
    pub unlabeled_train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl NodeSplit {
    /// Every node without a training label, sorted. These are the nodes that
    /// receive pseudo-labels.
    pub fn unlabeled(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .unlabeled_train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    pub fn n_nodes(&self) -> usize {
        self.labeled.len() + self.unlabeled_train.len() + self.validation.len() + self.test.len()
    }
}

/// Fractions of `N` assigned to each set; the labeled nodes come out of
/// what test and validation leave over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub test: f64,
    pub validation: f64,
    pub labeled: f64,
}

impl SplitFractions {
    /// 80% test, 10% validation, labels drawn from the last 10%.
    pub fn standard(label_rate: f64) -> Self {
        Self {
            test: 0.8,
            validation: 0.1,
            labeled: label_rate,
        }
    }
}

fn count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Standard split: see [`SplitFractions::standard`].
pub fn split_nodes<R: Rng + ?Sized>(labels: &[usize], n_classes: usize, label_rate: f64, rng: &mut R) -> Result<NodeSplit> {
    if !(label_rate > 0.0 && label_rate <= 0.10 + 1e-12) {
        return Err(Error::Config(format!("label rate must lie in (0, 0.10], got {label_rate}")));
    }
    split_nodes_with(labels, n_classes, SplitFractions::standard(label_rate), rng)
}

/// Uniform random split with explicit fractions. Redraws (up to 100 times)
/// until every class has at least one labeled node.
pub fn split_nodes_with<R: Rng + ?Sized>(
    labels: &[usize],
    n_classes: usize,
    fractions: SplitFractions,
    rng: &mut R,
) -> Result<NodeSplit> {
    let n = labels.len();
    let n_test = count(fractions.test, n);
    let n_eval = count(fractions.test + fractions.validation, n);
    let n_labeled = count(fractions.labeled, n);
    if n_eval > n || n_labeled > n - n_eval {
        return Err(Error::Config(format!(
            "split fractions {fractions:?} do not fit {n} nodes"
        )));
    }
    if n_labeled < n_classes {
        return Err(Error::Config(format!(
            "{n_labeled} labeled nodes cannot cover {n_classes} classes"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_COVERAGE_DRAWS {
        order.shuffle(rng);
        let labeled = &order[n_eval..n_eval + n_labeled];
        let mut covered = vec![false; n_classes];
        for &i in labeled {
            covered[labels[i]] = true;
        }
        if covered.iter().all(|&c| c) {
            let sorted = |s: &[usize]| {
                let mut v = s.to_vec();
                v.sort_unstable();
                v
            };
            return Ok(NodeSplit {
                test: sorted(&order[..n_test]),
                validation: sorted(&order[n_test..n_eval]),
                labeled: sorted(labeled),
                unlabeled_train: sorted(&order[n_eval + n_labeled..]),
            });
        }
    }
    Err(Error::Config(format!(
        "no split with a labeled node in every class after {MAX_COVERAGE_DRAWS} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn standard_sizes() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 2).collect();
        let s = split_nodes(&labels, 2, 0.01, &mut rng::stream(0, "split")).unwrap();
        assert_eq!(s.labeled.len(), 10);
        assert_eq!(s.validation.len(), 100);
        assert_eq!(s.test.len(), 800);
        assert_eq!(s.unlabeled_train.len(), 90);
    }

    #[test]
    fn sets_partition_nodes() {
        let labels: Vec<usize> = (0..537).map(|i| i % 5).collect();
        let s = split_nodes(&labels, 5, 0.05, &mut rng::stream(1, "split")).unwrap();
        let mut all: Vec<usize> = s.labeled.iter().chain(&s.unlabeled()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..537).collect::<Vec<_>>());
        assert_eq!(s.n_nodes(), 537);
    }

    #[test]
    fn same_seed_same_split() {
        let labels: Vec<usize> = (0..300).map(|i| i % 3).collect();
        let a = split_nodes(&labels, 3, 0.1, &mut rng::stream(9, "split")).unwrap();
        let b = split_nodes(&labels, 3, 0.1, &mut rng::stream(9, "split")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_class_is_labeled() {
        // a single draw of 10 labels misses the 10-node class about 60% of the time
        let labels: Vec<usize> = (0..200).map(|i| usize::from(i < 10)).collect();
        for seed in 0..20 {
            let s = split_nodes(&labels, 2, 0.05, &mut rng::stream(seed, "split")).unwrap();
            assert!(s.labeled.iter().any(|&i| labels[i] == 1));
            assert!(s.labeled.iter().any(|&i| labels[i] == 0));
        }
    }

    #[test]
    fn too_few_labels_for_classes() {
        let labels: Vec<usize> = (0..100).map(|i| i % 7).collect();
        assert!(split_nodes(&labels, 7, 0.05, &mut rng::stream(0, "split")).is_err());
        assert!(split_nodes(&labels, 7, 0.2, &mut rng::stream(0, "split")).is_err());
    }
}
