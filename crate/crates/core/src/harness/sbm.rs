use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::graph::Graph;
use crate::{Error, Result};

/// Stochastic block model with class-shifted Gaussian features.
///
/// Class `c` has feature mean `(mean_shift / √2) · e_c`, so any two class
/// means are `mean_shift` apart; features carry unit-variance noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub mean_shift: f64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.len() < 2 || self.block_sizes.iter().any(|&b| b == 0) {
            return Err(Error::InvalidArgument("SBM needs at least two non-empty blocks".into()));
        }
        for p in [self.p_in, self.p_out] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
            }
        }
        if self.feature_dim < self.block_sizes.len() {
            return Err(Error::InvalidArgument(format!(
                "feature_dim {} must be at least the block count {}",
                self.feature_dim,
                self.block_sizes.len()
            )));
        }
        Ok(())
    }
}

/// Samples a graph and its ground-truth block labels. Nodes are numbered
/// block by block.
pub fn generate_sbm<R: Rng + ?Sized>(spec: &SbmSpec, rng: &mut R) -> Result<Dataset> {
    spec.validate()?;
    let labels: Vec<usize> = spec
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &size)| std::iter::repeat(c).take(size))
        .collect();
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { spec.p_in } else { spec.p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let offset = spec.mean_shift / std::f64::consts::SQRT_2;
    let mut features = Array2::<f64>::zeros((n, spec.feature_dim));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        for v in row.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        row[labels[i]] += offset;
    }
    let graph = Graph::new(n, edges, features, spec.block_sizes.len())?;
    Ok(Dataset {
        name: "sbm".into(),
        graph,
        labels,
    })
}
