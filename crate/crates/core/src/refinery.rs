//! Soft label correction and pseudo-labeling by diffusion-weighted neighbor
//! aggregation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::diffusion::{DiffusionMatrix, RowStochasticDiffusion};
use crate::indicator::CleanConfidence;
use crate::{Error, Result};

/// Default neighbor-set size.
pub const DEFAULT_NEIGHBORS: usize = 32;

/// Neighbor set `I(i)` drawn from row `i` of the normalized diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSample {
    pub node: usize,
    pub indices: Vec<usize>,
    /// Normalized diffusion mass of each selected index.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborSelection {
    /// The `m` largest entries, ties to the lower index.
    #[default]
    TopM,
    /// `m` distinct draws, without replacement, from the row distribution.
    Sampled,
}

fn top_m(row: ArrayView1<'_, f64>, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    let order = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
    if m < idx.len() {
        idx.select_nth_unstable_by(m - 1, order);
        idx.truncate(m);
    }
    idx.sort_by(order);
    idx
}

/// Selects up to `m` neighbor indices of `node`; `m > N` uses every node.
///
/// Sampling needs a positive-probability support: when the row has fewer
/// than `m` nonzero entries the whole support is returned.
pub fn select_neighbors<R: Rng + ?Sized>(
    tn: &RowStochasticDiffusion,
    node: usize,
    m: usize,
    selection: NeighborSelection,
    rng: &mut R,
) -> Result<NeighborSample> {
    if m == 0 {
        return Err(Error::InvalidArgument("neighbor count must be >= 1".into()));
    }
    if node >= tn.n() {
        return Err(Error::InvalidArgument(format!("node {node} outside diffusion matrix")));
    }
    let row = tn.row(node);
    let m = m.min(row.len());
    let indices = match selection {
        NeighborSelection::TopM => top_m(row, m),
        NeighborSelection::Sampled => {
            let support: Vec<usize> = (0..row.len()).filter(|&j| row[j] > 0.0).collect();
            let take = m.min(support.len());
            let mut picked: Vec<usize> = support
                .choose_multiple_weighted(rng, take, |&j| row[j])
                .map_err(|e| Error::Numeric(format!("neighbor sampling failed: {e}")))?
                .copied()
                .collect();
            picked.sort_unstable();
            picked
        }
    };
    let weights = indices.iter().map(|&j| row[j]).collect();
    Ok(NeighborSample { node, indices, weights })
}

fn softmax(v: &mut Array1<f64>) {
    let m = v.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    v.mapv_inplace(|x| (x - m).exp());
    let s = v.sum();
    v.mapv_inplace(|x| x / s);
}

/// `h_i = softmax(Σ_{k∈I(i)} T_ki p_k)` with the raw diffusion weights.
pub fn neighbor_aggregate(sample: &NeighborSample, t: &DiffusionMatrix, p: ArrayView2<'_, f64>) -> Array1<f64> {
    let mut acc = Array1::<f64>::zeros(p.ncols());
    for &k in &sample.indices {
        acc.scaled_add(t.get(k, sample.node), &p.row(k));
    }
    softmax(&mut acc);
    acc
}

/// `l_i = β_i y_i + (1 − β_i) h_i`, row by row.
pub fn correct_labels(
    one_hot: ArrayView2<'_, f64>,
    beta: &CleanConfidence,
    aggregated: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if one_hot.dim() != aggregated.dim() || one_hot.nrows() != beta.len() {
        return Err(Error::InvalidArgument(format!(
            "label correction shapes disagree: y {:?}, h {:?}, beta {}",
            one_hot.dim(),
            aggregated.dim(),
            beta.len()
        )));
    }
    let mut out = Array2::zeros(one_hot.dim());
    for (i, &b) in beta.values().iter().enumerate() {
        let mut row = out.row_mut(i);
        row.scaled_add(b, &one_hot.row(i));
        row.scaled_add(1.0 - b, &aggregated.row(i));
    }
    Ok(out)
}

/// Aggregated neighbor distributions for `nodes`, one row each.
pub fn aggregate_rows(
    samples: &[NeighborSample],
    t: &DiffusionMatrix,
    p: ArrayView2<'_, f64>,
    nodes: &[usize],
) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((nodes.len(), p.ncols()));
    for (r, &i) in nodes.iter().enumerate() {
        let sample = samples
            .get(i)
            .filter(|s| s.node == i)
            .ok_or_else(|| Error::InvalidArgument(format!("no neighbor sample for node {i}")))?;
        out.row_mut(r).assign(&neighbor_aggregate(sample, t, p));
    }
    Ok(out)
}

/// Pseudo-label rows for `unlabeled` nodes.
pub fn pseudo_labels(
    samples: &[NeighborSample],
    t: &DiffusionMatrix,
    p: ArrayView2<'_, f64>,
    unlabeled: &[usize],
) -> Result<Array2<f64>> {
    aggregate_rows(samples, t, p, unlabeled)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrigin {
    CorrectedLabeled,
    PseudoUnlabeled,
    Excluded,
}

/// Soft training targets for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatrix {
    pub rows: Array2<f64>,
    pub origin: Vec<RowOrigin>,
}

impl TargetMatrix {
    pub fn nodes_with(&self, origin: RowOrigin) -> Vec<usize> {
        self.origin
            .iter()
            .enumerate()
            .filter(|&(_, &o)| o == origin)
            .map(|(i, _)| i)
            .collect()
    }

    /// Loss weights: every corrected row counts 1, every pseudo row
    /// `pseudo_weight`, normalized to sum to 1. Excluded rows get 0.
    pub fn row_weights(&self, pseudo_weight: f64) -> Vec<f64> {
        let labeled = self.origin.iter().filter(|&&o| o == RowOrigin::CorrectedLabeled).count();
        let pseudo = self.origin.iter().filter(|&&o| o == RowOrigin::PseudoUnlabeled).count();
        let total = labeled as f64 + pseudo_weight * pseudo as f64;
        self.origin
            .iter()
            .map(|o| match o {
                RowOrigin::CorrectedLabeled => 1.0 / total,
                RowOrigin::PseudoUnlabeled => pseudo_weight / total,
                RowOrigin::Excluded => 0.0,
            })
            .collect()
    }
}

/// Places corrected rows at `labeled` nodes and pseudo rows at `unlabeled`
/// nodes of an `n`-node target matrix. `unlabeled` may be empty; pass
/// `pseudo = None` to exclude unlabeled nodes from the loss.
pub fn assemble_targets(
    n: usize,
    labeled: &[usize],
    corrected: ArrayView2<'_, f64>,
    unlabeled: &[usize],
    pseudo: Option<ArrayView2<'_, f64>>,
) -> Result<TargetMatrix> {
    if labeled.is_empty() {
        return Err(Error::InvalidArgument("at least one labeled node is required".into()));
    }
    if corrected.nrows() != labeled.len() {
        return Err(Error::InvalidArgument("corrected rows do not match labeled nodes".into()));
    }
    if let Some(p) = &pseudo {
        if p.nrows() != unlabeled.len() || p.ncols() != corrected.ncols() {
            return Err(Error::InvalidArgument("pseudo rows do not match unlabeled nodes".into()));
        }
    }
    let c = corrected.ncols();
    let mut rows = Array2::zeros((n, c));
    let mut origin: Vec<Option<RowOrigin>> = vec![None; n];
    let mut place = |i: usize, tag: RowOrigin| -> Result<()> {
        match origin.get_mut(i) {
            None => Err(Error::InvalidArgument(format!("node {i} outside [0, {n})"))),
            Some(Some(_)) => Err(Error::InvalidArgument(format!("node {i} assigned twice"))),
            Some(slot) => {
                *slot = Some(tag);
                Ok(())
            }
        }
    };
    for (r, &i) in labeled.iter().enumerate() {
        place(i, RowOrigin::CorrectedLabeled)?;
        rows.row_mut(i).assign(&corrected.row(r));
    }
    let unlabeled_tag = if pseudo.is_some() {
        RowOrigin::PseudoUnlabeled
    } else {
        RowOrigin::Excluded
    };
    for (r, &i) in unlabeled.iter().enumerate() {
        place(i, unlabeled_tag)?;
        if let Some(p) = &pseudo {
            rows.row_mut(i).assign(&p.row(r));
        }
    }
    let origin = origin
        .into_iter()
        .enumerate()
        .map(|(i, o)| o.ok_or_else(|| Error::InvalidArgument(format!("node {i} has no target"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(TargetMatrix { rows, origin })
}
