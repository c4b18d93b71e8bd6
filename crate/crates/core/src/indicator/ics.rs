use ndarray::Array2;
use serde::Serialize;

use crate::diffusion::DiffusionMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IcsLevel {
    Structure,
    Attribute,
    Fused,
}

/// One score per labeled node, in labeled order.
#[derive(Debug, Clone, PartialEq)]
pub struct IcsVector {
    values: Vec<f64>,
    level: IcsLevel,
}

impl IcsVector {
    pub fn new(values: Vec<f64>, level: IcsLevel) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Numeric(format!("ICS values must be finite and >= 0, got {v}")));
        }
        Ok(Self { values, level })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn level(&self) -> IcsLevel {
        self.level
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Labeled positions grouped by their (possibly noisy) annotated class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassIndexSets {
    sets: Vec<Vec<usize>>,
    label_of: Vec<usize>,
}

impl ClassIndexSets {
    pub fn n_classes(&self) -> usize {
        self.sets.len()
    }

    pub fn n_labeled(&self) -> usize {
        self.label_of.len()
    }

    /// Positions annotated with class `c`, ascending.
    pub fn members(&self, c: usize) -> &[usize] {
        &self.sets[c]
    }

    pub fn label_of(&self, position: usize) -> usize {
        self.label_of[position]
    }
}

pub fn class_index_sets(noisy_labels: &[usize], n_classes: usize) -> Result<ClassIndexSets> {
    let mut sets = vec![Vec::new(); n_classes];
    for (pos, &y) in noisy_labels.iter().enumerate() {
        if y >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label {y} at position {pos} is outside [0, {n_classes})"
            )));
        }
        sets[y].push(pos);
    }
    Ok(ClassIndexSets {
        sets,
        label_of: noisy_labels.to_vec(),
    })
}

/// Shared kernel: `Σ_{j≠y_i} mean_{k∈C_j} M[g(k), g(i)]`, empty classes
/// contributing nothing.
fn contradiction(matrix: &Array2<f64>, sets: &ClassIndexSets, global: impl Fn(usize) -> usize) -> Vec<f64> {
    let l = sets.n_labeled();
    // class_mean[j][i] = mean over k in C_j of M[g(k), g(i)]
    let mut class_mean = vec![vec![0.0; l]; sets.n_classes()];
    for (j, means) in class_mean.iter_mut().enumerate() {
        let members = sets.members(j);
        if members.is_empty() {
            continue;
        }
        let inv = 1.0 / members.len() as f64;
        for &k in members {
            let row = matrix.row(global(k));
            for (i, m) in means.iter_mut().enumerate() {
                *m += row[global(i)];
            }
        }
        means.iter_mut().for_each(|m| *m *= inv);
    }
    (0..l)
        .map(|i| {
            let own = sets.label_of(i);
            class_mean
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != own)
                .map(|(_, means)| means[i])
                .sum()
        })
        .collect()
}

/// Structure-level score over the full-graph diffusion `T`; `labeled_ids[p]`
/// is the node id of labeled position `p`.
pub fn structure_ics(t: &DiffusionMatrix, sets: &ClassIndexSets, labeled_ids: &[usize]) -> Result<IcsVector> {
    if labeled_ids.len() != sets.n_labeled() {
        return Err(Error::InvalidArgument(format!(
            "{} labeled ids for {} labeled nodes",
            labeled_ids.len(),
            sets.n_labeled()
        )));
    }
    let mut seen = std::collections::HashSet::with_capacity(labeled_ids.len());
    for &g in labeled_ids {
        if g >= t.n() {
            return Err(Error::InvalidArgument(format!("labeled id {g} outside diffusion matrix")));
        }
        if !seen.insert(g) {
            return Err(Error::InvalidArgument(format!("labeled id {g} repeated")));
        }
    }
    IcsVector::new(contradiction(t.matrix(), sets, |p| labeled_ids[p]), IcsLevel::Structure)
}

/// Attribute-level score over the labeled-only diffusion `R`.
pub fn attribute_ics(r: &DiffusionMatrix, sets: &ClassIndexSets) -> Result<IcsVector> {
    if r.n() != sets.n_labeled() {
        return Err(Error::InvalidArgument(format!(
            "attribute diffusion is {}×{}, expected {} labeled nodes",
            r.n(),
            r.n(),
            sets.n_labeled()
        )));
    }
    IcsVector::new(contradiction(r.matrix(), sets, |p| p), IcsLevel::Attribute)
}

/// `(1−α)·structure + α·attribute`.
pub fn fuse_ics(structure: &IcsVector, attribute: &IcsVector, alpha: f64) -> Result<IcsVector> {
    if structure.len() != attribute.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot fuse ICS vectors of lengths {} and {}",
            structure.len(),
            attribute.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let values = structure
        .values()
        .iter()
        .zip(attribute.values())
        .map(|(s, a)| (1.0 - alpha) * s + alpha * a)
        .collect();
    IcsVector::new(values, IcsLevel::Fused)
}
