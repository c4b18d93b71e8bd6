//! Personalized PageRank diffusion.
//!
//! `T = ε (I − (1−ε) Â)^{-1}`: row `k` of `T` is the influence distribution
//! node `k` exerts on every other node. The same construction over the
//! normalized KNN affinity graph gives the attribute-level matrix `R`.

use ndarray::{Array2, ArrayView1};
use serde::Serialize;

use crate::graph::NormalizedAdjacency;
use crate::linalg::spd_inverse;
use crate::{Error, Result};

/// Default teleport probability.
pub const DEFAULT_TELEPORT: f64 = 0.85;

/// Largest system the dense solve accepts unless the caller raises the cap.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Which graph a diffusion matrix was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionSource {
    /// The input graph.
    Structure,
    /// The KNN affinity graph over labeled representations.
    Attribute,
    /// Row-normalized `A + I`, standing in for `T` in the adjacency ablation.
    Adjacency,
}

/// Dense nonnegative diffusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    matrix: Array2<f64>,
    teleport: f64,
    source: DiffusionSource,
}

impl DiffusionMatrix {
    /// Wraps an arbitrary nonnegative square matrix. Tiny negative values
    /// (floating-point dust above `-1e-12`) are clamped to zero.
    pub fn from_matrix(mut matrix: Array2<f64>, teleport: f64, source: DiffusionSource) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidArgument("diffusion matrix must be square".into()));
        }
        for v in matrix.iter_mut() {
            if !v.is_finite() {
                return Err(Error::Numeric("non-finite entry in diffusion matrix".into()));
            }
            if *v < 0.0 {
                if *v < -1e-12 {
                    return Err(Error::Numeric(format!("negative diffusion entry {v}")));
                }
                *v = 0.0;
            }
        }
        Ok(Self {
            matrix,
            teleport,
            source,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn teleport(&self) -> f64 {
        self.teleport
    }

    pub fn source(&self) -> DiffusionSource {
        self.source
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Entry `(k, i)`: influence of node `k` on node `i`.
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.matrix[[k, i]]
    }
}

/// Diffusion matrix whose rows are probability distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStochasticDiffusion {
    matrix: Array2<f64>,
}

impl RowStochasticDiffusion {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.matrix.row(i)
    }
}

fn check_teleport(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "teleport probability must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Exact PPR diffusion by a dense solve, tagged as structural.
pub fn ppr_diffusion(adj: &NormalizedAdjacency, epsilon: f64) -> Result<DiffusionMatrix> {
    ppr_diffusion_with(adj, epsilon, DiffusionSource::Structure, DEFAULT_DENSE_CAP)
}

/// Exact PPR diffusion with an explicit source tag and dense-size cap.
///
/// `I − (1−ε)Â` is symmetric with spectrum in `[ε, 2−ε]`, so it is factored
/// by Cholesky. The result is checked against the sparse system: an error is
/// returned if `max |(I − (1−ε)Â) T − εI|` exceeds `1e-8`.
pub fn ppr_diffusion_with(
    adj: &NormalizedAdjacency,
    epsilon: f64,
    source: DiffusionSource,
    dense_cap: usize,
) -> Result<DiffusionMatrix> {
    check_teleport(epsilon)?;
    let n = adj.n();
    if n > dense_cap {
        return Err(Error::InvalidArgument(format!(
            "graph has {n} nodes, above the dense diffusion cap of {dense_cap}"
        )));
    }
    let decay = 1.0 - epsilon;
    let mut system = Array2::<f64>::eye(n);
    for i in 0..n {
        for (j, v) in adj.row(i) {
            system[[i, j]] -= decay * v;
        }
    }
    let mut t = spd_inverse(system)?;
    t.mapv_inplace(|v| epsilon * v);

    // residual (I − (1−ε)Â) T − εI through the sparse operator
    let propagated = adj.matmul(t.view());
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let lhs = t[[i, j]] - decay * propagated[[i, j]];
            let rhs = if i == j { epsilon } else { 0.0 };
            residual = residual.max((lhs - rhs).abs());
        }
    }
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Numeric(format!(
            "diffusion solve residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e}"
        )));
    }
    clamp_dust(&mut t);
    DiffusionMatrix::from_matrix(t, epsilon, source)
}

fn clamp_dust(m: &mut Array2<f64>) {
    m.mapv_inplace(|v| if v < 0.0 && v > -1e-12 { 0.0 } else { v });
}

/// Truncated Neumann series `ε Σ_k (1−ε)^k Â^k`, stopping once the
/// geometric tail bound `(1−ε)^{k+1} / ε` drops below `tol`.
///
/// Shares no code with [`ppr_diffusion`]; it exists to cross-check it.
pub fn ppr_power_series(adj: &NormalizedAdjacency, epsilon: f64, tol: f64) -> Result<DiffusionMatrix> {
    check_teleport(epsilon)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = adj.n();
    let decay = 1.0 - epsilon;
    let mut power = Array2::<f64>::eye(n);
    let mut sum = Array2::<f64>::zeros((n, n));
    let mut coeff = epsilon;
    let mut tail = decay;
    loop {
        sum.scaled_add(coeff, &power);
        if tail / epsilon < tol {
            break;
        }
        power = adj.matmul(power.view());
        coeff *= decay;
        tail *= decay;
    }
    clamp_dust(&mut sum);
    DiffusionMatrix::from_matrix(sum, epsilon, DiffusionSource::Structure)
}

/// Divides each row by its sum.
pub fn row_normalize(diff: &DiffusionMatrix) -> Result<RowStochasticDiffusion> {
    let mut matrix = diff.matrix().clone();
    for (i, mut row) in matrix.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|v| v.max(0.0));
        let s = row.sum();
        if !(s > 0.0) {
            return Err(Error::Numeric(format!("row {i} of the diffusion matrix sums to {s}")));
        }
        row.mapv_inplace(|v| v / s);
    }
    Ok(RowStochasticDiffusion { matrix })
}

/// Stand-in for `T` in the adjacency ablation: row-normalized `A + I`.
pub fn adjacency_diffusion(adj: &NormalizedAdjacency) -> Result<DiffusionMatrix> {
    DiffusionMatrix::from_matrix(adj.row_normalized_self_loop_dense(), 1.0, DiffusionSource::Adjacency)
}
