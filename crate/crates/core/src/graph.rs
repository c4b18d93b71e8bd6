//! Graph storage, symmetric adjacency normalization and KNN affinity graphs.

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView2};

use crate::{Error, Result};

/// Undirected attributed graph.
///
/// Each undirected edge is stored once as `(min, max)`; the edge list is kept
/// sorted, which makes every downstream construction order-independent.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    n_classes: usize,
}

impl Graph {
    /// Validates and builds a graph.
    ///
    /// Edges may be given in either orientation but an undirected pair may
    /// appear only once, and self-loops are rejected.
    pub fn new(
        n_nodes: usize,
        edges: Vec<(usize, usize)>,
        features: Array2<f64>,
        n_classes: usize,
    ) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        if features.nrows() != n_nodes {
            return Err(Error::InvalidGraph(format!(
                "feature matrix has {} rows, expected {}",
                features.nrows(),
                n_nodes
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidGraph("feature dimension must be >= 1".into()));
        }
        if n_classes < 2 {
            return Err(Error::InvalidGraph(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in &edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) references a node outside [0, {n_nodes})"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop on node {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self {
            n_nodes,
            edges: seen.into_iter().collect(),
            features,
            n_classes,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Canonical `(min, max)` edge list, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Returns a copy with every feature row divided by its L1 norm.
    /// Rows summing to zero are left untouched.
    pub fn with_row_normalized_features(&self) -> Self {
        let mut g = self.clone();
        for mut row in g.features.rows_mut() {
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            if s > 0.0 {
                row.mapv_inplace(|v| v / s);
            }
        }
        g
    }

    /// Degrees without self-loops.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_nodes];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }
}

/// Symmetrically normalized adjacency with self-loops,
/// `D̃^{-1/2} (A + I) D̃^{-1/2}`, in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Normalizes the adjacency of `graph`.
pub fn normalize_adjacency(graph: &Graph) -> Result<NormalizedAdjacency> {
    NormalizedAdjacency::from_edges(graph.n_nodes(), graph.edges())
}

impl NormalizedAdjacency {
    /// Builds `D̃^{-1/2} (A + I) D̃^{-1/2}` from an undirected edge list over
    /// `n` nodes. Every pair must appear once, without self-loops.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("cannot normalize an empty graph".into()));
        }
        let mut neighbors: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidGraph(format!("bad edge ({i}, {j}) for n = {n}")));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        let deg: Vec<f64> = neighbors.iter().map(|nb| nb.len() as f64).collect();

        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n + 2 * edges.len());
        let mut values = Vec::with_capacity(n + 2 * edges.len());
        indptr.push(0);
        for (i, nb) in neighbors.iter_mut().enumerate() {
            nb.sort_unstable();
            for &j in nb.iter() {
                indices.push(j);
                values.push(1.0 / (deg[i] * deg[j]).sqrt());
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n,
            indptr,
            indices,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// Sparse-dense product `Â · rhs`.
    pub fn matmul(&self, rhs: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.n, "dimension mismatch in Â · X");
        let mut out = Array2::zeros((self.n, rhs.ncols()));
        for i in 0..self.n {
            let mut out_row = out.row_mut(i);
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &rhs.row(j));
            }
        }
        out
    }

    /// Dense `Ã` row-normalized (`D̃^{-1} (A + I)`), used when the adjacency
    /// stands in for the diffusion matrix.
    pub fn row_normalized_self_loop_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            let deg = (self.indptr[i + 1] - self.indptr[i]) as f64;
            for (j, _) in self.row(i) {
                out[[i, j]] = 1.0 / deg;
            }
        }
        out
    }
}

/// Binary symmetric KNN graph over `L` node representations.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    neighbors: Vec<Vec<usize>>,
    k: usize,
}

impl AffinityGraph {
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Sorted neighbor list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for (i, nb) in self.neighbors.iter().enumerate() {
            edges.extend(nb.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        edges
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n();
        let mut out = Array2::zeros((n, n));
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                out[[i, j]] = 1.0;
            }
        }
        out
    }

    pub fn normalized(&self) -> Result<NormalizedAdjacency> {
        NormalizedAdjacency::from_edges(self.n(), &self.edges())
    }
}

/// Cosine similarity between two rows; zero-norm rows are similar to nothing.
fn cosine(a: &[f64], b: &[f64], norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (norm_a * norm_b)
}

/// Connects every row to its `k` most cosine-similar other rows and
/// symmetrizes by union. Ties go to the lower index.
pub fn build_knn_affinity(representations: ArrayView2<'_, f64>, k: usize) -> Result<AffinityGraph> {
    let l = representations.nrows();
    if k == 0 || k >= l {
        return Err(Error::InvalidArgument(format!(
            "knn needs 1 <= k < L, got k = {k}, L = {l}"
        )));
    }
    if representations.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in knn input".into()));
    }
    let rows: Vec<Vec<f64>> = representations.rows().into_iter().map(|r| r.to_vec()).collect();
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); l];
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(l - 1);
    for i in 0..l {
        scored.clear();
        scored.extend(
            (0..l)
                .filter(|&j| j != i)
                .map(|j| (cosine(&rows[i], &rows[j], norms[i], norms[j]), j)),
        );
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, j) in scored.iter().take(k) {
            adjacency[i].insert(j);
            adjacency[j].insert(i);
        }
    }
    Ok(AffinityGraph {
        neighbors: adjacency.into_iter().map(|s| s.into_iter().collect()).collect(),
        k,
    })
}
