//! Dynamic multiplex graph model and the doubly unfolded block matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sparse::{CsrMatrix, LinearOperator, SparseOperator};

/// `K x T` collection of binary `n x n` adjacency matrices over a shared node set.
///
/// Block `(k, t)` is stored at `k * T + t`. Every slot is present; quiet
/// layers or periods are empty matrices. Diagonals are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicMultiplexGraph {
    n: usize,
    layers: usize,
    times: usize,
    directed: bool,
    blocks: Vec<CsrMatrix>,
    pub node_labels: Option<Vec<String>>,
    pub layer_labels: Option<Vec<String>>,
    pub time_labels: Option<Vec<String>>,
}

impl DynamicMultiplexGraph {
    /// Builds a graph from `(k, t, i, j)` edges. Duplicate edges collapse.
    ///
    /// Self loops and out-of-range indices are rejected; for undirected graphs
    /// every `(i, j)` must be accompanied by `(j, i)`.
    pub fn from_edges(
        n: usize,
        layers: usize,
        times: usize,
        directed: bool,
        edges: impl IntoIterator<Item = (usize, usize, usize, usize)>,
    ) -> Result<Self> {
        if n == 0 || layers == 0 || times == 0 {
            return Err(Error::InvalidGraph(format!(
                "n, K and T must be positive (got {n}, {layers}, {times})"
            )));
        }
        let mut per_block: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layers * times];
        for (k, t, i, j) in edges {
            if k >= layers || t >= times || i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({k}, {t}, {i}, {j}) out of range for n={n}, K={layers}, T={times}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!(
                    "self loop on node {i} in block ({k}, {t})"
                )));
            }
            per_block[k * times + t].push((i, j));
        }
        let blocks = per_block
            .into_iter()
            .map(|e| CsrMatrix::from_pattern(n, n, e))
            .collect();
        Self::from_blocks(n, layers, times, directed, blocks)
    }

    /// Assembles a graph from prebuilt blocks in `k * T + t` order.
    pub fn from_blocks(
        n: usize,
        layers: usize,
        times: usize,
        directed: bool,
        blocks: Vec<CsrMatrix>,
    ) -> Result<Self> {
        if blocks.len() != layers * times {
            return Err(Error::InvalidGraph(format!(
                "expected {} blocks, got {}",
                layers * times,
                blocks.len()
            )));
        }
        for (idx, b) in blocks.iter().enumerate() {
            let (k, t) = (idx / times, idx % times);
            if b.shape() != (n, n) {
                return Err(Error::InvalidGraph(format!(
                    "block ({k}, {t}) has shape {:?}, expected ({n}, {n})",
                    b.shape()
                )));
            }
            if !b.is_binary() {
                return Err(Error::InvalidGraph(format!("block ({k}, {t}) is not binary")));
            }
            if (0..n).any(|i| b.get(i, i) != 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "block ({k}, {t}) has a nonzero diagonal"
                )));
            }
            if !directed && b.iter().any(|(i, j, _)| b.get(j, i) == 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "undirected graph has an asymmetric block ({k}, {t})"
                )));
            }
        }
        Ok(Self {
            n,
            layers,
            times,
            directed,
            blocks,
            node_labels: None,
            layer_labels: None,
            time_labels: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn times(&self) -> usize {
        self.times
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Adjacency matrix `A^{k,t}` (0-based indices).
    pub fn block(&self, k: usize, t: usize) -> &CsrMatrix {
        &self.blocks[k * self.times + t]
    }

    pub fn edge_count(&self) -> usize {
        self.blocks.iter().map(|b| b.nnz()).sum()
    }

    /// All edges as `(k, t, i, j)` in block-major, row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        self.blocks.iter().enumerate().flat_map(move |(idx, b)| {
            let (k, t) = (idx / self.times, idx % self.times);
            b.iter().map(move |(i, j, _)| (k, t, i, j))
        })
    }

    pub fn with_labels(
        mut self,
        nodes: Option<Vec<String>>,
        layers: Option<Vec<String>>,
        times: Option<Vec<String>>,
    ) -> Result<Self> {
        let check = |labels: &Option<Vec<String>>, len: usize, what: &str| -> Result<()> {
            match labels {
                Some(l) if l.len() != len => Err(Error::InvalidGraph(format!(
                    "{what} label count {} does not match {len}",
                    l.len()
                ))),
                _ => Ok(()),
            }
        };
        check(&nodes, self.n, "node")?;
        check(&layers, self.layers, "layer")?;
        check(&times, self.times, "time")?;
        self.node_labels = nodes;
        self.layer_labels = layers;
        self.time_labels = times;
        Ok(self)
    }

    /// Node label, falling back to the index.
    pub fn node_label(&self, i: usize) -> String {
        label_or_index(&self.node_labels, i)
    }

    pub fn layer_label(&self, k: usize) -> String {
        label_or_index(&self.layer_labels, k)
    }

    pub fn time_label(&self, t: usize) -> String {
        label_or_index(&self.time_labels, t)
    }
}

pub(crate) fn label_or_index(labels: &Option<Vec<String>>, i: usize) -> String {
    labels
        .as_ref()
        .map_or_else(|| i.to_string(), |l| l[i].clone())
}

/// Storage behind an [`UnfoldedMatrix`].
#[derive(Debug, Clone)]
pub enum UnfoldedData {
    Sparse(SparseOperator),
    Dense(DMatrix<f64>),
}

/// The `nK x nT` block matrix whose block `(k, t)` is `A^{k,t}` (or `P^{k,t}`).
#[derive(Debug, Clone)]
pub struct UnfoldedMatrix {
    n: usize,
    layers: usize,
    times: usize,
    data: UnfoldedData,
}

impl UnfoldedMatrix {
    /// Wraps a dense `nK x nT` matrix, e.g. an expected probability matrix.
    pub fn from_dense(n: usize, layers: usize, times: usize, m: DMatrix<f64>) -> Result<Self> {
        if m.shape() != (n * layers, n * times) {
            return Err(Error::DimensionMismatch(format!(
                "dense unfolding has shape {:?}, expected ({}, {})",
                m.shape(),
                n * layers,
                n * times
            )));
        }
        Ok(Self {
            n,
            layers,
            times,
            data: UnfoldedData::Dense(m),
        })
    }

    pub fn block_shape(&self) -> (usize, usize, usize) {
        (self.n, self.layers, self.times)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n * self.layers, self.n * self.times)
    }

    pub fn data(&self) -> &UnfoldedData {
        &self.data
    }

    pub fn nnz(&self) -> usize {
        match &self.data {
            UnfoldedData::Sparse(op) => op.matrix().nnz(),
            UnfoldedData::Dense(m) => m.iter().filter(|v| **v != 0.0).count(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match &self.data {
            UnfoldedData::Sparse(op) => op.matrix().get(r, c),
            UnfoldedData::Dense(m) => m[(r, c)],
        }
    }

    /// Dense copy of block `(k, t)`.
    pub fn block(&self, k: usize, t: usize) -> DMatrix<f64> {
        let n = self.n;
        match &self.data {
            UnfoldedData::Dense(m) => m.view((k * n, t * n), (n, n)).into_owned(),
            UnfoldedData::Sparse(op) => {
                let mut out = DMatrix::zeros(n, n);
                for i in 0..n {
                    for (c, v) in op.matrix().row(k * n + i) {
                        if c >= t * n && c < (t + 1) * n {
                            out[(i, c - t * n)] = v;
                        }
                    }
                }
                out
            }
        }
    }

    /// Rows (left side) and columns (right side) of the unfolding with no nonzeros.
    pub fn zero_lines(&self) -> (Vec<usize>, Vec<usize>) {
        match &self.data {
            UnfoldedData::Sparse(op) => (
                op.matrix().empty_rows(),
                op.matrix().transpose().empty_rows(),
            ),
            UnfoldedData::Dense(m) => (
                (0..m.nrows())
                    .filter(|&r| m.row(r).iter().all(|v| *v == 0.0))
                    .collect(),
                (0..m.ncols())
                    .filter(|&c| m.column(c).iter().all(|v| *v == 0.0))
                    .collect(),
            ),
        }
    }
}

impl LinearOperator for UnfoldedMatrix {
    fn nrows(&self) -> usize {
        self.n * self.layers
    }
    fn ncols(&self) -> usize {
        self.n * self.times
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.data {
            UnfoldedData::Sparse(op) => op.apply(x, y),
            UnfoldedData::Dense(m) => m.apply(x, y),
        }
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        match &self.data {
            UnfoldedData::Sparse(op) => op.apply_transpose(x, y),
            UnfoldedData::Dense(m) => m.apply_transpose(x, y),
        }
    }
    fn to_dense(&self) -> DMatrix<f64> {
        match &self.data {
            UnfoldedData::Sparse(op) => op.to_dense(),
            UnfoldedData::Dense(m) => m.clone(),
        }
    }
}

/// Arranges the adjacency matrices into the doubly unfolded matrix
/// (layers down the rows, time points across the columns).
pub fn build_unfolded(graph: &DynamicMultiplexGraph) -> UnfoldedMatrix {
    let (n, layers, times) = (graph.n, graph.layers, graph.times);
    let nnz = graph.edge_count();
    let mut row_ptr = Vec::with_capacity(n * layers + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for k in 0..layers {
        for i in 0..n {
            for t in 0..times {
                let offset = (t * n) as u32;
                col_idx.extend(graph.block(k, t).row_indices(i).map(|j| j as u32 + offset));
            }
            row_ptr.push(col_idx.len());
        }
    }
    let csr = CsrMatrix::from_raw(n * layers, n * times, row_ptr, col_idx, None);
    UnfoldedMatrix {
        n,
        layers,
        times,
        data: UnfoldedData::Sparse(SparseOperator::new(csr)),
    }
}

fn unstack(m: &DMatrix<f64>, n: usize, count: usize, what: &str) -> Result<Vec<DMatrix<f64>>> {
    if n == 0 || m.nrows() % n != 0 || m.nrows() / n != count {
        return Err(Error::DimensionMismatch(format!(
            "cannot split {} rows into {count} {what} blocks of {n}",
            m.nrows()
        )));
    }
    Ok((0..count)
        .map(|b| m.rows(b * n, n).into_owned())
        .collect())
}

/// Splits an `nK x d` left embedding into `K` blocks of `n x d`.
pub fn unstack_left(m: &DMatrix<f64>, n: usize, layers: usize) -> Result<Vec<DMatrix<f64>>> {
    unstack(m, n, layers, "layer")
}

/// Splits an `nT x d` right embedding into `T` blocks of `n x d`.
pub fn unstack_right(m: &DMatrix<f64>, n: usize, times: usize) -> Result<Vec<DMatrix<f64>>> {
    unstack(m, n, times, "time")
}

/// Inverse of the unstack operations.
pub fn restack(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    linalg::vstack(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_concat_oracle(graph: &DynamicMultiplexGraph) -> DMatrix<f64> {
        let n = graph.n();
        let mut out = DMatrix::zeros(n * graph.layers(), n * graph.times());
        for k in 0..graph.layers() {
            for t in 0..graph.times() {
                let b = graph.block(k, t).to_dense();
                out.view_mut((k * n, t * n), (n, n)).copy_from(&b);
            }
        }
        out
    }

    #[test]
    fn single_block_unfolding_is_identity() {
        let g = DynamicMultiplexGraph::from_edges(3, 1, 1, true, [(0, 0, 0, 1), (0, 0, 2, 0)])
            .unwrap();
        let u = build_unfolded(&g);
        assert_eq!(u.to_dense(), g.block(0, 0).to_dense());
    }

    #[test]
    fn scalar_blocks_layout() {
        // n = 1 forces empty blocks (no self loops), so use the dense path for the layout check.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let u = UnfoldedMatrix::from_dense(1, 2, 2, m).unwrap();
        assert_eq!(u.block(0, 1)[(0, 0)], 2.0);
        assert_eq!(u.block(1, 0)[(0, 0)], 3.0);
        let g = DynamicMultiplexGraph::from_edges(1, 2, 2, true, []).unwrap();
        assert_eq!(build_unfolded(&g).to_dense(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn nnz_matches_dense_concatenation() {
        let edges = [
            (0, 0, 0, 1),
            (0, 2, 1, 0),
            (1, 1, 0, 1),
            (1, 1, 1, 0),
            (1, 2, 0, 1),
            (0, 1, 1, 0),
        ];
        let g = DynamicMultiplexGraph::from_edges(2, 2, 3, true, edges).unwrap();
        let u = build_unfolded(&g);
        let oracle = dense_concat_oracle(&g);
        assert_eq!(u.nnz(), g.edge_count());
        assert_eq!(u.nnz(), oracle.iter().filter(|v| **v != 0.0).count());
        assert_eq!(u.to_dense(), oracle);
    }

    #[test]
    fn rejects_self_loops_and_asymmetry() {
        assert!(DynamicMultiplexGraph::from_edges(2, 1, 1, true, [(0, 0, 1, 1)]).is_err());
        assert!(DynamicMultiplexGraph::from_edges(2, 1, 1, false, [(0, 0, 0, 1)]).is_err());
        assert!(
            DynamicMultiplexGraph::from_edges(2, 1, 1, false, [(0, 0, 0, 1), (0, 0, 1, 0)]).is_ok()
        );
    }

    #[test]
    fn unstack_examples() {
        let m = DMatrix::from_row_slice(4, 2, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        let single = unstack_left(&m, 4, 1).unwrap();
        assert_eq!(single, vec![m.clone()]);
        let blocks = unstack_left(&m, 2, 2).unwrap();
        assert_eq!(blocks[0], DMatrix::from_row_slice(2, 2, &[1., 2., 3., 4.]));
        assert_eq!(blocks[1], DMatrix::from_row_slice(2, 2, &[5., 6., 7., 8.]));
        let right = unstack_right(&DMatrix::zeros(6, 2), 3, 2).unwrap();
        assert_eq!(right.len(), 2);
        assert_eq!(right[1].shape(), (3, 2));
        assert!(matches!(
            unstack_left(&m, 3, 1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    fn arb_graph() -> impl Strategy<Value = DynamicMultiplexGraph> {
        (1usize..6, 1usize..4, 1usize..4, any::<bool>()).prop_flat_map(|(n, k, t, directed)| {
            proptest::collection::vec((0..k, 0..t, 0..n, 0..n), 0..40).prop_map(move |raw| {
                let mut edges = Vec::new();
                for (kk, tt, i, j) in raw {
                    if i != j {
                        edges.push((kk, tt, i, j));
                        if !directed {
                            edges.push((kk, tt, j, i));
                        }
                    }
                }
                DynamicMultiplexGraph::from_edges(n, k, t, directed, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn unfolding_round_trips_every_block(g in arb_graph()) {
            let u = build_unfolded(&g);
            prop_assert_eq!(u.nnz(), g.edge_count());
            for k in 0..g.layers() {
                for t in 0..g.times() {
                    let b = u.block(k, t);
                    prop_assert_eq!(&b, &g.block(k, t).to_dense());
                    if !g.is_directed() {
                        prop_assert_eq!(&b.transpose(), &b);
                    }
                }
            }
        }

        #[test]
        fn restack_inverts_unstack(n in 1usize..5, k in 1usize..4, d in 1usize..4, seed in any::<u64>()) {
            let m = DMatrix::from_fn(n * k, d, |r, c| ((seed as f64 + 1.0) * (r * 7 + c * 3) as f64).sin());
            let left = unstack_left(&m, n, k).unwrap();
            prop_assert_eq!(restack(&left).unwrap(), m.clone());
            let right = unstack_right(&m, n, k).unwrap();
            prop_assert_eq!(restack(&right).unwrap(), m);
        }
    }
}
