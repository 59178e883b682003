//! Iso-mirror curves: pairwise block distances, classical MDS, and a
//! one-dimensional ISOMAP over the minimal connected nearest-neighbor graph.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::procrustes_align;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// `n^{-1/2} ||A - B||`.
    #[default]
    Direct,
    /// `n^{-1/2} min_Q ||A - B Q||` over orthogonal `Q`.
    Procrustes,
}

impl std::str::FromStr for DistanceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(DistanceMode::Direct),
            "procrustes" => Ok(DistanceMode::Procrustes),
            other => Err(Error::InvalidArgument(format!("unknown distance mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockNorm {
    #[default]
    Spectral,
    Frobenius,
}

impl std::str::FromStr for BlockNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(BlockNorm::Spectral),
            "frobenius" => Ok(BlockNorm::Frobenius),
            other => Err(Error::InvalidArgument(format!("unknown norm `{other}`"))),
        }
    }
}

impl BlockNorm {
    fn apply(self, m: &DMatrix<f64>) -> f64 {
        match self {
            BlockNorm::Spectral => linalg::spectral_norm(m),
            BlockNorm::Frobenius => m.norm(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsoMirrorResult {
    pub distance_matrix: Vec<Vec<f64>>,
    pub cmds_coords: Vec<Vec<f64>>,
    pub knn_k: usize,
    pub curve: Vec<f64>,
    /// Index whose curve value is forced to be nonpositive.
    pub orientation_anchor: usize,
    pub mode: DistanceMode,
    pub norm: BlockNorm,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

impl IsoMirrorResult {
    pub fn distances(&self) -> DMatrix<f64> {
        let s = self.distance_matrix.len();
        DMatrix::from_fn(s, s, |i, j| self.distance_matrix[i][j])
    }
}

/// Symmetric matrix of `n^{-1/2}`-scaled distances between blocks. In
/// procrustes mode the rotation is the Frobenius-optimal one and the
/// chosen norm is evaluated at it.
pub fn pairwise_block_distances(blocks: &[DMatrix<f64>], mode: DistanceMode, norm: BlockNorm) -> Result<DMatrix<f64>> {
    let s = blocks.len();
    if s == 0 {
        return Err(Error::InvalidArgument("no blocks to compare".into()));
    }
    let shape = blocks[0].shape();
    if let Some(b) = blocks.iter().find(|b| b.shape() != shape) {
        return Err(Error::DimensionMismatch(format!(
            "blocks of shape {:?} and {:?}",
            shape,
            b.shape()
        )));
    }
    let scale = 1.0 / (shape.0 as f64).sqrt();
    let pairs: Vec<(usize, usize)> = (0..s).flat_map(|i| (i + 1..s).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let diff = match mode {
                DistanceMode::Direct => &blocks[i] - &blocks[j],
                DistanceMode::Procrustes => {
                    let map = procrustes_align(&blocks[i], &blocks[j])?;
                    &blocks[i] - &blocks[j] * &map.w
                }
            };
            Ok(scale * norm.apply(&diff))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut d = DMatrix::zeros(s, s);
    for (&(i, j), v) in pairs.iter().zip(values) {
        d[(i, j)] = v;
        d[(j, i)] = v;
    }
    Ok(d)
}

/// Classical multidimensional scaling into `c` dimensions. Negative
/// eigenvalues of the double-centered matrix are clamped to zero.
pub fn cmds(d: &DMatrix<f64>, c: usize) -> Result<DMatrix<f64>> {
    let s = d.nrows();
    if d.ncols() != s {
        return Err(Error::DimensionMismatch("distance matrix must be square".into()));
    }
    if c == 0 || c >= s {
        return Err(Error::InvalidArgument(format!(
            "cmds dimension {c} must be in 1..{s}"
        )));
    }
    let j = DMatrix::<f64>::identity(s, s) - DMatrix::from_element(s, s, 1.0 / s as f64);
    let sq = d.map(|v| v * v);
    let b = &j * sq * &j * -0.5;
    let b = (&b + b.transpose()) * 0.5;
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[y]
            .partial_cmp(&eig.eigenvalues[x])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    let mut coords = DMatrix::zeros(s, c);
    for (col, &idx) in order.iter().take(c).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda < 0.0 {
            log::warn!("cmds: clamping negative eigenvalue {lambda:e} to zero");
        }
        let root = lambda.max(0.0).sqrt();
        coords.set_column(col, &(eig.eigenvectors.column(idx) * root));
    }
    let most_negative = eig.eigenvalues.iter().cloned().fold(0.0, f64::min);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if most_negative < -1e-10 * top.max(f64::MIN_POSITIVE) {
        log::warn!("cmds: distances are not Euclidean (eigenvalue {most_negative:e})");
    }
    linalg::fix_column_signs(&mut coords, &mut []);
    Ok(coords)
}

/// Symmetrized k-nearest-neighbor graph with the smallest `k` that connects it.
#[derive(Debug, Clone)]
pub struct KnnGraph {
    pub k: usize,
    /// Euclidean edge lengths; `None` where there is no edge.
    pub edges: Vec<Vec<Option<f64>>>,
}

fn euclidean(points: &DMatrix<f64>) -> DMatrix<f64> {
    let s = points.nrows();
    DMatrix::from_fn(s, s, |i, j| (points.row(i) - points.row(j)).norm())
}

fn is_connected(adj: &[Vec<bool>]) -> bool {
    let s = adj.len();
    let mut seen = vec![false; s];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for (u, &e) in adj[v].iter().enumerate() {
            if e && !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.iter().all(|&x| x)
}

pub fn minimal_connected_knn(points: &DMatrix<f64>) -> Result<KnnGraph> {
    let s = points.nrows();
    if s < 2 {
        return Err(Error::InsufficientPoints { needed: 1, got: s });
    }
    let dist = euclidean(points);
    let ranked: Vec<Vec<usize>> = (0..s)
        .map(|i| {
            let mut others: Vec<usize> = (0..s).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                dist[(i, a)]
                    .partial_cmp(&dist[(i, b)])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            others
        })
        .collect();
    let mut adj = vec![vec![false; s]; s];
    for k in 1..s {
        for i in 0..s {
            let j = ranked[i][k - 1];
            adj[i][j] = true;
            adj[j][i] = true;
        }
        if is_connected(&adj) {
            let edges = (0..s)
                .map(|i| (0..s).map(|j| adj[i][j].then(|| dist[(i, j)])).collect())
                .collect();
            return Ok(KnnGraph { k, edges });
        }
    }
    unreachable!("the complete graph is connected")
}

/// All-pairs shortest paths (Floyd-Warshall) over the graph edges.
pub fn geodesic_distances(graph: &KnnGraph) -> DMatrix<f64> {
    let s = graph.edges.len();
    let mut g = DMatrix::from_fn(s, s, |i, j| {
        if i == j {
            0.0
        } else {
            graph.edges[i][j].unwrap_or(f64::INFINITY)
        }
    });
    for m in 0..s {
        for i in 0..s {
            let im = g[(i, m)];
            if im == f64::INFINITY {
                continue;
            }
            for j in 0..s {
                let cand = im + g[(m, j)];
                if cand < g[(i, j)] {
                    g[(i, j)] = cand;
                }
            }
        }
    }
    g
}

/// One-dimensional ISOMAP coordinates with the first value nonpositive.
/// Returns the curve and the neighborhood size used.
pub fn isomap_1d(points: &DMatrix<f64>) -> Result<(Vec<f64>, usize)> {
    let graph = minimal_connected_knn(points)?;
    let geo = geodesic_distances(&graph);
    let coords = cmds(&geo, 1)?;
    let mut curve: Vec<f64> = coords.column(0).iter().cloned().collect();
    if curve[0] > 0.0 {
        curve.iter_mut().for_each(|v| *v = -*v);
    }
    Ok((curve, graph.k))
}

/// Distances, then CMDS into `c` dimensions, then a 1-D ISOMAP curve.
pub fn iso_mirror(blocks: &[DMatrix<f64>], mode: DistanceMode, norm: BlockNorm, c: usize) -> Result<IsoMirrorResult> {
    let d = pairwise_block_distances(blocks, mode, norm)?;
    let coords = cmds(&d, c)?;
    let (curve, k) = isomap_1d(&coords)?;
    Ok(IsoMirrorResult {
        distance_matrix: to_rows(&d),
        cmds_coords: to_rows(&coords),
        knn_k: k,
        curve,
        orientation_anchor: 0,
        mode,
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_blocks(s: usize, n: usize, d: usize, seed: u64) -> Vec<DMatrix<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..s).map(|_| DMatrix::from_fn(n, d, |_, _| rng.random::<f64>())).collect()
    }

    #[test]
    fn identical_blocks_give_zero_distances() {
        let b = random_blocks(1, 10, 2, 1).pop().unwrap();
        let d = pairwise_block_distances(&[b.clone(), b.clone(), b], DistanceMode::Direct, BlockNorm::Spectral).unwrap();
        assert_eq!(d, DMatrix::zeros(3, 3));
    }

    #[test]
    fn rotated_block_has_zero_procrustes_distance() {
        let b = random_blocks(1, 12, 2, 2).pop().unwrap();
        let (c, s) = (0.6f64, 0.8f64);
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let blocks = [b.clone(), &b * q];
        let p = pairwise_block_distances(&blocks, DistanceMode::Procrustes, BlockNorm::Spectral).unwrap();
        let d = pairwise_block_distances(&blocks, DistanceMode::Direct, BlockNorm::Spectral).unwrap();
        assert!(p[(0, 1)] < 1e-10);
        assert!(d[(0, 1)] > 0.1);
    }

    #[test]
    fn direct_distances_match_dense_svd() {
        let blocks = random_blocks(3, 15, 3, 3);
        let d = pairwise_block_distances(&blocks, DistanceMode::Direct, BlockNorm::Spectral).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let diff = &blocks[i] - &blocks[j];
                let top = diff.svd(false, false).singular_values.max();
                assert!((d[(i, j)] - top / 15f64.sqrt()).abs() < 1e-10);
            }
        }
        let f = pairwise_block_distances(&blocks, DistanceMode::Direct, BlockNorm::Frobenius).unwrap();
        assert!((f[(0, 1)] - (&blocks[0] - &blocks[1]).norm() / 15f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let blocks = [DMatrix::zeros(3, 2), DMatrix::zeros(4, 2)];
        assert!(pairwise_block_distances(&blocks, DistanceMode::Direct, BlockNorm::Spectral).is_err());
    }

    #[test]
    fn cmds_two_points() {
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let x = cmds(&d, 1).unwrap();
        let mut v = [x[(0, 0)], x[(1, 0)]];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((v[0] + 0.5).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);
        assert!(cmds(&d, 2).is_err());
    }

    #[test]
    fn cmds_recovers_euclidean_configuration() {
        let pts = random_blocks(1, 7, 2, 4).pop().unwrap();
        let d = euclidean(&pts);
        let x = cmds(&d, 2).unwrap();
        let rec = euclidean(&x);
        assert!((rec - d).abs().max() < 1e-8);
        assert_eq!(cmds(&DMatrix::zeros(4, 4), 2).unwrap(), DMatrix::zeros(4, 2));
    }

    fn brute_min_k(points: &DMatrix<f64>) -> usize {
        let s = points.nrows();
        let dist = euclidean(points);
        for k in 1..s {
            let mut adj = vec![vec![false; s]; s];
            for i in 0..s {
                let mut o: Vec<usize> = (0..s).filter(|&j| j != i).collect();
                o.sort_by(|&a, &b| dist[(i, a)].partial_cmp(&dist[(i, b)]).unwrap().then(a.cmp(&b)));
                for &j in &o[..k] {
                    adj[i][j] = true;
                    adj[j][i] = true;
                }
            }
            // Union-find style closure.
            let mut comp: Vec<usize> = (0..s).collect();
            for _ in 0..s {
                for i in 0..s {
                    for j in 0..s {
                        if adj[i][j] {
                            let m = comp[i].min(comp[j]);
                            comp[i] = m;
                            comp[j] = m;
                        }
                    }
                }
            }
            if comp.iter().all(|&c| c == 0) {
                return k;
            }
        }
        s - 1
    }

    #[test]
    fn knn_examples() {
        let line = DMatrix::from_fn(6, 1, |i, _| i as f64);
        assert_eq!(minimal_connected_knn(&line).unwrap().k, 1);
        let two = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 50.0, 0.0, 50.1, 0.0, 50.0, 0.1]);
        assert_eq!(brute_min_k(&two), 3);
        assert_eq!(minimal_connected_knn(&two).unwrap().k, 3);
        let pair = DMatrix::from_row_slice(2, 1, &[0.0, 4.0]);
        assert_eq!(minimal_connected_knn(&pair).unwrap().k, 1);
        for seed in 0..10 {
            let pts = random_blocks(1, 9, 2, 100 + seed).pop().unwrap();
            assert_eq!(minimal_connected_knn(&pts).unwrap().k, brute_min_k(&pts));
        }
    }

    #[test]
    fn isomap_line_is_arc_length() {
        let xs = [0.0, 1.0, 3.0, 3.5, 7.0];
        let pts = DMatrix::from_fn(5, 2, |i, j| if j == 0 { xs[i] * 0.6 } else { xs[i] * 0.8 });
        let (curve, _) = isomap_1d(&pts).unwrap();
        let mean = xs.iter().sum::<f64>() / 5.0;
        for i in 0..5 {
            assert!((curve[i] - (xs[i] - mean)).abs() < 1e-8);
        }
    }

    #[test]
    fn isomap_arc_is_monotone() {
        let pts = DMatrix::from_fn(12, 2, |i, j| {
            let a = i as f64 * 0.2;
            if j == 0 { a.cos() } else { a.sin() }
        });
        let (curve, _) = isomap_1d(&pts).unwrap();
        assert!(curve[0] <= 0.0);
        assert!(curve.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn isomap_two_points() {
        let pts = DMatrix::from_row_slice(2, 1, &[1.0, 4.0]);
        let (curve, _) = isomap_1d(&pts).unwrap();
        assert!((curve[0] + 1.5).abs() < 1e-12 && (curve[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_blocks_give_zero_curve() {
        let b = random_blocks(1, 8, 2, 5).pop().unwrap();
        let r = iso_mirror(&vec![b; 4], DistanceMode::Direct, BlockNorm::Spectral, 2).unwrap();
        assert!(r.curve.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn procrustes_mode_ignores_common_rotation() {
        let blocks = random_blocks(4, 10, 2, 6);
        let (c, s) = (0.28f64, 0.96f64);
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let rotated: Vec<_> = blocks.iter().map(|b| b * &q).collect();
        let a = pairwise_block_distances(&blocks, DistanceMode::Procrustes, BlockNorm::Spectral).unwrap();
        let b = pairwise_block_distances(&rotated, DistanceMode::Procrustes, BlockNorm::Spectral).unwrap();
        assert!((a - b).abs().max() < 1e-10);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let blocks = random_blocks(5, 10, 2, 7);
        let a = iso_mirror(&blocks, DistanceMode::Direct, BlockNorm::Spectral, 2).unwrap();
        let b = iso_mirror(&blocks, DistanceMode::Direct, BlockNorm::Spectral, 2).unwrap();
        assert_eq!(a.curve, b.curve);
    }
}
