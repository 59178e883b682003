//! Doubly unfolded adjacency spectral embedding and the tools for comparing
//! embeddings with ground-truth positions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_unfolded, unstack_left, unstack_right, DynamicMultiplexGraph, UnfoldedMatrix};
use crate::linalg;
use crate::sampler::{BlockModelSpec, LatentPositions};
use crate::svd::{truncated_svd, SvdOptions};

/// Which half of the embedding: layer-specific (left) or time-specific (right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "layers" => Ok(Side::Left),
            "right" | "time" | "times" => Ok(Side::Right),
            other => Err(Error::InvalidArgument(format!(
                "side must be `left` or `right`, got `{other}`"
            ))),
        }
    }
}

/// Left blocks `X^k` (`K` of them) and right blocks `Y^t` (`T`), each `n x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPair {
    pub left: Vec<DMatrix<f64>>,
    pub right: Vec<DMatrix<f64>>,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rescaled: bool,
    /// Rows of the unfolding with no edges; their left embedding rows are ~0.
    pub zero_rows_left: Vec<usize>,
    /// Columns of the unfolding with no edges; their right embedding rows are ~0.
    pub zero_rows_right: Vec<usize>,
}

impl EmbeddingPair {
    pub fn dim(&self) -> usize {
        self.singular_values.len()
    }

    pub fn n(&self) -> usize {
        self.left[0].nrows()
    }

    pub fn layers(&self) -> usize {
        self.left.len()
    }

    pub fn times(&self) -> usize {
        self.right.len()
    }

    pub fn blocks(&self, side: Side) -> &[DMatrix<f64>] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn stacked(&self, side: Side) -> DMatrix<f64> {
        linalg::vstack(self.blocks(side)).expect("blocks share a shape")
    }

    pub fn stacked_left(&self) -> DMatrix<f64> {
        self.stacked(Side::Left)
    }

    pub fn stacked_right(&self) -> DMatrix<f64> {
        self.stacked(Side::Right)
    }

    /// Keeps the leading `d` dimensions.
    pub fn truncated(&self, d: usize) -> Result<EmbeddingPair> {
        if d == 0 || d > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate a {}-dimensional embedding to {d}",
                self.dim()
            )));
        }
        let cut = |blocks: &[DMatrix<f64>]| blocks.iter().map(|m| m.columns(0, d).into_owned()).collect();
        Ok(EmbeddingPair {
            left: cut(&self.left),
            right: cut(&self.right),
            singular_values: self.singular_values[..d].to_vec(),
            ..self.clone()
        })
    }

    /// `X_hat Y_hat^T`, the rank-`d` approximation of the unfolding.
    pub fn reconstruction(&self) -> DMatrix<f64> {
        self.stacked_left() * self.stacked_right().transpose()
    }
}

/// Embeds an unfolded matrix: `X_hat = U D^{1/2}`, `Y_hat = V D^{1/2}`, unstacked per block.
pub fn embed_unfolded(m: &UnfoldedMatrix, d: usize, options: &SvdOptions) -> Result<EmbeddingPair> {
    let (n, layers, times) = m.block_shape();
    let svd = truncated_svd(m, d, options)?;
    let root: Vec<f64> = svd.singular_values.iter().map(|s| s.max(0.0).sqrt()).collect();
    let mut x = svd.u;
    let mut y = svd.v;
    for (c, r) in root.iter().enumerate() {
        x.column_mut(c).scale_mut(*r);
        y.column_mut(c).scale_mut(*r);
    }
    let (zero_rows_left, zero_rows_right) = m.zero_lines();
    Ok(EmbeddingPair {
        left: unstack_left(&x, n, layers)?,
        right: unstack_right(&y, n, times)?,
        singular_values: svd.singular_values,
        rescaled: false,
        zero_rows_left,
        zero_rows_right,
    })
}

/// Doubly unfolded adjacency spectral embedding into `d` dimensions.
pub fn duase(graph: &DynamicMultiplexGraph, d: usize) -> Result<EmbeddingPair> {
    duase_with(graph, d, &SvdOptions::default())
}

pub fn duase_with(graph: &DynamicMultiplexGraph, d: usize, options: &SvdOptions) -> Result<EmbeddingPair> {
    embed_unfolded(&build_unfolded(graph), d, options)
}

/// Balances the two sides: left blocks times `(K/T)^{1/4}`, right blocks times `(T/K)^{1/4}`.
/// The product `X_hat Y_hat^T` is unchanged.
pub fn rescale_balanced(pair: &EmbeddingPair) -> Result<EmbeddingPair> {
    if pair.rescaled {
        return Err(Error::AlreadyRescaled);
    }
    let ratio = pair.layers() as f64 / pair.times() as f64;
    let left_scale = ratio.powf(0.25);
    let right_scale = ratio.powf(-0.25);
    let mut out = pair.clone();
    out.left.iter_mut().for_each(|m| *m *= left_scale);
    out.right.iter_mut().for_each(|m| *m *= right_scale);
    out.rescaled = true;
    Ok(out)
}

/// Profile log-likelihood of splitting `values` after the first `q` entries
/// into two Gaussian groups with separate means and a pooled variance.
pub fn profile_log_likelihood(values: &[f64], q: usize) -> f64 {
    let p = values.len();
    assert!(q >= 1 && q < p, "split {q} out of range for {p} values");
    let (head, tail) = values.split_at(q);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (m1, m2) = (mean(head), mean(tail));
    let ss: f64 = head.iter().map(|v| (v - m1).powi(2)).sum::<f64>()
        + tail.iter().map(|v| (v - m2).powi(2)).sum::<f64>();
    let denom = (p.saturating_sub(2)).max(1) as f64;
    // A floor keeps perfectly flat groups from producing an infinite likelihood.
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let var = (ss / denom).max(1e-24 * scale * scale);
    -0.5 * p as f64 * (2.0 * std::f64::consts::PI * var).ln() - ss / (2.0 * var)
}

/// Elbow of a scree plot: the split maximizing the two-group profile
/// likelihood over the leading `d_max` values. Unreliable when the decay has
/// no visible gap, but always well defined.
pub fn select_dimension(singular_values: &[f64], d_max: usize) -> Result<usize> {
    let p = d_max.min(singular_values.len());
    if p < 3 {
        return Err(Error::InvalidArgument(format!(
            "dimension selection needs at least 3 singular values, got {p}"
        )));
    }
    let values = &singular_values[..p];
    let mut best = (1, f64::NEG_INFINITY);
    for q in 1..p {
        let ll = profile_log_likelihood(values, q);
        if ll > best.1 {
            best = (q, ll);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentKind {
    Orthogonal,
    GeneralLinear,
}

/// Invertible `d x d` map relating an estimate to a target configuration.
#[derive(Debug, Clone)]
pub struct AlignmentMap {
    pub w: DMatrix<f64>,
    pub w_inv: DMatrix<f64>,
    pub kind: AlignmentKind,
    pub condition_number: f64,
    /// Frobenius residual of the fit the map was computed from.
    pub residual: f64,
    /// Set when the minimizer is not unique (rank-deficient cross product).
    pub degenerate: bool,
}

impl AlignmentMap {
    pub fn identity(d: usize) -> Self {
        Self {
            w: DMatrix::identity(d, d),
            w_inv: DMatrix::identity(d, d),
            kind: AlignmentKind::Orthogonal,
            condition_number: 1.0,
            residual: 0.0,
            degenerate: false,
        }
    }
}

fn check_same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "alignment needs equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Orthogonal `Q` minimizing `||A - B Q||_F`: with `B^T A = U S V^T`, `Q = U V^T`.
pub fn procrustes_align(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<AlignmentMap> {
    check_same_shape(a, b)?;
    let d = a.ncols();
    let cross = b.transpose() * a;
    let svd = cross.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let q = &u * &vt;
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-12 * top.max(f64::MIN_POSITIVE))
        .count();
    let residual = (a - b * &q).norm();
    Ok(AlignmentMap {
        w_inv: q.transpose(),
        w: q,
        kind: AlignmentKind::Orthogonal,
        condition_number: 1.0,
        residual,
        degenerate: rank < d,
    })
}

/// General linear `W` minimizing `||A_hat W^{-1} - A||_F`.
///
/// The inverse map is the least-squares solution of `A_hat M = A`, and
/// `W = M^{-1}`. When `A_hat = A G` exactly this returns `W = G`.
pub fn general_align(a_hat: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<AlignmentMap> {
    check_same_shape(a_hat, a)?;
    let d = a.ncols();
    let tol = 1e-10;
    let rank_a = linalg::numerical_rank(a, tol);
    if rank_a < d {
        return Err(Error::RankDeficient(format!("target has rank {rank_a} < {d}")));
    }
    let inv = linalg::least_squares(a_hat, a)?;
    let w = inv
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("estimated alignment map is not invertible".into()))?;
    let residual = (a_hat * &inv - a).norm();
    Ok(AlignmentMap {
        condition_number: linalg::condition_number(&w),
        w,
        w_inv: inv,
        kind: AlignmentKind::GeneralLinear,
        residual,
        degenerate: false,
    })
}

/// `max_i ||(A_hat W^{-1} - A)_i||_2`.
pub fn two_to_inf_error(a_hat: &DMatrix<f64>, a: &DMatrix<f64>, map: &AlignmentMap) -> Result<f64> {
    check_same_shape(a_hat, a)?;
    if map.w_inv.shape() != (a.ncols(), a.ncols()) {
        return Err(Error::DimensionMismatch("alignment map has the wrong size".into()));
    }
    Ok(linalg::two_to_infinity_norm(&(a_hat * &map.w_inv - a)))
}

/// Pieces of the plug-in limiting covariance of one embedding row.
#[derive(Debug, Clone)]
pub struct CltCovariance {
    /// `Delta^{-1} V Delta^{-1}`.
    pub covariance: DMatrix<f64>,
    /// Averaged second moment of the opposite side's unscaled positions.
    pub delta: DMatrix<f64>,
    /// Variance term `V(x)`.
    pub variance: DMatrix<f64>,
    /// True when the dense-regime formula (`rho = 1`) was used.
    pub dense_regime: bool,
}

/// Plug-in limiting covariance of `sqrt(n T) (X_hat W^{-1} - X)_i` in layer
/// `block` (left side) or of `sqrt(n K) (Y_hat W^{-1} - Y)_i` at time `block`
/// (right side), with expectations replaced by averages over the nodes of the
/// known positions.
pub fn estimate_clt_covariance(
    truth: &LatentPositions,
    side: Side,
    block: usize,
    node: usize,
) -> Result<CltCovariance> {
    let (own, other) = match side {
        Side::Left => (truth.unscaled_left(), truth.unscaled_right()),
        Side::Right => (truth.unscaled_right(), truth.unscaled_left()),
    };
    if block >= own.len() || node >= truth.n() {
        return Err(Error::InvalidArgument(format!(
            "block {block} / node {node} out of range"
        )));
    }
    let x = own[block].row(node).transpose();
    let d = truth.dim();
    let dense_regime = truth.rho >= 1.0;
    let mut delta = DMatrix::zeros(d, d);
    let mut variance = DMatrix::zeros(d, d);
    let count = (other.len() * truth.n()) as f64;
    for m in &other {
        for row in m.row_iter() {
            let nu = row.transpose();
            let outer = &nu * nu.transpose();
            let p = x.dot(&nu);
            let weight = if dense_regime { p * (1.0 - p) } else { p };
            delta += &outer;
            variance += outer * weight;
        }
    }
    delta /= count;
    variance /= count;
    let delta_inv = delta
        .clone()
        .try_inverse()
        .filter(|_| linalg::numerical_rank(&delta, 1e-12) == d)
        .ok_or_else(|| Error::Singular("second-moment matrix is singular".into()))?;
    let covariance = &delta_inv * &variance * &delta_inv;
    Ok(CltCovariance {
        covariance,
        delta,
        variance,
        dense_regime,
    })
}

/// Limiting covariance for each community of a blockmodel in one block,
/// evaluated at the first node carrying that label. Empty communities get `None`.
pub fn community_clt_covariances(
    spec: &BlockModelSpec,
    truth: &LatentPositions,
    side: Side,
    block: usize,
) -> Result<Vec<Option<DMatrix<f64>>>> {
    let (labels, groups) = match side {
        Side::Left => (&spec.z, spec.g1),
        Side::Right => (&spec.upsilon, spec.g2),
    };
    let labels = labels
        .get(block)
        .ok_or_else(|| Error::InvalidArgument(format!("block {block} out of range")))?;
    (0..groups)
        .map(|g| {
            labels
                .iter()
                .position(|&l| l == g)
                .map(|node| estimate_clt_covariance(truth, side, block, node).map(|c| c.covariance))
                .transpose()
        })
        .collect()
}

/// Scaled errors `sqrt(n * other) (A_hat W^{-1} - A)` for every row of one
/// side, with `W` estimated by [`general_align`] on the stacked blocks.
pub fn scaled_alignment_errors(pair: &EmbeddingPair, truth: &LatentPositions, side: Side) -> Result<DMatrix<f64>> {
    let (est, target, other) = match side {
        Side::Left => (pair.stacked_left(), truth.stacked_left(), truth.times()),
        Side::Right => (pair.stacked_right(), truth.stacked_right(), truth.layers()),
    };
    let map = general_align(&est, &target)?;
    let scale = ((truth.n() * other) as f64).sqrt();
    Ok((est * &map.w_inv - target) * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{expected_unfolded, sample_dmprdpg};
    use crate::sparse::LinearOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_positions(n: usize, d: usize, k: usize, t: usize, seed: u64) -> LatentPositions {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let hi = 1.0 / (d as f64).sqrt();
        let mut draw = || DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * hi);
        let left = (0..k).map(|_| draw()).collect();
        let right = (0..t).map(|_| draw()).collect();
        LatentPositions::new(left, right).unwrap()
    }

    fn random_orthogonal(d: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() - 0.5);
        m.qr().q()
    }

    #[test]
    fn noiseless_embedding_reconstructs_p() {
        let pos = random_positions(20, 2, 2, 3, 1);
        let p = expected_unfolded(&pos).unwrap();
        let pair = embed_unfolded(&p, 2, &SvdOptions::default()).unwrap();
        assert!((pair.reconstruction() - p.to_dense()).abs().max() < 1e-8);
        let gram_x = pair.stacked_left().transpose() * pair.stacked_left();
        let gram_y = pair.stacked_right().transpose() * pair.stacked_right();
        let dmat = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(pair.singular_values.clone()));
        assert!((&gram_x - &dmat).abs().max() < 1e-8 * pair.singular_values[0]);
        assert!((&gram_y - &dmat).abs().max() < 1e-8 * pair.singular_values[0]);
    }

    #[test]
    fn single_block_is_plain_ase() {
        let pos = random_positions(30, 2, 1, 1, 2);
        let g = sample_dmprdpg(&pos, 4).unwrap();
        let pair = duase(&g, 2).unwrap();
        let a = g.block(0, 0).to_dense();
        let svd = a.clone().svd(true, true);
        let mut s: Vec<f64> = svd.singular_values.iter().cloned().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for i in 0..2 {
            assert!((pair.singular_values[i] - s[i]).abs() < 1e-10 * s[0]);
        }
        assert_eq!(pair.layers(), 1);
        assert_eq!(pair.times(), 1);
    }

    #[test]
    fn rescale_examples() {
        let pos = random_positions(10, 2, 4, 1, 3);
        let p = expected_unfolded(&pos).unwrap();
        let pair = embed_unfolded(&p, 2, &SvdOptions::default()).unwrap();
        let scaled = rescale_balanced(&pair).unwrap();
        assert!(scaled.rescaled);
        assert!((&scaled.left[0] - &pair.left[0] * 2f64.sqrt()).abs().max() < 1e-14);
        assert!((&scaled.right[0] - &pair.right[0] / 2f64.sqrt()).abs().max() < 1e-14);
        assert!((scaled.reconstruction() - pair.reconstruction()).abs().max() < 1e-12);
        assert!(matches!(rescale_balanced(&scaled), Err(Error::AlreadyRescaled)));

        let square = random_positions(10, 2, 2, 2, 3);
        let pair = embed_unfolded(&expected_unfolded(&square).unwrap(), 2, &SvdOptions::default()).unwrap();
        let same = rescale_balanced(&pair).unwrap();
        assert_eq!(same.left, pair.left);
        assert_eq!(same.right, pair.right);
    }

    /// Independent brute force: Gaussian log density summed directly.
    fn brute_profile(values: &[f64]) -> usize {
        let p = values.len();
        let mut best = (0, f64::NEG_INFINITY);
        for q in 1..p {
            let g1 = &values[..q];
            let g2 = &values[q..];
            let m1 = g1.iter().sum::<f64>() / q as f64;
            let m2 = g2.iter().sum::<f64>() / (p - q) as f64;
            let s1 = if q > 1 { g1.iter().map(|v| (v - m1).powi(2)).sum::<f64>() / (q - 1) as f64 } else { 0.0 };
            let s2 = if p - q > 1 { g2.iter().map(|v| (v - m2).powi(2)).sum::<f64>() / (p - q - 1) as f64 } else { 0.0 };
            let var = ((q as f64 - 1.0) * s1 + (p as f64 - q as f64 - 1.0) * s2) / (p as f64 - 2.0);
            let sd = var.sqrt();
            let logpdf = |v: f64, m: f64| {
                -((v - m) / sd).powi(2) / 2.0 - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            };
            let ll: f64 = g1.iter().map(|v| logpdf(*v, m1)).sum::<f64>() + g2.iter().map(|v| logpdf(*v, m2)).sum::<f64>();
            if ll > best.1 {
                best = (q, ll);
            }
        }
        best.0
    }

    #[test]
    fn elbow_examples() {
        let values = [10.0, 9.5, 9.0, 0.1, 0.09, 0.08];
        assert_eq!(brute_profile(&values), 3);
        assert_eq!(select_dimension(&values, 10).unwrap(), 3);

        let geometric: Vec<f64> = (0..12).map(|i| 0.7f64.powi(i)).collect();
        assert_eq!(select_dimension(&geometric, 12).unwrap(), brute_profile(&geometric));

        assert!(select_dimension(&[1.0, 0.5], 10).is_err());
        assert!(select_dimension(&values, 2).is_err());
    }

    #[test]
    fn procrustes_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let a = DMatrix::from_fn(15, 3, |_, _| rng.random::<f64>());
        let same = procrustes_align(&a, &a).unwrap();
        assert!((&same.w - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-10);

        let r = random_orthogonal(3, &mut rng);
        let b = &a * &r;
        let map = procrustes_align(&a, &b).unwrap();
        assert!((&a - &b * &map.w).norm() <= 1e-10);
        assert!((&map.w.transpose() * &map.w - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-10);

        let b = DMatrix::from_fn(15, 3, |_, _| rng.random::<f64>());
        let map = procrustes_align(&a, &b).unwrap();
        let best = (&a - &b * &map.w).norm();
        for _ in 0..100 {
            let q = random_orthogonal(3, &mut rng);
            assert!(best <= (&a - &b * q).norm() + 1e-12);
        }

        let zero = DMatrix::zeros(15, 3);
        assert!(procrustes_align(&a, &zero).unwrap().degenerate);
    }

    #[test]
    fn general_alignment_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let a = DMatrix::from_fn(25, 3, |_, _| rng.random::<f64>());
        let id = general_align(&a, &a).unwrap();
        assert!((&id.w - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-10);

        let g = DMatrix::from_fn(3, 3, |r, c| if r == c { 2.0 } else { 0.3 * (r as f64 - c as f64) });
        let a_hat = &a * &g;
        let map = general_align(&a_hat, &a).unwrap();
        assert!(map.residual <= 1e-10);
        assert!((&map.w - &g).abs().max() < 1e-9);
        assert!(two_to_inf_error(&a_hat, &a, &map).unwrap() <= 1e-10);

        let deficient = DMatrix::from_fn(25, 3, |r, c| if c == 2 { 0.0 } else { r as f64 });
        assert!(matches!(general_align(&a, &deficient), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn two_to_inf_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let a = DMatrix::from_fn(12, 2, |_, _| rng.random::<f64>());
        let id = AlignmentMap::identity(2);
        assert_eq!(two_to_inf_error(&a, &a, &id).unwrap(), 0.0);
        let mut perturbed = a.clone();
        perturbed[(4, 1)] += 1e-3;
        assert!((two_to_inf_error(&perturbed, &a, &id).unwrap() - 1e-3).abs() < 1e-15);

        let b = DMatrix::from_fn(12, 2, |_, _| rng.random::<f64>());
        let mut brute: f64 = 0.0;
        for i in 0..12 {
            let mut s = 0.0;
            for j in 0..2 {
                s += (b[(i, j)] - a[(i, j)]).powi(2);
            }
            brute = brute.max(s.sqrt());
        }
        assert!((two_to_inf_error(&b, &a, &id).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn clt_single_community_closed_form() {
        // K = T = 1, d = 1: x * lambda = p everywhere.
        let (x, lambda) = (0.6, 0.5);
        let p = x * lambda;
        let pos = LatentPositions::new(
            vec![DMatrix::from_element(7, 1, x)],
            vec![DMatrix::from_element(7, 1, lambda)],
        )
        .unwrap();
        let c = estimate_clt_covariance(&pos, Side::Left, 0, 3).unwrap();
        assert!((c.variance[(0, 0)] - p * (1.0 - p) * lambda * lambda).abs() < 1e-10);
        assert!((c.covariance[(0, 0)] - p * (1.0 - p) / (lambda * lambda)).abs() < 1e-10);
        assert!(c.dense_regime);
    }

    #[test]
    fn clt_symmetric_communities_share_covariance() {
        use crate::sampler::sbm_latent_positions;
        let b = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.3]);
        let spec = BlockModelSpec::equal_groups(40, 2, 2, vec![vec![b]]).unwrap();
        let truth = sbm_latent_positions(&spec).unwrap().node_positions(&spec).unwrap();
        let covs = community_clt_covariances(&spec, &truth, Side::Right, 0).unwrap();
        let (c0, c1) = (covs[0].as_ref().unwrap(), covs[1].as_ref().unwrap());
        // Swapping communities reflects the positions, so covariances match up to that reflection.
        let e0 = c0.symmetric_eigenvalues();
        let e1 = c1.symmetric_eigenvalues();
        let mut e0: Vec<f64> = e0.iter().cloned().collect();
        let mut e1: Vec<f64> = e1.iter().cloned().collect();
        e0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in e0.iter().zip(&e1) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn side_parses() {
        assert_eq!("left".parse::<Side>().unwrap(), Side::Left);
        assert_eq!("time".parse::<Side>().unwrap(), Side::Right);
        assert!("up".parse::<Side>().is_err());
    }
}
