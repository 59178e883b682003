//! Gaussian mixture clustering of embedding blocks and clustering metrics.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::embedding::{EmbeddingPair, Side};
use crate::error::{Error, Result};
use crate::linalg;

pub const MAX_EM_ITERATIONS: usize = 500;
pub const EM_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_RESTARTS: usize = 5;
const LLOYD_ITERATIONS: usize = 100;
const KMEANS_RUNS: usize = 10;

/// A fitted mixture. Components are ordered as they came out of EM; use
/// [`match_components`] to relate them to reference means.
#[derive(Debug, Clone)]
pub struct GmmFit {
    /// `G x d`, one mean per row.
    pub means: DMatrix<f64>,
    pub covariances: Vec<DMatrix<f64>>,
    pub weights: Vec<f64>,
    pub hard_labels: Vec<usize>,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Components that lost their support (or started without any).
    pub collapsed: Vec<bool>,
    /// Log-likelihood after each E-step of the winning run.
    pub loglik_trace: Vec<f64>,
    /// Diagonal regularization floor used for the covariances.
    pub floor: f64,
}

impl GmmFit {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn mean(&self, g: usize) -> DVector<f64> {
        self.means.row(g).transpose()
    }

    /// Per-coordinate standard error of each component mean, `sqrt(diag(S_g) / n_g)`.
    pub fn mean_standard_errors(&self) -> DMatrix<f64> {
        let m = self.hard_labels.len() as f64;
        DMatrix::from_fn(self.components(), self.dim(), |g, j| {
            let count = (self.weights[g] * m).max(1.0);
            (self.covariances[g][(j, j)] / count).sqrt()
        })
    }
}

struct Params {
    means: Vec<DVector<f64>>,
    covs: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
    collapsed: Vec<bool>,
}

struct EmRun {
    params: Params,
    labels: Vec<usize>,
    trace: Vec<f64>,
    converged: bool,
}

fn row(points: &DMatrix<f64>, i: usize) -> DVector<f64> {
    points.row(i).transpose()
}

fn sq_dist(points: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    (0..points.ncols()).map(|j| (points[(i, j)] - c[j]).powi(2)).sum()
}

/// Raises the smallest eigenvalue of a symmetric matrix to at least `floor`.
fn regularize(cov: &mut DMatrix<f64>, floor: f64) -> bool {
    let sym = (&*cov + cov.transpose()) * 0.5;
    *cov = sym;
    let min_eig = cov
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < floor {
        let shift = floor + (-min_eig).max(0.0);
        for j in 0..cov.nrows() {
            cov[(j, j)] += shift;
        }
        true
    } else {
        false
    }
}

/// Greedy k-means++ seeding: each new center is the best of a few
/// D^2-weighted candidates by resulting potential.
fn kmeans_pp(points: &DMatrix<f64>, g: usize, rng: &mut ChaCha20Rng) -> Vec<DVector<f64>> {
    let m = points.nrows();
    let trials = 2 + (g as f64).ln().floor() as usize;
    let mut centers = vec![row(points, rng.random_range(0..m))];
    let mut dist: Vec<f64> = (0..m).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < g {
        let total: f64 = dist.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let pick = if total > 0.0 {
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = None;
                for (i, &w) in dist.iter().enumerate() {
                    acc += w;
                    if w > 0.0 && acc > target {
                        chosen = Some(i);
                        break;
                    }
                }
                chosen.unwrap_or_else(|| dist.iter().rposition(|&w| w > 0.0).unwrap())
            } else {
                rng.random_range(0..m)
            };
            let c = row(points, pick);
            let updated: Vec<f64> = dist
                .iter()
                .enumerate()
                .map(|(i, &d)| d.min(sq_dist(points, i, &c)))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, pick, updated));
            }
        }
        let (_, pick, updated) = best.expect("at least one trial");
        dist = updated;
        centers.push(row(points, pick));
    }
    centers
}

fn nearest(points: &DMatrix<f64>, i: usize, centers: &[DVector<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(points, i, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

fn lloyd(points: &DMatrix<f64>, mut centers: Vec<DVector<f64>>) -> (Vec<usize>, f64) {
    let (m, d) = points.shape();
    let mut labels: Vec<usize> = (0..m).map(|i| nearest(points, i, &centers)).collect();
    for _ in 0..LLOYD_ITERATIONS {
        let mut sums = vec![DVector::zeros(d); centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            sums[l] += row(points, i);
            counts[l] += 1;
        }
        for c in 0..centers.len() {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            }
        }
        let next: Vec<usize> = (0..m).map(|i| nearest(points, i, &centers)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = labels.iter().enumerate().map(|(i, &l)| sq_dist(points, i, &centers[l])).sum();
    (labels, inertia)
}

/// Best of several seeded k-means runs by inertia.
fn kmeans_labels(points: &DMatrix<f64>, g: usize, rng: &mut ChaCha20Rng) -> Vec<usize> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RUNS {
        let (labels, inertia) = lloyd(points, kmeans_pp(points, g, rng));
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((labels, inertia));
        }
    }
    best.expect("at least one run").0
}

fn initial_params(points: &DMatrix<f64>, labels: &[usize], g: usize, data_cov: &DMatrix<f64>, floor: f64) -> Params {
    let (m, d) = points.shape();
    let mut means = Vec::with_capacity(g);
    let mut covs = Vec::with_capacity(g);
    let mut weights = Vec::with_capacity(g);
    for c in 0..g {
        let members: Vec<usize> = (0..m).filter(|&i| labels[i] == c).collect();
        let sub = DMatrix::from_fn(members.len(), d, |r, j| points[(members[r], j)]);
        let (mean, mut cov) = if members.len() >= 2 {
            linalg::mean_and_covariance(&sub)
        } else if members.len() == 1 {
            (row(&sub, 0), data_cov.clone())
        } else {
            (linalg::mean_and_covariance(points).0, data_cov.clone())
        };
        regularize(&mut cov, floor);
        means.push(mean);
        covs.push(cov);
        weights.push(members.len().max(1) as f64);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Params {
        means,
        covs,
        weights,
        collapsed: vec![false; g],
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + values.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// Returns responsibilities (`m x g`) and the log-likelihood.
fn e_step(points: &DMatrix<f64>, params: &Params) -> (DMatrix<f64>, f64) {
    let (m, d) = points.shape();
    let g = params.weights.len();
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let factors: Vec<(DMatrix<f64>, f64)> = params
        .covs
        .iter()
        .map(|c| {
            let chol = Cholesky::new(c.clone()).expect("regularized covariance is positive definite");
            let l = chol.unpack();
            let log_det: f64 = l.diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
            (l, log_det)
        })
        .collect();
    let mut joint = DMatrix::zeros(m, g);
    let mut ll = 0.0;
    let mut buf = vec![0.0; g];
    for i in 0..m {
        let x = row(points, i);
        for c in 0..g {
            let (l, log_det) = &factors[c];
            let diff = &x - &params.means[c];
            let y = l.solve_lower_triangular(&diff).expect("nonzero diagonal");
            buf[c] = params.weights[c].ln() - 0.5 * y.norm_squared() - 0.5 * log_det - d as f64 * half_log_2pi;
        }
        let norm = log_sum_exp(&buf);
        ll += norm;
        for c in 0..g {
            joint[(i, c)] = (buf[c] - norm).exp();
        }
    }
    (joint, ll)
}

fn m_step(points: &DMatrix<f64>, resp: &DMatrix<f64>, previous: &Params, floor: f64) -> Params {
    let (m, d) = points.shape();
    let g = resp.ncols();
    let mut means = Vec::with_capacity(g);
    let mut covs = Vec::with_capacity(g);
    let mut weights = Vec::with_capacity(g);
    let mut collapsed = Vec::with_capacity(g);
    for c in 0..g {
        let nk: f64 = resp.column(c).sum();
        if nk <= 1e-10 * m as f64 {
            means.push(previous.means[c].clone());
            covs.push(previous.covs[c].clone());
            weights.push(nk.max(f64::MIN_POSITIVE));
            collapsed.push(true);
            continue;
        }
        let mut mean = DVector::zeros(d);
        for i in 0..m {
            mean += row(points, i) * resp[(i, c)];
        }
        mean /= nk;
        let mut cov = DMatrix::zeros(d, d);
        for i in 0..m {
            let diff = row(points, i) - &mean;
            cov += &diff * diff.transpose() * resp[(i, c)];
        }
        cov /= nk;
        let thin = cov.trace() < floor * d as f64;
        regularize(&mut cov, floor);
        means.push(mean);
        covs.push(cov);
        weights.push(nk);
        collapsed.push(nk < 1.0 || thin);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Params {
        means,
        covs,
        weights,
        collapsed,
    }
}

fn argmax_rows(resp: &DMatrix<f64>) -> Vec<usize> {
    resp.row_iter()
        .map(|r| {
            let mut best = (0, f64::NEG_INFINITY);
            for (c, &v) in r.iter().enumerate() {
                if v > best.1 {
                    best = (c, v);
                }
            }
            best.0
        })
        .collect()
}

fn run_em(points: &DMatrix<f64>, mut params: Params, floor: f64) -> EmRun {
    let mut trace = Vec::new();
    let mut converged = false;
    let mut labels = Vec::new();
    for iter in 0..=MAX_EM_ITERATIONS {
        let (resp, ll) = e_step(points, &params);
        labels = argmax_rows(&resp);
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if (ll - prev).abs() <= EM_TOLERANCE * prev.abs().max(f64::MIN_POSITIVE) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iter == MAX_EM_ITERATIONS {
            break;
        }
        params = m_step(points, &resp, &params, floor);
    }
    EmRun {
        params,
        labels,
        trace,
        converged,
    }
}

/// Fits a `g`-component full-covariance Gaussian mixture by EM, keeping the
/// best of `restarts` runs by log-likelihood. Each run starts from the best
/// of several k-means++ seeded Lloyd solutions.
pub fn fit_gmm(points: &DMatrix<f64>, g: usize, seed: u64, restarts: usize) -> Result<GmmFit> {
    let (m, d) = points.shape();
    if g == 0 {
        return Err(Error::InvalidArgument("mixture needs at least one component".into()));
    }
    if d == 0 || m <= g * d {
        return Err(Error::InsufficientPoints { needed: g * d, got: m });
    }
    let (data_mean, data_cov) = linalg::mean_and_covariance(points);
    let data_trace = data_cov.trace();
    if data_trace <= 0.0 || !data_trace.is_finite() {
        return Ok(degenerate_fit(&data_mean, m, g));
    }
    let floor = 1e-6 * data_trace / d as f64;

    let mut best: Option<EmRun> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let labels = kmeans_labels(points, g, &mut rng);
        let init = initial_params(points, &labels, g, &data_cov, floor);
        let run = run_em(points, init, floor);
        let better = match &best {
            None => true,
            Some(b) => run.trace.last() > b.trace.last(),
        };
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    let means = DMatrix::from_fn(g, d, |c, j| run.params.means[c][j]);
    Ok(GmmFit {
        means,
        covariances: run.params.covs,
        weights: run.params.weights,
        hard_labels: run.labels,
        log_likelihood: *run.trace.last().expect("nonempty trace"),
        converged: run.converged,
        collapsed: run.params.collapsed,
        loglik_trace: run.trace,
        floor,
    })
}

fn degenerate_fit(point: &DVector<f64>, m: usize, g: usize) -> GmmFit {
    let d = point.len();
    let floor = f64::EPSILON * point.amax().max(1.0);
    GmmFit {
        means: DMatrix::from_fn(g, d, |_, j| point[j]),
        covariances: vec![DMatrix::identity(d, d) * floor; g],
        weights: vec![1.0 / g as f64; g],
        hard_labels: vec![0; m],
        log_likelihood: f64::NAN,
        converged: g == 1,
        collapsed: vec![g > 1; g],
        loglik_trace: Vec::new(),
        floor,
    }
}

/// Options for clustering the blocks of one embedding side.
#[derive(Debug, Clone, Copy)]
pub struct ClusterOptions {
    pub seed: u64,
    pub restarts: usize,
    /// Fit a single mixture on all stacked blocks instead of one per block.
    pub pooled: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            pooled: false,
        }
    }
}

/// Fits and labels for every block of one side. In pooled mode `fits` has a
/// single entry shared by all blocks.
#[derive(Debug, Clone)]
pub struct BlockClustering {
    pub side: Side,
    pub fits: Vec<GmmFit>,
    pub labels: Vec<Vec<usize>>,
}

impl BlockClustering {
    pub fn fit_for_block(&self, b: usize) -> &GmmFit {
        if self.fits.len() == 1 {
            &self.fits[0]
        } else {
            &self.fits[b]
        }
    }
}

pub fn cluster_side(pair: &EmbeddingPair, side: Side, g: usize, options: &ClusterOptions) -> Result<BlockClustering> {
    let blocks = pair.blocks(side);
    if options.pooled {
        let stacked = pair.stacked(side);
        let fit = fit_gmm(&stacked, g, options.seed, options.restarts)?;
        let n = pair.n();
        let labels = fit.hard_labels.chunks(n).map(|c| c.to_vec()).collect();
        return Ok(BlockClustering {
            side,
            fits: vec![fit],
            labels,
        });
    }
    let fits = blocks
        .par_iter()
        .enumerate()
        .map(|(b, block)| fit_gmm(block, g, options.seed.wrapping_add(b as u64), options.restarts))
        .collect::<Result<Vec<_>>>()?;
    let labels = fits.iter().map(|f| f.hard_labels.clone()).collect();
    Ok(BlockClustering { side, fits, labels })
}

/// One mixture with `g1` components per layer block.
pub fn cluster_left(pair: &EmbeddingPair, g1: usize, options: &ClusterOptions) -> Result<BlockClustering> {
    cluster_side(pair, Side::Left, g1, options)
}

/// One mixture with `g2` components per time block.
pub fn cluster_right(pair: &EmbeddingPair, g2: usize, options: &ClusterOptions) -> Result<BlockClustering> {
    cluster_side(pair, Side::Right, g2, options)
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from the pair-counting contingency table.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "label lists of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let ra = a.iter().max().map_or(0, |m| m + 1);
    let rb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; ra * rb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * rb + y] += 1;
    }
    let index: f64 = table.iter().map(|&c| choose2(c as f64)).sum();
    let row_sums: f64 = (0..ra)
        .map(|x| choose2(table[x * rb..(x + 1) * rb].iter().sum::<u64>() as f64))
        .sum();
    let col_sums: f64 = (0..rb)
        .map(|y| choose2((0..ra).map(|x| table[x * rb + y]).sum::<u64>() as f64))
        .sum();
    let total = choose2(n as f64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = row_sums * col_sums / total;
    let max_index = 0.5 * (row_sums + col_sums);
    if max_index == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method,
/// potentials form). Returns `assignment[row] = column`.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "assignment needs a square cost matrix");
    // 1-based arrays with a sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Matches reference means (rows of `reference`) to fitted means by minimum
/// total Euclidean distance. Returns `matched[g] = fitted component for reference g`.
pub fn match_components(fitted: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<Vec<usize>> {
    if fitted.shape() != reference.shape() {
        return Err(Error::DimensionMismatch(format!(
            "fitted means {:?} vs reference means {:?}",
            fitted.shape(),
            reference.shape()
        )));
    }
    let g = fitted.nrows();
    let cost = DMatrix::from_fn(g, g, |r, c| (reference.row(r) - fitted.row(c)).norm());
    Ok(hungarian(&cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;

    fn normal(rng: &mut ChaCha20Rng) -> f64 {
        // Box-Muller.
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn two_blobs(per: usize, seed: u64) -> (DMatrix<f64>, Vec<usize>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut pts = DMatrix::zeros(2 * per, 2);
        let mut truth = Vec::new();
        for i in 0..2 * per {
            let c = i % 2;
            pts[(i, 0)] = if c == 0 { -10.0 } else { 10.0 } + normal(&mut rng);
            pts[(i, 1)] = normal(&mut rng);
            truth.push(c);
        }
        (pts, truth)
    }

    #[test]
    fn separated_clusters_recovered() {
        let (pts, truth) = two_blobs(100, 1);
        let fit = fit_gmm(&pts, 2, 7, 5).unwrap();
        assert_eq!(adjusted_rand_index(&fit.hard_labels, &truth).unwrap(), 1.0);
        assert!(fit.converged);
        assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_component_is_sample_moments() {
        let (pts, _) = two_blobs(50, 2);
        let fit = fit_gmm(&pts, 1, 0, 1).unwrap();
        let m = pts.nrows() as f64;
        for j in 0..2 {
            let mean = pts.column(j).sum() / m;
            assert!((fit.means[(0, j)] - mean).abs() < 1e-10);
            for l in 0..2 {
                let ml = pts.column(l).sum() / m;
                let cov: f64 = (0..pts.nrows())
                    .map(|i| (pts[(i, j)] - mean) * (pts[(i, l)] - ml))
                    .sum::<f64>()
                    / m;
                assert!((fit.covariances[0][(j, l)] - cov).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn em_is_monotone() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let pts = DMatrix::from_fn(150, 2, |i, _| normal(&mut rng) + (i % 3) as f64 * 1.5);
        let fit = fit_gmm(&pts, 3, 11, 3).unwrap();
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn scale_invariant_labels() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let pts = DMatrix::from_fn(120, 2, |i, j| normal(&mut rng) * (1.0 + j as f64) + (i % 3) as f64 * 3.0);
        let a = fit_gmm(&pts, 3, 5, 3).unwrap();
        let b = fit_gmm(&(&pts * 2.0), 3, 5, 3).unwrap();
        assert_eq!(a.hard_labels, b.hard_labels);
    }

    #[test]
    fn identical_points_flag_collapse() {
        let pts = DMatrix::from_element(20, 2, 0.5);
        let fit = fit_gmm(&pts, 3, 0, 2).unwrap();
        assert!(!fit.converged);
        assert!(fit.collapsed.iter().all(|&c| c));
    }

    #[test]
    fn too_few_points() {
        let pts = DMatrix::from_element(4, 2, 0.5);
        assert!(matches!(fit_gmm(&pts, 2, 0, 1), Err(Error::InsufficientPoints { .. })));
        assert!(fit_gmm(&pts, 0, 0, 1).is_err());
    }

    #[test]
    fn ari_examples() {
        let a = [0, 0, 1, 1, 2];
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        let renamed = [2, 2, 0, 0, 1];
        assert_eq!(adjusted_rand_index(&a, &renamed).unwrap(), 1.0);
        assert!(adjusted_rand_index(&a, &[0, 1]).is_err());
        // Hand computed: contingency [[2,1,0],[0,1,2]] over 6 points.
        // index = 2, row pairs = 6, col pairs = 3, total = 15, expected = 1.2, max = 4.5.
        let v = adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2]).unwrap();
        let expected = (2.0 - 1.2) / (4.5 - 1.2);
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for n in 1..=6 {
            let cost = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
            let got = hungarian(&cost);
            let got_cost: f64 = got.iter().enumerate().map(|(r, &c)| cost[(r, c)]).sum();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| {
                let c: f64 = p.iter().enumerate().map(|(r, &c)| cost[(r, c)]).sum();
                best = best.min(c);
            });
            assert!((got_cost - best).abs() < 1e-12);
        }
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    #[test]
    fn standard_errors_shrink_with_support() {
        let (pts, _) = two_blobs(200, 8);
        let fit = fit_gmm(&pts, 2, 1, 2).unwrap();
        let se = fit.mean_standard_errors();
        assert!(se.iter().all(|&v| v > 0.0 && v < 0.2));
    }
}
