//! Samplers for the dynamic multiplex random dot product graph and its
//! stochastic blockmodel special case.
//!
//! Randomness comes from ChaCha20 keyed by the user seed. Block `(k, t)` is
//! drawn from stream `k * T + t` of that key, starting at word 0, so the
//! output never depends on the order (or thread) in which blocks are drawn.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{embed_unfolded, EmbeddingPair};
use crate::error::{Error, Result};
use crate::graph::{unstack_left, unstack_right, DynamicMultiplexGraph, UnfoldedMatrix};
use crate::linalg;
use crate::sparse::CsrMatrix;
use crate::svd::{SvdMethod, SvdOptions};

/// Slack allowed on probabilities computed from floating-point inner products.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Relative singular-value cutoff for the rank of the stacked `B` matrix.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Layer-specific left positions `X^k` and time-specific right positions `Y^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPositions {
    pub left: Vec<DMatrix<f64>>,
    pub right: Vec<DMatrix<f64>>,
    pub rho: f64,
    /// Unscaled positions, `X^k = rho^{1/2} xi^k`.
    pub xi: Option<Vec<DMatrix<f64>>>,
    /// Unscaled positions, `Y^t = rho^{1/2} nu^t`.
    pub nu: Option<Vec<DMatrix<f64>>>,
}

impl LatentPositions {
    /// Dense-regime positions (`rho = 1`).
    pub fn new(left: Vec<DMatrix<f64>>, right: Vec<DMatrix<f64>>) -> Result<Self> {
        let pos = Self {
            left,
            right,
            rho: 1.0,
            xi: None,
            nu: None,
        };
        pos.check_shapes()?;
        Ok(pos)
    }

    /// Scales unscaled positions by `rho^{1/2}`.
    pub fn with_sparsity(xi: Vec<DMatrix<f64>>, nu: Vec<DMatrix<f64>>, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidArgument(format!("sparsity factor {rho} not in (0, 1]")));
        }
        let s = rho.sqrt();
        let pos = Self {
            left: xi.iter().map(|m| m * s).collect(),
            right: nu.iter().map(|m| m * s).collect(),
            rho,
            xi: Some(xi),
            nu: Some(nu),
        };
        pos.check_shapes()?;
        Ok(pos)
    }

    fn check_shapes(&self) -> Result<()> {
        let first = self
            .left
            .first()
            .or(self.right.first())
            .ok_or_else(|| Error::InvalidArgument("no position blocks".into()))?;
        let shape = first.shape();
        if self.left.is_empty() || self.right.is_empty() {
            return Err(Error::InvalidArgument("need at least one layer and one time point".into()));
        }
        if self.left.iter().chain(&self.right).any(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch("position blocks differ in shape".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.left[0].nrows()
    }

    pub fn dim(&self) -> usize {
        self.left[0].ncols()
    }

    pub fn layers(&self) -> usize {
        self.left.len()
    }

    pub fn times(&self) -> usize {
        self.right.len()
    }

    /// Unscaled left positions (`xi`), derived from `X / rho^{1/2}` when not stored.
    pub fn unscaled_left(&self) -> Vec<DMatrix<f64>> {
        self.xi
            .clone()
            .unwrap_or_else(|| self.left.iter().map(|m| m / self.rho.sqrt()).collect())
    }

    pub fn unscaled_right(&self) -> Vec<DMatrix<f64>> {
        self.nu
            .clone()
            .unwrap_or_else(|| self.right.iter().map(|m| m / self.rho.sqrt()).collect())
    }

    pub fn stacked_left(&self) -> DMatrix<f64> {
        linalg::vstack(&self.left).expect("validated shapes")
    }

    pub fn stacked_right(&self) -> DMatrix<f64> {
        linalg::vstack(&self.right).expect("validated shapes")
    }

    /// Fails if any `X^k_i . Y^t_j` leaves `[0, 1]` by more than the tolerance.
    pub fn validate(&self) -> Result<()> {
        for (k, x) in self.left.iter().enumerate() {
            for (t, y) in self.right.iter().enumerate() {
                let p = x * y.transpose();
                if let Some(((i, j), v)) = p
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| ((idx % p.nrows(), idx / p.nrows()), *v))
                    .find(|(_, v)| !in_unit_interval(*v))
                {
                    return Err(Error::ProbabilityOutOfRange {
                        value: v,
                        location: format!("layer {k}, time {t}, nodes ({i}, {j})"),
                    });
                }
            }
        }
        Ok(())
    }
}

fn in_unit_interval(v: f64) -> bool {
    v >= -PROBABILITY_TOLERANCE && v <= 1.0 + PROBABILITY_TOLERANCE
}

/// Dynamic multiplex stochastic blockmodel parameters.
///
/// Labels are 0-based. `z[k][i]` is node `i`'s community in layer `k`;
/// `upsilon[t][j]` is node `j`'s community at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockModelSpec {
    #[serde(rename = "G1")]
    pub g1: usize,
    #[serde(rename = "G2")]
    pub g2: usize,
    pub z: Vec<Vec<usize>>,
    pub upsilon: Vec<Vec<usize>>,
    /// Keyed `"k,t"` (0-based) in the JSON form.
    #[serde(rename = "B", with = "block_map")]
    pub b: Vec<Vec<DMatrix<f64>>>,
}

mod block_map {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[Vec<DMatrix<f64>>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = BTreeMap::new();
        for (k, row) in b.iter().enumerate() {
            for (t, m) in row.iter().enumerate() {
                let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().cloned().collect()).collect();
                map.insert(format!("{k},{t}"), rows);
            }
        }
        map.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<DMatrix<f64>>>, D::Error> {
        let map: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::deserialize(d)?;
        let mut entries = Vec::new();
        for (key, rows) in map {
            let (k, t) = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| D::Error::custom(format!("bad block key `{key}`, expected \"k,t\"")))?;
            let ncols = rows.first().map_or(0, |r| r.len());
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(D::Error::custom(format!("ragged rows in block `{key}`")));
            }
            let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
            entries.push((k, t, DMatrix::from_row_slice(rows.len(), ncols, &flat)));
        }
        let layers = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let times = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
        if entries.len() != layers * times {
            return Err(D::Error::custom("B must define every (k, t) block"));
        }
        let mut out: Vec<Vec<Option<DMatrix<f64>>>> = vec![vec![None; times]; layers];
        for (k, t, m) in entries {
            out[k][t] = Some(m);
        }
        Ok(out
            .into_iter()
            .map(|row| row.into_iter().map(|m| m.expect("counted")).collect())
            .collect())
    }
}

impl BlockModelSpec {
    /// Assigns `n` nodes to communities in contiguous, as-equal-as-possible
    /// groups, identically for every layer and time point.
    pub fn equal_groups(n: usize, g1: usize, g2: usize, b: Vec<Vec<DMatrix<f64>>>) -> Result<Self> {
        let layers = b.len();
        let times = b.first().map_or(0, |r| r.len());
        let assign = |g: usize| (0..n).map(|i| i * g / n).collect::<Vec<_>>();
        let spec = Self {
            g1,
            g2,
            z: vec![assign(g1); layers],
            upsilon: vec![assign(g2); times],
            b,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn layers(&self) -> usize {
        self.b.len()
    }

    pub fn times(&self) -> usize {
        self.b.first().map_or(0, |r| r.len())
    }

    /// Node count implied by the label lists.
    pub fn n(&self) -> usize {
        self.z.first().map_or(0, |z| z.len())
    }

    pub fn validate(&self) -> Result<()> {
        let (layers, times) = (self.layers(), self.times());
        if layers == 0 || times == 0 {
            return Err(Error::InvalidSpec("B must contain at least one block".into()));
        }
        if self.b.iter().any(|row| row.len() != times) {
            return Err(Error::InvalidSpec("every layer needs T blocks".into()));
        }
        if self.z.len() != layers || self.upsilon.len() != times {
            return Err(Error::InvalidSpec(format!(
                "expected {layers} layer label lists and {times} time label lists, got {} and {}",
                self.z.len(),
                self.upsilon.len()
            )));
        }
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidSpec("label lists are empty".into()));
        }
        for (lists, g, what) in [(&self.z, self.g1, "z"), (&self.upsilon, self.g2, "upsilon")] {
            for (idx, l) in lists.iter().enumerate() {
                if l.len() != n {
                    return Err(Error::InvalidSpec(format!("{what}[{idx}] has {} labels, expected {n}", l.len())));
                }
                if let Some(bad) = l.iter().find(|&&c| c >= g) {
                    return Err(Error::InvalidSpec(format!("{what}[{idx}] has label {bad} >= {g}")));
                }
            }
        }
        for (k, row) in self.b.iter().enumerate() {
            for (t, m) in row.iter().enumerate() {
                if m.shape() != (self.g1, self.g2) {
                    return Err(Error::InvalidSpec(format!(
                        "B[{k},{t}] has shape {:?}, expected ({}, {})",
                        m.shape(),
                        self.g1,
                        self.g2
                    )));
                }
                if let Some(v) = m.iter().find(|v| !in_unit_interval(**v)) {
                    return Err(Error::ProbabilityOutOfRange {
                        value: *v,
                        location: format!("B[{k},{t}]"),
                    });
                }
            }
        }
        Ok(())
    }

    /// The `G1 K x G2 T` block matrix of all connection-probability matrices.
    pub fn stacked_b(&self) -> DMatrix<f64> {
        let (layers, times) = (self.layers(), self.times());
        let mut out = DMatrix::zeros(self.g1 * layers, self.g2 * times);
        for k in 0..layers {
            for t in 0..times {
                out.view_mut((k * self.g1, t * self.g2), (self.g1, self.g2))
                    .copy_from(&self.b[k][t]);
            }
        }
        out
    }
}

/// Number of nodes (and blocks) the built-in blockmodel uses in the published simulation.
pub const REFERENCE_SBM_N: usize = 1000;

/// Four-community, three-layer, three-period blockmodel with equal group
/// sizes and the same labels in every layer and period. Layers 1 and 2 share
/// their connection pattern, periods 1 and 3 share theirs, communities 1 and
/// 2 coincide in period 2 and layer 3 is homogeneous.
pub fn reference_sbm(n: usize) -> BlockModelSpec {
    let b1 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.08, 0.02, 0.18, 0.10, //
            0.02, 0.20, 0.04, 0.10, //
            0.18, 0.04, 0.02, 0.02, //
            0.10, 0.10, 0.02, 0.06,
        ],
    );
    let b2 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.16, 0.16, 0.04, 0.10, //
            0.16, 0.16, 0.04, 0.10, //
            0.04, 0.04, 0.09, 0.02, //
            0.10, 0.10, 0.02, 0.06,
        ],
    );
    let b3 = DMatrix::from_element(4, 4, 0.08);
    let b = vec![
        vec![b1.clone(), b2.clone(), b1.clone()],
        vec![b1.clone(), b2, b1],
        vec![b3.clone(), b3.clone(), b3],
    ];
    BlockModelSpec::equal_groups(n, 4, 4, b).expect("built-in spec is valid")
}

fn block_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(0);
    rng
}

/// Draws a graph with `A^{k,t}_{ij} ~ Bernoulli(X^k_i . Y^t_j)` for `i != j`.
pub fn sample_dmprdpg(pos: &LatentPositions, seed: u64) -> Result<DynamicMultiplexGraph> {
    pos.validate()?;
    let (n, layers, times) = (pos.n(), pos.layers(), pos.times());
    let blocks: Vec<CsrMatrix> = (0..layers * times)
        .into_par_iter()
        .map(|idx| {
            let (k, t) = (idx / times, idx % times);
            let p = &pos.left[k] * pos.right[t].transpose();
            let mut rng = block_rng(seed, idx as u64);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let u: f64 = rng.random();
                    if i != j && u < p[(i, j)] {
                        edges.push((i, j));
                    }
                }
            }
            CsrMatrix::from_pattern(n, n, edges)
        })
        .collect();
    DynamicMultiplexGraph::from_blocks(n, layers, times, true, blocks)
}

/// Appends the indices in `candidates` selected independently with
/// probability `p`, by jumping geometric gaps between successes.
fn bernoulli_select(candidates: &[usize], p: f64, rng: &mut ChaCha20Rng, out: &mut Vec<usize>) {
    if p <= 0.0 || candidates.is_empty() {
        return;
    }
    if p >= 1.0 {
        out.extend_from_slice(candidates);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut pos = 0usize;
    loop {
        let u: f64 = rng.random();
        // 1 - u lies in (0, 1], so the log is finite.
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !gap.is_finite() || gap >= (candidates.len() - pos) as f64 {
            return;
        }
        pos += gap as usize;
        out.push(candidates[pos]);
        pos += 1;
        if pos >= candidates.len() {
            return;
        }
    }
}

/// Draws a graph from the blockmodel: `A^{k,t}_{ij} ~ Bernoulli(B^{k,t}[z^k_i, upsilon^t_j])`.
///
/// With `undirected`, each `B^{k,t}` must be symmetric and `z^k == upsilon^t`;
/// the upper triangle is sampled and mirrored.
pub fn sample_dmpsbm(spec: &BlockModelSpec, n: usize, seed: u64, undirected: bool) -> Result<DynamicMultiplexGraph> {
    spec.validate()?;
    if spec.n() != n {
        return Err(Error::InvalidSpec(format!(
            "label lists describe {} nodes, requested {n}",
            spec.n()
        )));
    }
    let (layers, times) = (spec.layers(), spec.times());
    if undirected {
        for k in 0..layers {
            for t in 0..times {
                let b = &spec.b[k][t];
                if spec.g1 != spec.g2 || (b - b.transpose()).abs().max() > 0.0 {
                    return Err(Error::InvalidSpec(format!("B[{k},{t}] is not symmetric")));
                }
                if spec.z[k] != spec.upsilon[t] {
                    return Err(Error::InvalidSpec(format!(
                        "undirected sampling needs z[{k}] == upsilon[{t}]"
                    )));
                }
            }
        }
    }
    let blocks: Vec<CsrMatrix> = (0..layers * times)
        .into_par_iter()
        .map(|idx| {
            let (k, t) = (idx / times, idx % times);
            let b = &spec.b[k][t];
            let z = &spec.z[k];
            let ups = &spec.upsilon[t];
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); spec.g2];
            for (j, &h) in ups.iter().enumerate() {
                groups[h].push(j);
            }
            let mut rng = block_rng(seed, idx as u64);
            let mut edges = Vec::new();
            let mut row = Vec::new();
            for i in 0..n {
                row.clear();
                for (h, members) in groups.iter().enumerate() {
                    let p = b[(z[i], h)];
                    if undirected {
                        let start = members.partition_point(|&j| j <= i);
                        bernoulli_select(&members[start..], p, &mut rng, &mut row);
                    } else {
                        bernoulli_select(members, p, &mut rng, &mut row);
                    }
                }
                for &j in &row {
                    if j != i {
                        edges.push((i, j));
                        if undirected {
                            edges.push((j, i));
                        }
                    }
                }
            }
            CsrMatrix::from_pattern(n, n, edges)
        })
        .collect();
    DynamicMultiplexGraph::from_blocks(n, layers, times, !undirected, blocks)
}

/// Community-level positions recovered from the stacked `B` matrix.
#[derive(Debug, Clone)]
pub struct SbmLatent {
    /// `K` matrices `G1 x d`.
    pub mu: Vec<DMatrix<f64>>,
    /// `T` matrices `G2 x d`.
    pub lambda: Vec<DMatrix<f64>>,
    pub singular_values: Vec<f64>,
}

impl SbmLatent {
    pub fn dim(&self) -> usize {
        self.singular_values.len()
    }

    /// Expands community positions into node positions, `X^k_i = mu^k_{z^k_i}`.
    pub fn node_positions(&self, spec: &BlockModelSpec) -> Result<LatentPositions> {
        let expand = |blocks: &[DMatrix<f64>], labels: &[Vec<usize>]| -> Vec<DMatrix<f64>> {
            blocks
                .iter()
                .zip(labels)
                .map(|(m, l)| DMatrix::from_fn(l.len(), m.ncols(), |i, c| m[(l[i], c)]))
                .collect()
        };
        LatentPositions::new(expand(&self.mu, &spec.z), expand(&self.lambda, &spec.upsilon))
    }
}

/// Embeds the stacked `B` matrix at its numerical rank, giving
/// `mu^k_g . lambda^t_h = B^{k,t}[g, h]`.
pub fn sbm_latent_positions(spec: &BlockModelSpec) -> Result<SbmLatent> {
    spec.validate()?;
    let stacked = spec.stacked_b();
    let d = linalg::numerical_rank(&stacked, RANK_TOLERANCE);
    let (layers, times) = (spec.layers(), spec.times());
    if d == 0 {
        return Ok(SbmLatent {
            mu: vec![DMatrix::zeros(spec.g1, 0); layers],
            lambda: vec![DMatrix::zeros(spec.g2, 0); times],
            singular_values: Vec::new(),
        });
    }
    let unfolded = UnfoldedMatrix::from_dense(1, spec.g1 * layers, spec.g2 * times, stacked)
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let opts = SvdOptions {
        method: SvdMethod::Dense,
        ..Default::default()
    };
    let pair: EmbeddingPair = embed_unfolded(&unfolded, d, &opts)?;
    let left = pair.stacked_left();
    let right = pair.stacked_right();
    Ok(SbmLatent {
        mu: unstack_left(&left, spec.g1, layers)?,
        lambda: unstack_right(&right, spec.g2, times)?,
        singular_values: pair.singular_values,
    })
}

/// `P` with `P^{k,t} = X^k (Y^t)^T`; the diagonal is kept.
pub fn expected_unfolded(pos: &LatentPositions) -> Result<UnfoldedMatrix> {
    let p = pos.stacked_left() * pos.stacked_right().transpose();
    UnfoldedMatrix::from_dense(pos.n(), pos.layers(), pos.times(), p)
}

/// Block-constant `P` with `P^{k,t}[i, j] = B^{k,t}[z^k_i, upsilon^t_j]`.
pub fn expected_unfolded_sbm(spec: &BlockModelSpec) -> Result<UnfoldedMatrix> {
    spec.validate()?;
    let (n, layers, times) = (spec.n(), spec.layers(), spec.times());
    let p = DMatrix::from_fn(n * layers, n * times, |r, c| {
        let (k, i) = (r / n, r % n);
        let (t, j) = (c / n, c % n);
        spec.b[k][t][(spec.z[k][i], spec.upsilon[t][j])]
    });
    UnfoldedMatrix::from_dense(n, layers, times, p)
}
