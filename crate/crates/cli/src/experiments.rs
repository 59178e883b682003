//! End-to-end simulation experiments on the built-in four-community blockmodel.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use duase_core::clustering::{adjusted_rand_index, cluster_left, cluster_right, match_components, ClusterOptions};
use duase_core::embedding::{duase, general_align, two_to_inf_error};
use duase_core::io::write_json;
use duase_core::isomirror::{iso_mirror, BlockNorm, DistanceMode};
use duase_core::sampler::{reference_sbm, sample_dmpsbm, sbm_latent_positions, BlockModelSpec};
use duase_core::{EmbeddingPair, Error, Result};

/// Embedding dimension of the built-in model (rank of its stacked block matrix).
pub const REFERENCE_DIM: usize = 5;
pub const REFERENCE_GROUPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    SbmClusters,
    ErrorScaling,
    IsomirrorSbm,
}

impl std::str::FromStr for ExperimentName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sbm-clusters" => Ok(Self::SbmClusters),
            "error-scaling" => Ok(Self::ErrorScaling),
            "isomirror-sbm" => Ok(Self::IsomirrorSbm),
            other => Err(Error::InvalidArgument(format!("unknown experiment `{other}`"))),
        }
    }
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SbmClusters => "sbm-clusters",
            Self::ErrorScaling => "error-scaling",
            Self::IsomirrorSbm => "isomirror-sbm",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentParams {
    pub seed: u64,
    /// Node count for the single-size experiments.
    pub n: usize,
    /// Node counts for the scaling experiment.
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub d: usize,
    pub restarts: usize,
    pub c: usize,
    pub mode: DistanceMode,
    pub norm: BlockNorm,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 1000,
            sizes: vec![500, 1000, 2000],
            reps: 10,
            d: REFERENCE_DIM,
            restarts: duase_core::clustering::DEFAULT_RESTARTS,
            c: 2,
            mode: DistanceMode::Direct,
            norm: BlockNorm::Spectral,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Criterion {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentName,
    pub params: ExperimentParams,
    pub criteria: Vec<Criterion>,
    pub files: Vec<String>,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

struct Table {
    name: String,
    text: String,
}

impl Table {
    fn new(name: &str, header: &str) -> Self {
        Self {
            name: name.to_string(),
            text: format!("{header}\n"),
        }
    }

    fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }
}

/// Seed for one (size, replicate) cell, so cells are independent of run order.
pub fn cell_seed(seed: u64, n: usize, rep: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((n as u64) << 20)
        .wrapping_add(rep as u64)
}

/// Samples the built-in model and embeds it.
pub fn reference_embedding(n: usize, d: usize, seed: u64) -> Result<(BlockModelSpec, EmbeddingPair)> {
    let spec = reference_sbm(n);
    let graph = sample_dmpsbm(&spec, n, seed, false)?;
    let pair = duase(&graph, d)?;
    Ok((spec, pair))
}

/// Means of the rows of `block` grouped by `labels` (`groups x d`).
pub fn group_means(block: &DMatrix<f64>, labels: &[usize], groups: usize) -> DMatrix<f64> {
    let d = block.ncols();
    let mut sums = DMatrix::zeros(groups, d);
    let mut counts = vec![0usize; groups];
    for (i, &g) in labels.iter().enumerate() {
        counts[g] += 1;
        for j in 0..d {
            sums[(g, j)] += block[(i, j)];
        }
    }
    for g in 0..groups {
        let c = counts[g].max(1) as f64;
        for j in 0..d {
            sums[(g, j)] /= c;
        }
    }
    sums
}

fn pairwise_distances(means: &DMatrix<f64>) -> Vec<((usize, usize), f64)> {
    let g = means.nrows();
    let mut out = Vec::new();
    for a in 0..g {
        for b in a + 1..g {
            out.push(((a, b), (means.row(a) - means.row(b)).norm()));
        }
    }
    out
}

/// Clustering summaries of one simulated graph.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterFindings {
    pub ari_left: Vec<f64>,
    pub ari_right: Vec<f64>,
    /// Distance between the fitted means matched to communities 1 and 2 at
    /// time 2, divided by the smallest distance among the other pairs.
    pub merged_ratio: f64,
    /// Largest pairwise fitted-mean distance in layer 3 divided by the
    /// smallest pairwise fitted-mean distance in layer 1.
    pub degenerate_ratio: f64,
    pub fitted_means_right: Vec<Vec<Vec<f64>>>,
    pub fitted_means_left: Vec<Vec<Vec<f64>>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

/// Per-block GMM clustering of both sides of the built-in model.
pub fn cluster_findings(spec: &BlockModelSpec, pair: &EmbeddingPair, seed: u64, restarts: usize) -> Result<ClusterFindings> {
    let options = ClusterOptions {
        seed,
        restarts,
        pooled: false,
    };
    let right = cluster_right(pair, spec.g2, &options)?;
    let left = cluster_left(pair, spec.g1, &options)?;
    let ari_right = (0..pair.times())
        .map(|t| adjusted_rand_index(&right.labels[t], &spec.upsilon[t]))
        .collect::<Result<Vec<_>>>()?;
    let ari_left = (0..pair.layers())
        .map(|k| adjusted_rand_index(&left.labels[k], &spec.z[k]))
        .collect::<Result<Vec<_>>>()?;

    let merged_ratio = if pair.times() >= 2 && spec.g2 >= 3 {
        let t = 1;
        let fit = right.fit_for_block(t);
        let reference = group_means(&pair.right[t], &spec.upsilon[t], spec.g2);
        let matched = match_components(&fit.means, &reference)?;
        let matched_means = DMatrix::from_fn(spec.g2, fit.dim(), |g, j| fit.means[(matched[g], j)]);
        let dists = pairwise_distances(&matched_means);
        let merged = dists.iter().find(|(p, _)| *p == (0, 1)).map(|x| x.1).unwrap_or(f64::NAN);
        let rest = dists
            .iter()
            .filter(|(p, _)| *p != (0, 1))
            .map(|x| x.1)
            .fold(f64::INFINITY, f64::min);
        merged / rest
    } else {
        f64::NAN
    };

    let degenerate_ratio = if pair.layers() >= 3 {
        let spread = pairwise_distances(&left.fit_for_block(2).means)
            .iter()
            .map(|x| x.1)
            .fold(0.0, f64::max);
        let separation = pairwise_distances(&left.fit_for_block(0).means)
            .iter()
            .map(|x| x.1)
            .fold(f64::INFINITY, f64::min);
        spread / separation
    } else {
        f64::NAN
    };

    Ok(ClusterFindings {
        ari_left,
        ari_right,
        merged_ratio,
        degenerate_ratio,
        fitted_means_right: right.fits.iter().map(|f| rows(&f.means)).collect(),
        fitted_means_left: left.fits.iter().map(|f| rows(&f.means)).collect(),
    })
}

fn sbm_clusters(params: &ExperimentParams) -> Result<(Vec<Criterion>, Vec<Table>)> {
    let (spec, pair) = reference_embedding(params.n, params.d, params.seed)?;
    let f = cluster_findings(&spec, &pair, params.seed, params.restarts)?;

    let mut ari = Table::new("ari.csv", "side,block,ari");
    for (t, v) in f.ari_right.iter().enumerate() {
        ari.row(&["right".into(), (t + 1).to_string(), v.to_string()]);
    }
    for (k, v) in f.ari_left.iter().enumerate() {
        ari.row(&["left".into(), (k + 1).to_string(), v.to_string()]);
    }
    let mut means = Table::new("fitted_means.csv", "side,block,component,coordinate,value");
    for (side, blocks) in [("right", &f.fitted_means_right), ("left", &f.fitted_means_left)] {
        for (b, comps) in blocks.iter().enumerate() {
            for (g, m) in comps.iter().enumerate() {
                for (j, v) in m.iter().enumerate() {
                    means.row(&[side.into(), (b + 1).to_string(), (g + 1).to_string(), (j + 1).to_string(), v.to_string()]);
                }
            }
        }
    }
    let mut points = Table::new("embedding_right.csv", "time,node,community,dim1,dim2");
    for (t, block) in pair.right.iter().enumerate() {
        for i in 0..block.nrows() {
            points.row(&[
                (t + 1).to_string(),
                i.to_string(),
                (spec.upsilon[t][i] + 1).to_string(),
                block[(i, 0)].to_string(),
                block[(i, 1.min(block.ncols() - 1))].to_string(),
            ]);
        }
    }

    let ari_ok = |t: usize| f.ari_right.get(t).copied().unwrap_or(f64::NAN);
    let criteria = vec![
        Criterion::new(
            "right blocks t=1,t=3 ARI >= 0.9",
            ari_ok(0) >= 0.9 && ari_ok(2) >= 0.9,
            format!("ARI t=1 {:.4}, t=3 {:.4}", ari_ok(0), ari_ok(2)),
        ),
        Criterion::new(
            "t=2 communities 1,2 merged (ratio < 0.25)",
            f.merged_ratio < 0.25,
            format!("ratio {:.4}", f.merged_ratio),
        ),
        Criterion::new(
            "layer k=3 degenerate (ratio <= 0.2)",
            f.degenerate_ratio <= 0.2,
            format!("ratio {:.4}", f.degenerate_ratio),
        ),
    ];
    Ok((criteria, vec![ari, means, points]))
}

/// Median of the left two-to-infinity errors for each size, plus all raw errors.
pub fn scaling_errors(params: &ExperimentParams) -> Result<Vec<(usize, Vec<f64>)>> {
    params
        .sizes
        .iter()
        .map(|&n| {
            let spec = reference_sbm(n);
            let truth = sbm_latent_positions(&spec)?.node_positions(&spec)?;
            let target = truth.stacked_left();
            let errors = (0..params.reps)
                .map(|rep| {
                    let graph = sample_dmpsbm(&spec, n, cell_seed(params.seed, n, rep), false)?;
                    let pair = duase(&graph, params.d)?;
                    let est = pair.stacked_left();
                    let map = general_align(&est, &target)?;
                    two_to_inf_error(&est, &target, &map)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((n, errors))
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn rate(n: usize) -> f64 {
    let n = n as f64;
    (n.ln() / n).sqrt()
}

fn error_scaling(params: &ExperimentParams) -> Result<(Vec<Criterion>, Vec<Table>)> {
    let results = scaling_errors(params)?;
    let mut raw = Table::new("errors.csv", "n,rep,error");
    let mut summary = Table::new("error_summary.csv", "n,median_error,rate,ratio");
    let mut medians = Vec::new();
    let mut ratios = Vec::new();
    for (n, errors) in &results {
        for (rep, e) in errors.iter().enumerate() {
            raw.row(&[n.to_string(), rep.to_string(), e.to_string()]);
        }
        let med = median(errors);
        let ratio = med / rate(*n);
        summary.row(&[n.to_string(), med.to_string(), rate(*n).to_string(), ratio.to_string()]);
        medians.push(med);
        ratios.push(ratio);
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let criteria = vec![
        Criterion::new(
            "median error strictly decreasing in n",
            decreasing,
            format!("medians {medians:.4?}"),
        ),
        Criterion::new(
            "error / sqrt(log n / n) varies by < 1.6x",
            spread < 1.6,
            format!("ratios {ratios:.4?}, spread {spread:.4}"),
        ),
    ];
    Ok((criteria, vec![raw, summary]))
}

/// Time and layer iso-mirror curves of one simulated graph.
#[derive(Debug, Clone, Serialize)]
pub struct MirrorFindings {
    pub time_curve: Vec<f64>,
    pub layer_curve: Vec<f64>,
    pub time_distances: Vec<Vec<f64>>,
    pub layer_distances: Vec<Vec<f64>>,
    /// `|psi(1) - psi(3)| / max(|psi(1) - psi(2)|, |psi(3) - psi(2)|)` on the time curve.
    pub time_ratio: f64,
    /// `|psi(1) - psi(2)| / min(|psi(1) - psi(3)|, |psi(2) - psi(3)|)` on the layer curve.
    pub layer_ratio: f64,
}

pub fn mirror_findings(pair: &EmbeddingPair, mode: DistanceMode, norm: BlockNorm, c: usize) -> Result<MirrorFindings> {
    let time = iso_mirror(&pair.right, mode, norm, c.min(pair.times().saturating_sub(1)).max(1))?;
    let layer = iso_mirror(&pair.left, mode, norm, c.min(pair.layers().saturating_sub(1)).max(1))?;
    let ratio_or_nan = |curve: &[f64], f: &dyn Fn(&[f64]) -> f64| if curve.len() >= 3 { f(curve) } else { f64::NAN };
    let time_ratio = ratio_or_nan(&time.curve, &|p| {
        (p[0] - p[2]).abs() / (p[0] - p[1]).abs().max((p[2] - p[1]).abs())
    });
    let layer_ratio = ratio_or_nan(&layer.curve, &|p| {
        (p[0] - p[1]).abs() / (p[0] - p[2]).abs().min((p[1] - p[2]).abs())
    });
    Ok(MirrorFindings {
        time_curve: time.curve,
        layer_curve: layer.curve,
        time_distances: time.distance_matrix,
        layer_distances: layer.distance_matrix,
        time_ratio,
        layer_ratio,
    })
}

fn isomirror_sbm(params: &ExperimentParams) -> Result<(Vec<Criterion>, Vec<Table>)> {
    let (_, pair) = reference_embedding(params.n, params.d, params.seed)?;
    let f = mirror_findings(&pair, params.mode, params.norm, params.c)?;
    let mut curves = Table::new("curves.csv", "side,index,curve_value");
    for (t, v) in f.time_curve.iter().enumerate() {
        curves.row(&["time".into(), (t + 1).to_string(), v.to_string()]);
    }
    for (k, v) in f.layer_curve.iter().enumerate() {
        curves.row(&["layer".into(), (k + 1).to_string(), v.to_string()]);
    }
    let mut dist = Table::new("distances.csv", "side,a,b,distance");
    for (side, m) in [("time", &f.time_distances), ("layer", &f.layer_distances)] {
        for (a, r) in m.iter().enumerate() {
            for (b, v) in r.iter().enumerate() {
                dist.row(&[side.into(), (a + 1).to_string(), (b + 1).to_string(), v.to_string()]);
            }
        }
    }
    let criteria = vec![
        Criterion::new(
            "time curve psi(1) ~ psi(3) (ratio <= 0.15)",
            f.time_ratio <= 0.15,
            format!("ratio {:.4}", f.time_ratio),
        ),
        Criterion::new(
            "layer curve psi(1) ~ psi(2) (ratio <= 0.15)",
            f.layer_ratio <= 0.15,
            format!("ratio {:.4}", f.layer_ratio),
        ),
    ];
    Ok((criteria, vec![curves, dist]))
}

/// Runs an experiment and writes its tables plus `report.json` and
/// `report.txt` (one PASS/FAIL line per check) into `out`.
pub fn run_experiment(name: ExperimentName, params: &ExperimentParams, out: &Path) -> Result<ExperimentReport> {
    let (criteria, tables) = match name {
        ExperimentName::SbmClusters => sbm_clusters(params)?,
        ExperimentName::ErrorScaling => error_scaling(params)?,
        ExperimentName::IsomirrorSbm => isomirror_sbm(params)?,
    };
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let mut files = Vec::new();
    for t in &tables {
        let path = out.join(&t.name);
        fs::write(&path, &t.text).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        files.push(t.name.clone());
    }
    files.push("report.json".into());
    files.push("report.txt".into());
    let report = ExperimentReport {
        experiment: name,
        params: params.clone(),
        criteria,
        files,
    };
    write_json(&out.join("report.json"), &report)?;
    let mut text = String::new();
    for c in &report.criteria {
        let _ = writeln!(text, "{}", c.line());
    }
    let path = out.join("report.txt");
    fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn group_means_by_label() {
        let block = DMatrix::from_row_slice(4, 1, &[1.0, 3.0, 10.0, 20.0]);
        let m = group_means(&block, &[0, 0, 1, 1], 2);
        assert_eq!(m[(0, 0)], 2.0);
        assert_eq!(m[(1, 0)], 15.0);
    }

    #[test]
    fn names_parse() {
        for name in ["sbm-clusters", "error-scaling", "isomirror-sbm"] {
            assert_eq!(name.parse::<ExperimentName>().unwrap().as_str(), name);
        }
        assert!("fig9".parse::<ExperimentName>().is_err());
    }

    #[test]
    fn small_run_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let params = ExperimentParams {
            n: 120,
            ..Default::default()
        };
        let report = run_experiment(ExperimentName::IsomirrorSbm, &params, dir.path()).unwrap();
        assert_eq!(report.criteria.len(), 2);
        let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(dir.path().join("curves.csv").exists());
    }
}
