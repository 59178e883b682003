//! On-disk formats.
//!
//! - Graph directory: `graph.json` (sizes, direction, labels) and
//!   `edges.csv` with header `layer,time,source,target` (0-based indices).
//! - Embedding directory: `embedding.json` plus one CSV per block,
//!   `X_k<k>.csv` and `Y_t<t>.csv` (1-based block numbers), each with header
//!   `node,dim1,...,dimd`.
//! - Labels CSV: `node,layer_or_time,label`.
//! - Latent positions directory: `positions.json` plus the same block CSVs.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::clustering::BlockClustering;
use crate::embedding::{EmbeddingPair, Side};
use crate::error::{Error, Result};
use crate::graph::{label_or_index, DynamicMultiplexGraph};
use crate::isomirror::IsoMirrorResult;
use crate::sampler::{BlockModelSpec, LatentPositions};

pub const GRAPH_MANIFEST: &str = "graph.json";
pub const EDGE_FILE: &str = "edges.csv";
pub const EMBEDDING_MANIFEST: &str = "embedding.json";
pub const POSITIONS_MANIFEST: &str = "positions.json";

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path.display().to_string(), e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path.display().to_string(), format!("{other:?}")),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphManifest {
    n: usize,
    layers: usize,
    times: usize,
    directed: bool,
    edges: usize,
    node_labels: Option<Vec<String>>,
    layer_labels: Option<Vec<String>>,
    time_labels: Option<Vec<String>>,
}

pub fn save_graph(dir: &Path, graph: &DynamicMultiplexGraph) -> Result<()> {
    create_dir(dir)?;
    let manifest = GraphManifest {
        n: graph.n(),
        layers: graph.layers(),
        times: graph.times(),
        directed: graph.is_directed(),
        edges: graph.edge_count(),
        node_labels: graph.node_labels.clone(),
        layer_labels: graph.layer_labels.clone(),
        time_labels: graph.time_labels.clone(),
    };
    write_json(&dir.join(GRAPH_MANIFEST), &manifest)?;
    let path = dir.join(EDGE_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["layer", "time", "source", "target"]).map_err(|e| csv_error(&path, e))?;
    for (k, t, i, j) in graph.edges() {
        w.write_record([k.to_string(), t.to_string(), i.to_string(), j.to_string()])
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn load_graph(dir: &Path) -> Result<DynamicMultiplexGraph> {
    let manifest: GraphManifest = read_json(&dir.join(GRAPH_MANIFEST))?;
    let path = dir.join(EDGE_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let mut edges = Vec::with_capacity(manifest.edges);
    for (line, rec) in r.deserialize::<(usize, usize, usize, usize)>().enumerate() {
        let rec = rec.map_err(|e| Error::parse(format!("{} line {}", path.display(), line + 2), e))?;
        edges.push(rec);
    }
    DynamicMultiplexGraph::from_edges(manifest.n, manifest.layers, manifest.times, manifest.directed, edges)?
        .with_labels(manifest.node_labels, manifest.layer_labels, manifest.time_labels)
}

/// Writes `node,dim1..dimd` rows; `node` is the row label.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>, row_labels: &[String]) -> Result<()> {
    if row_labels.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} row labels for {} rows",
            row_labels.len(),
            m.nrows()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["node".to_string()];
    header.extend((1..=m.ncols()).map(|j| format!("dim{j}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, label) in row_labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend(m.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a matrix written by [`write_matrix_csv`]; returns row labels and values.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.get(0) != Some("node") {
        return Err(Error::parse(path.display().to_string(), "first column must be `node`"));
    }
    let d = headers.len() - 1;
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        labels.push(rec[0].to_string());
        for j in 1..=d {
            let v: f64 = rec[j].trim().parse().map_err(|e| {
                Error::parse(format!("{} line {}", path.display(), line + 2), e)
            })?;
            values.push(v);
        }
    }
    Ok((labels.clone(), DMatrix::from_row_slice(labels.len(), d, &values)))
}

fn block_file(side: Side, b: usize) -> String {
    match side {
        Side::Left => format!("X_k{}.csv", b + 1),
        Side::Right => format!("Y_t{}.csv", b + 1),
    }
}

/// Labels carried alongside an embedding on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLabels {
    pub nodes: Vec<String>,
    pub layers: Vec<String>,
    pub times: Vec<String>,
}

impl BlockLabels {
    pub fn from_graph(graph: &DynamicMultiplexGraph) -> Self {
        Self {
            nodes: (0..graph.n()).map(|i| graph.node_label(i)).collect(),
            layers: (0..graph.layers()).map(|k| graph.layer_label(k)).collect(),
            times: (0..graph.times()).map(|t| graph.time_label(t)).collect(),
        }
    }

    pub fn indices(n: usize, layers: usize, times: usize) -> Self {
        let none = None;
        Self {
            nodes: (0..n).map(|i| label_or_index(&none, i)).collect(),
            layers: (0..layers).map(|i| label_or_index(&none, i)).collect(),
            times: (0..times).map(|i| label_or_index(&none, i)).collect(),
        }
    }

    pub fn blocks(&self, side: Side) -> &[String] {
        match side {
            Side::Left => &self.layers,
            Side::Right => &self.times,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EmbeddingManifest {
    d: usize,
    n: usize,
    layers: usize,
    times: usize,
    singular_values: Vec<f64>,
    rescaled: bool,
    zero_rows_left: Vec<usize>,
    zero_rows_right: Vec<usize>,
    labels: BlockLabels,
}

pub fn save_embedding(dir: &Path, pair: &EmbeddingPair, labels: &BlockLabels) -> Result<()> {
    create_dir(dir)?;
    let manifest = EmbeddingManifest {
        d: pair.dim(),
        n: pair.n(),
        layers: pair.layers(),
        times: pair.times(),
        singular_values: pair.singular_values.clone(),
        rescaled: pair.rescaled,
        zero_rows_left: pair.zero_rows_left.clone(),
        zero_rows_right: pair.zero_rows_right.clone(),
        labels: labels.clone(),
    };
    write_json(&dir.join(EMBEDDING_MANIFEST), &manifest)?;
    for side in [Side::Left, Side::Right] {
        for (b, m) in pair.blocks(side).iter().enumerate() {
            write_matrix_csv(&dir.join(block_file(side, b)), m, &labels.nodes)?;
        }
    }
    Ok(())
}

fn read_blocks(dir: &Path, side: Side, count: usize, n: usize, d: usize) -> Result<Vec<DMatrix<f64>>> {
    (0..count)
        .map(|b| {
            let path = dir.join(block_file(side, b));
            let (_, m) = read_matrix_csv(&path)?;
            if m.shape() != (n, d) {
                return Err(Error::DimensionMismatch(format!(
                    "{} has shape {:?}, expected ({n}, {d})",
                    path.display(),
                    m.shape()
                )));
            }
            Ok(m)
        })
        .collect()
}

pub fn load_embedding(dir: &Path) -> Result<(EmbeddingPair, BlockLabels)> {
    let manifest: EmbeddingManifest = read_json(&dir.join(EMBEDDING_MANIFEST))?;
    let left = read_blocks(dir, Side::Left, manifest.layers, manifest.n, manifest.d)?;
    let right = read_blocks(dir, Side::Right, manifest.times, manifest.n, manifest.d)?;
    let pair = EmbeddingPair {
        left,
        right,
        singular_values: manifest.singular_values,
        rescaled: manifest.rescaled,
        zero_rows_left: manifest.zero_rows_left,
        zero_rows_right: manifest.zero_rows_right,
    };
    Ok((pair, manifest.labels))
}

/// Writes `node,layer_or_time,label` rows, block by block.
pub fn write_labels_csv(path: &Path, labels: &[Vec<usize>], node_labels: &[String], block_labels: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["node", "layer_or_time", "label"]).map_err(|e| csv_error(path, e))?;
    for (b, block) in labels.iter().enumerate() {
        for (i, l) in block.iter().enumerate() {
            w.write_record([node_labels[i].as_str(), block_labels[b].as_str(), &l.to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a labels CSV back into per-block lists, in order of first appearance of each block.
pub fn read_labels_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<usize>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut blocks: Vec<String> = Vec::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for rec in r.deserialize::<(String, String, usize)>() {
        let (_, block, label) = rec.map_err(|e| csv_error(path, e))?;
        let b = match blocks.iter().position(|x| *x == block) {
            Some(b) => b,
            None => {
                blocks.push(block);
                out.push(Vec::new());
                blocks.len() - 1
            }
        };
        out[b].push(label);
    }
    Ok((blocks, out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub mean: Vec<f64>,
    pub weight: f64,
    pub collapsed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub block: String,
    pub components: Vec<ComponentSummary>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Summaries of each fit in a clustering; pooled fits are labelled `pooled`.
pub fn fit_summaries(clustering: &BlockClustering, block_labels: &[String]) -> Vec<FitSummary> {
    clustering
        .fits
        .iter()
        .enumerate()
        .map(|(b, fit)| FitSummary {
            block: if clustering.fits.len() == 1 && block_labels.len() != 1 {
                "pooled".to_string()
            } else {
                block_labels[b].clone()
            },
            components: (0..fit.components())
                .map(|g| ComponentSummary {
                    mean: fit.means.row(g).iter().cloned().collect(),
                    weight: fit.weights[g],
                    collapsed: fit.collapsed[g],
                })
                .collect(),
            log_likelihood: fit.log_likelihood,
            converged: fit.converged,
            iterations: fit.loglik_trace.len(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsoMirrorReport {
    #[serde(flatten)]
    pub result: IsoMirrorResult,
    pub labels: Vec<String>,
}

/// `isomirror.json` and `curve.csv` (`index_label,curve_value`).
pub fn save_isomirror(dir: &Path, result: &IsoMirrorResult, labels: &[String]) -> Result<()> {
    create_dir(dir)?;
    let report = IsoMirrorReport {
        result: result.clone(),
        labels: labels.to_vec(),
    };
    write_json(&dir.join("isomirror.json"), &report)?;
    let path = dir.join("curve.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["index_label", "curve_value"]).map_err(|e| csv_error(&path, e))?;
    for (label, v) in labels.iter().zip(&result.curve) {
        w.write_record([label.as_str(), &v.to_string()]).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PositionsManifest {
    n: usize,
    d: usize,
    layers: usize,
    times: usize,
    rho: f64,
}

/// Saves the (scaled) positions `X^k`, `Y^t`.
pub fn save_positions(dir: &Path, pos: &LatentPositions) -> Result<()> {
    create_dir(dir)?;
    let manifest = PositionsManifest {
        n: pos.n(),
        d: pos.dim(),
        layers: pos.layers(),
        times: pos.times(),
        rho: pos.rho,
    };
    write_json(&dir.join(POSITIONS_MANIFEST), &manifest)?;
    let labels = BlockLabels::indices(pos.n(), pos.layers(), pos.times());
    for (b, m) in pos.left.iter().enumerate() {
        write_matrix_csv(&dir.join(block_file(Side::Left, b)), m, &labels.nodes)?;
    }
    for (b, m) in pos.right.iter().enumerate() {
        write_matrix_csv(&dir.join(block_file(Side::Right, b)), m, &labels.nodes)?;
    }
    Ok(())
}

pub fn load_positions(dir: &Path) -> Result<LatentPositions> {
    let m: PositionsManifest = read_json(&dir.join(POSITIONS_MANIFEST))?;
    let left = read_blocks(dir, Side::Left, m.layers, m.n, m.d)?;
    let right = read_blocks(dir, Side::Right, m.times, m.n, m.d)?;
    if m.rho == 1.0 {
        LatentPositions::new(left, right)
    } else {
        let inv = 1.0 / m.rho.sqrt();
        let xi = left.into_iter().map(|x| x * inv).collect();
        let nu = right.into_iter().map(|y| y * inv).collect();
        LatentPositions::with_sparsity(xi, nu, m.rho)
    }
}

pub fn load_spec(path: &Path) -> Result<BlockModelSpec> {
    let spec: BlockModelSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

pub fn save_spec(path: &Path, spec: &BlockModelSpec) -> Result<()> {
    write_json(path, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::duase;
    use crate::sampler::{reference_sbm, sample_dmpsbm};

    #[test]
    fn graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = DynamicMultiplexGraph::from_edges(4, 2, 3, true, [(0, 0, 0, 1), (1, 2, 3, 2), (1, 0, 2, 0)])
            .unwrap()
            .with_labels(Some(vec!["a".into(), "b".into(), "c".into(), "d".into()]), None, None)
            .unwrap();
        save_graph(dir.path(), &g).unwrap();
        assert_eq!(load_graph(dir.path()).unwrap(), g);
    }

    #[test]
    fn embedding_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = sample_dmpsbm(&reference_sbm(40), 40, 1, false).unwrap();
        let pair = duase(&g, 3).unwrap();
        let labels = BlockLabels::from_graph(&g);
        save_embedding(dir.path(), &pair, &labels).unwrap();
        let (back, back_labels) = load_embedding(dir.path()).unwrap();
        assert_eq!(back, pair);
        assert_eq!(back_labels, labels);
        let header = fs::read_to_string(dir.path().join("X_k1.csv")).unwrap();
        assert!(header.starts_with("node,dim1,dim2,dim3\n"));
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let labels = vec![vec![0, 1, 1], vec![2, 2, 0]];
        let nodes: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let blocks = vec!["2020-01".to_string(), "2020-02".to_string()];
        write_labels_csv(&path, &labels, &nodes, &blocks).unwrap();
        let (b, l) = read_labels_csv(&path).unwrap();
        assert_eq!(b, blocks);
        assert_eq!(l, labels);
    }

    #[test]
    fn spec_and_positions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = reference_sbm(12);
        let path = dir.path().join("spec.json");
        save_spec(&path, &spec).unwrap();
        assert_eq!(load_spec(&path).unwrap(), spec);

        let pos = crate::sampler::sbm_latent_positions(&spec).unwrap().node_positions(&spec).unwrap();
        save_positions(&dir.path().join("pos"), &pos).unwrap();
        let back = load_positions(&dir.path().join("pos")).unwrap();
        assert_eq!(back.left, pos.left);
        assert_eq!(back.right, pos.right);
    }

    #[test]
    fn missing_files_are_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_graph(dir.path()), Err(Error::Io { .. })));
    }
}
