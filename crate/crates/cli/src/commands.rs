//! Command implementations. Each writes its outputs plus a `manifest.json`
//! echoing the resolved configuration.

use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use duase_core::clustering::{cluster_side, ClusterOptions, DEFAULT_RESTARTS};
use duase_core::embedding::{embed_unfolded, rescale_balanced, select_dimension};
use duase_core::events::{ingest_events, monthly_bins, parse_timestamp, uniform_bins, EventTable, IngestOptions};
use duase_core::graph::build_unfolded;
use duase_core::io::{self, BlockLabels};
use duase_core::isomirror::{iso_mirror, BlockNorm, DistanceMode};
use duase_core::sampler::{reference_sbm, sample_dmpsbm, BlockModelSpec};
use duase_core::svd::SvdOptions;
use duase_core::{Error, Result, Side};

use crate::config::RunConfig;
use crate::experiments::{run_experiment, ExperimentName, ExperimentParams};

#[derive(Debug, Parser)]
#[command(name = "duase", version, about = "Spectral embedding of dynamic multiplex graphs")]
pub struct Cli {
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML or JSON file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bin an event CSV (source,target,layer,timestamp) into a graph.
    Ingest(IngestArgs),
    /// Sample a graph from a blockmodel spec.
    Simulate(SimulateArgs),
    /// Embed a graph.
    Embed(EmbedArgs),
    /// Cluster the blocks of one embedding side with Gaussian mixtures.
    Cluster(ClusterArgs),
    /// Iso-mirror curve over the blocks of one embedding side.
    Isomirror(IsomirrorArgs),
    /// Run a built-in simulation experiment.
    Experiment(ExperimentArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Simulate(_) => "simulate",
            Command::Embed(_) => "embed",
            Command::Cluster(_) => "cluster",
            Command::Isomirror(_) => "isomirror",
            Command::Experiment(_) => "experiment",
        }
    }
}

fn set(flag: bool) -> Option<bool> {
    flag.then_some(true)
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub events: Option<std::path::PathBuf>,
    /// `monthly` or `uniform:<seconds>`.
    #[arg(long)]
    pub bins: Option<String>,
    /// Drop events before this time (epoch seconds or `YYYY-MM-DD`).
    #[arg(long)]
    pub from: Option<String>,
    /// Drop events at or after this time.
    #[arg(long)]
    pub until: Option<String>,
    /// Comma-separated layer order.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<String>>,
    /// Lexicographic ordering and errors on unknown layers.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Blockmodel spec JSON.
    #[arg(long)]
    pub spec: Option<std::path::PathBuf>,
    /// Built-in four-community, three-layer, three-period model.
    #[arg(long)]
    pub reference_sbm: bool,
    /// Built-in model shape with every probability zero.
    #[arg(long)]
    pub empty: bool,
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample symmetric adjacency matrices.
    #[arg(long)]
    pub undirected: bool,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub graph: Option<std::path::PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Choose `d` at the elbow of the leading singular values.
    #[arg(long)]
    pub auto_d: bool,
    /// Number of singular values inspected by `--auto-d`.
    #[arg(long)]
    pub d_max: Option<usize>,
    /// Balance the scale of the left and right embeddings.
    #[arg(long)]
    pub rescale: bool,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub embedding: Option<std::path::PathBuf>,
    /// `left` (layers) or `right` (times).
    #[arg(long)]
    pub side: Option<String>,
    /// Number of mixture components.
    #[arg(long)]
    pub groups: Option<usize>,
    /// One mixture over all blocks of the side.
    #[arg(long)]
    pub pooled: bool,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IsomirrorArgs {
    #[arg(long)]
    pub embedding: Option<std::path::PathBuf>,
    #[arg(long)]
    pub side: Option<String>,
    /// `direct` or `procrustes`.
    #[arg(long)]
    pub mode: Option<String>,
    /// `spectral` or `frobenius`.
    #[arg(long)]
    pub norm: Option<String>,
    /// CMDS dimension.
    #[arg(long)]
    pub c: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// sbm-clusters, error-scaling or isomirror-sbm.
    pub name: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long)]
    pub c: Option<usize>,
}

impl Cli {
    /// Settings given on the command line.
    pub fn flag_config(&self) -> RunConfig {
        let base = RunConfig {
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            ..Default::default()
        };
        let specific = match &self.command {
            Command::Ingest(a) => RunConfig {
                events: a.events.clone(),
                bins: a.bins.clone(),
                from: a.from.clone(),
                until: a.until.clone(),
                layers: a.layers.clone(),
                strict: set(a.strict),
                ..Default::default()
            },
            Command::Simulate(a) => RunConfig {
                spec: a.spec.clone(),
                reference_sbm: set(a.reference_sbm),
                empty: set(a.empty),
                n: a.n,
                undirected: set(a.undirected),
                ..Default::default()
            },
            Command::Embed(a) => RunConfig {
                graph: a.graph.clone(),
                d: a.d,
                auto_d: set(a.auto_d),
                d_max: a.d_max,
                rescale: set(a.rescale),
                ..Default::default()
            },
            Command::Cluster(a) => RunConfig {
                embedding: a.embedding.clone(),
                side: a.side.clone(),
                groups: a.groups,
                pooled: set(a.pooled),
                restarts: a.restarts,
                ..Default::default()
            },
            Command::Isomirror(a) => RunConfig {
                embedding: a.embedding.clone(),
                side: a.side.clone(),
                mode: a.mode.clone(),
                norm: a.norm.clone(),
                c: a.c,
                ..Default::default()
            },
            Command::Experiment(a) => RunConfig {
                experiment: a.name.clone(),
                n: a.n,
                sizes: a.sizes.clone(),
                reps: a.reps,
                d: a.d,
                restarts: a.restarts,
                mode: a.mode.clone(),
                norm: a.norm.clone(),
                c: a.c,
                ..Default::default()
            },
        };
        specific.over(base)
    }

    /// Flags layered over the config file, if any.
    pub fn resolve(&self) -> Result<RunConfig> {
        let flags = self.flag_config();
        match &self.config {
            Some(path) => Ok(flags.over(RunConfig::from_file(path)?)),
            None => Ok(flags),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    outputs: T,
}

fn write_manifest<T: Serialize>(out: &Path, command: &str, config: &RunConfig, outputs: T) -> Result<()> {
    let manifest = Manifest {
        tool: "duase",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        outputs,
    };
    io::write_json(&out.join("manifest.json"), &manifest)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Runs one command with the resolved configuration.
pub fn run(command: &Command, cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir();
    ensure_dir(&out)?;
    match command {
        Command::Ingest(_) => cmd_ingest(cfg, &out),
        Command::Simulate(_) => cmd_simulate(cfg, &out),
        Command::Embed(_) => cmd_embed(cfg, &out),
        Command::Cluster(_) => cmd_cluster(cfg, &out),
        Command::Isomirror(_) => cmd_isomirror(cfg, &out),
        Command::Experiment(_) => cmd_experiment(cfg, &out),
    }
}

pub fn cmd_ingest(cfg: &RunConfig, out: &Path) -> Result<()> {
    let events_path = RunConfig::require(&cfg.events, "events")?;
    let table = EventTable::from_csv_path(events_path)?;
    let (data_min, data_max) = table
        .time_range()
        .ok_or_else(|| Error::InvalidArgument("event file has no events".into()))?;
    let min = cfg.from.as_deref().map(parse_timestamp).transpose()?.unwrap_or(data_min);
    let max = match cfg.until.as_deref() {
        Some(raw) => parse_timestamp(raw)? - 1,
        None => data_max,
    };
    if min > max {
        return Err(Error::InvalidArgument("time window is empty".into()));
    }
    let bins_spec = cfg.bins.as_deref().unwrap_or("monthly");
    let mut bins = if bins_spec == "monthly" {
        monthly_bins(min, max)?
    } else if let Some(width) = bins_spec.strip_prefix("uniform:") {
        let width: i64 = width
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad bin width in `{bins_spec}`")))?;
        uniform_bins(min, max, width)?
    } else {
        return Err(Error::InvalidArgument(format!(
            "bins must be `monthly` or `uniform:<seconds>`, got `{bins_spec}`"
        )));
    };
    // Bins can overhang an explicit window; clip them so events outside it are dropped.
    if cfg.from.is_some() {
        if let Some(first) = bins.first_mut() {
            first.start = first.start.max(min);
        }
    }
    if cfg.until.is_some() {
        if let Some(last) = bins.last_mut() {
            last.end = last.end.min(max + 1);
        }
    }
    let options = IngestOptions {
        layer_order: cfg.layers.clone(),
        node_order: None,
        strict: RunConfig::flag(cfg.strict),
    };
    let (graph, report) = ingest_events(&table, &bins, &options)?;
    io::save_graph(out, &graph)?;
    let bin_rows: Vec<_> = bins
        .iter()
        .map(|b| json!({"label": b.label, "start": b.start, "end": b.end}))
        .collect();
    write_manifest(
        out,
        "ingest",
        cfg,
        json!({
            "n": graph.n(),
            "layers": graph.layers(),
            "times": graph.times(),
            "edges": graph.edge_count(),
            "bins": bin_rows,
            "report": report,
        }),
    )
}

fn empty_spec(n: usize) -> BlockModelSpec {
    let mut spec = reference_sbm(n);
    for row in &mut spec.b {
        for m in row {
            m.fill(0.0);
        }
    }
    spec
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let n = cfg.n.unwrap_or(crate::REFERENCE_SBM_DEFAULT_N);
    let spec = if RunConfig::flag(cfg.reference_sbm) {
        reference_sbm(n)
    } else if RunConfig::flag(cfg.empty) {
        empty_spec(n)
    } else if let Some(path) = &cfg.spec {
        let spec = io::load_spec(path)?;
        if spec.n() != n && cfg.n.is_some() {
            return Err(Error::InvalidSpec(format!(
                "spec labels {} nodes but --n is {n}",
                spec.n()
            )));
        }
        spec
    } else {
        return Err(Error::InvalidArgument(
            "simulate needs one of --spec, --reference-sbm or --empty".into(),
        ));
    };
    let n = spec.n();
    let graph = sample_dmpsbm(&spec, n, cfg.seed(), RunConfig::flag(cfg.undirected))?;
    io::save_graph(out, &graph)?;
    io::save_spec(&out.join("spec.json"), &spec)?;
    let labels = BlockLabels::from_graph(&graph);
    io::write_labels_csv(&out.join("true_labels_left.csv"), &spec.z, &labels.nodes, &labels.layers)?;
    io::write_labels_csv(&out.join("true_labels_right.csv"), &spec.upsilon, &labels.nodes, &labels.times)?;
    let cells = (graph.layers() * graph.times() * n * n.saturating_sub(1)) as f64;
    write_manifest(
        out,
        "simulate",
        cfg,
        json!({
            "n": n,
            "layers": graph.layers(),
            "times": graph.times(),
            "edges": graph.edge_count(),
            "density": if cells > 0.0 { graph.edge_count() as f64 / cells } else { 0.0 },
        }),
    )
}

pub fn cmd_embed(cfg: &RunConfig, out: &Path) -> Result<()> {
    let graph = io::load_graph(RunConfig::require(&cfg.graph, "graph")?)?;
    let unfolded = build_unfolded(&graph);
    let (rows, cols) = unfolded.shape();
    let limit = rows.min(cols);
    let auto = RunConfig::flag(cfg.auto_d);
    let (mut pair, scree, d) = if auto {
        let d_max = cfg.d_max.unwrap_or(20).min(limit);
        let full = embed_unfolded(&unfolded, d_max, &SvdOptions::default())?;
        let d = select_dimension(&full.singular_values, d_max)?;
        let scree = full.singular_values.clone();
        (full.truncated(d)?, Some(scree), d)
    } else {
        let d = *RunConfig::require(&cfg.d, "d (or auto_d)")?;
        (embed_unfolded(&unfolded, d, &SvdOptions::default())?, None, d)
    };
    if RunConfig::flag(cfg.rescale) {
        pair = rescale_balanced(&pair)?;
    }
    if !pair.zero_rows_left.is_empty() || !pair.zero_rows_right.is_empty() {
        log::warn!(
            "{} left and {} right embedding rows belong to nodes without edges",
            pair.zero_rows_left.len(),
            pair.zero_rows_right.len()
        );
    }
    io::save_embedding(out, &pair, &BlockLabels::from_graph(&graph))?;
    write_manifest(
        out,
        "embed",
        cfg,
        json!({
            "d": d,
            "auto_d": auto,
            "singular_values": pair.singular_values,
            "scree": scree,
            "rescaled": pair.rescaled,
        }),
    )
}

fn side_of(cfg: &RunConfig) -> Result<Side> {
    cfg.side.as_deref().unwrap_or("right").parse()
}

pub fn cmd_cluster(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (pair, labels) = io::load_embedding(RunConfig::require(&cfg.embedding, "embedding")?)?;
    let side = side_of(cfg)?;
    let groups = *RunConfig::require(&cfg.groups, "groups")?;
    let options = ClusterOptions {
        seed: cfg.seed(),
        restarts: cfg.restarts.unwrap_or(DEFAULT_RESTARTS),
        pooled: RunConfig::flag(cfg.pooled),
    };
    let clustering = cluster_side(&pair, side, groups, &options)?;
    let block_labels = labels.blocks(side);
    io::write_labels_csv(&out.join("labels.csv"), &clustering.labels, &labels.nodes, block_labels)?;
    let summaries = io::fit_summaries(&clustering, block_labels);
    io::write_json(&out.join("fit_summary.json"), &summaries)?;
    write_manifest(
        out,
        "cluster",
        cfg,
        json!({
            "side": side,
            "groups": groups,
            "fits": clustering.fits.len(),
            "all_converged": clustering.fits.iter().all(|f| f.converged),
        }),
    )
}

pub fn cmd_isomirror(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (pair, labels) = io::load_embedding(RunConfig::require(&cfg.embedding, "embedding")?)?;
    let side = side_of(cfg)?;
    let mode: DistanceMode = cfg.mode.as_deref().unwrap_or("direct").parse()?;
    let norm: BlockNorm = cfg.norm.as_deref().unwrap_or("spectral").parse()?;
    let c = cfg.c.unwrap_or(2);
    let result = iso_mirror(pair.blocks(side), mode, norm, c)?;
    io::save_isomirror(out, &result, labels.blocks(side))?;
    write_manifest(out, "isomirror", cfg, json!({"side": side, "knn_k": result.knn_k}))
}

pub fn experiment_params(cfg: &RunConfig) -> Result<ExperimentParams> {
    let defaults = ExperimentParams::default();
    Ok(ExperimentParams {
        seed: cfg.seed(),
        n: cfg.n.unwrap_or(defaults.n),
        sizes: cfg.sizes.clone().unwrap_or(defaults.sizes),
        reps: cfg.reps.unwrap_or(defaults.reps),
        d: cfg.d.unwrap_or(defaults.d),
        restarts: cfg.restarts.unwrap_or(defaults.restarts),
        c: cfg.c.unwrap_or(defaults.c),
        mode: match &cfg.mode {
            Some(m) => m.parse()?,
            None => defaults.mode,
        },
        norm: match &cfg.norm {
            Some(m) => m.parse()?,
            None => defaults.norm,
        },
    })
}

pub fn cmd_experiment(cfg: &RunConfig, out: &Path) -> Result<()> {
    let name: ExperimentName = RunConfig::require(&cfg.experiment, "experiment name")?.parse()?;
    let params = experiment_params(cfg)?;
    let report = run_experiment(name, &params, out)?;
    for c in &report.criteria {
        println!("{}", c.line());
    }
    write_manifest(out, "experiment", cfg, json!({"files": report.files}))
}

