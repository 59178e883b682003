//! Run configuration: an optional TOML or JSON file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use duase_core::{Error, Result};

/// Every setting a command can take. Unset fields fall back to command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,

    pub events: Option<PathBuf>,
    /// `monthly` or `uniform:<seconds>`.
    pub bins: Option<String>,
    /// Window start (epoch seconds or `YYYY-MM-DD`), inclusive.
    pub from: Option<String>,
    /// Window end, exclusive.
    pub until: Option<String>,
    pub layers: Option<Vec<String>>,
    pub strict: Option<bool>,

    pub spec: Option<PathBuf>,
    pub reference_sbm: Option<bool>,
    pub empty: Option<bool>,
    pub n: Option<usize>,
    pub undirected: Option<bool>,

    pub graph: Option<PathBuf>,
    pub d: Option<usize>,
    pub auto_d: Option<bool>,
    pub d_max: Option<usize>,
    pub rescale: Option<bool>,

    pub embedding: Option<PathBuf>,
    pub side: Option<String>,
    pub groups: Option<usize>,
    pub pooled: Option<bool>,
    pub restarts: Option<usize>,

    pub mode: Option<String>,
    pub norm: Option<String>,
    pub c: Option<usize>,

    pub experiment: Option<String>,
    pub sizes: Option<Vec<usize>>,
    pub reps: Option<usize>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),* $(,)?) => {
        RunConfig { $($field: $top.$field.or($base.$field),)* }
    };
}

impl RunConfig {
    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay!(
            self, base, seed, threads, out, events, bins, from, until, layers, strict, spec, reference_sbm, empty, n,
            undirected, graph, d, auto_d, d_max, rescale, embedding, side, groups, pooled, restarts,
            mode, norm, c, experiment, sizes, reps,
        )
    }

    /// Reads a config file; `.json` is parsed as JSON, anything else as TOML.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let parse_err = |message: String| Error::Parse {
            context: path.display().to_string(),
            message,
        };
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("duase-out"))
    }

    pub fn flag(v: Option<bool>) -> bool {
        v.unwrap_or(false)
    }

    pub fn require<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("missing required setting `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            seed: Some(1),
            d: Some(3),
            ..Default::default()
        };
        let flags = RunConfig {
            seed: Some(9),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.d, Some(3));
    }

    #[test]
    fn reads_toml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("run.toml");
        std::fs::write(&toml_path, "seed = 4\nauto_d = true\nsizes = [10, 20]\n").unwrap();
        let cfg = RunConfig::from_file(&toml_path).unwrap();
        assert_eq!(cfg.seed, Some(4));
        assert_eq!(cfg.auto_d, Some(true));
        assert_eq!(cfg.sizes, Some(vec![10, 20]));

        let json_path = dir.path().join("run.json");
        std::fs::write(&json_path, r#"{"c": 3, "mode": "procrustes"}"#).unwrap();
        let cfg = RunConfig::from_file(&json_path).unwrap();
        assert_eq!(cfg.c, Some(3));

        std::fs::write(&json_path, r#"{"colour": 3}"#).unwrap();
        assert!(RunConfig::from_file(&json_path).is_err());
    }
}
