//! Line-oriented `key=value` configuration with dotted section prefixes.
//!
//! Command-line overrides are further `key=value` pairs merged on top of the
//! file, so an experiment is fully described by its config plus the command
//! line that ran it.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use kg_core::features::{FeatureKind, FeatureSource};
use kg_core::models::{GeometryConfig, ModelKind, PNorm};
use kg_core::trainer::TrainConfig;
use kg_core::{KgError, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    map: HashMap<String, String>,
    dir: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KgError::io(path, e))?;
        let mut map = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                KgError::parse(path, lineno + 1, "expected key=value")
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config {
            map,
            dir: path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        })
    }

    /// Merges `key=value` override pairs from the command line.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for pair in overrides {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                KgError::Config(format!("override {pair:?} is not of the form key=value"))
            })?;
            self.map
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T> {
        value.parse().map_err(|_| {
            KgError::Config(format!("bad value {value:?} for key {key:?}"))
        })
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(v) => self.parse_as(key, v),
            None => Ok(default),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(v) => self.parse_as(key, v),
            None => Ok(default),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => self.parse_as(key, v),
            None => Ok(default),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            Some(v) => match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(KgError::Config(format!(
                    "bad boolean {other:?} for key {key:?}"
                ))),
            },
            None => Ok(default),
        }
    }

    /// A path value, resolved relative to the config file's directory.
    pub fn path(&self, key: &str) -> Result<PathBuf> {
        let value = self.get(key).ok_or_else(|| {
            KgError::Config(format!("missing required path key {key:?}"))
        })?;
        let p = PathBuf::from(value);
        Ok(if p.is_absolute() { p } else { self.dir.join(p) })
    }

    pub fn path_opt(&self, key: &str) -> Result<Option<PathBuf>> {
        match self.get(key) {
            Some(_) => self.path(key).map(Some),
            None => Ok(None),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("seed", 42)
    }

    pub fn threads(&self) -> Result<usize> {
        let t = self.usize_or("threads", 1)?;
        if t == 0 {
            return Err(KgError::Config("threads must be >= 1".into()));
        }
        Ok(t)
    }

    pub fn artifacts_dir(&self) -> Result<PathBuf> {
        self.path("paths.artifacts")
    }

    /// A per-model key falls back to the shared section: `note.lr` beats
    /// `train.lr`, `note.gamma` beats `model.gamma`.
    fn model_key<'a>(&'a self, model: &str, section: &str, key: &str) -> Option<&'a str> {
        self.get(&format!("{model}.{key}"))
            .or_else(|| self.get(&format!("{section}.{key}")))
    }

    pub fn geometry(&self, kind: ModelKind) -> Result<GeometryConfig> {
        let name = kind.name();
        let mut g = GeometryConfig::new(kind);
        if let Some(v) = self.model_key(name, "model", "hidden_size") {
            g.hidden_size = self.parse_as("hidden_size", v)?;
        }
        if let Some(v) = self.model_key(name, "model", "gamma") {
            g.gamma = self.parse_as("gamma", v)?;
        }
        if let Some(v) = self.model_key(name, "model", "ote_size") {
            g.ote_size = self.parse_as("ote_size", v)?;
        }
        if let Some(v) = self.model_key(name, "model", "norm_p") {
            let p: u32 = self.parse_as("norm_p", v)?;
            g.norm_p = PNorm::from_u32(p)?;
        }
        g.validate()?;
        Ok(g)
    }

    pub fn train_config(&self, kind: ModelKind) -> Result<TrainConfig> {
        let name = kind.name();
        let mut t = TrainConfig::new(self.geometry(kind)?);
        t.seed = self.seed()?;
        if let Some(v) = self.model_key(name, "train", "batch_size") {
            t.batch_size = self.parse_as("batch_size", v)?;
        }
        if let Some(v) = self.model_key(name, "train", "lr") {
            t.lr = self.parse_as("lr", v)?;
        }
        if let Some(v) = self.model_key(name, "train", "lrd_step") {
            t.lrd_step = self.parse_as("lrd_step", v)?;
        }
        if let Some(v) = self.model_key(name, "train", "neg_sample_size") {
            t.neg_sample_size = self.parse_as("neg_sample_size", v)?;
        }
        if let Some(v) = self.model_key(name, "train", "adversarial_temperature") {
            t.adversarial_temperature = self.parse_as("adversarial_temperature", v)?;
        }
        if let Some(v) = self.model_key(name, "train", "epochs") {
            t.epochs = self.parse_as("epochs", v)?;
        }
        if let Some(v) = self.model_key(name, "train", "seed") {
            t.seed = self.parse_as("seed", v)?;
        }
        t.validate()?;
        Ok(t)
    }

    pub fn walk_config(&self) -> Result<kg_core::context::WalkConfig> {
        let mut w = kg_core::context::WalkConfig {
            seed: self.seed()?,
            ..Default::default()
        };
        w.num_walks_per_node = self.usize_or("walk.num_walks", w.num_walks_per_node)?;
        w.walk_length = self.usize_or("walk.length", w.walk_length)?;
        w.window = self.usize_or("walk.window", w.window)?;
        w.neg_samples = self.usize_or("walk.neg_samples", w.neg_samples)?;
        w.dim = self.usize_or("walk.dim", w.dim)?;
        w.epochs = self.usize_or("walk.epochs", w.epochs)?;
        w.lr = self.f64_or("walk.lr", w.lr)?;
        w.seed = self.u64_or("walk.seed", w.seed)?;
        w.validate()?;
        Ok(w)
    }

    pub fn smooth_alpha(&self) -> Result<f64> {
        let alpha = self.f64_or("smooth.alpha", 0.8)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(KgError::Config(format!(
                "smooth.alpha must be in [0, 1], got {alpha}"
            )));
        }
        Ok(alpha)
    }

    pub fn feature_source(&self) -> Result<FeatureSource> {
        let source = FeatureSource {
            include_training: self.bool_or("features.include_training", true)?,
            include_candidates: self.bool_or("features.include_candidates", false)?,
        };
        source.validate()?;
        Ok(source)
    }

    pub fn feature_options(&self) -> Result<kg_core::features::FeatureEvalOptions> {
        Ok(kg_core::features::FeatureEvalOptions {
            max_row_support: match self.get("features.max_row_support") {
                Some("") | None => None,
                Some(v) => Some(self.parse_as("features.max_row_support", v)?),
            },
        })
    }

    /// Feature kinds rebuilt with test candidates at inference, when the
    /// opt-in flag is set.
    pub fn test_candidate_kinds(&self) -> Result<Vec<FeatureKind>> {
        match self.get("features.test_candidate_kinds") {
            None => Ok(vec![FeatureKind::Ht, FeatureKind::Rt]),
            Some(list) => list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| FeatureKind::parse(s.trim()))
                .collect(),
        }
    }

    pub fn include_test_candidates(&self) -> Result<bool> {
        self.bool_or("features.include_test_candidates", false)
    }

    pub fn filter_threshold(&self) -> Result<u64> {
        self.u64_or("filter.threshold", 0)
    }

    pub fn grid_config(&self) -> Result<kg_core::ensemble::GridSearchConfig> {
        let mut g = kg_core::ensemble::GridSearchConfig::default();
        if let Some(list) = self.get("grid.weights") {
            let weights: Result<Vec<f64>> = list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| self.parse_as("grid.weights", s.trim()))
                .collect();
            g.grid = weights?;
            if g.grid.is_empty() {
                return Err(KgError::Config("grid.weights must not be empty".into()));
            }
        }
        g.max_rounds = self.usize_or("grid.max_rounds", 0)?;
        Ok(g)
    }

    /// Explicit ensemble source list, when configured.
    pub fn ensemble_sources(&self) -> Option<Vec<String>> {
        self.get("ensemble.sources").map(|list| {
            list.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
    }

    pub fn top_k(&self) -> Result<usize> {
        let k = self.usize_or("predict.top_k", 10)?;
        if k == 0 {
            return Err(KgError::Config("predict.top_k must be >= 1".into()));
        }
        Ok(k)
    }
}
