//! Score-source names and their evaluation.
//!
//! A source is anything that can fill a query-by-candidate score matrix: a
//! trained embedding model, a post-smoothed variant of one, a DeepWalk
//! table, one of the twelve path features, or the raw candidate-frequency
//! signal.

use std::path::PathBuf;

use kg_core::context::{post_smooth, SmoothConfig};
use kg_core::data::CandidateQuerySet;
use kg_core::features::{
    build_index, compute_feature_matrix, DirectionalIndex, FeatureEvalOptions, FeatureKind,
};
use kg_core::models::{EmbeddingTable, ModelKind};
use kg_core::score::ScoreMatrix;
use kg_core::trainer::io::load_embeddings;
use kg_core::{KgError, Result, TripletStore};

use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceSpec {
    Model(ModelKind),
    Smoothed(ModelKind),
    Feature(FeatureKind),
}

impl SourceSpec {
    pub fn name(self) -> String {
        match self {
            SourceSpec::Model(kind) => kind.name().to_string(),
            SourceSpec::Smoothed(kind) => format!("{}_smooth", kind.name()),
            SourceSpec::Feature(kind) => kind.name().to_string(),
        }
    }

    pub fn parse(name: &str) -> Option<SourceSpec> {
        if let Ok(kind) = ModelKind::parse(name) {
            return Some(SourceSpec::Model(kind));
        }
        if let Some(base) = name.strip_suffix("_smooth") {
            if let Ok(kind) = ModelKind::parse(base) {
                if matches!(kind, ModelKind::TransE | ModelKind::RotatE) {
                    return Some(SourceSpec::Smoothed(kind));
                }
            }
        }
        FeatureKind::parse(name).ok().map(SourceSpec::Feature)
    }
}

/// Every valid source name, in the canonical registration order.
pub fn all_source_names() -> Vec<String> {
    let mut names: Vec<String> = ModelKind::ALL_TRAINABLE
        .iter()
        .map(|k| k.name().to_string())
        .collect();
    names.push(ModelKind::DeepWalk.name().to_string());
    names.push("transe_smooth".into());
    names.push("rotate_smooth".into());
    names.extend(FeatureKind::ALL.iter().map(|k| k.name().to_string()));
    names
}

/// Expands group aliases and validates every requested name.
pub fn resolve_sources(requested: &[String]) -> std::result::Result<Vec<SourceSpec>, String> {
    let mut specs = Vec::new();
    for name in requested {
        match name.as_str() {
            "all_models" => {
                for kind in ModelKind::ALL_TRAINABLE {
                    specs.push(SourceSpec::Model(kind));
                }
                specs.push(SourceSpec::Model(ModelKind::DeepWalk));
            }
            "all_features" => {
                for kind in FeatureKind::ALL {
                    specs.push(SourceSpec::Feature(kind));
                }
            }
            other => match SourceSpec::parse(other) {
                Some(spec) => specs.push(spec),
                None => {
                    return Err(format!(
                        "unknown source {other:?}; valid sources: {}, plus groups all_models, all_features",
                        all_source_names().join(", ")
                    ));
                }
            },
        }
    }
    specs.dedup();
    Ok(specs)
}

/// Feature indices for one evaluation split.
pub struct FeatureContext {
    /// Index over training triples plus (optionally) validation candidates.
    main: DirectionalIndex,
    /// Index additionally counting the test split's candidates; present only
    /// when the opt-in flag is set for a test split.
    test_rebuilt: Option<DirectionalIndex>,
    /// Kinds routed to `test_rebuilt` when it exists.
    test_kinds: Vec<FeatureKind>,
    options: FeatureEvalOptions,
}

impl FeatureContext {
    /// Builds the indices for `split_queries`.
    ///
    /// `valid_queries` feeds candidate pseudo-triples whenever the feature
    /// source asks for candidates. For a test split with
    /// `features.include_test_candidates=true`, the kinds listed in
    /// `features.test_candidate_kinds` additionally count the test split's
    /// own candidates at inference time; every other kind keeps the index
    /// developed on training data and validation candidates.
    pub fn build(
        config: &Config,
        store: &TripletStore,
        valid_queries: Option<&CandidateQuerySet>,
        split_queries: &CandidateQuerySet,
        is_test_split: bool,
    ) -> Result<FeatureContext> {
        let source = config.feature_source()?;
        let options = config.feature_options()?;
        let dev_queries = if source.include_candidates {
            let q = valid_queries.ok_or_else(|| {
                KgError::Config(
                    "features.include_candidates=true requires paths.valid".into(),
                )
            })?;
            Some(q)
        } else {
            None
        };
        let main = build_index(store, dev_queries, &source)?;
        let mut test_rebuilt = None;
        let mut test_kinds = Vec::new();
        if is_test_split && config.include_test_candidates()? {
            test_kinds = config.test_candidate_kinds()?;
            let mut merged = split_queries.queries.clone();
            if let Some(dev) = dev_queries {
                merged.extend(dev.queries.iter().cloned());
            }
            let merged = CandidateQuerySet::new(merged, store.vocab.clone())?;
            let mut with_candidates = source;
            with_candidates.include_candidates = true;
            test_rebuilt = Some(build_index(store, Some(&merged), &with_candidates)?);
        }
        Ok(FeatureContext {
            main,
            test_rebuilt,
            test_kinds,
            options,
        })
    }

    fn index_for(&self, kind: FeatureKind) -> &DirectionalIndex {
        match &self.test_rebuilt {
            Some(idx) if self.test_kinds.contains(&kind) => idx,
            _ => &self.main,
        }
    }

    pub fn matrix(&self, kind: FeatureKind, queries: &CandidateQuerySet) -> Result<ScoreMatrix> {
        let mut out =
            compute_feature_matrix(self.index_for(kind), queries, &[kind], &self.options)?;
        Ok(out.pop().expect("one kind in, one matrix out"))
    }
}

pub fn embedding_path(config: &Config, kind: ModelKind) -> Result<PathBuf> {
    Ok(config.artifacts_dir()?.join(format!("{}.kge", kind.name())))
}

/// Loads a model table and cross-checks its geometry against the config.
pub fn load_model(config: &Config, kind: ModelKind) -> Result<EmbeddingTable> {
    let path = embedding_path(config, kind)?;
    let table = load_embeddings(&path)?;
    let stored = table.geometry();
    if kind == ModelKind::DeepWalk {
        let dim = config.walk_config()?.dim;
        if stored.hidden_size != dim {
            return Err(KgError::Config(format!(
                "{}: stored dim {} does not match walk.dim {dim}",
                path.display(),
                stored.hidden_size
            )));
        }
    } else {
        let declared = config.geometry(kind)?;
        if stored.hidden_size != declared.hidden_size
            || stored.ote_size != declared.ote_size
            || stored.norm_p != declared.norm_p
            || stored.gamma != declared.gamma
        {
            return Err(KgError::Config(format!(
                "{}: stored geometry {stored:?} does not match the configured {declared:?}",
                path.display()
            )));
        }
    }
    Ok(table)
}

fn score_with_table(table: &EmbeddingTable, queries: &CandidateQuerySet) -> Result<ScoreMatrix> {
    use rayon::prelude::*;
    let rows: Vec<Vec<f64>> = queries
        .queries
        .par_iter()
        .map(|q| table.score_query(q.head, q.relation, &q.candidates))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreMatrix::new("scores", rows))
}

/// Evaluates one source over the split's queries.
pub fn score_source(
    spec: SourceSpec,
    config: &Config,
    store: &TripletStore,
    queries: &CandidateQuerySet,
    features: Option<&FeatureContext>,
) -> Result<ScoreMatrix> {
    let mut matrix = match spec {
        SourceSpec::Model(kind) => {
            let table = load_model(config, kind)?;
            score_with_table(&table, queries)?
        }
        SourceSpec::Smoothed(kind) => {
            let table = load_model(config, kind)?;
            let smoothed = post_smooth(
                &table,
                store,
                &SmoothConfig {
                    alpha: config.smooth_alpha()?,
                    model_kind: kind,
                },
            )?;
            score_with_table(&smoothed, queries)?
        }
        SourceSpec::Feature(kind) => {
            let ctx = features.ok_or_else(|| {
                KgError::Config("feature source requested without a feature context".into())
            })?;
            ctx.matrix(kind, queries)?
        }
    };
    matrix.source_name = spec.name();
    Ok(matrix)
}
