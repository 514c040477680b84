//! The pipeline commands: ingestion, training, scoring, feature
//! computation, ensembling, evaluation, and prediction.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use kg_core::context::{generate_walks, load_walks, save_walks, skipgram_train};
use kg_core::data::{load_queries, load_triplets, CandidateQuerySet, LoadOptions, Triple};
use kg_core::ensemble::{
    combine, grid_search, low_frequency_filter, normalize_scores, EnsembleWeights,
};
use kg_core::features::{candidate_frequency, save_candidate_frequency, FeatureKind};
use kg_core::metrics::mrr;
use kg_core::models::{EmbeddingTable, GeometryConfig, ModelKind};
use kg_core::score::ScoreMatrix;
use kg_core::trainer::io::save_embeddings;
use kg_core::trainer::train;
use kg_core::{KgError, Result, TripletStore, Vocab};

use crate::config::Config;
use crate::sources::{score_source, FeatureContext, SourceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Valid,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> std::result::Result<Split, String> {
        match s {
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(format!("split must be `valid` or `test`, got {other:?}")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

/// Training triples plus whichever query splits the config names, with one
/// unified vocabulary so embedding tables cover every queried entity.
pub struct DataBundle {
    pub store: TripletStore,
    pub valid: Option<CandidateQuerySet>,
    pub test: Option<CandidateQuerySet>,
}

impl DataBundle {
    pub fn queries(&self, split: Split) -> Result<&CandidateQuerySet> {
        let (q, key) = match split {
            Split::Valid => (&self.valid, "paths.valid"),
            Split::Test => (&self.test, "paths.test"),
        };
        q.as_ref()
            .ok_or_else(|| KgError::Config(format!("missing required path key {key:?}")))
    }
}

pub fn load_data(config: &Config) -> Result<DataBundle> {
    let train_path = config.path("paths.train")?;
    let options = LoadOptions {
        entity_count: match config.get("data.entity_count") {
            Some(_) => Some(config.usize_or("data.entity_count", 0)?),
            None => None,
        },
        relation_count: match config.get("data.relation_count") {
            Some(_) => Some(config.usize_or("data.relation_count", 0)?),
            None => None,
        },
    };
    let store = load_triplets(&train_path, &options)?;
    let valid = match config.path_opt("paths.valid")? {
        Some(p) => Some(load_queries(&p)?),
        None => None,
    };
    let test = match config.path_opt("paths.test")? {
        Some(p) => Some(load_queries(&p)?),
        None => None,
    };

    // Unify the id spaces: candidates may name entities absent from training.
    let mut entity_count = store.vocab.entity_count;
    let mut relation_count = store.vocab.relation_count;
    for set in [&valid, &test].into_iter().flatten() {
        entity_count = entity_count.max(set.vocab.entity_count);
        relation_count = relation_count.max(set.vocab.relation_count);
    }
    let vocab = Vocab::new(entity_count, relation_count);
    let store = TripletStore::new(store.triples, vocab.clone())?;
    let rebind = |set: Option<CandidateQuerySet>| -> Result<Option<CandidateQuerySet>> {
        match set {
            Some(s) => Ok(Some(CandidateQuerySet::new(s.queries, vocab.clone())?)),
            None => Ok(None),
        }
    };
    Ok(DataBundle {
        store,
        valid: rebind(valid)?,
        test: rebind(test)?,
    })
}

fn scores_dir(config: &Config, split: Split) -> Result<PathBuf> {
    Ok(config.artifacts_dir()?.join("scores").join(split.name()))
}

fn weights_path(config: &Config) -> Result<PathBuf> {
    Ok(config.artifacts_dir()?.join("weights.txt"))
}

pub fn cmd_train(config: &Config, model: &str, merge_validation: bool) -> Result<()> {
    let kind = ModelKind::parse(model)?;
    let started = Instant::now();
    let bundle = load_data(config)?;
    let mut store = bundle.store;
    if merge_validation {
        let valid = bundle.valid.as_ref().ok_or_else(|| {
            KgError::Config("--merge-validation requires paths.valid".into())
        })?;
        if !valid.has_truth() {
            return Err(KgError::Format(
                "--merge-validation requires labeled validation queries".into(),
            ));
        }
        let before = store.triples.len();
        for q in &valid.queries {
            let tail = q.true_tail().expect("has_truth checked");
            store.triples.push(Triple::new(q.head, q.relation, tail));
        }
        println!(
            "merged validation truths: {} -> {} triples",
            before,
            store.triples.len()
        );
    }

    let artifacts = config.artifacts_dir()?;
    std::fs::create_dir_all(&artifacts)
        .map_err(|e| KgError::io(&artifacts, e))?;
    let out_path = artifacts.join(format!("{}.kge", kind.name()));

    let table = match kind {
        ModelKind::DeepWalk => {
            let wcfg = config.walk_config()?;
            let walks_path = artifacts.join("walks.txt");
            let walks = if walks_path.exists() {
                println!("loading walk corpus from {}", walks_path.display());
                load_walks(&walks_path)?
            } else {
                generate_walks(&store, &wcfg)?
            };
            let embeddings = skipgram_train(&walks, store.vocab.entity_count, &wcfg)?;
            let geometry = GeometryConfig::new(ModelKind::DeepWalk)
                .with_hidden_size(wcfg.dim)
                .with_gamma(0.0);
            EmbeddingTable::from_parts(
                geometry,
                store.vocab.entity_count,
                0,
                embeddings,
                Vec::new(),
            )?
        }
        _ => {
            let tcfg = config.train_config(kind)?;
            println!(
                "training {} ({} triples, {} entities, {} relations, {} epochs)",
                kind.name(),
                store.len(),
                store.vocab.entity_count,
                store.vocab.relation_count,
                tcfg.epochs
            );
            let outcome = train(&store, &tcfg)?;
            for (epoch, loss) in outcome.epoch_losses.iter().enumerate() {
                println!("epoch {:>3}  loss {loss:.6}", epoch + 1);
            }
            outcome.table
        }
    };
    save_embeddings(&table, &out_path)?;
    println!(
        "wrote {} in {:.1}s",
        out_path.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn cmd_walks(config: &Config) -> Result<()> {
    let bundle = load_data(config)?;
    let wcfg = config.walk_config()?;
    let walks = generate_walks(&bundle.store, &wcfg)?;
    let artifacts = config.artifacts_dir()?;
    std::fs::create_dir_all(&artifacts).map_err(|e| KgError::io(&artifacts, e))?;
    let path = artifacts.join("walks.txt");
    save_walks(&walks, &path)?;
    println!("wrote {} walks to {}", walks.len(), path.display());
    Ok(())
}

pub fn cmd_score(config: &Config, specs: &[SourceSpec], split: Split) -> Result<()> {
    let bundle = load_data(config)?;
    let queries = bundle.queries(split)?;
    let features = if specs.iter().any(|s| matches!(s, SourceSpec::Feature(_))) {
        Some(FeatureContext::build(
            config,
            &bundle.store,
            bundle.valid.as_ref(),
            queries,
            split == Split::Test,
        )?)
    } else {
        None
    };
    let dir = scores_dir(config, split)?;
    std::fs::create_dir_all(&dir).map_err(|e| KgError::io(&dir, e))?;
    for &spec in specs {
        let started = Instant::now();
        let matrix = score_source(spec, config, &bundle.store, queries, features.as_ref())?;
        let path = dir.join(format!("{}.txt", spec.name()));
        matrix.save(&path)?;
        println!(
            "scored {:<12} -> {} ({:.1}s)",
            spec.name(),
            path.display(),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

pub fn cmd_features(config: &Config, split: Split) -> Result<()> {
    let specs: Vec<SourceSpec> = FeatureKind::ALL.into_iter().map(SourceSpec::Feature).collect();
    cmd_score(config, &specs, split)?;
    // Persist the raw frequency map alongside the matrices.
    let bundle = load_data(config)?;
    let queries = bundle.queries(split)?;
    let freq = candidate_frequency(queries);
    let path = config
        .artifacts_dir()?
        .join(format!("cand_freq.{}.txt", split.name()));
    save_candidate_frequency(&freq, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Source names for ensembling: the configured list, or every score file
/// present for the split (sorted by name).
fn ensemble_source_names(config: &Config, split: Split) -> Result<Vec<String>> {
    if let Some(names) = config.ensemble_sources() {
        return Ok(names);
    }
    let dir = scores_dir(config, split)?;
    let entries = std::fs::read_dir(&dir).map_err(|e| KgError::io(&dir, e))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let p = e.path();
            if p.extension().and_then(|x| x.to_str()) == Some("txt") {
                p.file_stem().and_then(|s| s.to_str()).map(String::from)
            } else {
                None
            }
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(KgError::Config(format!(
            "no score matrices in {}; run `kg score` or `kg features` first",
            dir.display()
        )));
    }
    Ok(names)
}

fn load_sources(config: &Config, split: Split, names: &[String]) -> Result<Vec<ScoreMatrix>> {
    let dir = scores_dir(config, split)?;
    names
        .iter()
        .map(|name| {
            let path = dir.join(format!("{name}.txt"));
            let mut m = ScoreMatrix::load(&path)?;
            m.source_name = name.clone();
            Ok(m)
        })
        .collect()
}

pub fn cmd_ensemble(config: &Config) -> Result<()> {
    let bundle = load_data(config)?;
    let queries = bundle.queries(Split::Valid)?;
    let names = ensemble_source_names(config, Split::Valid)?;
    let raw = load_sources(config, Split::Valid, &names)?;
    let normalized: Vec<ScoreMatrix> = raw
        .iter()
        .map(normalize_scores)
        .collect::<Result<Vec<_>>>()?;
    let outcome = grid_search(&normalized, queries, &config.grid_config()?)?;

    let threshold = config.filter_threshold()?;
    let mut report = String::new();
    writeln!(report, "# ensemble report, generated {:?}", std::time::SystemTime::now()).unwrap();
    for (name, solo) in &outcome.solo_mrr {
        writeln!(report, "solo {name} {solo}").unwrap();
    }
    for (name, w) in outcome.weights.entries() {
        writeln!(report, "weight {name} {w}").unwrap();
    }
    writeln!(report, "ensemble_mrr {}", outcome.mrr).unwrap();
    if threshold > 0 {
        let combined = combine(&normalized, &outcome.weights)?;
        let freq = candidate_frequency(queries);
        let filtered = low_frequency_filter(&combined, queries, &freq, threshold)?;
        let filtered_mrr = mrr(queries, &filtered)?;
        writeln!(report, "filtered_mrr {filtered_mrr} (threshold {threshold})").unwrap();
    }

    let artifacts = config.artifacts_dir()?;
    std::fs::create_dir_all(&artifacts).map_err(|e| KgError::io(&artifacts, e))?;
    outcome.weights.save(&weights_path(config)?, outcome.mrr)?;
    let report_path = artifacts.join("ensemble_report.txt");
    std::fs::write(&report_path, &report).map_err(|e| KgError::io(&report_path, e))?;
    print!("{report}");
    println!("wrote {} and {}", weights_path(config)?.display(), report_path.display());
    Ok(())
}

pub fn cmd_predict(config: &Config, split: Split) -> Result<()> {
    let wpath = weights_path(config)?;
    if !wpath.exists() {
        return Err(KgError::Config(format!(
            "weights file {} not found; run `kg ensemble` first",
            wpath.display()
        )));
    }
    let (weights, _) = EnsembleWeights::load(&wpath)?;
    let bundle = load_data(config)?;
    let queries = bundle.queries(split)?;
    let names: Vec<String> = weights
        .entries()
        .iter()
        .map(|(n, _)| n.clone())
        .collect();
    let raw = load_sources(config, split, &names)?;
    let normalized: Vec<ScoreMatrix> = raw
        .iter()
        .map(normalize_scores)
        .collect::<Result<Vec<_>>>()?;
    let mut combined = combine(&normalized, &weights)?;
    let threshold = config.filter_threshold()?;
    if threshold > 0 {
        let freq = candidate_frequency(queries);
        combined = low_frequency_filter(&combined, queries, &freq, threshold)?;
    }
    if combined.rows.len() != queries.len() {
        return Err(KgError::Shape(format!(
            "{} score rows vs {} {} queries",
            combined.rows.len(),
            queries.len(),
            split.name()
        )));
    }

    let k = config.top_k()?;
    let mut out = String::new();
    for row in &combined.rows {
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b))
        });
        let mut first = true;
        for &idx in order.iter().take(k) {
            if !first {
                out.push(' ');
            }
            write!(out, "{idx}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    let path = config
        .artifacts_dir()?
        .join(format!("predictions.{}.txt", split.name()));
    std::fs::write(&path, out).map_err(|e| KgError::io(&path, e))?;
    println!("wrote top-{k} predictions for {} queries to {}", queries.len(), path.display());
    Ok(())
}

pub fn cmd_eval(config: &Config, split: Split) -> Result<()> {
    let bundle = load_data(config)?;
    let queries = bundle.queries(split)?;
    if !queries.has_truth() {
        return Err(KgError::Format(format!(
            "{} queries lack true_index; cannot evaluate",
            split.name()
        )));
    }
    let names = ensemble_source_names(config, split)?;
    let raw = load_sources(config, split, &names)?;
    let mut solo: HashMap<String, f64> = HashMap::new();
    for m in &raw {
        let normalized = normalize_scores(m)?;
        let value = mrr(queries, &normalized)?;
        println!("solo {:<14} mrr {value:.6}", m.source_name);
        solo.insert(m.source_name.clone(), value);
    }
    let wpath = weights_path(config)?;
    if wpath.exists() {
        let (weights, _) = EnsembleWeights::load(&wpath)?;
        let needed: Vec<String> = weights.entries().iter().map(|(n, _)| n.clone()).collect();
        let raw = load_sources(config, split, &needed)?;
        let normalized: Vec<ScoreMatrix> = raw
            .iter()
            .map(normalize_scores)
            .collect::<Result<Vec<_>>>()?;
        let mut combined = combine(&normalized, &weights)?;
        println!("ensemble mrr {:.6}", mrr(queries, &combined)?);
        let threshold = config.filter_threshold()?;
        if threshold > 0 {
            let freq = candidate_frequency(queries);
            combined = low_frequency_filter(&combined, queries, &freq, threshold)?;
            println!("filtered mrr {:.6} (threshold {threshold})", mrr(queries, &combined)?);
        }
    }
    Ok(())
}
