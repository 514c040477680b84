//! Mixing heterogeneous scoring sources: per-query normalization, weighted
//! combination, greedy grid-search weight selection, and the low-frequency
//! candidate filter.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::data::CandidateQuerySet;
use crate::error::{KgError, Result};
use crate::metrics::mrr_rows;
use crate::score::ScoreMatrix;

/// Non-negative per-source weights, remembered in selection order.
/// Sources absent from the map weigh zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleWeights {
    entries: Vec<(String, f64)>,
}

impl EnsembleWeights {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        for (name, w) in &entries {
            if !w.is_finite() || *w < 0.0 {
                return Err(KgError::Config(format!(
                    "weight for {name:?} must be a non-negative finite number, got {w}"
                )));
            }
        }
        if !entries.iter().any(|(_, w)| *w > 0.0) {
            return Err(KgError::Config(
                "ensemble weights need at least one positive entry".into(),
            ));
        }
        Ok(EnsembleWeights { entries })
    }

    pub fn single(name: impl Into<String>) -> Self {
        EnsembleWeights {
            entries: vec![(name.into(), 1.0)],
        }
    }

    /// `(source, weight)` pairs in selection order.
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn weight(&self, name: &str) -> f64 {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| *w)
            .unwrap_or(0.0)
    }

    /// One `source weight` pair per line, with the achieved validation MRR
    /// recorded as a leading comment.
    pub fn save(&self, path: &Path, validation_mrr: f64) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "# validation_mrr {validation_mrr}").unwrap();
        for (name, w) in &self.entries {
            writeln!(out, "{name} {w}").unwrap();
        }
        fs::write(path, out).map_err(|e| KgError::io(path, e))
    }

    /// Loads weights plus the recorded validation MRR when present.
    pub fn load(path: &Path) -> Result<(Self, Option<f64>)> {
        let text = fs::read_to_string(path).map_err(|e| KgError::io(path, e))?;
        let mut entries = Vec::new();
        let mut recorded = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("validation_mrr") {
                    recorded = parts.next().and_then(|v| v.parse().ok());
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let name = parts
                .next()
                .ok_or_else(|| KgError::parse(path, lineno + 1, "missing source name"))?;
            let weight: f64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| KgError::parse(path, lineno + 1, "missing or bad weight"))?;
            entries.push((name.to_string(), weight));
        }
        Ok((EnsembleWeights::new(entries)?, recorded))
    }
}

/// Per-query min-max normalization into [0, 1]; constant rows map to zeros.
/// Strictly increasing on non-constant rows, so ranks are preserved.
pub fn normalize_scores(m: &ScoreMatrix) -> Result<ScoreMatrix> {
    m.check_finite()?;
    let rows = m
        .rows
        .iter()
        .map(|row| {
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max == min {
                vec![0.0; row.len()]
            } else {
                let span = max - min;
                row.iter().map(|v| (v - min) / span).collect()
            }
        })
        .collect();
    Ok(ScoreMatrix::new(m.source_name.clone(), rows))
}

/// Elementwise weighted sum of the named sources. Zero-weight and unnamed
/// sources contribute nothing (skipped entirely, so results are
/// bit-identical to omitting them).
pub fn combine(sources: &[ScoreMatrix], weights: &EnsembleWeights) -> Result<ScoreMatrix> {
    if sources.is_empty() {
        return Err(KgError::Shape("no sources to combine".into()));
    }
    for s in sources {
        sources[0].check_aligned(s)?;
    }
    let by_name: HashMap<&str, &ScoreMatrix> = sources
        .iter()
        .map(|s| (s.source_name.as_str(), s))
        .collect();
    for (name, _) in weights.entries() {
        if !by_name.contains_key(name.as_str()) {
            return Err(KgError::Config(format!(
                "weights reference unknown source {name:?}; available: {}",
                sources
                    .iter()
                    .map(|s| s.source_name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    let mut rows: Vec<Vec<f64>> = sources[0]
        .rows
        .iter()
        .map(|r| vec![0.0; r.len()])
        .collect();
    for (name, w) in weights.entries() {
        if *w == 0.0 {
            continue;
        }
        let m = by_name[name.as_str()];
        for (acc, row) in rows.iter_mut().zip(&m.rows) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += w * v;
            }
        }
    }
    Ok(ScoreMatrix::new("ensemble", rows))
}

/// Grid-search settings; the default grid is `{0.05, 0.10, .., 1.00}`.
#[derive(Debug, Clone)]
pub struct GridSearchConfig {
    pub grid: Vec<f64>,
    /// Maximum number of selected sources (rounds), 0 meaning all sources.
    pub max_rounds: usize,
    pub min_improvement: f64,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        GridSearchConfig {
            grid: (1..=20).map(|i| i as f64 * 0.05).collect(),
            max_rounds: 0,
            min_improvement: 1e-9,
        }
    }
}

/// Result of [`grid_search`]: the selected weights, the validation MRR they
/// achieve, and each source's solo MRR at weight 1.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub weights: EnsembleWeights,
    pub mrr: f64,
    pub solo_mrr: Vec<(String, f64)>,
}

/// Greedy forward selection over per-source grid weights.
///
/// Round 0 keeps the single source with the best MRR at weight 1. Each later
/// round tries every unselected source at every grid weight on top of the
/// frozen current combination and keeps the best strict improvement;
/// selection stops when no trial improves the MRR by more than
/// `min_improvement`. Ties break toward higher MRR, then earlier source
/// registration order, then smaller weight, which makes the result
/// independent of trial evaluation order.
pub fn grid_search(
    sources: &[ScoreMatrix],
    queries: &CandidateQuerySet,
    config: &GridSearchConfig,
) -> Result<GridSearchOutcome> {
    if sources.is_empty() {
        return Err(KgError::Shape("grid search needs at least one source".into()));
    }
    if !queries.has_truth() {
        return Err(KgError::Format(
            "grid search needs labeled queries (true_index on every row)".into(),
        ));
    }
    for s in sources {
        sources[0].check_aligned(s)?;
        s.check_finite()?;
    }
    for w in &config.grid {
        if !(w > &0.0) || !w.is_finite() {
            return Err(KgError::Config(format!("grid weights must be positive, got {w}")));
        }
    }
    let max_rounds = if config.max_rounds == 0 {
        sources.len()
    } else {
        config.max_rounds.min(sources.len())
    };

    let solo: Vec<f64> = sources
        .par_iter()
        .map(|s| mrr_rows(queries, &s.rows))
        .collect::<Result<Vec<_>>>()?;
    let mut best_idx = 0;
    for (i, m) in solo.iter().enumerate() {
        if *m > solo[best_idx] {
            best_idx = i;
        }
    }

    let mut selected = vec![false; sources.len()];
    selected[best_idx] = true;
    let mut entries = vec![(sources[best_idx].source_name.clone(), 1.0)];
    let mut current: Vec<Vec<f64>> = sources[best_idx].rows.clone();
    let mut current_mrr = solo[best_idx];

    while entries.len() < max_rounds {
        // All (source, weight) trials of this round, in registration order.
        let trials: Vec<(usize, f64)> = (0..sources.len())
            .filter(|&i| !selected[i])
            .flat_map(|i| config.grid.iter().map(move |&w| (i, w)))
            .collect();
        if trials.is_empty() {
            break;
        }
        let results: Vec<(f64, usize, f64)> = trials
            .par_iter()
            .map(|&(i, w)| {
                let rows: Vec<Vec<f64>> = current
                    .iter()
                    .zip(&sources[i].rows)
                    .map(|(base, add)| {
                        base.iter().zip(add).map(|(b, a)| b + w * a).collect()
                    })
                    .collect();
                mrr_rows(queries, &rows).map(|m| (m, i, w))
            })
            .collect::<Result<Vec<_>>>()?;
        // Deterministic reduction: higher MRR, then earlier source, then
        // smaller weight.
        let mut best: Option<(f64, usize, f64)> = None;
        for &(m, i, w) in &results {
            let better = match best {
                None => true,
                Some((bm, bi, bw)) => {
                    m > bm || (m == bm && (i < bi || (i == bi && w < bw)))
                }
            };
            if better {
                best = Some((m, i, w));
            }
        }
        let (m, i, w) = best.expect("non-empty trials");
        if m <= current_mrr + config.min_improvement {
            break;
        }
        selected[i] = true;
        entries.push((sources[i].source_name.clone(), w));
        for (base, add) in current.iter_mut().zip(&sources[i].rows) {
            for (b, a) in base.iter_mut().zip(add) {
                *b += w * a;
            }
        }
        current_mrr = m;
    }

    Ok(GridSearchOutcome {
        weights: EnsembleWeights::new(entries)?,
        mrr: current_mrr,
        solo_mrr: sources
            .iter()
            .zip(&solo)
            .map(|(s, m)| (s.source_name.clone(), *m))
            .collect(),
    })
}

/// Demotes candidates whose frequency falls below `threshold` to a sentinel
/// strictly below every other finite score (the minimum finite value);
/// scores of candidates at or above the threshold are untouched.
pub fn low_frequency_filter(
    m: &ScoreMatrix,
    queries: &CandidateQuerySet,
    freq: &HashMap<usize, u64>,
    threshold: u64,
) -> Result<ScoreMatrix> {
    if m.rows.len() != queries.len() {
        return Err(KgError::Shape(format!(
            "{} score rows vs {} queries",
            m.rows.len(),
            queries.len()
        )));
    }
    let rows = m
        .rows
        .iter()
        .zip(&queries.queries)
        .enumerate()
        .map(|(i, (row, q))| {
            if row.len() != q.candidates.len() {
                return Err(KgError::Shape(format!(
                    "query {i}: {} scores vs {} candidates",
                    row.len(),
                    q.candidates.len()
                )));
            }
            Ok(row
                .iter()
                .zip(&q.candidates)
                .map(|(&score, c)| {
                    if freq.get(c).copied().unwrap_or(0) < threshold {
                        f64::MIN
                    } else {
                        score
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreMatrix::new(m.source_name.clone(), rows))
}
