//! Feature evaluation: single pairs via sorted-row intersection, query
//! batches via dense forward accumulation. Both walk the same sparse rows
//! and agree to floating-point accumulation order.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::data::CandidateQuerySet;
use crate::error::{KgError, Result};
use crate::score::ScoreMatrix;

use super::{Direction, DirectionalIndex, FeatureKind};

/// Multi-hop evaluation knobs.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureEvalOptions {
    /// When set, each sparse row contributes only its `cap` highest-count
    /// targets during multi-hop walks (ties broken by smaller id). Unlimited
    /// by default; useful only against adversarially dense graphs.
    pub max_row_support: Option<usize>,
}

/// The chain of walk directions a feature composes.
fn hops(kind: FeatureKind) -> &'static [Direction] {
    use Direction::*;
    match kind {
        FeatureKind::Ht => &[HT],
        FeatureKind::Th => &[TH],
        FeatureKind::ThHt => &[TH, HT],
        FeatureKind::HtHt => &[HT, HT],
        FeatureKind::HtTh => &[HT, TH],
        FeatureKind::ThTh => &[TH, TH],
        FeatureKind::HtHtTh => &[HT, HT, TH],
        FeatureKind::Rt => &[RT],
        FeatureKind::Rh => &[RH],
        FeatureKind::RtTrRt => &[RT, TR, RT],
        FeatureKind::RhHrRt => &[RH, HR, RT],
        FeatureKind::RtHrRt => &[RT, HR, RT],
        FeatureKind::CandFreq => &[],
    }
}

fn capped_row<'a>(
    index: &'a DirectionalIndex,
    d: Direction,
    source: usize,
    options: &FeatureEvalOptions,
) -> Cow<'a, [(usize, u64)]> {
    let row = index.row(d, source);
    match options.max_row_support {
        Some(cap) if row.len() > cap => {
            let mut owned = row.to_vec();
            owned.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            owned.truncate(cap);
            owned.sort_unstable_by_key(|&(t, _)| t);
            Cow::Owned(owned)
        }
        _ => Cow::Borrowed(row),
    }
}

fn merge_join(a: &[(usize, u64)], b: &[(usize, u64)], mut f: impl FnMut(usize, u64, u64)) {
    let mut i = 0;
    let mut j = 0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i].0, a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
}

/// One head-to-tail feature value at `(h, t)`.
pub fn feature_head_tail(
    index: &DirectionalIndex,
    kind: FeatureKind,
    h: usize,
    t: usize,
    options: &FeatureEvalOptions,
) -> Result<f64> {
    if !kind.is_head_tail() {
        return Err(KgError::Config(format!(
            "{} is not a head-to-tail feature",
            kind.name()
        )));
    }
    Ok(eval_pair(index, hops(kind), h, t, options))
}

/// One relation-to-tail feature value at `(r, t)`.
pub fn feature_relation_tail(
    index: &DirectionalIndex,
    kind: FeatureKind,
    r: usize,
    t: usize,
    options: &FeatureEvalOptions,
) -> Result<f64> {
    if !kind.is_relation_tail() {
        return Err(KgError::Config(format!(
            "{} is not a relation-to-tail feature",
            kind.name()
        )));
    }
    Ok(eval_pair(index, hops(kind), r, t, options))
}

/// Sum over intermediate ids of the hop-probability product from `source`
/// to `target`. Out-of-support terms vanish because every factor carries its
/// own support, so the summation effectively runs over the joint support of
/// the written factors.
fn eval_pair(
    index: &DirectionalIndex,
    hops: &[Direction],
    source: usize,
    target: usize,
    options: &FeatureEvalOptions,
) -> f64 {
    match hops {
        [d] => index.prob(*d, source, target),
        [d1, d2] => {
            let sum1 = index.row_sum(*d1, source);
            if sum1 == 0 {
                return 0.0;
            }
            let ra = capped_row(index, *d1, source, options);
            let rb = capped_row(index, d2.transpose(), target, options);
            let mut total = 0.0;
            merge_join(&ra, &rb, |e, c1, c2t| {
                // count_{d2^T}(target, e) = count_{d2}(e, target) > 0 implies
                // the e row sum is positive.
                let p2 = c2t as f64 / index.row_sum(*d2, e) as f64;
                total += (c1 as f64 / sum1 as f64) * p2;
            });
            total
        }
        [d1, d2, d3] => {
            let sum1 = index.row_sum(*d1, source);
            if sum1 == 0 {
                return 0.0;
            }
            let ra = capped_row(index, *d1, source, options);
            let rc = capped_row(index, d3.transpose(), target, options);
            let mut total = 0.0;
            for &(e1, c1) in ra.iter() {
                let sum2 = index.row_sum(*d2, e1);
                if sum2 == 0 {
                    continue;
                }
                let rb = capped_row(index, *d2, e1, options);
                let mut inner = 0.0;
                merge_join(&rb, &rc, |e2, c2, c3t| {
                    let p3 = c3t as f64 / index.row_sum(*d3, e2) as f64;
                    inner += (c2 as f64 / sum2 as f64) * p3;
                });
                total += (c1 as f64 / sum1 as f64) * inner;
            }
            total
        }
        _ => unreachable!("feature chains have 1 to 3 hops"),
    }
}

/// Dense feature values from `source` to every target of the last hop.
fn accumulate_chain(
    index: &DirectionalIndex,
    hops: &[Direction],
    source: usize,
    options: &FeatureEvalOptions,
) -> Vec<f64> {
    let last = *hops.last().expect("non-empty chain");
    let mut out = vec![0.0; index.target_count(last)];
    match hops {
        [d] => {
            let sum = index.row_sum(*d, source);
            if sum > 0 {
                for &(t, c) in index.row(*d, source) {
                    out[t] = c as f64 / sum as f64;
                }
            }
        }
        [d1, d2] => {
            two_hop_into(index, *d1, *d2, source, options, &mut out);
        }
        [d1, d2, d3] => {
            let mut mid = vec![0.0; index.target_count(*d2)];
            two_hop_into(index, *d1, *d2, source, options, &mut mid);
            for (e2, &v) in mid.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let sum3 = index.row_sum(*d3, e2);
                if sum3 == 0 {
                    continue;
                }
                for &(y, c3) in capped_row(index, *d3, e2, options).iter() {
                    out[y] += v * c3 as f64 / sum3 as f64;
                }
            }
        }
        _ => unreachable!("feature chains have 1 to 3 hops"),
    }
    out
}

fn two_hop_into(
    index: &DirectionalIndex,
    d1: Direction,
    d2: Direction,
    source: usize,
    options: &FeatureEvalOptions,
    out: &mut [f64],
) {
    let sum1 = index.row_sum(d1, source);
    if sum1 == 0 {
        return;
    }
    for &(e, c1) in capped_row(index, d1, source, options).iter() {
        let p1 = c1 as f64 / sum1 as f64;
        let sum2 = index.row_sum(d2, e);
        if sum2 == 0 {
            continue;
        }
        for &(y, c2) in capped_row(index, d2, e, options).iter() {
            out[y] += p1 * c2 as f64 / sum2 as f64;
        }
    }
}

/// Occurrence count of each entity over all candidate lists, multiplicity
/// included. Entities absent from every list are absent from the map.
pub fn candidate_frequency(queries: &CandidateQuerySet) -> HashMap<usize, u64> {
    let mut freq = HashMap::new();
    for q in &queries.queries {
        for &c in &q.candidates {
            *freq.entry(c).or_insert(0) += 1;
        }
    }
    freq
}

/// One matrix per requested kind, rows aligned with candidate order.
pub fn compute_feature_matrix(
    index: &DirectionalIndex,
    queries: &CandidateQuerySet,
    kinds: &[FeatureKind],
    options: &FeatureEvalOptions,
) -> Result<Vec<ScoreMatrix>> {
    if kinds.is_empty() {
        return Err(KgError::Config("no feature kinds requested".into()));
    }
    for (i, q) in queries.queries.iter().enumerate() {
        if q.head >= index.entity_count() || q.relation >= index.relation_count() {
            return Err(KgError::IdBounds(format!(
                "query {i} (head {}, relation {}) outside index bounds",
                q.head, q.relation
            )));
        }
        for &c in &q.candidates {
            if c >= index.entity_count() {
                return Err(KgError::IdBounds(format!(
                    "query {i}: candidate {c} outside index bounds"
                )));
            }
        }
    }
    let freq = kinds
        .contains(&FeatureKind::CandFreq)
        .then(|| candidate_frequency(queries));

    let mut matrices = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let rows: Vec<Vec<f64>> = queries
            .queries
            .par_iter()
            .map(|q| {
                if kind == FeatureKind::CandFreq {
                    let freq = freq.as_ref().expect("computed above");
                    return q
                        .candidates
                        .iter()
                        .map(|c| freq.get(c).copied().unwrap_or(0) as f64)
                        .collect();
                }
                let chain = hops(kind);
                let source = if kind.is_head_tail() { q.head } else { q.relation };
                if chain.len() == 1 {
                    q.candidates
                        .iter()
                        .map(|&c| index.prob(chain[0], source, c))
                        .collect()
                } else {
                    let dense = accumulate_chain(index, chain, source, options);
                    q.candidates.iter().map(|&c| dense[c]).collect()
                }
            })
            .collect();
        matrices.push(ScoreMatrix::new(kind.name(), rows));
    }
    Ok(matrices)
}

/// Two-column text: entity id, count; sorted by id.
pub fn save_candidate_frequency(freq: &HashMap<usize, u64>, path: &Path) -> Result<()> {
    let mut entries: Vec<(usize, u64)> = freq.iter().map(|(&k, &v)| (k, v)).collect();
    entries.sort_unstable();
    let mut out = String::new();
    for (id, count) in entries {
        writeln!(out, "{id} {count}").unwrap();
    }
    fs::write(path, out).map_err(|e| KgError::io(path, e))
}

pub fn load_candidate_frequency(path: &Path) -> Result<HashMap<usize, u64>> {
    let text = fs::read_to_string(path).map_err(|e| KgError::io(path, e))?;
    let mut freq = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let id: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| KgError::parse(path, lineno + 1, "bad entity id"))?;
        let count: u64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| KgError::parse(path, lineno + 1, "bad count"))?;
        freq.insert(id, count);
    }
    Ok(freq)
}
