//! Sparse per-direction frequency rows with exact integer counts.

use std::collections::HashMap;

use crate::data::{CandidateQuerySet, TripletStore};
use crate::error::{KgError, Result};

use super::{Direction, FeatureSource, Space};

/// Six sparse frequency matrices, one per walk direction, with per-source
/// row sums. Immutable after build; row target lists are sorted by id.
#[derive(Debug, Clone)]
pub struct DirectionalIndex {
    entity_count: usize,
    relation_count: usize,
    rows: Vec<Vec<Vec<(usize, u64)>>>,
    sums: Vec<Vec<u64>>,
}

/// Counts every selected triple once into all six directions.
///
/// When `source.include_candidates` is set, each query contributes the
/// pseudo-triple `(head, relation, c)` for every candidate `c` in its list,
/// multiplicity preserved.
pub fn build_index(
    store: &TripletStore,
    queries: Option<&CandidateQuerySet>,
    source: &FeatureSource,
) -> Result<DirectionalIndex> {
    source.validate()?;
    let entity_count = store.vocab.entity_count;
    let relation_count = store.vocab.relation_count;
    let mut maps: Vec<Vec<HashMap<usize, u64>>> = Direction::ALL
        .iter()
        .map(|d| {
            let n = match d.source_space() {
                Space::Entity => entity_count,
                Space::Relation => relation_count,
            };
            vec![HashMap::new(); n]
        })
        .collect();

    let mut count_triple = |h: usize, r: usize, t: usize| -> Result<()> {
        store.vocab.check_entity(h)?;
        store.vocab.check_relation(r)?;
        store.vocab.check_entity(t)?;
        *maps[Direction::HT.idx()][h].entry(t).or_insert(0) += 1;
        *maps[Direction::HR.idx()][h].entry(r).or_insert(0) += 1;
        *maps[Direction::RH.idx()][r].entry(h).or_insert(0) += 1;
        *maps[Direction::RT.idx()][r].entry(t).or_insert(0) += 1;
        *maps[Direction::TH.idx()][t].entry(h).or_insert(0) += 1;
        *maps[Direction::TR.idx()][t].entry(r).or_insert(0) += 1;
        Ok(())
    };

    if source.include_training {
        for t in &store.triples {
            count_triple(t.head, t.relation, t.tail)?;
        }
    }
    if source.include_candidates {
        let queries = queries.ok_or_else(|| {
            KgError::Config("candidate inclusion requested but no query set provided".into())
        })?;
        for q in &queries.queries {
            for &c in &q.candidates {
                count_triple(q.head, q.relation, c)?;
            }
        }
    }

    let mut rows = Vec::with_capacity(6);
    let mut sums = Vec::with_capacity(6);
    for dir_maps in maps {
        let mut dir_rows = Vec::with_capacity(dir_maps.len());
        let mut dir_sums = Vec::with_capacity(dir_maps.len());
        for map in dir_maps {
            let mut row: Vec<(usize, u64)> = map.into_iter().collect();
            row.sort_unstable_by_key(|&(target, _)| target);
            dir_sums.push(row.iter().map(|&(_, c)| c).sum());
            dir_rows.push(row);
        }
        rows.push(dir_rows);
        sums.push(dir_sums);
    }
    Ok(DirectionalIndex {
        entity_count,
        relation_count,
        rows,
        sums,
    })
}

impl DirectionalIndex {
    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn source_count(&self, d: Direction) -> usize {
        match d.source_space() {
            Space::Entity => self.entity_count,
            Space::Relation => self.relation_count,
        }
    }

    pub fn target_count(&self, d: Direction) -> usize {
        match d.target_space() {
            Space::Entity => self.entity_count,
            Space::Relation => self.relation_count,
        }
    }

    /// Sorted `(target, count)` pairs of one source row.
    pub fn row(&self, d: Direction, source: usize) -> &[(usize, u64)] {
        if source >= self.source_count(d) {
            return &[];
        }
        &self.rows[d.idx()][source]
    }

    pub fn row_sum(&self, d: Direction, source: usize) -> u64 {
        if source >= self.source_count(d) {
            return 0;
        }
        self.sums[d.idx()][source]
    }

    /// Exact frequency of the `(source, target)` pair in direction `d`.
    pub fn count(&self, d: Direction, source: usize, target: usize) -> u64 {
        let row = self.row(d, source);
        match row.binary_search_by_key(&target, |&(t, _)| t) {
            Ok(i) => row[i].1,
            Err(_) => 0,
        }
    }

    /// Conditional transition probability `count / row_sum`, 0 when the
    /// source never appears in this direction.
    pub fn prob(&self, d: Direction, source: usize, target: usize) -> f64 {
        let sum = self.row_sum(d, source);
        if sum == 0 {
            return 0.0;
        }
        self.count(d, source, target) as f64 / sum as f64
    }
}
