//! Brute-force feature oracle: dense count tables filled by plain loops and
//! features evaluated by full summation over every intermediate id. Shares
//! no code with the sparse index it arbitrates.

use kg_core::data::{CandidateQuerySet, TripletStore};
use kg_core::features::FeatureKind;

pub struct OracleIndex {
    entities: usize,
    relations: usize,
    ht: Dense,
    th: Dense,
    hr: Dense,
    rh: Dense,
    rt: Dense,
    tr: Dense,
}

struct Dense {
    counts: Vec<Vec<u64>>,
    sums: Vec<u64>,
}

impl Dense {
    fn new(rows: usize, cols: usize) -> Dense {
        Dense {
            counts: vec![vec![0; cols]; rows],
            sums: vec![0; rows],
        }
    }

    fn add(&mut self, a: usize, b: usize) {
        self.counts[a][b] += 1;
        self.sums[a] += 1;
    }

    fn p(&self, a: usize, b: usize) -> f64 {
        if self.sums[a] == 0 {
            0.0
        } else {
            self.counts[a][b] as f64 / self.sums[a] as f64
        }
    }
}

impl OracleIndex {
    pub fn build(
        store: &TripletStore,
        queries: &CandidateQuerySet,
        include_training: bool,
        include_candidates: bool,
    ) -> OracleIndex {
        let entities = store.vocab.entity_count;
        let relations = store.vocab.relation_count;
        let mut oracle = OracleIndex {
            entities,
            relations,
            ht: Dense::new(entities, entities),
            th: Dense::new(entities, entities),
            hr: Dense::new(entities, relations),
            rh: Dense::new(relations, entities),
            rt: Dense::new(relations, entities),
            tr: Dense::new(entities, relations),
        };
        let count = |h: usize, r: usize, t: usize, oracle: &mut OracleIndex| {
            oracle.ht.add(h, t);
            oracle.th.add(t, h);
            oracle.hr.add(h, r);
            oracle.rh.add(r, h);
            oracle.rt.add(r, t);
            oracle.tr.add(t, r);
        };
        if include_training {
            for t in &store.triples {
                count(t.head, t.relation, t.tail, &mut oracle);
            }
        }
        if include_candidates {
            for q in &queries.queries {
                for &c in &q.candidates {
                    count(q.head, q.relation, c, &mut oracle);
                }
            }
        }
        oracle
    }

    /// The feature value at (h, t) or (r, t), by exhaustive summation.
    pub fn feature(
        &self,
        kind: FeatureKind,
        h: usize,
        r: usize,
        t: usize,
        queries: &CandidateQuerySet,
    ) -> f64 {
        match kind {
            FeatureKind::Ht => self.ht.p(h, t),
            FeatureKind::Th => self.th.p(h, t),
            FeatureKind::ThHt => (0..self.entities)
                .map(|e| self.th.p(h, e) * self.ht.p(e, t))
                .sum(),
            FeatureKind::HtHt => (0..self.entities)
                .map(|e| self.ht.p(h, e) * self.ht.p(e, t))
                .sum(),
            FeatureKind::HtTh => (0..self.entities)
                .map(|e| self.ht.p(h, e) * self.th.p(e, t))
                .sum(),
            FeatureKind::ThTh => (0..self.entities)
                .map(|e| self.th.p(h, e) * self.th.p(e, t))
                .sum(),
            FeatureKind::HtHtTh => {
                let mut total = 0.0;
                for e1 in 0..self.entities {
                    let p1 = self.ht.p(h, e1);
                    if p1 == 0.0 {
                        continue;
                    }
                    for e2 in 0..self.entities {
                        total += p1 * self.ht.p(e1, e2) * self.th.p(e2, t);
                    }
                }
                total
            }
            FeatureKind::Rt => self.rt.p(r, t),
            FeatureKind::Rh => self.rh.p(r, t),
            FeatureKind::RtTrRt => {
                let mut total = 0.0;
                for e1 in 0..self.entities {
                    let p1 = self.rt.p(r, e1);
                    if p1 == 0.0 {
                        continue;
                    }
                    for e2 in 0..self.relations {
                        total += p1 * self.tr.p(e1, e2) * self.rt.p(e2, t);
                    }
                }
                total
            }
            FeatureKind::RhHrRt => {
                let mut total = 0.0;
                for e1 in 0..self.entities {
                    let p1 = self.rh.p(r, e1);
                    if p1 == 0.0 {
                        continue;
                    }
                    for e2 in 0..self.relations {
                        total += p1 * self.hr.p(e1, e2) * self.rt.p(e2, t);
                    }
                }
                total
            }
            FeatureKind::RtHrRt => {
                let mut total = 0.0;
                for e1 in 0..self.entities {
                    let p1 = self.rt.p(r, e1);
                    if p1 == 0.0 {
                        continue;
                    }
                    for e2 in 0..self.relations {
                        total += p1 * self.hr.p(e1, e2) * self.rt.p(e2, t);
                    }
                }
                total
            }
            FeatureKind::CandFreq => {
                let mut count = 0u64;
                for q in &queries.queries {
                    for &c in &q.candidates {
                        if c == t {
                            count += 1;
                        }
                    }
                }
                count as f64
            }
        }
    }
}
