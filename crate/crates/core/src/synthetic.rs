//! Deterministic synthetic benchmark corpus.
//!
//! Entities are grouped into equal clusters; each of eight relations maps
//! source clusters to target clusters through a fixed permutation, so the
//! graph is learnable by translation/rotation geometries. The relation roles
//! plant the classic patterns:
//!
//! * relation 0 — symmetric within-cluster pairs (both directions present)
//! * relations 1, 2 — mutually inverse
//! * relations 3, 4, 5 — composition: 3 then 4 implies 5
//! * relation 6 — a generic cluster mapping
//! * relation 7 — a cluster mapping with hub-biased tails
//!
//! Held-out queries follow the same generator, are guaranteed absent from
//! the training triples, and rank the true tail against uniform candidates.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{CandidateQuery, CandidateQuerySet, Triple, TripletStore, Vocab};
use crate::trainer::rng_stream;

pub const RELATION_COUNT: usize = 8;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub entity_count: usize,
    /// Must divide `entity_count`.
    pub cluster_count: usize,
    /// Approximate training triple budget.
    pub train_triples: usize,
    /// Held-out queries per split (validation and test).
    pub query_count: usize,
    pub candidates_per_query: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            entity_count: 1000,
            cluster_count: 40,
            train_triples: 20_000,
            query_count: 1000,
            candidates_per_query: 100,
            seed: 42,
        }
    }
}

#[derive(Debug)]
pub struct SyntheticCorpus {
    pub store: TripletStore,
    pub validation: CandidateQuerySet,
    pub test: CandidateQuerySet,
}

struct Generator {
    cluster_size: usize,
    cluster_count: usize,
    /// Per relation: target cluster for each source cluster.
    cluster_maps: Vec<Vec<usize>>,
}

impl Generator {
    fn cluster_of(&self, e: usize) -> usize {
        e / self.cluster_size
    }

    fn member(&self, cluster: usize, rng: &mut ChaCha8Rng) -> usize {
        cluster * self.cluster_size + rng.gen_range(0..self.cluster_size)
    }

    /// Hub-biased member: the minimum of two uniform draws concentrates
    /// picks on low in-cluster indices.
    fn hub_member(&self, cluster: usize, rng: &mut ChaCha8Rng) -> usize {
        let a = rng.gen_range(0..self.cluster_size);
        let b = rng.gen_range(0..self.cluster_size);
        cluster * self.cluster_size + a.min(b)
    }

    /// A pattern-consistent triple with the given relation.
    fn sample_triple(&self, relation: usize, rng: &mut ChaCha8Rng) -> Triple {
        let head = rng.gen_range(0..self.cluster_count * self.cluster_size);
        let target_cluster = self.cluster_maps[relation][self.cluster_of(head)];
        let tail = if relation == 7 {
            self.hub_member(target_cluster, rng)
        } else {
            self.member(target_cluster, rng)
        };
        Triple::new(head, relation, tail)
    }
}

pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    assert!(
        config.cluster_count > 0 && config.entity_count % config.cluster_count == 0,
        "cluster_count must divide entity_count"
    );
    assert!(config.candidates_per_query >= 1);
    let cluster_count = config.cluster_count;
    let cluster_size = config.entity_count / cluster_count;

    let mut rng = rng_stream(config.seed, 0);
    let permutation = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        let mut p: Vec<usize> = (0..cluster_count).collect();
        p.shuffle(rng);
        p
    };
    let identity: Vec<usize> = (0..cluster_count).collect();
    let p1 = permutation(&mut rng);
    let mut p2 = vec![0; cluster_count];
    for (src, &dst) in p1.iter().enumerate() {
        p2[dst] = src;
    }
    let p3 = permutation(&mut rng);
    let p4 = permutation(&mut rng);
    // Composition: cluster -> p4(p3(cluster)).
    let p5: Vec<usize> = (0..cluster_count).map(|c| p4[p3[c]]).collect();
    let p6 = permutation(&mut rng);
    let p7 = permutation(&mut rng);
    let gen = Generator {
        cluster_size,
        cluster_count,
        cluster_maps: vec![identity, p1, p2, p3, p4, p5, p6, p7],
    };

    // Training triples, grouped by pattern role.
    let budget = config.train_triples;
    let mut triples = Vec::with_capacity(budget + 16);
    let mut train_rng = rng_stream(config.seed, 1);
    for _ in 0..budget / 8 {
        // Symmetric pairs on relation 0.
        let t = gen.sample_triple(0, &mut train_rng);
        triples.push(t);
        triples.push(Triple::new(t.tail, 0, t.head));
    }
    for _ in 0..budget / 8 {
        // Inverse pair: r1 forward, r2 backward.
        let t = gen.sample_triple(1, &mut train_rng);
        triples.push(t);
        triples.push(Triple::new(t.tail, 2, t.head));
    }
    for _ in 0..budget / 12 {
        // Composition chain r3 then r4 implies r5.
        let first = gen.sample_triple(3, &mut train_rng);
        let mid_cluster = gen.cluster_of(first.tail);
        let last = gen.member(gen.cluster_maps[4][mid_cluster], &mut train_rng);
        triples.push(first);
        triples.push(Triple::new(first.tail, 4, last));
        triples.push(Triple::new(first.head, 5, last));
    }
    for _ in 0..budget / 8 {
        triples.push(gen.sample_triple(6, &mut train_rng));
    }
    for _ in 0..budget / 8 {
        triples.push(gen.sample_triple(7, &mut train_rng));
    }

    let vocab = Vocab::new(config.entity_count, RELATION_COUNT);
    let store = TripletStore::new(triples, vocab.clone()).expect("generator respects bounds");
    let seen: HashSet<Triple> = store.triples.iter().copied().collect();

    let mut query_rng = rng_stream(config.seed, 2);
    let mut make_split = |seen: &HashSet<Triple>| -> CandidateQuerySet {
        let mut queries = Vec::with_capacity(config.query_count);
        while queries.len() < config.query_count {
            let relation = query_rng.gen_range(0..RELATION_COUNT);
            let t = gen.sample_triple(relation, &mut query_rng);
            if seen.contains(&t) {
                continue;
            }
            let mut candidates: Vec<usize> = Vec::with_capacity(config.candidates_per_query);
            let true_index = query_rng.gen_range(0..config.candidates_per_query);
            for i in 0..config.candidates_per_query {
                if i == true_index {
                    candidates.push(t.tail);
                } else {
                    candidates.push(query_rng.gen_range(0..config.entity_count));
                }
            }
            queries.push(CandidateQuery {
                head: t.head,
                relation,
                candidates,
                true_index: Some(true_index),
            });
        }
        CandidateQuerySet::new(queries, vocab.clone()).expect("generator respects bounds")
    };
    let validation = make_split(&seen);
    let test = make_split(&seen);

    SyntheticCorpus {
        store,
        validation,
        test,
    }
}
