//! Integer-encoded triples, candidate queries, and their text loaders.
//!
//! A knowledge graph is a list of `(head, relation, tail)` facts over dense
//! integer id spaces. Evaluation data is a list of `(head, relation,
//! candidates)` queries ranking candidate tail entities; in validation mode
//! each query also records the position of the true tail.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{KgError, Result};

/// Entity and relation id spaces shared by every data structure.
///
/// All entity ids used anywhere must be in `[0, entity_count)` and all
/// relation ids in `[0, relation_count)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub entity_count: usize,
    pub relation_count: usize,
    pub entity_labels: Option<Vec<String>>,
    pub relation_labels: Option<Vec<String>>,
}

impl Vocab {
    pub fn new(entity_count: usize, relation_count: usize) -> Self {
        Vocab {
            entity_count,
            relation_count,
            entity_labels: None,
            relation_labels: None,
        }
    }

    pub fn with_labels(
        entity_count: usize,
        relation_count: usize,
        entity_labels: Vec<String>,
        relation_labels: Vec<String>,
    ) -> Result<Self> {
        if entity_labels.len() != entity_count {
            return Err(KgError::Shape(format!(
                "entity label list has length {}, expected {entity_count}",
                entity_labels.len()
            )));
        }
        if relation_labels.len() != relation_count {
            return Err(KgError::Shape(format!(
                "relation label list has length {}, expected {relation_count}",
                relation_labels.len()
            )));
        }
        Ok(Vocab {
            entity_count,
            relation_count,
            entity_labels: Some(entity_labels),
            relation_labels: Some(relation_labels),
        })
    }

    pub fn check_entity(&self, id: usize) -> Result<()> {
        if id >= self.entity_count {
            return Err(KgError::IdBounds(format!(
                "entity id {id} >= entity_count {}",
                self.entity_count
            )));
        }
        Ok(())
    }

    pub fn check_relation(&self, id: usize) -> Result<()> {
        if id >= self.relation_count {
            return Err(KgError::IdBounds(format!(
                "relation id {id} >= relation_count {}",
                self.relation_count
            )));
        }
        Ok(())
    }
}

/// A directed fact: head entity, relation, tail entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

/// An ordered list of triples plus the vocabulary they live in.
///
/// Duplicate triples are kept; frequency-based features count occurrences.
#[derive(Debug, Clone)]
pub struct TripletStore {
    pub triples: Vec<Triple>,
    pub vocab: Vocab,
}

impl TripletStore {
    /// Builds a store, validating every id against the vocabulary.
    pub fn new(triples: Vec<Triple>, vocab: Vocab) -> Result<Self> {
        for (i, t) in triples.iter().enumerate() {
            vocab.check_entity(t.head).map_err(|e| annotate(e, i))?;
            vocab.check_relation(t.relation).map_err(|e| annotate(e, i))?;
            vocab.check_entity(t.tail).map_err(|e| annotate(e, i))?;
        }
        Ok(TripletStore { triples, vocab })
    }

    /// Builds a store inferring vocabulary sizes as `1 + max id` per column.
    pub fn from_triples(triples: Vec<Triple>) -> Self {
        let mut entity_count = 0;
        let mut relation_count = 0;
        for t in &triples {
            entity_count = entity_count.max(t.head + 1).max(t.tail + 1);
            relation_count = relation_count.max(t.relation + 1);
        }
        TripletStore {
            triples,
            vocab: Vocab::new(entity_count, relation_count),
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

fn annotate(err: KgError, triple_index: usize) -> KgError {
    match err {
        KgError::IdBounds(msg) => KgError::IdBounds(format!("triple {triple_index}: {msg}")),
        other => other,
    }
}

/// One ranking query: score `candidates` as tails of `(head, relation, ?)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateQuery {
    pub head: usize,
    pub relation: usize,
    /// Ordered candidate tail ids; repeats allowed, order breaks score ties.
    pub candidates: Vec<usize>,
    /// Position of the ground-truth tail in `candidates`; absent in test mode.
    pub true_index: Option<usize>,
}

impl CandidateQuery {
    pub fn true_tail(&self) -> Option<usize> {
        self.true_index.map(|i| self.candidates[i])
    }
}

/// A query set; all queries agree on whether `true_index` is present.
#[derive(Debug, Clone)]
pub struct CandidateQuerySet {
    pub queries: Vec<CandidateQuery>,
    pub vocab: Vocab,
}

impl CandidateQuerySet {
    pub fn new(queries: Vec<CandidateQuery>, vocab: Vocab) -> Result<Self> {
        let set = CandidateQuerySet { queries, vocab };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// True when every query carries a `true_index`.
    pub fn has_truth(&self) -> bool {
        self.queries.iter().all(|q| q.true_index.is_some())
    }

    pub fn validate(&self) -> Result<()> {
        let mut mode: Option<bool> = None;
        for (i, q) in self.queries.iter().enumerate() {
            self.vocab.check_entity(q.head)?;
            self.vocab.check_relation(q.relation)?;
            for &c in &q.candidates {
                self.vocab.check_entity(c)?;
            }
            if q.candidates.is_empty() {
                return Err(KgError::Shape(format!("query {i} has no candidates")));
            }
            if let Some(t) = q.true_index {
                if t >= q.candidates.len() {
                    return Err(KgError::IdBounds(format!(
                        "query {i}: true_index {t} >= candidate count {}",
                        q.candidates.len()
                    )));
                }
            }
            let labeled = q.true_index.is_some();
            match mode {
                None => mode = Some(labeled),
                Some(m) if m != labeled => {
                    return Err(KgError::Format(format!(
                        "query {i} mixes labeled and unlabeled rows in one set"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Checks every id against another vocabulary (e.g. a training store's).
    pub fn validate_against(&self, vocab: &Vocab) -> Result<()> {
        for q in &self.queries {
            vocab.check_entity(q.head)?;
            vocab.check_relation(q.relation)?;
            for &c in &q.candidates {
                vocab.check_entity(c)?;
            }
        }
        Ok(())
    }
}

/// Options for [`load_triplets`].
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Explicit entity count; inferred as `1 + max id` when absent.
    pub entity_count: Option<usize>,
    /// Explicit relation count; inferred as `1 + max id` when absent.
    pub relation_count: Option<usize>,
}

/// Loads a triplet file: one `h r t` line per fact, `#` comments ignored.
pub fn load_triplets(path: &Path, options: &LoadOptions) -> Result<TripletStore> {
    let file = File::open(path).map_err(|e| KgError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut triples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| KgError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = parse_id_row(path, lineno, trimmed)?;
        if fields.len() != 3 {
            return Err(KgError::parse(
                path,
                lineno,
                format!("expected 3 fields (h r t), found {}", fields.len()),
            ));
        }
        triples.push(Triple::new(fields[0], fields[1], fields[2]));
    }

    let vocab = match (options.entity_count, options.relation_count) {
        (Some(e), Some(r)) => Vocab::new(e, r),
        _ => {
            let inferred = TripletStore::from_triples(triples.clone()).vocab;
            Vocab::new(
                options.entity_count.unwrap_or(inferred.entity_count),
                options.relation_count.unwrap_or(inferred.relation_count),
            )
        }
    };
    TripletStore::new(triples, vocab)
}

/// Loads a query file.
///
/// Each row is `head relation C c_1 .. c_C [true_index]`; the trailing
/// `true_index` must be present on every row or on none.
pub fn load_queries(path: &Path) -> Result<CandidateQuerySet> {
    let file = File::open(path).map_err(|e| KgError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut queries = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| KgError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = parse_id_row(path, lineno, trimmed)?;
        if fields.len() < 3 {
            return Err(KgError::parse(
                path,
                lineno,
                "expected at least head, relation, candidate count",
            ));
        }
        let count = fields[2];
        if count == 0 {
            return Err(KgError::parse(path, lineno, "candidate count must be >= 1"));
        }
        let (candidates, true_index) = if fields.len() == 3 + count {
            (fields[3..].to_vec(), None)
        } else if fields.len() == 4 + count {
            (fields[3..3 + count].to_vec(), Some(fields[3 + count]))
        } else {
            return Err(KgError::parse(
                path,
                lineno,
                format!(
                    "candidate count mismatch: declared {count}, row has {} trailing fields",
                    fields.len() - 3
                ),
            ));
        };
        if let Some(t) = true_index {
            if t >= count {
                return Err(KgError::parse(
                    path,
                    lineno,
                    format!("true_index {t} >= candidate count {count}"),
                ));
            }
        }
        queries.push(CandidateQuery {
            head: fields[0],
            relation: fields[1],
            candidates,
            true_index,
        });
    }

    let mut entity_count = 0;
    let mut relation_count = 0;
    for q in &queries {
        entity_count = entity_count.max(q.head + 1);
        relation_count = relation_count.max(q.relation + 1);
        for &c in &q.candidates {
            entity_count = entity_count.max(c + 1);
        }
    }
    let set = CandidateQuerySet {
        queries,
        vocab: Vocab::new(entity_count, relation_count),
    };
    // Mixed labeled/unlabeled rows are caught here.
    set.validate().map_err(|e| match e {
        KgError::Format(msg) => KgError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(set)
}

/// Writes a store in the `load_triplets` format (one `h r t` line per fact).
pub fn save_triplets(store: &TripletStore, path: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for t in &store.triples {
        writeln!(out, "{} {} {}", t.head, t.relation, t.tail).unwrap();
    }
    std::fs::write(path, out).map_err(|e| KgError::io(path, e))
}

/// Writes a query set in the `load_queries` format.
pub fn save_queries(set: &CandidateQuerySet, path: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for q in &set.queries {
        write!(out, "{} {} {}", q.head, q.relation, q.candidates.len()).unwrap();
        for c in &q.candidates {
            write!(out, " {c}").unwrap();
        }
        if let Some(t) = q.true_index {
            write!(out, " {t}").unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| KgError::io(path, e))
}

fn parse_id_row(path: &Path, lineno: usize, row: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for tok in row.split_whitespace() {
        let v: i64 = tok.parse().map_err(|_| {
            KgError::parse(path, lineno, format!("not an integer: {tok:?}"))
        })?;
        if v < 0 {
            return Err(KgError::parse(path, lineno, format!("negative id: {v}")));
        }
        out.push(v as usize);
    }
    Ok(out)
}
