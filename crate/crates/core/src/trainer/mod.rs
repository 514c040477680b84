//! Negative-sampling SGD over the four embedding geometries.
//!
//! Training is deterministic: fixed seed plus single-threaded execution
//! reproduces every parameter bit. Updates are sparse — a step rewrites only
//! the entity and relation rows touched by its batch.

pub mod gradcheck;
pub mod io;
pub mod loss;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Triple, TripletStore, Vocab};
use crate::error::{KgError, Result};
use crate::models::note::{
    note_prepare, note_relation_backward, note_score_grad_prepared, NotePrepared,
};
use crate::models::{score_grad_rows, EmbeddingTable, GeometryConfig, ModelKind, ScoreDirection};

pub use loss::{loss_self_adversarial, AdversarialLoss};

/// Hyperparameters of one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Embedding learning rate.
    pub lr: f64,
    /// Steps between learning-rate halvings.
    pub lrd_step: usize,
    pub neg_sample_size: usize,
    pub adversarial_temperature: f64,
    pub epochs: usize,
    pub seed: u64,
    pub geometry: GeometryConfig,
}

impl TrainConfig {
    pub fn new(geometry: GeometryConfig) -> Self {
        TrainConfig {
            batch_size: 1000,
            lr: 0.1,
            lrd_step: 100_000,
            neg_sample_size: 64,
            adversarial_temperature: 1.0,
            epochs: 10,
            seed: 42,
            geometry,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.batch_size == 0 || self.neg_sample_size == 0 || self.epochs == 0 {
            return Err(KgError::Config(
                "batch_size, neg_sample_size and epochs must be >= 1".into(),
            ));
        }
        if self.lrd_step == 0 {
            return Err(KgError::Config("lrd_step must be >= 1".into()));
        }
        // lr = 0 is allowed: it degenerates to a no-update run.
        if self.lr < 0.0 || !self.lr.is_finite() {
            return Err(KgError::Config(format!(
                "lr must be non-negative, got {}",
                self.lr
            )));
        }
        if self.adversarial_temperature < 0.0 || !self.adversarial_temperature.is_finite() {
            return Err(KgError::Config(
                "adversarial_temperature must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Which slot of the positive triples a negative batch corrupts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionSide {
    Head,
    Tail,
}

/// Uniform corruption entities for one batch of positives.
#[derive(Debug, Clone)]
pub struct NegativeBatch {
    pub positives: Vec<Triple>,
    pub corrupted_side: CorruptionSide,
    /// `positives.len() * neg_per_positive` entity ids, row-major.
    pub negatives: Vec<usize>,
    pub neg_per_positive: usize,
}

impl NegativeBatch {
    pub fn row(&self, i: usize) -> &[usize] {
        &self.negatives[i * self.neg_per_positive..(i + 1) * self.neg_per_positive]
    }
}

/// Draws uniform corruption entities; deterministic given the rng state.
/// Accidental true triples among the draws are kept.
pub fn sample_negatives(
    store: &TripletStore,
    batch: &[Triple],
    side: CorruptionSide,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<NegativeBatch> {
    if batch.is_empty() {
        return Err(KgError::Config("negative sampling over an empty batch".into()));
    }
    let n = store.vocab.entity_count;
    if n == 0 {
        return Err(KgError::Config("empty entity vocabulary".into()));
    }
    let count = batch.len() * config.neg_sample_size;
    let mut negatives = Vec::with_capacity(count);
    for _ in 0..count {
        negatives.push(rng.gen_range(0..n));
    }
    Ok(NegativeBatch {
        positives: batch.to_vec(),
        corrupted_side: side,
        negatives,
        neg_per_positive: config.neg_sample_size,
    })
}

/// A freshly initialized parameter table for `config.geometry`.
///
/// Values are uniform in `[-6/sqrt(hidden_size), 6/sqrt(hidden_size)]`;
/// orthogonal-transform blocks start at identity plus uniform noise in
/// `[-0.1, 0.1]` so the first orthogonalization is far from degenerate.
pub fn init_table(vocab: &Vocab, config: &TrainConfig) -> Result<EmbeddingTable> {
    let g = config.geometry;
    let mut table = EmbeddingTable::zeros(g, vocab.entity_count, vocab.relation_count)?;
    let mut rng = rng_stream(config.seed, 0);
    let bound = 6.0 / (g.hidden_size as f64).sqrt();
    for e in 0..vocab.entity_count {
        for v in table.entity_row_mut(e) {
            *v = rng.gen_range(-bound..bound) as f32;
        }
    }
    match g.model_kind {
        ModelKind::Note => {
            let ds = g.ote_size;
            let k = g.num_blocks();
            for r in 0..vocab.relation_count {
                let row = table.relation_row_mut(r);
                for i in 0..k {
                    for a in 0..ds {
                        for b in 0..ds {
                            let base = if a == b { 1.0 } else { 0.0 };
                            row[i * ds * ds + a * ds + b] =
                                (base + rng.gen_range(-0.1..0.1)) as f32;
                        }
                    }
                }
                for v in &mut row[k * ds * ds..] {
                    *v = rng.gen_range(-bound..bound) as f32;
                }
            }
        }
        _ => {
            for r in 0..vocab.relation_count {
                for v in table.relation_row_mut(r) {
                    *v = rng.gen_range(-bound..bound) as f32;
                }
            }
        }
    }
    Ok(table)
}

/// Final table plus the mean per-epoch training loss curve.
#[derive(Debug)]
pub struct TrainOutcome {
    pub table: EmbeddingTable,
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch SGD with self-adversarial negative sampling.
///
/// Every step draws head- and tail-corrupted negatives for its batch,
/// applies sparse updates to touched rows only, and halves the learning
/// rate every `lrd_step` steps.
pub fn train(store: &TripletStore, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if store.is_empty() {
        return Err(KgError::Config("cannot train on an empty triplet store".into()));
    }
    let mut table = init_table(&store.vocab, config)?;
    let mut shuffle_rng = rng_stream(config.seed, 1);
    let mut neg_rng = rng_stream(config.seed, 2);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut step = 0usize;
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..store.len()).collect();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batch_count = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Triple> = chunk.iter().map(|&i| store.triples[i]).collect();
            let lr_t = config.lr * 0.5f64.powi((step / config.lrd_step) as i32);
            let tail_negs =
                sample_negatives(store, &batch, CorruptionSide::Tail, config, &mut neg_rng)?;
            let head_negs =
                sample_negatives(store, &batch, CorruptionSide::Head, config, &mut neg_rng)?;
            let loss = train_step(&mut table, &batch, &tail_negs, &head_negs, lr_t, config)?;
            if !loss.is_finite() {
                return Err(KgError::Diverged(format!(
                    "mean batch loss {loss} at epoch {epoch}, step {step}"
                )));
            }
            loss_sum += loss;
            batch_count += 1;
            step += 1;
        }
        let mean = loss_sum / batch_count as f64;
        if !mean.is_finite() {
            return Err(KgError::Diverged(format!("mean epoch loss {mean} at epoch {epoch}")));
        }
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome {
        table,
        epoch_losses,
    })
}

pub(crate) fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameter rows as `f64`, abstracted so the same gradient accumulation
/// serves both the `f32` table (training) and an `f64` workspace
/// (finite-difference checking).
pub(crate) trait ParamSource {
    fn entity(&self, id: usize) -> Vec<f64>;
    fn relation(&self, id: usize) -> Vec<f64>;
}

struct TableParams<'a>(&'a EmbeddingTable);

impl ParamSource for TableParams<'_> {
    fn entity(&self, id: usize) -> Vec<f64> {
        self.0.entity_row_f64(id)
    }
    fn relation(&self, id: usize) -> Vec<f64> {
        self.0.relation_row_f64(id)
    }
}

/// Per-relation accumulator for the orthogonal-transform geometry: gradients
/// w.r.t. the orthonormal blocks and both scalar diagonals, pulled back to
/// the raw row once per step.
pub(crate) struct NoteRelAccum {
    pub prep: NotePrepared,
    pub d_q: Vec<Vec<f64>>,
    pub d_diag_head: Vec<Vec<f64>>,
    pub d_diag_tail: Vec<Vec<f64>>,
}

impl NoteRelAccum {
    fn new(prep: NotePrepared, geometry: &GeometryConfig) -> Self {
        let ds = geometry.ote_size;
        let k = geometry.num_blocks();
        NoteRelAccum {
            prep,
            d_q: vec![vec![0.0; ds * ds]; k],
            d_diag_head: vec![vec![0.0; ds]; k],
            d_diag_tail: vec![vec![0.0; ds]; k],
        }
    }
}

/// Scaled loss gradients for one step, keyed by touched row.
#[derive(Default)]
pub(crate) struct StepAccum {
    pub entity: HashMap<usize, Vec<f64>>,
    pub rel_dense: HashMap<usize, Vec<f64>>,
    pub note: HashMap<usize, NoteRelAccum>,
}

fn axpy_into(map: &mut HashMap<usize, Vec<f64>>, id: usize, scale: f64, grad: &[f64]) {
    let acc = map
        .entry(id)
        .or_insert_with(|| vec![0.0; grad.len()]);
    for (a, g) in acc.iter_mut().zip(grad) {
        *a += scale * g;
    }
}

enum SampleGrad {
    Dense(crate::models::TripleGrad),
    Note(crate::models::note::NoteSampleGrad),
}

/// Accumulates (scaled by `scale`) loss gradients of one positive and its
/// negatives, for both corruption sides. Returns the sum of the two side
/// losses, unscaled.
pub(crate) fn process_positive<P: ParamSource>(
    params: &P,
    geometry: &GeometryConfig,
    positive: Triple,
    tail_negatives: &[usize],
    head_negatives: &[usize],
    temperature: f64,
    scale: f64,
    accum: &mut StepAccum,
) -> Result<f64> {
    let is_note = geometry.model_kind == ModelKind::Note;
    if is_note && !accum.note.contains_key(&positive.relation) {
        let prep = note_prepare(&params.relation(positive.relation), geometry)?;
        accum
            .note
            .insert(positive.relation, NoteRelAccum::new(prep, geometry));
    }
    let StepAccum {
        entity: acc_entity,
        rel_dense: acc_rel,
        note: acc_note,
    } = accum;

    let rel_row = if is_note {
        Vec::new()
    } else {
        params.relation(positive.relation)
    };
    let head_row = params.entity(positive.head);
    let tail_row = params.entity(positive.tail);

    let mut total_loss = 0.0;
    for side in [CorruptionSide::Tail, CorruptionSide::Head] {
        let (direction, negatives) = match side {
            CorruptionSide::Tail => (ScoreDirection::HeadToTail, tail_negatives),
            CorruptionSide::Head => (ScoreDirection::TailToHead, head_negatives),
        };

        // (head id, tail id) of each scored triple: the positive first, then
        // the corrupted variants.
        let mut sample_ids = Vec::with_capacity(1 + negatives.len());
        sample_ids.push((positive.head, positive.tail));
        for &n in negatives {
            match side {
                CorruptionSide::Tail => sample_ids.push((positive.head, n)),
                CorruptionSide::Head => sample_ids.push((n, positive.tail)),
            }
        }

        let mut scores = Vec::with_capacity(sample_ids.len());
        let mut grads: Vec<SampleGrad> = Vec::with_capacity(sample_ids.len());
        for &(h, t) in &sample_ids {
            let eh = if h == positive.head {
                head_row.clone()
            } else {
                params.entity(h)
            };
            let et = if t == positive.tail {
                tail_row.clone()
            } else {
                params.entity(t)
            };
            if is_note {
                let prep = &acc_note[&positive.relation].prep;
                let (score, grad) =
                    note_score_grad_prepared(prep, &eh, &et, geometry.gamma, direction);
                scores.push(score);
                grads.push(SampleGrad::Note(grad));
            } else {
                let (score, grad) = score_grad_rows(geometry, &eh, &rel_row, &et, direction)?;
                scores.push(score);
                grads.push(SampleGrad::Dense(grad));
            }
        }

        let loss = loss_self_adversarial(scores[0], &scores[1..], temperature)?;
        total_loss += loss.loss;

        for (j, ((h, t), grad)) in sample_ids.iter().zip(&grads).enumerate() {
            let upstream = scale
                * if j == 0 {
                    loss.d_pos
                } else {
                    loss.d_negs[j - 1]
                };
            match grad {
                SampleGrad::Dense(g) => {
                    axpy_into(acc_entity, *h, upstream, &g.d_head);
                    axpy_into(acc_entity, *t, upstream, &g.d_tail);
                    axpy_into(acc_rel, positive.relation, upstream, &g.d_rel);
                }
                SampleGrad::Note(g) => {
                    axpy_into(acc_entity, *h, upstream, &g.d_head);
                    axpy_into(acc_entity, *t, upstream, &g.d_tail);
                    let note_acc = acc_note.get_mut(&positive.relation).expect("prepared above");
                    for (i, dq) in g.d_q.iter().enumerate() {
                        for (a, v) in note_acc.d_q[i].iter_mut().zip(dq) {
                            *a += upstream * v;
                        }
                    }
                    let diag_acc = match direction {
                        ScoreDirection::HeadToTail => &mut note_acc.d_diag_head,
                        ScoreDirection::TailToHead => &mut note_acc.d_diag_tail,
                    };
                    for (i, dd) in g.d_diag.iter().enumerate() {
                        for (a, v) in diag_acc[i].iter_mut().zip(dd) {
                            *a += upstream * v;
                        }
                    }
                }
            }
        }
    }
    Ok(total_loss)
}

fn train_step(
    table: &mut EmbeddingTable,
    batch: &[Triple],
    tail_negs: &NegativeBatch,
    head_negs: &NegativeBatch,
    lr: f64,
    config: &TrainConfig,
) -> Result<f64> {
    let geometry = *table.geometry();
    let scale = 1.0 / (2 * batch.len()) as f64;
    let mut accum = StepAccum::default();
    let mut loss_sum = 0.0;
    {
        let params = TableParams(table);
        for (i, &pos) in batch.iter().enumerate() {
            loss_sum += process_positive(
                &params,
                &geometry,
                pos,
                tail_negs.row(i),
                head_negs.row(i),
                config.adversarial_temperature,
                scale,
                &mut accum,
            )?;
        }
    }

    if lr == 0.0 {
        return Ok(loss_sum * scale);
    }

    // Apply the sparse updates. Rows accumulate gradients in deterministic
    // (batch) order; per-row application order does not affect the result.
    for (&id, grad) in &accum.entity {
        apply_update(table.entity_row_mut(id), grad, lr);
    }
    for (&id, grad) in &accum.rel_dense {
        apply_update(table.relation_row_mut(id), grad, lr);
    }
    for (&id, acc) in &accum.note {
        let grad =
            note_relation_backward(&acc.prep, &acc.d_q, &acc.d_diag_head, &acc.d_diag_tail);
        apply_update(table.relation_row_mut(id), &grad, lr);
    }
    Ok(loss_sum * scale)
}

fn apply_update(row: &mut [f32], grad: &[f64], lr: f64) {
    for (v, g) in row.iter_mut().zip(grad) {
        *v = (*v as f64 - lr * g) as f32;
    }
}
