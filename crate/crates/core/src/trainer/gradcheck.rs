//! Finite-difference validation of the analytic training gradients.
//!
//! Runs entirely in `f64`: the touched parameter rows are copied into a flat
//! workspace, the full per-positive loss (both corruption sides) is treated
//! as a function of that workspace, and every analytic partial is compared
//! against a central difference.

use std::collections::BTreeSet;
use std::collections::HashMap;

use crate::data::Triple;
use crate::error::Result;
use crate::models::note::note_relation_backward;
use crate::models::{score_rows, EmbeddingTable, ScoreDirection};

use super::loss::{loss_self_adversarial, softplus};
use super::{process_positive, CorruptionSide, ParamSource, StepAccum};

/// One positive triple plus the corruption entities scored against it.
#[derive(Debug, Clone)]
pub struct GradCheckSample {
    pub positive: Triple,
    pub tail_negatives: Vec<usize>,
    pub head_negatives: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// `max |analytic - numeric| / max(1, |numeric|)` over touched params.
    pub max_rel_error: f64,
    pub checked_params: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum RowKind {
    Entity,
    Relation,
}

struct Workspace {
    values: Vec<f64>,
    offsets: HashMap<(RowKind, usize), usize>,
    entity_dim: usize,
    relation_dim: usize,
}

impl ParamSource for Workspace {
    fn entity(&self, id: usize) -> Vec<f64> {
        let off = self.offsets[&(RowKind::Entity, id)];
        self.values[off..off + self.entity_dim].to_vec()
    }
    fn relation(&self, id: usize) -> Vec<f64> {
        let off = self.offsets[&(RowKind::Relation, id)];
        self.values[off..off + self.relation_dim].to_vec()
    }
}

/// Compares analytic gradients of the full self-adversarial loss against
/// central finite differences of step `fd_step` (1e-5 is the conventional
/// choice) over every parameter the sample touches.
pub fn gradient_check(
    table: &EmbeddingTable,
    sample: &GradCheckSample,
    temperature: f64,
    fd_step: f64,
) -> Result<GradCheckReport> {
    let geometry = *table.geometry();
    let entity_dim = geometry.entity_dim();
    let relation_dim = geometry.relation_dim();

    let mut entities: BTreeSet<usize> = BTreeSet::new();
    entities.insert(sample.positive.head);
    entities.insert(sample.positive.tail);
    entities.extend(sample.tail_negatives.iter().copied());
    entities.extend(sample.head_negatives.iter().copied());

    let mut values = Vec::new();
    let mut offsets = HashMap::new();
    for &e in &entities {
        offsets.insert((RowKind::Entity, e), values.len());
        values.extend(table.entity_row_f64(e));
    }
    offsets.insert((RowKind::Relation, sample.positive.relation), values.len());
    values.extend(table.relation_row_f64(sample.positive.relation));

    let mut ws = Workspace {
        values,
        offsets,
        entity_dim,
        relation_dim,
    };

    // Per-side scores of the positive and its corrupted variants.
    let side_scores = |ws: &Workspace, side: CorruptionSide| -> Result<(f64, Vec<f64>)> {
        let (direction, negatives) = match side {
            CorruptionSide::Tail => (ScoreDirection::HeadToTail, &sample.tail_negatives),
            CorruptionSide::Head => (ScoreDirection::TailToHead, &sample.head_negatives),
        };
        let rel = ws.relation(sample.positive.relation);
        let head = ws.entity(sample.positive.head);
        let tail = ws.entity(sample.positive.tail);
        let pos = score_rows(&geometry, &head, &rel, &tail, direction)?;
        let mut negs = Vec::with_capacity(negatives.len());
        for &n in negatives {
            let row = ws.entity(n);
            let s = match side {
                CorruptionSide::Tail => score_rows(&geometry, &head, &rel, &row, direction)?,
                CorruptionSide::Head => score_rows(&geometry, &row, &rel, &tail, direction)?,
            };
            negs.push(s);
        }
        Ok((pos, negs))
    };

    // The analytic gradient holds the self-adversarial softmax weights
    // constant, so the differentiated function is the frozen-weight loss:
    // capture the weights at the base point.
    let sides = [CorruptionSide::Tail, CorruptionSide::Head];
    let mut frozen_weights = Vec::with_capacity(2);
    for side in sides {
        let (pos, negs) = side_scores(&ws, side)?;
        frozen_weights.push(loss_self_adversarial(pos, &negs, temperature)?.neg_weights);
    }
    let loss_of = |ws: &Workspace| -> Result<f64> {
        let mut total = 0.0;
        for (side, weights) in sides.into_iter().zip(&frozen_weights) {
            let (pos, negs) = side_scores(ws, side)?;
            total += softplus(-pos);
            for (s, p) in negs.iter().zip(weights) {
                total += p * softplus(*s);
            }
        }
        Ok(total)
    };

    // Analytic gradient, flattened to workspace layout.
    let mut accum = StepAccum::default();
    process_positive(
        &ws,
        &geometry,
        sample.positive,
        &sample.tail_negatives,
        &sample.head_negatives,
        temperature,
        1.0,
        &mut accum,
    )?;
    let mut analytic = vec![0.0; ws.values.len()];
    for (&id, grad) in &accum.entity {
        let off = ws.offsets[&(RowKind::Entity, id)];
        for (slot, g) in analytic[off..off + entity_dim].iter_mut().zip(grad) {
            *slot += g;
        }
    }
    for (&id, grad) in &accum.rel_dense {
        let off = ws.offsets[&(RowKind::Relation, id)];
        for (slot, g) in analytic[off..off + relation_dim].iter_mut().zip(grad) {
            *slot += g;
        }
    }
    for (&id, acc) in &accum.note {
        let grad =
            note_relation_backward(&acc.prep, &acc.d_q, &acc.d_diag_head, &acc.d_diag_tail);
        let off = ws.offsets[&(RowKind::Relation, id)];
        for (slot, g) in analytic[off..off + relation_dim].iter_mut().zip(&grad) {
            *slot += g;
        }
    }

    let mut max_rel_error = 0.0f64;
    for p in 0..ws.values.len() {
        let saved = ws.values[p];
        ws.values[p] = saved + fd_step;
        let plus = loss_of(&ws)?;
        ws.values[p] = saved - fd_step;
        let minus = loss_of(&ws)?;
        ws.values[p] = saved;
        let numeric = (plus - minus) / (2.0 * fd_step);
        let rel = (analytic[p] - numeric).abs() / numeric.abs().max(1.0);
        max_rel_error = max_rel_error.max(rel);
    }
    Ok(GradCheckReport {
        max_rel_error,
        checked_params: ws.values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Vocab;
    use crate::models::{GeometryConfig, ModelKind};
    use crate::trainer::{init_table, TrainConfig};

    fn check_kind(kind: ModelKind, hidden: usize, ote: usize, tolerance: f64) {
        let geometry = GeometryConfig::new(kind)
            .with_hidden_size(hidden)
            .with_ote_size(ote);
        let mut config = TrainConfig::new(geometry);
        config.seed = 5;
        let table = init_table(&Vocab::new(8, 2), &config).unwrap();
        let sample = GradCheckSample {
            positive: Triple::new(0, 1, 2),
            tail_negatives: vec![3, 4, 0],
            head_negatives: vec![5, 6],
        };
        let report = gradient_check(&table, &sample, 1.0, 1e-5).unwrap();
        assert!(
            report.max_rel_error <= tolerance,
            "{kind:?}: max relative error {}",
            report.max_rel_error
        );
    }

    #[test]
    fn transe_gradients_match() {
        check_kind(ModelKind::TransE, 8, 20, 1e-6);
    }

    #[test]
    fn rotate_gradients_match() {
        check_kind(ModelKind::RotatE, 8, 20, 1e-5);
    }

    #[test]
    fn quate_gradients_match() {
        check_kind(ModelKind::QuatE, 8, 20, 1e-5);
    }

    #[test]
    fn note_gradients_match_including_scalars() {
        check_kind(ModelKind::Note, 8, 4, 1e-4);
    }
}
