//! One propagation pass blending each entity with relation-inverted
//! neighbor embeddings.
//!
//! For entity `u`, the smoothed row is `alpha * u + (1 - alpha) * mean(f)`
//! over incident edges, where `f` undoes the relation transform toward `u`:
//! an out-edge `(u, r, v)` contributes the un-translated / un-rotated tail,
//! an in-edge `(w, r, u)` the translated / rotated head. Entities with no
//! incident edges keep their rows; relation parameters never change.

use crate::data::TripletStore;
use crate::error::{KgError, Result};
use crate::models::{EmbeddingTable, ModelKind};

#[derive(Debug, Clone, Copy)]
pub struct SmoothConfig {
    /// Weight of the entity itself; `1 - alpha` weights the neighborhood.
    pub alpha: f64,
    /// Must match the table's kind; only TransE and RotatE have an inverse
    /// transform here.
    pub model_kind: ModelKind,
}

impl SmoothConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(KgError::Config(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        match self.model_kind {
            ModelKind::TransE | ModelKind::RotatE => Ok(()),
            other => Err(KgError::Unsupported(format!(
                "post-smoothing is defined for transe and rotate, not {}",
                other.name()
            ))),
        }
    }
}

pub fn post_smooth(
    table: &EmbeddingTable,
    store: &TripletStore,
    config: &SmoothConfig,
) -> Result<EmbeddingTable> {
    config.validate()?;
    let geometry = table.geometry();
    if geometry.model_kind != config.model_kind {
        return Err(KgError::Config(format!(
            "table holds {} embeddings, smoothing config says {}",
            geometry.model_kind.name(),
            config.model_kind.name()
        )));
    }
    // alpha = 1 is the identity on the entity matrix, bit for bit.
    if config.alpha == 1.0 {
        return Ok(table.clone());
    }

    let dim = geometry.entity_dim();
    let entity_count = table.entity_count();
    let mut message_sum = vec![0.0f64; entity_count * dim];
    let mut degree = vec![0u64; entity_count];

    for t in &store.triples {
        if t.head >= entity_count || t.tail >= entity_count {
            return Err(KgError::IdBounds(format!(
                "triple ({}, {}, {}) outside the table's {} entities",
                t.head, t.relation, t.tail, entity_count
            )));
        }
        if t.relation >= table.relation_count() {
            return Err(KgError::IdBounds(format!(
                "relation {} outside the table's {} relations",
                t.relation,
                table.relation_count()
            )));
        }
        let rel = table.relation_row_f64(t.relation);
        // Out-edge: pull the tail back toward the head.
        let v = table.entity_row_f64(t.tail);
        accumulate_message(
            &mut message_sum[t.head * dim..(t.head + 1) * dim],
            &v,
            &rel,
            config.model_kind,
            Inverse::Backward,
        );
        degree[t.head] += 1;
        // In-edge: push the head forward toward the tail.
        let w = table.entity_row_f64(t.head);
        accumulate_message(
            &mut message_sum[t.tail * dim..(t.tail + 1) * dim],
            &w,
            &rel,
            config.model_kind,
            Inverse::Forward,
        );
        degree[t.tail] += 1;
    }

    let mut out = table.clone();
    let alpha = config.alpha;
    for e in 0..entity_count {
        if degree[e] == 0 {
            continue;
        }
        let inv_deg = 1.0 / degree[e] as f64;
        let row = out.entity_row_mut(e);
        let original = table.entity_row(e);
        let sum = &message_sum[e * dim..(e + 1) * dim];
        for i in 0..dim {
            row[i] =
                (alpha * original[i] as f64 + (1.0 - alpha) * sum[i] * inv_deg) as f32;
        }
    }
    Ok(out)
}

enum Inverse {
    /// Apply the relation transform (in-edge message).
    Forward,
    /// Undo the relation transform (out-edge message).
    Backward,
}

fn accumulate_message(
    acc: &mut [f64],
    entity: &[f64],
    rel: &[f64],
    kind: ModelKind,
    direction: Inverse,
) {
    match kind {
        ModelKind::TransE => {
            let sign = match direction {
                Inverse::Forward => 1.0,
                Inverse::Backward => -1.0,
            };
            for (a, (e, r)) in acc.iter_mut().zip(entity.iter().zip(rel)) {
                *a += e + sign * r;
            }
        }
        ModelKind::RotatE => {
            for (j, theta) in rel.iter().enumerate() {
                let angle = match direction {
                    Inverse::Forward => *theta,
                    Inverse::Backward => -*theta,
                };
                let (sin, cos) = angle.sin_cos();
                let re = entity[2 * j];
                let im = entity[2 * j + 1];
                acc[2 * j] += re * cos - im * sin;
                acc[2 * j + 1] += re * sin + im * cos;
            }
        }
        _ => unreachable!("validated by SmoothConfig"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Triple, Vocab};
    use crate::models::GeometryConfig;

    fn transe_table(entities: &[[f32; 2]], relations: &[[f32; 2]]) -> EmbeddingTable {
        let geometry = GeometryConfig::new(ModelKind::TransE).with_hidden_size(2);
        EmbeddingTable::from_parts(
            geometry,
            entities.len(),
            relations.len(),
            entities.concat(),
            relations.concat(),
        )
        .unwrap()
    }

    #[test]
    fn alpha_one_is_bit_identical() {
        let table = transe_table(&[[0.3, -0.7], [1.5, 2.5]], &[[1.0, 1.0]]);
        let store = TripletStore::new(vec![Triple::new(0, 0, 1)], Vocab::new(2, 1)).unwrap();
        let config = SmoothConfig {
            alpha: 1.0,
            model_kind: ModelKind::TransE,
        };
        let out = post_smooth(&table, &store, &config).unwrap();
        assert_eq!(out.entity_matrix(), table.entity_matrix());
        assert_eq!(out.relation_matrix(), table.relation_matrix());
    }

    #[test]
    fn isolated_entities_keep_their_rows() {
        let table = transe_table(&[[2.0, 0.0], [0.0, 2.0], [9.0, -9.0]], &[[1.0, 1.0]]);
        let store = TripletStore::new(vec![Triple::new(0, 0, 1)], Vocab::new(3, 1)).unwrap();
        let config = SmoothConfig {
            alpha: 0.25,
            model_kind: ModelKind::TransE,
        };
        let out = post_smooth(&table, &store, &config).unwrap();
        assert_eq!(out.entity_row(2), table.entity_row(2));
    }

    #[test]
    fn worked_single_edge_example() {
        // u=[2,0], v=[0,2], w_r=[1,1], alpha=0.5:
        // u' = 0.5*[2,0] + 0.5*([0,2]-[1,1]) = [0.5, 0.5].
        let table = transe_table(&[[2.0, 0.0], [0.0, 2.0]], &[[1.0, 1.0]]);
        let store = TripletStore::new(vec![Triple::new(0, 0, 1)], Vocab::new(2, 1)).unwrap();
        let config = SmoothConfig {
            alpha: 0.5,
            model_kind: ModelKind::TransE,
        };
        let out = post_smooth(&table, &store, &config).unwrap();
        assert_eq!(out.entity_row(0), &[0.5f32, 0.5]);
        // v' = 0.5*[0,2] + 0.5*([2,0]+[1,1]) = [1.5, 1.5].
        assert_eq!(out.entity_row(1), &[1.5f32, 1.5]);
        // Relations untouched.
        assert_eq!(out.relation_matrix(), table.relation_matrix());
    }

    #[test]
    fn rotate_inverse_then_forward_restores_coordinates() {
        let theta = 0.83f64;
        let entity = [0.6f64, -0.4];
        let mut acc = [0.0f64; 2];
        accumulate_message(&mut acc, &entity, &[theta], ModelKind::RotatE, Inverse::Backward);
        let mut back = [0.0f64; 2];
        accumulate_message(&mut back, &acc, &[theta], ModelKind::RotatE, Inverse::Forward);
        assert!((back[0] - entity[0]).abs() < 1e-9);
        assert!((back[1] - entity[1]).abs() < 1e-9);
    }

    #[test]
    fn unsupported_kinds_are_rejected() {
        let config = SmoothConfig {
            alpha: 0.5,
            model_kind: ModelKind::QuatE,
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn smoothed_row_is_a_convex_combination() {
        let table = transe_table(&[[2.0, 0.0], [0.0, 2.0]], &[[1.0, 1.0]]);
        let store = TripletStore::new(vec![Triple::new(0, 0, 1)], Vocab::new(2, 1)).unwrap();
        for alpha in [0.0, 0.3, 0.7, 1.0] {
            let config = SmoothConfig {
                alpha,
                model_kind: ModelKind::TransE,
            };
            let out = post_smooth(&table, &store, &config).unwrap();
            let norm = |row: &[f32]| -> f64 {
                row.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt()
            };
            let u = norm(table.entity_row(0));
            // Single incident message: v - w_r = [-1, 1].
            let msg = 2f64.sqrt();
            assert!(norm(out.entity_row(0)) <= alpha * u + (1.0 - alpha) * msg + 1e-9);
        }
    }
}
