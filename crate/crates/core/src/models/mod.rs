//! Score functions for the four triplet-embedding geometries, plus the
//! parameter table they read from.
//!
//! All score math runs in `f64` on row slices gathered from the table's
//! `f32` storage; higher scores mean more plausible triples.

pub mod gram_schmidt;
pub mod note;
pub mod quate;
pub mod rotate;
pub mod transe;

use crate::error::{KgError, Result};

pub use gram_schmidt::{gram_schmidt, EPSILON_GS};
pub use note::{note_scalar_weights, NotePrepared, ScalarSide};
pub use quate::hamilton_product;

/// Which embedding geometry a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    TransE,
    RotatE,
    QuatE,
    Note,
    /// Node embeddings from random-walk skip-gram; entities only.
    DeepWalk,
}

impl ModelKind {
    pub const ALL_TRAINABLE: [ModelKind; 4] = [
        ModelKind::TransE,
        ModelKind::RotatE,
        ModelKind::QuatE,
        ModelKind::Note,
    ];

    /// Stable on-disk code for the embedding file format.
    pub fn code(self) -> u32 {
        match self {
            ModelKind::TransE => 0,
            ModelKind::RotatE => 1,
            ModelKind::QuatE => 2,
            ModelKind::Note => 3,
            ModelKind::DeepWalk => 4,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        Ok(match code {
            0 => ModelKind::TransE,
            1 => ModelKind::RotatE,
            2 => ModelKind::QuatE,
            3 => ModelKind::Note,
            4 => ModelKind::DeepWalk,
            other => {
                return Err(KgError::Format(format!("unknown model kind code {other}")))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::RotatE => "rotate",
            ModelKind::QuatE => "quate",
            ModelKind::Note => "note",
            ModelKind::DeepWalk => "deepwalk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "transe" => ModelKind::TransE,
            "rotate" => ModelKind::RotatE,
            "quate" => ModelKind::QuatE,
            "note" => ModelKind::Note,
            "deepwalk" => ModelKind::DeepWalk,
            other => return Err(KgError::Config(format!("unknown model kind {other:?}"))),
        })
    }
}

/// Distance norm used by translation/rotation scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PNorm {
    L1,
    L2,
}

impl PNorm {
    pub fn from_u32(p: u32) -> Result<Self> {
        match p {
            1 => Ok(PNorm::L1),
            2 => Ok(PNorm::L2),
            other => Err(KgError::Config(format!("norm_p must be 1 or 2, got {other}"))),
        }
    }

    pub fn as_u32(self) -> u32 {
        match self {
            PNorm::L1 => 1,
            PNorm::L2 => 2,
        }
    }
}

/// Shape and scoring hyperparameters of one embedding model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    pub model_kind: ModelKind,
    /// Entity embedding width.
    pub hidden_size: usize,
    /// Margin in `score = gamma - distance`.
    pub gamma: f64,
    pub norm_p: PNorm,
    /// NOTE sub-block width `d_s`.
    pub ote_size: usize,
}

impl GeometryConfig {
    /// Defaults per kind: hidden 200, gamma 12, ote_size 20; TransE uses L2,
    /// RotatE sums complex moduli (L1 over coordinates).
    pub fn new(model_kind: ModelKind) -> Self {
        GeometryConfig {
            model_kind,
            hidden_size: 200,
            gamma: 12.0,
            norm_p: match model_kind {
                ModelKind::RotatE => PNorm::L1,
                _ => PNorm::L2,
            },
            ote_size: 20,
        }
    }

    pub fn with_hidden_size(mut self, hidden_size: usize) -> Self {
        self.hidden_size = hidden_size;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_ote_size(mut self, ote_size: usize) -> Self {
        self.ote_size = ote_size;
        self
    }

    pub fn with_norm_p(mut self, norm_p: PNorm) -> Self {
        self.norm_p = norm_p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(KgError::Config("hidden_size must be positive".into()));
        }
        if !self.gamma.is_finite() {
            return Err(KgError::Config(format!("gamma {} is not finite", self.gamma)));
        }
        match self.model_kind {
            ModelKind::RotatE => {
                if self.hidden_size % 2 != 0 {
                    return Err(KgError::Config(format!(
                        "rotate hidden_size {} must be even",
                        self.hidden_size
                    )));
                }
            }
            ModelKind::QuatE => {
                if self.hidden_size % 4 != 0 {
                    return Err(KgError::Config(format!(
                        "quate hidden_size {} must be a multiple of 4",
                        self.hidden_size
                    )));
                }
            }
            ModelKind::Note => {
                if self.ote_size == 0 {
                    return Err(KgError::Config("ote_size must be positive".into()));
                }
                if self.hidden_size % self.ote_size != 0 {
                    return Err(KgError::Config(format!(
                        "note hidden_size {} must be divisible by ote_size {}",
                        self.hidden_size, self.ote_size
                    )));
                }
            }
            ModelKind::TransE | ModelKind::DeepWalk => {}
        }
        Ok(())
    }

    pub fn entity_dim(&self) -> usize {
        self.hidden_size
    }

    /// Width of one relation's parameter row.
    pub fn relation_dim(&self) -> usize {
        match self.model_kind {
            ModelKind::TransE => self.hidden_size,
            // Phase angles, one per complex coordinate.
            ModelKind::RotatE => self.hidden_size / 2,
            ModelKind::QuatE => self.hidden_size,
            // K raw blocks of d_s x d_s plus K scalar vectors of d_s.
            ModelKind::Note => self.num_blocks() * (self.ote_size * self.ote_size + self.ote_size),
            ModelKind::DeepWalk => 0,
        }
    }

    /// Number of NOTE sub-blocks `K = hidden_size / ote_size`.
    pub fn num_blocks(&self) -> usize {
        self.hidden_size / self.ote_size
    }
}

/// Scoring direction for direction-sensitive geometries (NOTE).
///
/// `HeadToTail` ranks tails of `(h, r, ?)`; `TailToHead` ranks heads of
/// `(?, r, t)` through the transposed orthogonal transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreDirection {
    HeadToTail,
    TailToHead,
}

/// Gradient of a score w.r.t. the three parameter rows it touches.
#[derive(Debug, Clone)]
pub struct TripleGrad {
    pub d_head: Vec<f64>,
    pub d_rel: Vec<f64>,
    pub d_tail: Vec<f64>,
}

/// Dense entity and relation parameter matrices for one geometry.
///
/// Storage is row-major `f32`, matching the on-disk format; score math
/// gathers rows into `f64`.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    geometry: GeometryConfig,
    entity_count: usize,
    relation_count: usize,
    entity: Vec<f32>,
    relation: Vec<f32>,
}

impl EmbeddingTable {
    pub fn zeros(
        geometry: GeometryConfig,
        entity_count: usize,
        relation_count: usize,
    ) -> Result<Self> {
        geometry.validate()?;
        Ok(EmbeddingTable {
            geometry,
            entity_count,
            relation_count,
            entity: vec![0.0; entity_count * geometry.entity_dim()],
            relation: vec![0.0; relation_count * geometry.relation_dim()],
        })
    }

    pub fn from_parts(
        geometry: GeometryConfig,
        entity_count: usize,
        relation_count: usize,
        entity: Vec<f32>,
        relation: Vec<f32>,
    ) -> Result<Self> {
        geometry.validate()?;
        if entity.len() != entity_count * geometry.entity_dim() {
            return Err(KgError::Shape(format!(
                "entity matrix has {} values, expected {}",
                entity.len(),
                entity_count * geometry.entity_dim()
            )));
        }
        if relation.len() != relation_count * geometry.relation_dim() {
            return Err(KgError::Shape(format!(
                "relation matrix has {} values, expected {}",
                relation.len(),
                relation_count * geometry.relation_dim()
            )));
        }
        Ok(EmbeddingTable {
            geometry,
            entity_count,
            relation_count,
            entity,
            relation,
        })
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geometry
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn entity_matrix(&self) -> &[f32] {
        &self.entity
    }

    pub fn relation_matrix(&self) -> &[f32] {
        &self.relation
    }

    pub fn entity_row(&self, id: usize) -> &[f32] {
        let d = self.geometry.entity_dim();
        &self.entity[id * d..(id + 1) * d]
    }

    pub fn relation_row(&self, id: usize) -> &[f32] {
        let d = self.geometry.relation_dim();
        &self.relation[id * d..(id + 1) * d]
    }

    pub(crate) fn entity_row_mut(&mut self, id: usize) -> &mut [f32] {
        let d = self.geometry.entity_dim();
        &mut self.entity[id * d..(id + 1) * d]
    }

    pub(crate) fn relation_row_mut(&mut self, id: usize) -> &mut [f32] {
        let d = self.geometry.relation_dim();
        &mut self.relation[id * d..(id + 1) * d]
    }

    pub fn entity_row_f64(&self, id: usize) -> Vec<f64> {
        self.entity_row(id).iter().map(|&v| v as f64).collect()
    }

    pub fn relation_row_f64(&self, id: usize) -> Vec<f64> {
        self.relation_row(id).iter().map(|&v| v as f64).collect()
    }

    pub fn check_ids(&self, h: usize, r: usize, t: usize) -> Result<()> {
        if h >= self.entity_count || t >= self.entity_count {
            return Err(KgError::IdBounds(format!(
                "entity id out of range (h={h}, t={t}, count={})",
                self.entity_count
            )));
        }
        if r >= self.relation_count && self.geometry.model_kind != ModelKind::DeepWalk {
            return Err(KgError::IdBounds(format!(
                "relation id {r} out of range (count={})",
                self.relation_count
            )));
        }
        Ok(())
    }

    /// Scores one triple in the head-to-tail direction.
    pub fn score(&self, h: usize, r: usize, t: usize) -> Result<f64> {
        self.score_directed(h, r, t, ScoreDirection::HeadToTail)
    }

    pub fn score_directed(
        &self,
        h: usize,
        r: usize,
        t: usize,
        direction: ScoreDirection,
    ) -> Result<f64> {
        self.check_ids(h, r, t)?;
        let eh = self.entity_row_f64(h);
        let et = self.entity_row_f64(t);
        let g = &self.geometry;
        match g.model_kind {
            ModelKind::TransE => {
                let w = self.relation_row_f64(r);
                Ok(transe::transe_score(&eh, &w, &et, g.gamma, g.norm_p))
            }
            ModelKind::RotatE => {
                let w = self.relation_row_f64(r);
                Ok(rotate::rotate_score(&eh, &w, &et, g.gamma, g.norm_p))
            }
            ModelKind::QuatE => {
                let w = self.relation_row_f64(r);
                quate::quate_score(&eh, &w, &et)
            }
            ModelKind::Note => {
                let w = self.relation_row_f64(r);
                let prep = note::note_prepare(&w, g)?;
                Ok(note::note_score_prepared(&prep, &eh, &et, g.gamma, direction))
            }
            ModelKind::DeepWalk => Ok(crate::context::deepwalk_score_rows(
                self.entity_row(h),
                self.entity_row(t),
            )),
        }
    }

    /// Scores every candidate tail of one `(head, relation, ?)` query,
    /// preparing per-relation transforms once.
    pub fn score_query(&self, head: usize, relation: usize, candidates: &[usize]) -> Result<Vec<f64>> {
        for &c in candidates {
            self.check_ids(head, relation, c)?;
        }
        self.check_ids(head, relation, head)?;
        let g = &self.geometry;
        let eh = self.entity_row_f64(head);
        let mut out = Vec::with_capacity(candidates.len());
        match g.model_kind {
            ModelKind::Note => {
                let w = self.relation_row_f64(relation);
                let prep = note::note_prepare(&w, g)?;
                for &c in candidates {
                    let et = self.entity_row_f64(c);
                    out.push(note::note_score_prepared(
                        &prep,
                        &eh,
                        &et,
                        g.gamma,
                        ScoreDirection::HeadToTail,
                    ));
                }
            }
            _ => {
                for &c in candidates {
                    out.push(self.score(head, relation, c)?);
                }
            }
        }
        Ok(out)
    }

    /// Gradient of the directed score w.r.t. the touched rows, in `f64`.
    pub fn score_grad(
        &self,
        h: usize,
        r: usize,
        t: usize,
        direction: ScoreDirection,
    ) -> Result<(f64, TripleGrad)> {
        let eh = self.entity_row_f64(h);
        let et = self.entity_row_f64(t);
        let w = self.relation_row_f64(r);
        score_grad_rows(&self.geometry, &eh, &w, &et, direction)
    }
}

/// Directed score over raw `f64` rows; shared by the table and the trainer.
pub fn score_rows(
    geometry: &GeometryConfig,
    head: &[f64],
    rel: &[f64],
    tail: &[f64],
    direction: ScoreDirection,
) -> Result<f64> {
    match geometry.model_kind {
        ModelKind::TransE => Ok(transe::transe_score(
            head,
            rel,
            tail,
            geometry.gamma,
            geometry.norm_p,
        )),
        ModelKind::RotatE => Ok(rotate::rotate_score(
            head,
            rel,
            tail,
            geometry.gamma,
            geometry.norm_p,
        )),
        ModelKind::QuatE => quate::quate_score(head, rel, tail),
        ModelKind::Note => {
            let prep = note::note_prepare(rel, geometry)?;
            Ok(note::note_score_prepared(
                &prep,
                head,
                tail,
                geometry.gamma,
                direction,
            ))
        }
        ModelKind::DeepWalk => Err(KgError::Unsupported(
            "deepwalk tables have no triple score".into(),
        )),
    }
}

/// Directed score gradient over raw `f64` rows.
pub fn score_grad_rows(
    geometry: &GeometryConfig,
    head: &[f64],
    rel: &[f64],
    tail: &[f64],
    direction: ScoreDirection,
) -> Result<(f64, TripleGrad)> {
    match geometry.model_kind {
        ModelKind::TransE => Ok(transe::transe_score_grad(
            head,
            rel,
            tail,
            geometry.gamma,
            geometry.norm_p,
        )),
        ModelKind::RotatE => Ok(rotate::rotate_score_grad(
            head,
            rel,
            tail,
            geometry.gamma,
            geometry.norm_p,
        )),
        ModelKind::QuatE => quate::quate_score_grad(head, rel, tail),
        ModelKind::Note => note::note_score_grad(head, rel, tail, geometry, direction),
        ModelKind::DeepWalk => Err(KgError::Unsupported(
            "deepwalk tables have no triple score".into(),
        )),
    }
}
