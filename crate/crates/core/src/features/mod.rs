//! Frequency indices over triple-slot pairs and the path-probability
//! features built from them.
//!
//! A triple `(h, r, t)` is counted in six walk directions: head-to-tail,
//! head-to-relation, relation-to-head, relation-to-tail, tail-to-head, and
//! tail-to-relation. Conditional transition probabilities over those counts
//! compose into seven head-to-tail and five relation-to-tail features, plus
//! a raw candidate-frequency signal.

mod eval;
mod index;

pub use eval::{
    candidate_frequency, compute_feature_matrix, feature_head_tail, feature_relation_tail,
    load_candidate_frequency, save_candidate_frequency, FeatureEvalOptions,
};
pub use index::{build_index, DirectionalIndex};

use crate::error::{KgError, Result};

/// Which ordered pair of triple slots a frequency count relates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// head -> tail
    HT,
    /// head -> relation
    HR,
    /// relation -> head
    RH,
    /// relation -> tail
    RT,
    /// tail -> head
    TH,
    /// tail -> relation
    TR,
}

/// Id space of a direction's source or target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Entity,
    Relation,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::HT,
        Direction::HR,
        Direction::RH,
        Direction::RT,
        Direction::TH,
        Direction::TR,
    ];

    pub(crate) fn idx(self) -> usize {
        match self {
            Direction::HT => 0,
            Direction::HR => 1,
            Direction::RH => 2,
            Direction::RT => 3,
            Direction::TH => 4,
            Direction::TR => 5,
        }
    }

    pub fn source_space(self) -> Space {
        match self {
            Direction::HT | Direction::HR | Direction::TH | Direction::TR => Space::Entity,
            Direction::RH | Direction::RT => Space::Relation,
        }
    }

    pub fn target_space(self) -> Space {
        match self {
            Direction::HT | Direction::TH | Direction::RH | Direction::RT => Space::Entity,
            Direction::HR | Direction::TR => Space::Relation,
        }
    }

    /// The direction counting the same pairs with source and target swapped.
    pub fn transpose(self) -> Direction {
        match self {
            Direction::HT => Direction::TH,
            Direction::TH => Direction::HT,
            Direction::HR => Direction::RH,
            Direction::RH => Direction::HR,
            Direction::RT => Direction::TR,
            Direction::TR => Direction::RT,
        }
    }
}

/// The twelve path features plus the candidate-frequency signal.
///
/// The first seven take `(head, tail)`, the next five `(relation, tail)`,
/// and `CandFreq` depends on the tail alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Ht,
    Th,
    ThHt,
    HtHt,
    HtTh,
    ThTh,
    HtHtTh,
    Rt,
    Rh,
    RtTrRt,
    RhHrRt,
    RtHrRt,
    CandFreq,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 13] = [
        FeatureKind::Ht,
        FeatureKind::Th,
        FeatureKind::ThHt,
        FeatureKind::HtHt,
        FeatureKind::HtTh,
        FeatureKind::ThTh,
        FeatureKind::HtHtTh,
        FeatureKind::Rt,
        FeatureKind::Rh,
        FeatureKind::RtTrRt,
        FeatureKind::RhHrRt,
        FeatureKind::RtHrRt,
        FeatureKind::CandFreq,
    ];

    /// The twelve path features, without the candidate-frequency signal.
    pub const PATH_FEATURES: [FeatureKind; 12] = [
        FeatureKind::Ht,
        FeatureKind::Th,
        FeatureKind::ThHt,
        FeatureKind::HtHt,
        FeatureKind::HtTh,
        FeatureKind::ThTh,
        FeatureKind::HtHtTh,
        FeatureKind::Rt,
        FeatureKind::Rh,
        FeatureKind::RtTrRt,
        FeatureKind::RhHrRt,
        FeatureKind::RtHrRt,
    ];

    pub fn is_head_tail(self) -> bool {
        matches!(
            self,
            FeatureKind::Ht
                | FeatureKind::Th
                | FeatureKind::ThHt
                | FeatureKind::HtHt
                | FeatureKind::HtTh
                | FeatureKind::ThTh
                | FeatureKind::HtHtTh
        )
    }

    pub fn is_relation_tail(self) -> bool {
        matches!(
            self,
            FeatureKind::Rt
                | FeatureKind::Rh
                | FeatureKind::RtTrRt
                | FeatureKind::RhHrRt
                | FeatureKind::RtHrRt
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Ht => "f_ht",
            FeatureKind::Th => "f_th",
            FeatureKind::ThHt => "f_th_ht",
            FeatureKind::HtHt => "f_ht_ht",
            FeatureKind::HtTh => "f_ht_th",
            FeatureKind::ThTh => "f_th_th",
            FeatureKind::HtHtTh => "f_ht_ht_th",
            FeatureKind::Rt => "f_rt",
            FeatureKind::Rh => "f_rh",
            FeatureKind::RtTrRt => "f_rt_tr_rt",
            FeatureKind::RhHrRt => "f_rh_hr_rt",
            FeatureKind::RtHrRt => "f_rt_hr_rt",
            FeatureKind::CandFreq => "cand_freq",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| KgError::Config(format!("unknown feature kind {s:?}")))
    }
}

/// Which inputs feed the directional index.
#[derive(Debug, Clone, Copy)]
pub struct FeatureSource {
    pub include_training: bool,
    pub include_candidates: bool,
}

impl FeatureSource {
    pub fn validate(&self) -> Result<()> {
        if !self.include_training && !self.include_candidates {
            return Err(KgError::Config(
                "feature source must include training triples, candidates, or both".into(),
            ));
        }
        Ok(())
    }
}

impl Default for FeatureSource {
    fn default() -> Self {
        FeatureSource {
            include_training: true,
            include_candidates: false,
        }
    }
}
