//! Ranking metrics: rank of the true candidate and mean reciprocal rank.

use crate::data::CandidateQuerySet;
use crate::error::{KgError, Result};
use crate::score::ScoreMatrix;

/// Rank (1-based) of `scores[true_index]` under descending score order.
///
/// Ties are broken by list position: an equal-scoring candidate at a smaller
/// index ranks ahead. This matches a deterministic argmax sweep.
pub fn rank_of_true(scores: &[f64], true_index: usize) -> Result<usize> {
    if true_index >= scores.len() {
        return Err(KgError::IdBounds(format!(
            "true_index {true_index} >= row length {}",
            scores.len()
        )));
    }
    let target = scores[true_index];
    if !target.is_finite() {
        return Err(KgError::NonFinite(format!("score at true_index: {target}")));
    }
    let mut rank = 1usize;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(KgError::NonFinite(format!("score[{i}] = {s}")));
        }
        if s > target || (s == target && i < true_index) {
            rank += 1;
        }
    }
    Ok(rank)
}

/// Mean reciprocal rank of a labeled query set under `scores`.
pub fn mrr(queries: &CandidateQuerySet, scores: &ScoreMatrix) -> Result<f64> {
    mrr_rows(queries, &scores.rows)
}

/// [`mrr`] over raw rows, for callers holding scores outside a [`ScoreMatrix`].
pub fn mrr_rows(queries: &CandidateQuerySet, rows: &[Vec<f64>]) -> Result<f64> {
    if queries.len() != rows.len() {
        return Err(KgError::Shape(format!(
            "{} queries vs {} score rows",
            queries.len(),
            rows.len()
        )));
    }
    if queries.is_empty() {
        return Err(KgError::Shape("empty query set".into()));
    }
    let mut sum = 0.0;
    for (i, (q, row)) in queries.queries.iter().zip(rows).enumerate() {
        let true_index = q.true_index.ok_or_else(|| {
            KgError::Format(format!("query {i} has no true_index (test-mode set)"))
        })?;
        if row.len() != q.candidates.len() {
            return Err(KgError::Shape(format!(
                "query {i}: {} candidates vs {} scores",
                q.candidates.len(),
                row.len()
            )));
        }
        sum += 1.0 / rank_of_true(row, true_index)? as f64;
    }
    Ok(sum / queries.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CandidateQuery, Vocab};

    fn set_of(rows: &[(usize, usize, Vec<usize>, Option<usize>)]) -> CandidateQuerySet {
        let queries = rows
            .iter()
            .map(|(h, r, c, t)| CandidateQuery {
                head: *h,
                relation: *r,
                candidates: c.clone(),
                true_index: *t,
            })
            .collect();
        CandidateQuerySet::new(queries, Vocab::new(2000, 10)).unwrap()
    }

    #[test]
    fn rank_of_strict_maximum_is_one() {
        assert_eq!(rank_of_true(&[0.9, 0.5, 0.1], 0).unwrap(), 1);
    }

    #[test]
    fn rank_counts_strictly_greater() {
        assert_eq!(rank_of_true(&[0.5, 0.9, 0.1], 0).unwrap(), 2);
    }

    #[test]
    fn rank_breaks_ties_by_position() {
        assert_eq!(rank_of_true(&[0.5, 0.5, 0.5], 2).unwrap(), 3);
        assert_eq!(rank_of_true(&[0.5, 0.5, 0.5], 0).unwrap(), 1);
    }

    #[test]
    fn rank_rejects_non_finite() {
        assert!(rank_of_true(&[f64::NAN, 0.0], 1).is_err());
        assert!(rank_of_true(&[f64::INFINITY, 0.0], 1).is_err());
    }

    #[test]
    fn rank_rejects_out_of_range_index() {
        assert!(rank_of_true(&[1.0], 1).is_err());
    }

    #[test]
    fn mrr_perfect_ranking() {
        let set = set_of(&[(0, 0, vec![3, 4], Some(0))]);
        let m = ScoreMatrix::new("s", vec![vec![1.0, 0.0]]);
        assert_eq!(mrr(&set, &m).unwrap(), 1.0);
    }

    #[test]
    fn mrr_averages_reciprocal_ranks() {
        let set = set_of(&[
            (0, 0, vec![3, 4], Some(0)),
            (0, 0, vec![3, 4, 5, 6], Some(3)),
        ]);
        let m = ScoreMatrix::new(
            "s",
            vec![vec![1.0, 0.0], vec![0.9, 0.8, 0.7, 0.1]],
        );
        // ranks 1 and 4 -> (1 + 0.25) / 2
        assert!((mrr(&set, &m).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn mrr_uniform_scores_rank_true_first_by_position() {
        let candidates: Vec<usize> = (0..1001).collect();
        let set = set_of(&[(0, 0, candidates, Some(0))]);
        let m = ScoreMatrix::new("s", vec![vec![0.25; 1001]]);
        assert_eq!(mrr(&set, &m).unwrap(), 1.0);
    }

    #[test]
    fn mrr_rejects_test_mode_sets() {
        let set = set_of(&[(0, 0, vec![3, 4], None)]);
        let m = ScoreMatrix::new("s", vec![vec![1.0, 0.0]]);
        assert!(matches!(mrr(&set, &m), Err(KgError::Format(_))));
    }

    #[test]
    fn mrr_rejects_shape_mismatch() {
        let set = set_of(&[(0, 0, vec![3, 4], Some(0))]);
        let m = ScoreMatrix::new("s", vec![vec![1.0, 0.0, 0.5]]);
        assert!(matches!(mrr(&set, &m), Err(KgError::Shape(_))));
    }
}
