//! Translation score: relations translate head embeddings toward tails.

use super::{PNorm, TripleGrad};

/// `gamma - ||e_h + w_r - e_t||_p`.
pub fn transe_score(head: &[f64], rel: &[f64], tail: &[f64], gamma: f64, p: PNorm) -> f64 {
    debug_assert_eq!(head.len(), rel.len());
    debug_assert_eq!(head.len(), tail.len());
    let dist = match p {
        PNorm::L1 => head
            .iter()
            .zip(rel)
            .zip(tail)
            .map(|((h, r), t)| (h + r - t).abs())
            .sum::<f64>(),
        PNorm::L2 => head
            .iter()
            .zip(rel)
            .zip(tail)
            .map(|((h, r), t)| {
                let d = h + r - t;
                d * d
            })
            .sum::<f64>()
            .sqrt(),
    };
    gamma - dist
}

/// Score plus its gradient w.r.t. the three rows.
pub fn transe_score_grad(
    head: &[f64],
    rel: &[f64],
    tail: &[f64],
    gamma: f64,
    p: PNorm,
) -> (f64, TripleGrad) {
    let n = head.len();
    let diff: Vec<f64> = (0..n).map(|i| head[i] + rel[i] - tail[i]).collect();
    let (dist, g): (f64, Vec<f64>) = match p {
        PNorm::L1 => {
            let dist = diff.iter().map(|d| d.abs()).sum();
            (dist, diff.iter().map(|d| d.signum() * ((*d != 0.0) as i32 as f64)).collect())
        }
        PNorm::L2 => {
            let dist = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            if dist > 0.0 {
                (dist, diff.iter().map(|d| d / dist).collect())
            } else {
                (dist, vec![0.0; n])
            }
        }
    };
    // score = gamma - dist, so the row gradients are the negated distance
    // gradients.
    let d_head: Vec<f64> = g.iter().map(|v| -v).collect();
    let d_rel = d_head.clone();
    let d_tail = g;
    (
        gamma - dist,
        TripleGrad {
            d_head,
            d_rel,
            d_tail,
        },
    )
}
