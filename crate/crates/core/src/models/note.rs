//! Orthogonal-transform score with norm-regularized scalar weights.
//!
//! A relation holds `K` raw square blocks plus `K` scalar vectors. Each block
//! is orthonormalized row-wise (so its inverse is its transpose) and scaled
//! by a diagonal built from the scalar vector: `diag(exp(s))` for the
//! head-to-tail direction, `diag(exp(-s))` for tail-to-head, each normalized
//! to unit Euclidean norm over the diagonal entries. The distance is the sum
//! of per-block L2 residuals between the transformed source block and the
//! target block.
//!
//! Relation row layout: `K * d_s * d_s` raw block entries, then `K * d_s`
//! scalar entries.

use crate::error::{KgError, Result};

use super::gram_schmidt::{gram_schmidt_backward, gram_schmidt_with_cache, GsCache};
use super::{GeometryConfig, ScoreDirection, TripleGrad};

/// Which of the two scalar-weight diagonals to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarSide {
    Head,
    Tail,
}

/// Diagonal entries of the scalar weight matrix for one block.
///
/// Head side: `exp(s) / ||exp(s)||`; tail side: `exp(-s) / ||exp(-s)||`.
/// The maximum is subtracted before exponentiation, which the normalization
/// cancels exactly, so entries up to hundreds stay overflow-safe. The
/// returned vector always has unit Euclidean norm and strictly positive
/// entries.
pub fn note_scalar_weights(s: &[f64], side: ScalarSide) -> Result<Vec<f64>> {
    let (exp, _) = scalar_exp(s, side)?;
    let norm = l2(&exp);
    Ok(exp.iter().map(|e| e / norm).collect())
}

/// Shifted exponentials `exp(sign*s - max(sign*s))` and their norm.
fn scalar_exp(s: &[f64], side: ScalarSide) -> Result<(Vec<f64>, f64)> {
    let sign = match side {
        ScalarSide::Head => 1.0,
        ScalarSide::Tail => -1.0,
    };
    let mut shift = f64::NEG_INFINITY;
    for &v in s {
        if !v.is_finite() {
            return Err(KgError::NonFinite(format!("scalar weight input {v}")));
        }
        shift = shift.max(sign * v);
    }
    let exp: Vec<f64> = s.iter().map(|&v| (sign * v - shift).exp()).collect();
    let norm = l2(&exp);
    Ok((exp, norm))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A relation's orthonormalized blocks and scalar diagonals, with the
/// forward-pass records needed to pull gradients back to the raw row.
///
/// Preparation is the expensive part of scoring; one prepared relation can
/// score any number of entity pairs, and behaves as an immutable value.
#[derive(Debug, Clone)]
pub struct NotePrepared {
    pub(crate) ds: usize,
    pub(crate) k: usize,
    raw_blocks: Vec<Vec<f64>>,
    pub(crate) blocks_q: Vec<Vec<f64>>,
    gs_caches: Vec<GsCache>,
    pub(crate) diag_head: Vec<Vec<f64>>,
    pub(crate) diag_tail: Vec<Vec<f64>>,
    exp_head: Vec<(Vec<f64>, f64)>,
    exp_tail: Vec<(Vec<f64>, f64)>,
}

/// Orthogonalizes every block of a raw relation row and builds both scalar
/// diagonals.
pub fn note_prepare(rel: &[f64], geometry: &GeometryConfig) -> Result<NotePrepared> {
    let ds = geometry.ote_size;
    let k = geometry.num_blocks();
    debug_assert_eq!(rel.len(), k * (ds * ds + ds));
    let scalars_at = k * ds * ds;
    let mut raw_blocks = Vec::with_capacity(k);
    let mut blocks_q = Vec::with_capacity(k);
    let mut gs_caches = Vec::with_capacity(k);
    let mut diag_head = Vec::with_capacity(k);
    let mut diag_tail = Vec::with_capacity(k);
    let mut exp_head = Vec::with_capacity(k);
    let mut exp_tail = Vec::with_capacity(k);
    for i in 0..k {
        let raw = rel[i * ds * ds..(i + 1) * ds * ds].to_vec();
        let (q, cache) = gram_schmidt_with_cache(&raw, ds)?;
        raw_blocks.push(raw);
        blocks_q.push(q);
        gs_caches.push(cache);
        let s = &rel[scalars_at + i * ds..scalars_at + (i + 1) * ds];
        let (eh, nh) = scalar_exp(s, ScalarSide::Head)?;
        let (et, nt) = scalar_exp(s, ScalarSide::Tail)?;
        diag_head.push(eh.iter().map(|e| e / nh).collect());
        diag_tail.push(et.iter().map(|e| e / nt).collect());
        exp_head.push((eh, nh));
        exp_tail.push((et, nt));
    }
    Ok(NotePrepared {
        ds,
        k,
        raw_blocks,
        blocks_q,
        gs_caches,
        diag_head,
        diag_tail,
        exp_head,
        exp_tail,
    })
}

/// `gamma - sum_i || D(i) Phi(i) src(i) - dst(i) ||` for a prepared relation.
///
/// Head-to-tail transforms the head blocks with `D_h Q`; tail-to-head
/// transforms the tail blocks with `D_t Q^T`.
pub fn note_score_prepared(
    prep: &NotePrepared,
    head: &[f64],
    tail: &[f64],
    gamma: f64,
    direction: ScoreDirection,
) -> f64 {
    let ds = prep.ds;
    let mut total = 0.0;
    let mut z = vec![0.0; ds];
    for i in 0..prep.k {
        let q = &prep.blocks_q[i];
        let (src, dst, diag) = match direction {
            ScoreDirection::HeadToTail => (
                &head[i * ds..(i + 1) * ds],
                &tail[i * ds..(i + 1) * ds],
                &prep.diag_head[i],
            ),
            ScoreDirection::TailToHead => (
                &tail[i * ds..(i + 1) * ds],
                &head[i * ds..(i + 1) * ds],
                &prep.diag_tail[i],
            ),
        };
        apply_block(q, src, direction, &mut z);
        let mut sq = 0.0;
        for a in 0..ds {
            let d = diag[a] * z[a] - dst[a];
            sq += d * d;
        }
        total += sq.sqrt();
    }
    gamma - total
}

fn apply_block(q: &[f64], src: &[f64], direction: ScoreDirection, out: &mut [f64]) {
    let ds = src.len();
    match direction {
        // z = Q src
        ScoreDirection::HeadToTail => {
            for a in 0..ds {
                let row = &q[a * ds..(a + 1) * ds];
                out[a] = row.iter().zip(src).map(|(qv, sv)| qv * sv).sum();
            }
        }
        // z = Q^T src
        ScoreDirection::TailToHead => {
            out.iter_mut().for_each(|v| *v = 0.0);
            for a in 0..ds {
                let row = &q[a * ds..(a + 1) * ds];
                let sa = src[a];
                for (o, qv) in out.iter_mut().zip(row) {
                    *o += qv * sa;
                }
            }
        }
    }
}

/// Per-sample gradients against a prepared relation.
///
/// `d_q` and `d_diag` are gradients w.r.t. the orthonormal blocks and the
/// direction's scalar diagonal; they can be accumulated over many samples
/// sharing the relation and pulled back once via [`note_relation_backward`].
#[derive(Debug, Clone)]
pub struct NoteSampleGrad {
    pub d_head: Vec<f64>,
    pub d_tail: Vec<f64>,
    pub d_q: Vec<Vec<f64>>,
    pub d_diag: Vec<Vec<f64>>,
    pub direction: ScoreDirection,
}

pub fn note_score_grad_prepared(
    prep: &NotePrepared,
    head: &[f64],
    tail: &[f64],
    gamma: f64,
    direction: ScoreDirection,
) -> (f64, NoteSampleGrad) {
    let ds = prep.ds;
    let mut total = 0.0;
    let mut d_head = vec![0.0; head.len()];
    let mut d_tail = vec![0.0; tail.len()];
    let mut d_q = Vec::with_capacity(prep.k);
    let mut d_diag = Vec::with_capacity(prep.k);
    let mut z = vec![0.0; ds];
    let mut g = vec![0.0; ds];
    for i in 0..prep.k {
        let q = &prep.blocks_q[i];
        let block = i * ds..(i + 1) * ds;
        let (src, dst, diag): (&[f64], &[f64], &[f64]) = match direction {
            ScoreDirection::HeadToTail => {
                (&head[block.clone()], &tail[block], &prep.diag_head[i])
            }
            ScoreDirection::TailToHead => {
                (&tail[block.clone()], &head[block], &prep.diag_tail[i])
            }
        };
        apply_block(q, src, direction, &mut z);
        let mut sq = 0.0;
        for a in 0..ds {
            let d = diag[a] * z[a] - dst[a];
            g[a] = d;
            sq += d * d;
        }
        let dist = sq.sqrt();
        total += dist;
        // score = gamma - sum dist: d score / d diff = -diff / dist.
        if dist > 0.0 {
            for v in g.iter_mut() {
                *v = -*v / dist;
            }
        } else {
            g.iter_mut().for_each(|v| *v = 0.0);
        }

        let mut dq_i = vec![0.0; ds * ds];
        let mut ddiag_i = vec![0.0; ds];
        let (d_src, d_dst): (&mut [f64], &mut [f64]) = match direction {
            ScoreDirection::HeadToTail => (
                &mut d_head[i * ds..(i + 1) * ds],
                &mut d_tail[i * ds..(i + 1) * ds],
            ),
            ScoreDirection::TailToHead => (
                &mut d_tail[i * ds..(i + 1) * ds],
                &mut d_head[i * ds..(i + 1) * ds],
            ),
        };
        for a in 0..ds {
            // diff = diag .* z - dst
            d_dst[a] = -g[a];
            ddiag_i[a] = g[a] * z[a];
        }
        // d_z = g .* diag, then back through the block transform.
        match direction {
            ScoreDirection::HeadToTail => {
                // z = Q src: d_Q[a][b] += d_z[a] * src[b]; d_src = Q^T d_z.
                for a in 0..ds {
                    let dza = g[a] * diag[a];
                    let qrow = &q[a * ds..(a + 1) * ds];
                    for b in 0..ds {
                        dq_i[a * ds + b] += dza * src[b];
                        d_src[b] += qrow[b] * dza;
                    }
                }
            }
            ScoreDirection::TailToHead => {
                // z = Q^T src: d_Q[a][b] += src[a] * d_z[b]; d_src = Q d_z.
                for a in 0..ds {
                    let qrow = &q[a * ds..(a + 1) * ds];
                    let mut acc = 0.0;
                    for b in 0..ds {
                        let dzb = g[b] * diag[b];
                        dq_i[a * ds + b] += src[a] * dzb;
                        acc += qrow[b] * dzb;
                    }
                    d_src[a] += acc;
                }
            }
        }
        d_q.push(dq_i);
        d_diag.push(ddiag_i);
    }
    (
        gamma - total,
        NoteSampleGrad {
            d_head,
            d_tail,
            d_q,
            d_diag,
            direction,
        },
    )
}

/// Pulls accumulated block and diagonal gradients back to a raw relation row.
///
/// `d_q` sums sample gradients w.r.t. the orthonormal blocks; `d_diag_head`
/// and `d_diag_tail` sum gradients w.r.t. the two scalar diagonals (either
/// may be empty when that direction was never scored). Both pullbacks are
/// linear, so accumulating before the single backward pass is exact.
pub fn note_relation_backward(
    prep: &NotePrepared,
    d_q: &[Vec<f64>],
    d_diag_head: &[Vec<f64>],
    d_diag_tail: &[Vec<f64>],
) -> Vec<f64> {
    let ds = prep.ds;
    let k = prep.k;
    let mut grad = vec![0.0; k * (ds * ds + ds)];
    let scalars_at = k * ds * ds;
    for i in 0..k {
        if !d_q.is_empty() {
            let g = gram_schmidt_backward(
                &prep.raw_blocks[i],
                &prep.blocks_q[i],
                &prep.gs_caches[i],
                &d_q[i],
            );
            grad[i * ds * ds..(i + 1) * ds * ds].copy_from_slice(&g);
        }
        let gs = &mut grad[scalars_at + i * ds..scalars_at + (i + 1) * ds];
        if !d_diag_head.is_empty() {
            scalar_backward(
                &prep.exp_head[i],
                &prep.diag_head[i],
                &d_diag_head[i],
                1.0,
                gs,
            );
        }
        if !d_diag_tail.is_empty() {
            scalar_backward(
                &prep.exp_tail[i],
                &prep.diag_tail[i],
                &d_diag_tail[i],
                -1.0,
                gs,
            );
        }
    }
    grad
}

/// Backward of `d = e / ||e||` with `e = exp(sign*s - shift)` onto `s`.
fn scalar_backward(
    exp: &(Vec<f64>, f64),
    diag: &[f64],
    d_diag: &[f64],
    sign: f64,
    out: &mut [f64],
) {
    let (e, norm) = exp;
    let proj: f64 = d_diag.iter().zip(diag).map(|(g, d)| g * d).sum();
    for a in 0..out.len() {
        let de = (d_diag[a] - proj * diag[a]) / norm;
        out[a] += sign * de * e[a];
    }
}

/// One-shot score for a raw relation row.
pub fn note_score(
    head: &[f64],
    rel: &[f64],
    tail: &[f64],
    geometry: &GeometryConfig,
    direction: ScoreDirection,
) -> Result<f64> {
    let prep = note_prepare(rel, geometry)?;
    Ok(note_score_prepared(&prep, head, tail, geometry.gamma, direction))
}

/// One-shot score gradient w.r.t. head, raw relation row, and tail.
pub fn note_score_grad(
    head: &[f64],
    rel: &[f64],
    tail: &[f64],
    geometry: &GeometryConfig,
    direction: ScoreDirection,
) -> Result<(f64, TripleGrad)> {
    let prep = note_prepare(rel, geometry)?;
    let (score, sample) = note_score_grad_prepared(&prep, head, tail, geometry.gamma, direction);
    let empty: Vec<Vec<f64>> = Vec::new();
    let (dh, dt) = match direction {
        ScoreDirection::HeadToTail => (&sample.d_diag, &empty),
        ScoreDirection::TailToHead => (&empty, &sample.d_diag),
    };
    let d_rel = note_relation_backward(&prep, &sample.d_q, dh, dt);
    Ok((
        score,
        TripleGrad {
            d_head: sample.d_head,
            d_rel,
            d_tail: sample.d_tail,
        },
    ))
}
