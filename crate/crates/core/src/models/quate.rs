//! Quaternion score: Hamilton-rotate the head, inner-product with the tail.
//!
//! Rows are interpreted as `(w, x, y, z)` quadruples. Relation quadruples are
//! normalized to unit modulus before rotating, so the score is
//! `<e_h (x) w_hat_r, e_t>` summed over all real coordinates; higher is
//! better. There is no margin term.

use crate::error::{KgError, Result};

use super::TripleGrad;

const MIN_MODULUS: f64 = 1e-12;

/// Coordinate-wise quaternion product `a (x) b` of equal-length vectors whose
/// length is a multiple of 4.
pub fn hamilton_product(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(KgError::Shape(format!(
            "hamilton product of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() % 4 != 0 {
        return Err(KgError::Shape(format!(
            "quaternion vector length {} is not a multiple of 4",
            a.len()
        )));
    }
    let mut out = vec![0.0; a.len()];
    for q in 0..a.len() / 4 {
        let i = 4 * q;
        hamilton_quad(&a[i..i + 4], &b[i..i + 4], &mut out[i..i + 4]);
    }
    Ok(out)
}

fn hamilton_quad(a: &[f64], b: &[f64], out: &mut [f64]) {
    let (aw, ax, ay, az) = (a[0], a[1], a[2], a[3]);
    let (bw, bx, by, bz) = (b[0], b[1], b[2], b[3]);
    out[0] = aw * bw - ax * bx - ay * by - az * bz;
    out[1] = aw * bx + ax * bw + ay * bz - az * by;
    out[2] = aw * by - ax * bz + ay * bw + az * bx;
    out[3] = aw * bz + ax * by - ay * bx + az * bw;
}

fn conj_quad(q: &[f64]) -> [f64; 4] {
    [q[0], -q[1], -q[2], -q[3]]
}

fn dot4(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// `<e_h (x) w_hat_r, e_t>` with per-quadruple relation normalization.
///
/// Fails on a zero-modulus relation quadruple (degenerate parameter).
pub fn quate_score(head: &[f64], rel: &[f64], tail: &[f64]) -> Result<f64> {
    let mut score = 0.0;
    for q in 0..head.len() / 4 {
        let i = 4 * q;
        let b = normalize_quad(&rel[i..i + 4], q)?;
        let mut rotated = [0.0; 4];
        hamilton_quad(&head[i..i + 4], &b, &mut rotated);
        score += dot4(&rotated, &tail[i..i + 4]);
    }
    Ok(score)
}

/// Score plus gradients w.r.t. head, raw relation, and tail rows.
pub fn quate_score_grad(head: &[f64], rel: &[f64], tail: &[f64]) -> Result<(f64, TripleGrad)> {
    let n = head.len();
    let mut score = 0.0;
    let mut d_head = vec![0.0; n];
    let mut d_rel = vec![0.0; n];
    let mut d_tail = vec![0.0; n];
    for q in 0..n / 4 {
        let i = 4 * q;
        let a = &head[i..i + 4];
        let t = &tail[i..i + 4];
        let raw = &rel[i..i + 4];
        let modulus = dot4(raw, raw).sqrt();
        if modulus < MIN_MODULUS {
            return Err(KgError::Degenerate(format!(
                "relation quaternion coordinate {q} has modulus {modulus:.3e}"
            )));
        }
        let b: [f64; 4] = [
            raw[0] / modulus,
            raw[1] / modulus,
            raw[2] / modulus,
            raw[3] / modulus,
        ];
        let mut rotated = [0.0; 4];
        hamilton_quad(a, &b, &mut rotated);
        score += dot4(&rotated, t);

        // <a (x) b, t> derivatives via the quaternion adjoint identities:
        // d/dt = a (x) b, d/da = t (x) conj(b), d/db = conj(a) (x) t.
        d_tail[i..i + 4].copy_from_slice(&rotated);
        let mut da = [0.0; 4];
        hamilton_quad(t, &conj_quad(&b), &mut da);
        d_head[i..i + 4].copy_from_slice(&da);
        let mut db_hat = [0.0; 4];
        hamilton_quad(&conj_quad(a), t, &mut db_hat);
        // Through the normalization b = raw / |raw|.
        let proj = dot4(&db_hat, &b);
        for k in 0..4 {
            d_rel[i + k] = (db_hat[k] - proj * b[k]) / modulus;
        }
    }
    Ok((
        score,
        TripleGrad {
            d_head,
            d_rel,
            d_tail,
        },
    ))
}

fn normalize_quad(raw: &[f64], index: usize) -> Result<[f64; 4]> {
    let modulus = dot4(raw, raw).sqrt();
    if modulus < MIN_MODULUS {
        return Err(KgError::Degenerate(format!(
            "relation quaternion coordinate {index} has modulus {modulus:.3e}"
        )));
    }
    Ok([
        raw[0] / modulus,
        raw[1] / modulus,
        raw[2] / modulus,
        raw[3] / modulus,
    ])
}
