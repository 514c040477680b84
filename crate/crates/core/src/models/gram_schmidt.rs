//! Row-wise Gram-Schmidt orthonormalization with a reverse-mode backward pass.
//!
//! Matrices are square, row-major `Vec<f64>` of side `n`. The forward pass
//! records projection coefficients and residual norms so the gradient of any
//! scalar loss w.r.t. the orthonormal output can be pulled back to the raw
//! input matrix.

use crate::error::{KgError, Result};

/// Intermediate residual norms below this are treated as degenerate input.
pub const EPSILON_GS: f64 = 1e-10;

/// Forward-pass record needed by [`gram_schmidt_backward`].
#[derive(Debug, Clone)]
pub struct GsCache {
    /// Projection coefficients `c[i][j] = <m_i, q_j>` for `j < i`, packed
    /// row-major into a lower-triangular layout.
    coeffs: Vec<f64>,
    /// Residual norms `r_i = ||u_i||`.
    norms: Vec<f64>,
    n: usize,
}

impl GsCache {
    fn coeff(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j < i);
        self.coeffs[i * (i - 1) / 2 + j]
    }
}

/// Orthonormalizes the rows of `m` (side `n`, row-major).
///
/// Row `i` is the unit residual of `m_i` after subtracting its projections
/// onto the previously produced rows, so `Q Q^T = I` and the row spans are
/// preserved. Fails with a degenerate-input error when an intermediate
/// residual norm falls below [`EPSILON_GS`].
pub fn gram_schmidt(m: &[f64], n: usize) -> Result<Vec<f64>> {
    gram_schmidt_with_cache(m, n).map(|(q, _)| q)
}

/// [`gram_schmidt`] plus the cache required for the backward pass.
pub fn gram_schmidt_with_cache(m: &[f64], n: usize) -> Result<(Vec<f64>, GsCache)> {
    assert_eq!(m.len(), n * n, "matrix side does not match buffer length");
    let mut q = vec![0.0; n * n];
    let mut coeffs = Vec::with_capacity(n * (n - 1) / 2);
    let mut norms = Vec::with_capacity(n);
    let mut u = vec![0.0; n];
    for i in 0..n {
        let mi = &m[i * n..(i + 1) * n];
        u.copy_from_slice(mi);
        for j in 0..i {
            let qj = &q[j * n..(j + 1) * n];
            let c = dot(mi, qj);
            coeffs.push(c);
            for (uk, qk) in u.iter_mut().zip(qj) {
                *uk -= c * qk;
            }
        }
        let r = dot(&u, &u).sqrt();
        if r < EPSILON_GS {
            return Err(KgError::Degenerate(format!(
                "gram-schmidt residual norm {r:.3e} for row {i} is below {EPSILON_GS:.0e}"
            )));
        }
        norms.push(r);
        for (qk, uk) in q[i * n..(i + 1) * n].iter_mut().zip(&u) {
            *qk = uk / r;
        }
    }
    Ok((q, GsCache { coeffs, norms, n }))
}

/// Pulls a gradient w.r.t. the orthonormal rows `grad_q` back to the raw
/// input rows, given the forward pass (`m`, `q`, `cache`).
pub fn gram_schmidt_backward(
    m: &[f64],
    q: &[f64],
    cache: &GsCache,
    grad_q: &[f64],
) -> Vec<f64> {
    let n = cache.n;
    assert_eq!(m.len(), n * n);
    assert_eq!(q.len(), n * n);
    assert_eq!(grad_q.len(), n * n);

    // gq accumulates downstream gradient contributions into earlier rows.
    let mut gq = grad_q.to_vec();
    let mut grad_m = vec![0.0; n * n];
    let mut ubar = vec![0.0; n];
    for i in (0..n).rev() {
        let qi = &q[i * n..(i + 1) * n];
        let r = cache.norms[i];
        // q_i = u_i / r: ubar = (gq_i - <gq_i, q_i> q_i) / r.
        let proj = dot(&gq[i * n..(i + 1) * n], qi);
        for k in 0..n {
            ubar[k] = (gq[i * n + k] - proj * qi[k]) / r;
        }
        // u_i = m_i - sum_j c_ij q_j.
        for k in 0..n {
            grad_m[i * n + k] += ubar[k];
        }
        let mi = &m[i * n..(i + 1) * n];
        for j in 0..i {
            let qj = &q[j * n..(j + 1) * n];
            let c = cache.coeff(i, j);
            let cbar = -dot(&ubar, qj);
            for k in 0..n {
                grad_m[i * n + k] += cbar * qj[k];
                gq[j * n + k] += cbar * mi[k] - c * ubar[k];
            }
        }
    }
    grad_m
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
