//! Rotation score in the complex plane.
//!
//! Entity rows hold `d/2` complex coordinates interleaved as
//! `[re_0, im_0, re_1, im_1, ..]`; relation rows hold one phase angle per
//! coordinate, so every relation coordinate `e^{i theta}` has unit modulus
//! by construction.

use super::{PNorm, TripleGrad};

/// `gamma - dist` where dist aggregates per-coordinate moduli
/// `|h_j e^{i theta_j} - t_j|` (summed for L1, root-sum-squared for L2).
pub fn rotate_score(head: &[f64], phases: &[f64], tail: &[f64], gamma: f64, p: PNorm) -> f64 {
    debug_assert_eq!(head.len(), tail.len());
    debug_assert_eq!(head.len(), phases.len() * 2);
    let mut sum = 0.0;
    for (j, theta) in phases.iter().enumerate() {
        let (sin, cos) = theta.sin_cos();
        let hr = head[2 * j];
        let hi = head[2 * j + 1];
        let re = hr * cos - hi * sin - tail[2 * j];
        let im = hr * sin + hi * cos - tail[2 * j + 1];
        let sq = re * re + im * im;
        match p {
            PNorm::L1 => sum += sq.sqrt(),
            PNorm::L2 => sum += sq,
        }
    }
    let dist = match p {
        PNorm::L1 => sum,
        PNorm::L2 => sum.sqrt(),
    };
    gamma - dist
}

/// Score plus gradients w.r.t. head, phases, and tail.
pub fn rotate_score_grad(
    head: &[f64],
    phases: &[f64],
    tail: &[f64],
    gamma: f64,
    p: PNorm,
) -> (f64, TripleGrad) {
    let half = phases.len();
    // Forward pass, keeping per-coordinate residuals.
    let mut rot = vec![0.0; 2 * half]; // rotated head
    let mut res = vec![0.0; 2 * half]; // rotated head minus tail
    let mut moduli = vec![0.0; half];
    for (j, theta) in phases.iter().enumerate() {
        let (sin, cos) = theta.sin_cos();
        let hr = head[2 * j];
        let hi = head[2 * j + 1];
        let a = hr * cos - hi * sin;
        let b = hr * sin + hi * cos;
        rot[2 * j] = a;
        rot[2 * j + 1] = b;
        res[2 * j] = a - tail[2 * j];
        res[2 * j + 1] = b - tail[2 * j + 1];
        moduli[j] = (res[2 * j] * res[2 * j] + res[2 * j + 1] * res[2 * j + 1]).sqrt();
    }
    let dist = match p {
        PNorm::L1 => moduli.iter().sum::<f64>(),
        PNorm::L2 => moduli.iter().map(|m| m * m).sum::<f64>().sqrt(),
    };

    let mut d_head = vec![0.0; 2 * half];
    let mut d_phase = vec![0.0; half];
    let mut d_tail = vec![0.0; 2 * half];
    for (j, theta) in phases.iter().enumerate() {
        // ddist/dres for this coordinate.
        let scale = match p {
            PNorm::L1 => {
                if moduli[j] > 0.0 {
                    1.0 / moduli[j]
                } else {
                    0.0
                }
            }
            PNorm::L2 => {
                if dist > 0.0 {
                    1.0 / dist
                } else {
                    0.0
                }
            }
        };
        let gr = res[2 * j] * scale;
        let gi = res[2 * j + 1] * scale;
        let (sin, cos) = theta.sin_cos();
        // res_re = hr cos - hi sin - tr; res_im = hr sin + hi cos - ti.
        let dd_hr = gr * cos + gi * sin;
        let dd_hi = -gr * sin + gi * cos;
        // d res / d theta = (-rot_im, rot_re).
        let dd_theta = -gr * rot[2 * j + 1] + gi * rot[2 * j];
        // score = gamma - dist: negate distance gradients.
        d_head[2 * j] = -dd_hr;
        d_head[2 * j + 1] = -dd_hi;
        d_phase[j] = -dd_theta;
        d_tail[2 * j] = gr;
        d_tail[2 * j + 1] = gi;
    }
    (
        gamma - dist,
        TripleGrad {
            d_head,
            d_rel: d_phase,
            d_tail,
        },
    )
}
