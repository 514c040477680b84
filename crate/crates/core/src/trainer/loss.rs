//! Self-adversarial negative-sampling loss with logistic link.

use crate::error::{KgError, Result};

/// Loss value, the softmax negative weights, and the gradients w.r.t. the
/// input scores. The weights are treated as constants: no gradient flows
/// through the softmax.
#[derive(Debug, Clone)]
pub struct AdversarialLoss {
    pub loss: f64,
    pub neg_weights: Vec<f64>,
    pub d_pos: f64,
    pub d_negs: Vec<f64>,
}

/// `-log sigma(pos) - sum_i p_i log sigma(-neg_i)` with
/// `p = softmax(temperature * neg_scores)`.
///
/// Temperature 0 gives uniform weights `1/n`.
pub fn loss_self_adversarial(
    pos_score: f64,
    neg_scores: &[f64],
    temperature: f64,
) -> Result<AdversarialLoss> {
    if !pos_score.is_finite() {
        return Err(KgError::NonFinite(format!("positive score {pos_score}")));
    }
    for (i, s) in neg_scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(KgError::NonFinite(format!("negative score [{i}] = {s}")));
        }
    }
    if !temperature.is_finite() || temperature < 0.0 {
        return Err(KgError::Config(format!(
            "adversarial temperature must be a non-negative finite number, got {temperature}"
        )));
    }

    let n = neg_scores.len();
    let neg_weights = if n == 0 {
        Vec::new()
    } else if temperature == 0.0 {
        vec![1.0 / n as f64; n]
    } else {
        let max = neg_scores
            .iter()
            .fold(f64::NEG_INFINITY, |m, &s| m.max(temperature * s));
        let exps: Vec<f64> = neg_scores
            .iter()
            .map(|&s| (temperature * s - max).exp())
            .collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    };

    // -log sigma(x) = softplus(-x)
    let mut loss = softplus(-pos_score);
    let mut d_negs = Vec::with_capacity(n);
    for (&s, &p) in neg_scores.iter().zip(&neg_weights) {
        loss += p * softplus(s);
        d_negs.push(p * sigmoid(s));
    }
    Ok(AdversarialLoss {
        loss,
        neg_weights,
        d_pos: -sigmoid(-pos_score),
        d_negs,
    })
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    // ln(1 + e^x), stable for large |x|.
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_scores_drive_loss_to_zero() {
        let out = loss_self_adversarial(500.0, &[-500.0, -600.0], 1.0).unwrap();
        assert!(out.loss < 1e-12, "loss {}", out.loss);
    }

    #[test]
    fn zero_temperature_weights_are_uniform() {
        let out = loss_self_adversarial(0.0, &[5.0, -3.0, 0.1, 2.0], 0.0).unwrap();
        for w in &out.neg_weights {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_scores_give_two_log_two() {
        for temperature in [0.0, 0.7, 1.0, 3.0] {
            let out = loss_self_adversarial(0.0, &[0.0], temperature).unwrap();
            assert!((out.loss - 2.0 * 2f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let out = loss_self_adversarial(1.0, &[3.0, -1.0, 0.5], 2.5).unwrap();
        let sum: f64 = out.neg_weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let negs = [1.3, -0.4, 0.9];
        let temperature = 1.7;
        let out = loss_self_adversarial(0.6, &negs, temperature).unwrap();
        let step = 1e-6;
        let f = |pos: f64, negs: &[f64]| {
            loss_self_adversarial(pos, negs, temperature).unwrap().loss
        };
        let num_pos = (f(0.6 + step, &negs) - f(0.6 - step, &negs)) / (2.0 * step);
        assert!((out.d_pos - num_pos).abs() < 1e-8);
        // The negative-weight softmax is held constant in the analytic
        // gradient; check against the frozen-weight loss.
        let frozen = |negs_v: &[f64]| -> f64 {
            let mut l = softplus(-0.6);
            for (s, p) in negs_v.iter().zip(&out.neg_weights) {
                l += p * softplus(*s);
            }
            l
        };
        for i in 0..negs.len() {
            let mut plus = negs.to_vec();
            let mut minus = negs.to_vec();
            plus[i] += step;
            minus[i] -= step;
            let num = (frozen(&plus) - frozen(&minus)) / (2.0 * step);
            assert!((out.d_negs[i] - num).abs() < 1e-8);
        }
    }

    #[test]
    fn non_finite_scores_are_rejected() {
        assert!(loss_self_adversarial(f64::NAN, &[0.0], 1.0).is_err());
        assert!(loss_self_adversarial(0.0, &[f64::INFINITY], 1.0).is_err());
    }
}
