//! Clipped-surrogate policy loss with analytic output gradients.
//!
//! The optimizer works on network *outputs* (mean, log standard deviation,
//! value); this module turns a minibatch of transitions into the loss value
//! and the gradients `dL/dμ`, `dL/d log σ`, `dL/dv` that seed
//! backpropagation.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::net::gaussian_log_prob;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "S: Scalar")]
pub struct PpoConfig<S> {
    /// Probability-ratio clip radius.
    pub clip_eps: S,
    pub value_loss_coef: S,
    pub entropy_coef: S,
}

impl<S: Scalar> Default for PpoConfig<S> {
    fn default() -> Self {
        Self { clip_eps: S::of(0.2), value_loss_coef: S::of(0.5), entropy_coef: S::zero() }
    }
}

/// Stored behavior data for a slice of transitions.
pub struct PpoBatch<'a, S> {
    /// Raw (unclipped) actions as sampled.
    pub actions: &'a [S],
    /// Log probability of each action under the behavior policy.
    pub old_log_probs: &'a [S],
    /// Normalized advantages.
    pub advantages: &'a [S],
    /// Value regression targets.
    pub value_targets: &'a [S],
}

/// Loss pieces plus gradients with respect to the network outputs. The
/// gradient of the mean loss uses `1/scale_n`, so chunked evaluation of a
/// larger minibatch sums exactly.
pub struct PpoGrads<S> {
    pub d_mu: Array1<S>,
    pub d_log_sigma: Array1<S>,
    pub d_value: Array1<S>,
    /// Sum over the chunk of per-sample clipped-surrogate losses (divide by
    /// `scale_n` for the mean).
    pub policy_loss_sum: S,
    pub value_loss_sum: S,
    pub entropy_sum: S,
    pub clipped: usize,
    pub kl_sum: S,
}

/// Evaluates loss and output gradients on one chunk of a minibatch.
pub fn grads<S: Scalar>(
    mu: &Array1<S>,
    log_sigma: &Array1<S>,
    value: &Array1<S>,
    batch: &PpoBatch<'_, S>,
    config: &PpoConfig<S>,
    scale_n: usize,
) -> PpoGrads<S> {
    let n = mu.len();
    assert!(
        n == batch.actions.len()
            && n == batch.old_log_probs.len()
            && n == batch.advantages.len()
            && n == batch.value_targets.len(),
        "batch slice length mismatch"
    );
    let inv_n = S::one() / S::of(scale_n as f64);
    let mut d_mu = Array1::zeros(n);
    let mut d_ls = Array1::zeros(n);
    let mut d_v = Array1::zeros(n);
    let mut policy_loss_sum = S::zero();
    let mut value_loss_sum = S::zero();
    let mut entropy_sum = S::zero();
    let mut kl_sum = S::zero();
    let mut clipped = 0usize;
    let half_ln_two_pi_e = S::of(1.418_938_533_204_672_7);
    for i in 0..n {
        let (m, ls, v) = (mu[i], log_sigma[i], value[i]);
        let a = batch.actions[i];
        let adv = batch.advantages[i];
        let lp = gaussian_log_prob(m, ls, a);
        let ratio = (lp - batch.old_log_probs[i]).exp();
        let unclipped = ratio * adv;
        let ratio_clip =
            ratio.max(S::one() - config.clip_eps).min(S::one() + config.clip_eps);
        let clipped_obj = ratio_clip * adv;
        policy_loss_sum -= unclipped.min(clipped_obj);
        if ratio_clip != ratio {
            clipped += 1;
        }
        kl_sum += batch.old_log_probs[i] - lp;
        // Gradient flows only while the unclipped objective is the active
        // (pessimistic) branch.
        let g_lp = if unclipped <= clipped_obj { -inv_n * ratio * adv } else { S::zero() };
        let sigma = ls.exp();
        let z = (a - m) / sigma;
        d_mu[i] = g_lp * z / sigma;
        d_ls[i] = g_lp * (z * z - S::one());
        // Value regression: mean squared error against the targets.
        let err = v - batch.value_targets[i];
        value_loss_sum += err * err;
        d_v[i] = config.value_loss_coef * S::of(2.0) * err * inv_n;
        // Entropy bonus (negative loss): H = log σ + ½ ln 2πe.
        entropy_sum += ls + half_ln_two_pi_e;
        d_ls[i] -= config.entropy_coef * inv_n;
    }
    PpoGrads {
        d_mu,
        d_log_sigma: d_ls,
        d_value: d_v,
        policy_loss_sum,
        value_loss_sum,
        entropy_sum,
        clipped,
        kl_sum,
    }
}

/// Normalizes advantages to zero mean and unit standard deviation in place.
/// A constant advantage vector maps to all zeros.
pub fn normalize_advantages<S: Scalar>(adv: &mut [S]) {
    if adv.is_empty() {
        return;
    }
    let n = S::of(adv.len() as f64);
    let mean = adv.iter().fold(S::zero(), |a, &v| a + v) / n;
    let var = adv.iter().fold(S::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
    let std = var.sqrt().max(S::of(1e-8));
    for v in adv.iter_mut() {
        *v = (*v - mean) / std;
    }
}
