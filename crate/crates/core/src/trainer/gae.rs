//! Generalized advantage estimation over one reward/value sequence.

use crate::scalar::Scalar;

/// Computes advantages and value targets for one agent's episode, assuming
/// the sequence ends in a terminal state (bootstrap value zero).
///
/// `advantage[t] = Σ_l (γλ)^l δ[t+l]` with `δ[t] = r[t] + γ v[t+1] − v[t]`,
/// computed by the standard backward recursion; `target[t] = advantage[t] +
/// v[t]`.
pub fn advantages<S: Scalar>(
    rewards: &[S],
    values: &[S],
    gamma: S,
    lambda: S,
) -> (Vec<S>, Vec<S>) {
    assert_eq!(rewards.len(), values.len(), "reward/value length mismatch");
    let n = rewards.len();
    let mut adv = vec![S::zero(); n];
    let mut targets = vec![S::zero(); n];
    let mut acc = S::zero();
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { S::zero() };
        let delta = rewards[t] + gamma * next_value - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
        targets[t] = acc + values[t];
    }
    (adv, targets)
}
