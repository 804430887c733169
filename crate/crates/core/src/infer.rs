//! Running a policy on a fixed instance until it is conflict free (or a
//! step budget runs out), producing a [`Layout`].

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{self, EnvConfig, EnvError, Instance};
use crate::layout::Layout;
use crate::net::{clip_action, sample_raw_action, NetError, PolicyNet};
use crate::obs::{observe_all, ObsConfig};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum InferError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Steps the policy on `instance` until the layout is conflict free or
/// `horizon` steps have elapsed. Action sampling is driven by `seed`, so a
/// fixed seed reproduces the layout exactly. An instance that is conflict
/// free at reset returns after zero steps. Every anchor is marked placed:
/// the policy always keeps each label on its slider rectangle, and the
/// caller judges quality by auditing the result.
pub fn policy_solve<S: Scalar>(
    env_cfg: &EnvConfig<S>,
    obs_cfg: &ObsConfig<S>,
    net: &PolicyNet<S>,
    params: &[S],
    instance: &Instance<S>,
    horizon: u32,
    seed: u64,
) -> Result<Layout<S>, InferError> {
    let env_cfg = &EnvConfig { horizon, terminate_when_conflict_free: true, ..env_cfg.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = env::reset(env_cfg, instance)?;
    let n = instance.len();
    let obs_len = net.obs_len();
    while !state.done {
        let per_agent = observe_all(env_cfg, &state, obs_cfg);
        let mut step_obs = Array2::zeros((n, obs_len));
        for (i, o) in per_agent.iter().enumerate() {
            for (j, v) in o.data.iter().enumerate() {
                step_obs[(i, j)] = *v;
            }
        }
        let pass = net.forward(params, step_obs.view())?;
        let actions: Vec<S> = (0..n)
            .map(|i| clip_action(sample_raw_action(pass.mu[i], pass.log_sigma[i], &mut rng)))
            .collect();
        env::step(env_cfg, &mut state, &actions)?;
    }
    Ok(Layout {
        origins: state.origins.clone(),
        placed: vec![true; n],
        leaders: vec![None; n],
        steps: state.step as usize,
    })
}

/// Runs a freshly initialized, never-trained policy on `instance`. The
/// initialization draw and the action stream are both derived from `seed`,
/// so results are reproducible.
pub fn random_policy_solve<S: Scalar>(
    env_cfg: &EnvConfig<S>,
    obs_cfg: &ObsConfig<S>,
    net_cfg: &crate::net::NetConfig<S>,
    instance: &Instance<S>,
    horizon: u32,
    seed: u64,
) -> Result<Layout<S>, InferError> {
    let net = PolicyNet::new(net_cfg.clone(), obs_cfg)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(crate::seeding::mix_seed(&[seed, 0xF1]));
    let params = net.init_params(&mut init_rng);
    let action_seed = crate::seeding::mix_seed(&[seed, 0xF2]);
    policy_solve(env_cfg, obs_cfg, &net, &params, instance, horizon, action_seed)
}
