//! On-policy training loop: parallel rollout collection, advantage
//! estimation, clipped-surrogate updates.
//!
//! Every source of randomness is derived from the master seed through
//! [`crate::seeding::mix_seed`], and gradient accumulation runs over
//! fixed-size chunks reduced in index order, so a training run is bit-exact
//! regardless of worker count.

pub mod adam;
pub mod gae;
pub mod ppo;

use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{self, EnvConfig, EnvError};
use crate::net::{
    clip_action, gaussian_log_prob, sample_raw_action, NetConfig, NetError, PolicyNet,
};
use crate::obs::{observe_all, ObsConfig, ObsError};
use crate::scalar::Scalar;
use crate::seeding::mix_seed;
use adam::{Adam, AdamConfig};
use ppo::{normalize_advantages, PpoBatch, PpoConfig};

/// Transitions per gradient-accumulation chunk. A fixed chunk size (rather
/// than a per-thread split) keeps the floating-point reduction order
/// independent of the worker count.
const GRAD_CHUNK: usize = 64;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Obs(#[from] ObsError),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "S: Scalar")]
pub struct TrainConfig<S> {
    pub iterations: usize,
    /// Minimum transitions per iteration; episodes are added until reached.
    pub batch_size: usize,
    pub minibatch_size: usize,
    /// Optimization epochs over each batch.
    pub epochs: usize,
    pub gamma: S,
    pub lambda: S,
    pub ppo: PpoConfig<S>,
    pub adam: AdamConfig<S>,
    pub seed: u64,
    /// Worker threads; zero uses the process-wide default.
    pub workers: usize,
    /// Fraction of episodes whose instance is rejection-sampled to start
    /// with a real conflict; the rest use the unconditioned distribution.
    /// Without this, small instances are mostly conflict-free at reset and
    /// contribute no learning signal.
    pub conflict_prob: S,
    /// Minimum initial overlap (fraction of the smaller label's area)
    /// required from conflict-conditioned instances.
    pub conflict_min_overlap: S,
}

impl<S: Scalar> Default for TrainConfig<S> {
    fn default() -> Self {
        Self {
            iterations: 150,
            batch_size: 8192,
            minibatch_size: 256,
            epochs: 4,
            gamma: S::of(0.99),
            lambda: S::of(0.95),
            ppo: PpoConfig::default(),
            adam: AdamConfig::default(),
            seed: 0,
            workers: 0,
            conflict_prob: S::of(0.9),
            conflict_min_overlap: S::of(0.25),
        }
    }
}

impl<S: Scalar> TrainConfig<S> {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.iterations == 0
            || self.batch_size == 0
            || self.minibatch_size == 0
            || self.epochs == 0
        {
            return Err(TrainError::InvalidConfig(
                "iterations, batch_size, minibatch_size and epochs must be positive".into(),
            ));
        }
        if self.conflict_prob < S::zero() || self.conflict_prob > S::one() {
            return Err(TrainError::InvalidConfig(
                "conflict_prob must lie in [0, 1]".into(),
            ));
        }
        if self.conflict_min_overlap < S::zero() || self.conflict_min_overlap >= S::one() {
            return Err(TrainError::InvalidConfig(
                "conflict_min_overlap must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One episode of experience, transitions stored agent-major: row
/// `i * steps + t` belongs to agent `i` at step `t`.
pub struct EpisodeRollout<S> {
    pub obs: Array2<S>,
    pub actions: Vec<S>,
    pub log_probs: Vec<S>,
    pub rewards: Vec<S>,
    pub values: Vec<S>,
    pub n_agents: usize,
    pub steps: usize,
    /// Step count after which the layout was first conflict-free (zero:
    /// already at reset), if it ever was.
    pub first_free: Option<usize>,
}

/// Per-iteration training statistics, one JSON line each in metrics files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterStats {
    pub iteration: usize,
    pub episodes: usize,
    pub transitions: usize,
    /// Mean per-transition total reward.
    pub reward_mean: f64,
    /// Mean steps until the first conflict-free layout (horizon if never).
    pub ep_len_mean: f64,
    /// Fraction of episodes that ever reached a conflict-free layout.
    pub solve_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub wall_ms: u128,
}

#[derive(Debug)]
pub struct TrainResult<S> {
    pub net: PolicyNet<S>,
    pub params: Vec<S>,
    pub stats: Vec<IterStats>,
}

/// Seed of episode `j` in iteration `iter` of a run.
fn episode_seed(master: u64, iteration: usize, j: usize) -> u64 {
    mix_seed(&[master, 0xE1, iteration as u64, j as u64])
}

/// Draws one training instance: with probability `conflict_prob` a
/// rejection-sampled instance that starts with a substantial overlap,
/// otherwise an unconditioned draw. Fully determined by the rng stream.
fn draw_instance<S: Scalar, R: rand::Rng + ?Sized>(
    env_cfg: &EnvConfig<S>,
    train: &TrainConfig<S>,
    rng: &mut R,
) -> Result<env::Instance<S>, EnvError> {
    let p = train.conflict_prob.to_f64_lossy();
    // A lone agent can never conflict, so conditioning is only meaningful
    // when instances may hold two or more.
    if env_cfg.agents.1 >= 2 && rand::Rng::gen::<f64>(rng) < p {
        env::generate_conflicted_instance(env_cfg, train.conflict_min_overlap, rng)
    } else {
        Ok(env::generate_instance(env_cfg, rng))
    }
}

/// Runs one complete fixed-horizon episode under the current policy.
/// Early termination is disabled so every episode contributes
/// `agents * horizon` transitions.
pub fn run_episode<S: Scalar>(
    env_cfg: &EnvConfig<S>,
    obs_cfg: &ObsConfig<S>,
    net: &PolicyNet<S>,
    params: &[S],
    train: &TrainConfig<S>,
    seed: u64,
) -> Result<EpisodeRollout<S>, TrainError> {
    let env_cfg = &EnvConfig { terminate_when_conflict_free: false, ..env_cfg.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = draw_instance(env_cfg, train, &mut rng)?;
    let mut state = env::reset(env_cfg, &instance)?;
    let n = instance.len();
    let horizon = env_cfg.horizon as usize;
    let obs_len = net.obs_len();
    let mut obs = Array2::zeros((n * horizon, obs_len));
    let mut actions = vec![S::zero(); n * horizon];
    let mut log_probs = vec![S::zero(); n * horizon];
    let mut rewards = vec![S::zero(); n * horizon];
    let mut values = vec![S::zero(); n * horizon];
    let mut first_free = env::is_conflict_free(&state).then_some(0);
    for t in 0..horizon {
        let per_agent = observe_all(env_cfg, &state, obs_cfg);
        let mut step_obs = Array2::zeros((n, obs_len));
        for (i, o) in per_agent.iter().enumerate() {
            step_obs.row_mut(i).assign(&Array1::from_vec(o.data.clone()));
        }
        let pass = net.forward(params, step_obs.view())?;
        let mut clipped = vec![S::zero(); n];
        for i in 0..n {
            let raw = sample_raw_action(pass.mu[i], pass.log_sigma[i], &mut rng);
            let row = i * horizon + t;
            actions[row] = raw;
            log_probs[row] = gaussian_log_prob(pass.mu[i], pass.log_sigma[i], raw);
            values[row] = pass.value_out[i];
            obs.row_mut(row).assign(&step_obs.row(i));
            clipped[i] = clip_action(raw);
        }
        let (reward, _done) = env::step(env_cfg, &mut state, &clipped)?;
        for i in 0..n {
            rewards[i * horizon + t] = reward.total[i];
        }
        if first_free.is_none() && env::is_conflict_free(&state) {
            first_free = Some(t + 1);
        }
    }
    Ok(EpisodeRollout {
        obs,
        actions,
        log_probs,
        rewards,
        values,
        n_agents: n,
        steps: horizon,
        first_free,
    })
}

/// Collects episodes for one iteration: episode count is the smallest `J`
/// whose transition total reaches the batch size. Episodes run in parallel
/// but are returned in index order.
pub fn collect_rollouts<S: Scalar>(
    env_cfg: &EnvConfig<S>,
    obs_cfg: &ObsConfig<S>,
    net: &PolicyNet<S>,
    params: &[S],
    train: &TrainConfig<S>,
    iteration: usize,
) -> Result<Vec<EpisodeRollout<S>>, TrainError> {
    // Peek agent counts by regenerating each episode's instance from its
    // seed; the worker later replays the identical stream.
    let mut seeds = Vec::new();
    let mut transitions = 0usize;
    let mut j = 0usize;
    while transitions < train.batch_size {
        let seed = episode_seed(train.seed, iteration, j);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instance = draw_instance(env_cfg, train, &mut rng)?;
        transitions += instance.len() * env_cfg.horizon as usize;
        seeds.push(seed);
        j += 1;
    }
    seeds
        .par_iter()
        .map(|&seed| run_episode(env_cfg, obs_cfg, net, params, train, seed))
        .collect()
}

/// Flat batch over all episodes of one iteration.
struct Batch<S> {
    obs: Array2<S>,
    actions: Vec<S>,
    log_probs: Vec<S>,
    advantages: Vec<S>,
    targets: Vec<S>,
}

fn assemble_batch<S: Scalar>(
    episodes: &[EpisodeRollout<S>],
    gamma: S,
    lambda: S,
) -> Batch<S> {
    let total: usize = episodes.iter().map(|e| e.n_agents * e.steps).sum();
    let obs_len = episodes[0].obs.ncols();
    let mut obs = Array2::zeros((total, obs_len));
    let mut actions = Vec::with_capacity(total);
    let mut log_probs = Vec::with_capacity(total);
    let mut advantages = Vec::with_capacity(total);
    let mut targets = Vec::with_capacity(total);
    let mut row = 0;
    for ep in episodes {
        obs.slice_mut(ndarray::s![row..row + ep.n_agents * ep.steps, ..])
            .assign(&ep.obs);
        row += ep.n_agents * ep.steps;
        actions.extend_from_slice(&ep.actions);
        log_probs.extend_from_slice(&ep.log_probs);
        for agent in 0..ep.n_agents {
            let span = agent * ep.steps..(agent + 1) * ep.steps;
            let (adv, tgt) =
                gae::advantages(&ep.rewards[span.clone()], &ep.values[span], gamma, lambda);
            advantages.extend(adv);
            targets.extend(tgt);
        }
    }
    normalize_advantages(&mut advantages);
    Batch { obs, actions, log_probs, advantages, targets }
}

/// Deterministic shuffled index order for one epoch.
fn epoch_order(master: u64, iteration: usize, epoch: usize, len: usize) -> Vec<usize> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(mix_seed(&[master, 0x5F, iteration as u64, epoch as u64]));
    let mut order: Vec<usize> = (0..len).collect();
    // Fisher–Yates.
    for i in (1..len).rev() {
        let j = (rand::Rng::gen_range(&mut rng, 0..=i as u64)) as usize;
        order.swap(i, j);
    }
    order
}

struct UpdateStats<S> {
    policy_loss: S,
    value_loss: S,
    entropy: S,
    clipped: usize,
    kl: S,
    samples: usize,
    minibatches: usize,
}

/// One optimization pass: `epochs` sweeps of shuffled minibatches. Each
/// minibatch gradient is accumulated over fixed-size chunks evaluated in
/// parallel and reduced in index order.
fn update<S: Scalar>(
    net: &PolicyNet<S>,
    params: &mut Vec<S>,
    opt: &mut Adam<S>,
    batch: &Batch<S>,
    train: &TrainConfig<S>,
    iteration: usize,
) -> UpdateStats<S> {
    let total = batch.actions.len();
    let mut stats = UpdateStats {
        policy_loss: S::zero(),
        value_loss: S::zero(),
        entropy: S::zero(),
        clipped: 0,
        kl: S::zero(),
        samples: 0,
        minibatches: 0,
    };
    for epoch in 0..train.epochs {
        let order = epoch_order(train.seed, iteration, epoch, total);
        for mb in order.chunks(train.minibatch_size) {
            let scale_n = mb.len();
            let chunk_results: Vec<(Vec<S>, ppo::PpoGrads<S>)> = mb
                .par_chunks(GRAD_CHUNK)
                .map(|chunk| {
                    let rows: Vec<usize> = chunk.to_vec();
                    let obs = batch.obs.select(Axis(0), &rows);
                    let pass = net.forward(params, obs.view()).expect("forward in update");
                    let gather = |src: &[S]| -> Vec<S> {
                        rows.iter().map(|&r| src[r]).collect()
                    };
                    let actions = gather(&batch.actions);
                    let old_lp = gather(&batch.log_probs);
                    let adv = gather(&batch.advantages);
                    let tgt = gather(&batch.targets);
                    let g = ppo::grads(
                        &pass.mu,
                        &pass.log_sigma,
                        &pass.value_out,
                        &PpoBatch {
                            actions: &actions,
                            old_log_probs: &old_lp,
                            advantages: &adv,
                            value_targets: &tgt,
                        },
                        &train.ppo,
                        scale_n,
                    );
                    let grads = net.backward(
                        params,
                        &pass,
                        g.d_mu.view(),
                        g.d_log_sigma.view(),
                        g.d_value.view(),
                    );
                    (grads, g)
                })
                .collect();
            // Fixed-order reduction keeps results thread-count independent.
            let mut grad_acc = vec![S::zero(); params.len()];
            for (grads, g) in chunk_results {
                for (a, v) in grad_acc.iter_mut().zip(grads) {
                    *a += v;
                }
                stats.policy_loss += g.policy_loss_sum;
                stats.value_loss += g.value_loss_sum;
                stats.entropy += g.entropy_sum;
                stats.clipped += g.clipped;
                stats.kl += g.kl_sum;
            }
            stats.samples += scale_n;
            stats.minibatches += 1;
            opt.step(params, &grad_acc);
        }
    }
    stats
}

fn run_in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool");
        pool.install(f)
    }
}

/// Full training run. `on_iteration` receives the statistics and current
/// parameters after every iteration (for logging and checkpointing).
pub fn train<S: Scalar>(
    env_cfg: &EnvConfig<S>,
    obs_cfg: &ObsConfig<S>,
    net_cfg: NetConfig<S>,
    train_cfg: &TrainConfig<S>,
    mut on_iteration: impl FnMut(&IterStats, &[S]),
) -> Result<TrainResult<S>, TrainError> {
    train_cfg.validate()?;
    env_cfg.validate()?;
    obs_cfg.validate()?;
    // Training always runs the full horizon so every episode contributes
    // `agents * horizon` transitions.
    let env_cfg = EnvConfig { terminate_when_conflict_free: false, ..env_cfg.clone() };
    let net = PolicyNet::new(net_cfg, obs_cfg)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(mix_seed(&[train_cfg.seed, 0x1A]));
    let mut params = net.init_params(&mut init_rng);
    let mut opt = Adam::new(params.len(), train_cfg.adam.clone());
    let mut stats_log = Vec::with_capacity(train_cfg.iterations);
    let start = Instant::now();
    for iteration in 0..train_cfg.iterations {
        let episodes = run_in_pool(train_cfg.workers, || {
            collect_rollouts(&env_cfg, obs_cfg, &net, &params, train_cfg, iteration)
        })?;
        let batch = assemble_batch(&episodes, train_cfg.gamma, train_cfg.lambda);
        let transitions = batch.actions.len();
        let reward_sum = episodes
            .iter()
            .flat_map(|e| e.rewards.iter())
            .fold(S::zero(), |a, &r| a + r);
        let ep_len_sum: usize = episodes
            .iter()
            .map(|e| e.first_free.unwrap_or(e.steps))
            .sum();
        let solved = episodes.iter().filter(|e| e.first_free.is_some()).count();
        let us = run_in_pool(train_cfg.workers, || {
            update(&net, &mut params, &mut opt, &batch, train_cfg, iteration)
        });
        if let Some(bad) = params.iter().find(|v| !v.is_finite()) {
            return Err(TrainError::Diverged {
                iteration,
                detail: format!(
                    "non-finite parameter {bad:?}; policy_loss sum {:?}, value_loss sum {:?}",
                    us.policy_loss, us.value_loss
                ),
            });
        }
        let n_mb = us.samples.max(1) as f64;
        let stats = IterStats {
            iteration,
            episodes: episodes.len(),
            transitions,
            reward_mean: reward_sum.to_f64_lossy() / transitions as f64,
            ep_len_mean: ep_len_sum as f64 / episodes.len() as f64,
            solve_rate: solved as f64 / episodes.len() as f64,
            policy_loss: us.policy_loss.to_f64_lossy() / n_mb,
            value_loss: us.value_loss.to_f64_lossy() / n_mb,
            entropy: us.entropy.to_f64_lossy() / n_mb,
            clip_fraction: us.clipped as f64 / n_mb,
            approx_kl: us.kl.to_f64_lossy() / n_mb,
            wall_ms: start.elapsed().as_millis(),
        };
        if !stats.reward_mean.is_finite() {
            return Err(TrainError::Diverged {
                iteration,
                detail: "non-finite mean reward".into(),
            });
        }
        on_iteration(&stats, &params);
        stats_log.push(stats);
    }
    Ok(TrainResult { net, params, stats: stats_log })
}
