//! Multi-agent labeling environment.
//!
//! Each anchor owns one label agent. An action is a scalar in `[-1, 1]` that
//! selects a point on the agent's slider circumference; all agents move
//! synchronously, then every agent is rewarded with a weighted sum of its own
//! (local) overlap penalty and the sum over all agents (global), so that
//! cooperation is paid for even with selfish observations.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    self, initial_origin, overlap_area, penetration_distance, slider_origin, wrap_angle,
    GeometryError, Point, Rect,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("expected {expected} actions, got {got}")]
    ActionArity { expected: usize, got: usize },
    #[error("episode already finished (step {step} of {horizon})")]
    EpisodeFinished { step: u32, horizon: u32 },
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One labeled anchor: position, label extent and optional text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor<S> {
    pub pos: Point<S>,
    pub label_w: S,
    pub label_h: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl<S: Scalar> Anchor<S> {
    pub fn dims(&self) -> (S, S) {
        (self.label_w, self.label_h)
    }
}

/// Immutable problem statement: a drawing region and its anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<S> {
    pub drawing: (S, S),
    pub anchors: Vec<Anchor<S>>,
}

impl<S: Scalar> Instance<S> {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn bound_rect(&self) -> Rect<S> {
        Rect::from_corner(S::zero(), S::zero(), self.drawing.0, self.drawing.1)
    }

    pub fn diagonal(&self) -> S {
        (self.drawing.0 * self.drawing.0 + self.drawing.1 * self.drawing.1).sqrt()
    }

    /// Checks anchors lie inside the region and labels fit it.
    pub fn validate(&self) -> Result<(), EnvError> {
        let bound = self.bound_rect();
        for (i, a) in self.anchors.iter().enumerate() {
            if !bound.contains_closed(a.pos) {
                return Err(EnvError::InvalidConfig(format!(
                    "anchor {i} at ({}, {}) outside the drawing region",
                    a.pos.x, a.pos.y
                )));
            }
            if a.label_w <= S::zero()
                || a.label_h <= S::zero()
                || a.label_w > self.drawing.0
                || a.label_h > self.drawing.1
            {
                return Err(EnvError::InvalidConfig(format!(
                    "label {i} ({} x {}) does not fit the drawing region",
                    a.label_w, a.label_h
                )));
            }
        }
        Ok(())
    }
}

/// How the action scalar is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionMode {
    /// `phi = pi * (action + 1)`: the action selects the angle directly.
    #[default]
    Absolute,
    /// `phi = current_angle + pi * action`: the action nudges the angle.
    Relative,
}

/// Environment configuration (training defaults).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "S: Scalar")]
pub struct EnvConfig<S> {
    pub drawing: (S, S),
    /// Inclusive range of agent counts per generated instance.
    pub agents: (usize, usize),
    /// Label width range as fractions of the drawing width.
    pub label_w_frac: (S, S),
    /// Label height as a fraction of the drawing height.
    pub label_h_frac: S,
    pub horizon: u32,
    /// Weight of the local reward; the global one gets `1 - w`.
    pub local_weight: S,
    /// Overlap normalization constant in px^2; `None` divides each agent's
    /// overlap sum by its own label area.
    pub overlap_norm: Option<S>,
    /// Optional penalty for foreign anchors buried inside the agent's label,
    /// added to the local reward as `-coef * penetration / diagonal`.
    pub penetration_penalty: S,
    pub action_mode: ActionMode,
    /// When true, episodes also finish as soon as the state is conflict-free
    /// (inference behavior). Training keeps the fixed horizon so the policy
    /// learns to hold a solved arrangement in place.
    pub terminate_when_conflict_free: bool,
}

impl<S: Scalar> Default for EnvConfig<S> {
    fn default() -> Self {
        Self {
            drawing: (S::of(600.0), S::of(400.0)),
            agents: (1, 2),
            label_w_frac: (S::of(0.1), S::of(0.15)),
            label_h_frac: S::of(0.05),
            horizon: 100,
            local_weight: S::of(0.5),
            overlap_norm: None,
            penetration_penalty: S::zero(),
            action_mode: ActionMode::Absolute,
            terminate_when_conflict_free: true,
        }
    }
}

impl<S: Scalar> EnvConfig<S> {
    pub fn validate(&self) -> Result<(), EnvError> {
        let err = |m: String| Err(EnvError::InvalidConfig(m));
        if self.drawing.0 <= S::zero() || self.drawing.1 <= S::zero() {
            return err("drawing dimensions must be positive".into());
        }
        if self.agents.0 == 0 || self.agents.0 > self.agents.1 {
            return err(format!("degenerate agent range {:?}", self.agents));
        }
        if self.label_w_frac.0 <= S::zero() || self.label_w_frac.0 > self.label_w_frac.1 {
            return err(format!(
                "degenerate label width range ({}, {})",
                self.label_w_frac.0, self.label_w_frac.1
            ));
        }
        if self.label_h_frac <= S::zero() || self.label_h_frac > S::one() {
            return err(format!("label height fraction {} out of (0, 1]", self.label_h_frac));
        }
        if self.horizon == 0 {
            return err("horizon must be positive".into());
        }
        if self.local_weight < S::zero() || self.local_weight > S::one() {
            return err(format!("local weight {} out of [0, 1]", self.local_weight));
        }
        Ok(())
    }
}

/// Mutable world state: one origin per anchor, plus bookkeeping needed by the
/// observation encoder (previous origins and cumulative travel).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState<S> {
    pub instance: Instance<S>,
    pub origins: Vec<Point<S>>,
    pub prev_origins: Vec<Point<S>>,
    pub traveled: Vec<S>,
    pub step: u32,
    pub horizon: u32,
    pub done: bool,
}

impl<S: Scalar> EnvState<S> {
    pub fn label(&self, agent: usize) -> Rect<S> {
        let a = &self.instance.anchors[agent];
        Rect::new(self.origins[agent], a.label_w, a.label_h)
    }

    pub fn labels(&self) -> Vec<Rect<S>> {
        (0..self.instance.len()).map(|i| self.label(i)).collect()
    }
}

/// Per-step reward decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTriple<S> {
    pub local: Vec<S>,
    pub global: S,
    pub total: Vec<S>,
}

/// Draws a random instance: agent count uniform over the configured range,
/// anchors uniform over the drawing region, label widths uniform over the
/// configured fraction range, fixed label height.
pub fn generate_instance<S: Scalar, R: Rng + ?Sized>(
    config: &EnvConfig<S>,
    rng: &mut R,
) -> Instance<S> {
    let n = rng.gen_range(config.agents.0..=config.agents.1);
    let h = config.label_h_frac * config.drawing.1;
    let (w_lo, w_hi) = (
        config.label_w_frac.0 * config.drawing.0,
        config.label_w_frac.1 * config.drawing.0,
    );
    let anchors = (0..n)
        .map(|_| {
            let x = S::uniform(rng, S::zero(), config.drawing.0);
            let y = S::uniform(rng, S::zero(), config.drawing.1);
            let w = S::uniform(rng, w_lo, w_hi);
            Anchor { pos: Point::new(x, y), label_w: w, label_h: h, text: None }
        })
        .collect();
    Instance { drawing: config.drawing, anchors }
}

/// Draws instances until one starts with a label-label overlap of at least
/// `min_overlap_frac` times the smaller label's area (0 accepts any positive
/// overlap or anchor penetration). Used by evaluations that measure a policy's
/// ability to *resolve* conflicts, where trivially solved instances would mask
/// the difference between policies; a positive threshold additionally filters
/// out grazing overlaps that disappear under almost any perturbation.
pub fn generate_conflicted_instance<S: Scalar, R: Rng + ?Sized>(
    config: &EnvConfig<S>,
    min_overlap_frac: S,
    rng: &mut R,
) -> Result<Instance<S>, EnvError> {
    if config.agents.1 < 2 {
        return Err(EnvError::InvalidConfig(
            "conflict-conditioned sampling needs instances of at least two agents".into(),
        ));
    }
    loop {
        let instance = generate_instance(config, rng);
        let state = reset(config, &instance)?;
        if min_overlap_frac <= S::zero() {
            if !is_conflict_free(&state) {
                return Ok(instance);
            }
            continue;
        }
        let labels = state.labels();
        let deep_pair = (0..labels.len()).any(|i| {
            (i + 1..labels.len()).any(|j| {
                let smaller = labels[i].area().min(labels[j].area());
                overlap_area(&labels[i], &labels[j]) >= min_overlap_frac * smaller
            })
        });
        if deep_pair {
            return Ok(instance);
        }
    }
}

/// Places every label at its initial origin (anchor position clamped into the
/// drawing region). Step counter at zero; `done` only if the configuration
/// terminates on conflict-free states and the start already is one.
pub fn reset<S: Scalar>(
    config: &EnvConfig<S>,
    instance: &Instance<S>,
) -> Result<EnvState<S>, EnvError> {
    let origins = instance
        .anchors
        .iter()
        .map(|a| initial_origin(a.pos, a.dims(), instance.drawing))
        .collect::<Result<Vec<_>, _>>()?;
    let n = origins.len();
    let mut state = EnvState {
        instance: instance.clone(),
        origins: origins.clone(),
        prev_origins: origins,
        traveled: vec![S::zero(); n],
        step: 0,
        horizon: config.horizon,
        done: false,
    };
    state.done = config.terminate_when_conflict_free && is_conflict_free(&state);
    Ok(state)
}

/// Applies one synchronized action per agent, advances the step counter and
/// returns the rewards of the new state plus the `done` flag. `done` latches:
/// stepping a finished episode is an error.
pub fn step<S: Scalar>(
    config: &EnvConfig<S>,
    state: &mut EnvState<S>,
    actions: &[S],
) -> Result<(RewardTriple<S>, bool), EnvError> {
    let n = state.instance.len();
    if actions.len() != n {
        return Err(EnvError::ActionArity { expected: n, got: actions.len() });
    }
    if state.done || state.step >= state.horizon {
        return Err(EnvError::EpisodeFinished { step: state.step, horizon: state.horizon });
    }
    state.prev_origins.copy_from_slice(&state.origins);
    for (i, &action) in actions.iter().enumerate() {
        let anchor = &state.instance.anchors[i];
        let phi = match config.action_mode {
            ActionMode::Absolute => S::PI() * (action + S::one()),
            ActionMode::Relative => {
                let current = geometry::angle_of_origin(
                    anchor.pos,
                    anchor.dims(),
                    state.origins[i],
                    S::of(1e-6),
                )?;
                wrap_angle(current + S::PI() * action)
            }
        };
        state.origins[i] = slider_origin(anchor.pos, anchor.dims(), phi);
        state.traveled[i] += state.origins[i].dist(state.prev_origins[i]);
    }
    state.step += 1;
    let rewards = compute_rewards(config, state);
    let done = state.step >= state.horizon
        || (config.terminate_when_conflict_free && is_conflict_free(state));
    state.done = done;
    Ok((rewards, done))
}

/// Sum of this agent's pairwise overlap areas divided by the normalization
/// constant (its own label area unless the config fixes one).
pub fn overlap_value<S: Scalar>(config: &EnvConfig<S>, state: &EnvState<S>, agent: usize) -> S {
    let own = state.label(agent);
    let mut sum = S::zero();
    for j in 0..state.instance.len() {
        if j != agent {
            sum += overlap_area(&own, &state.label(j));
        }
    }
    sum / config.overlap_norm.unwrap_or_else(|| own.area())
}

/// Total penetration depth of foreign anchors buried in this agent's label,
/// normalized by the drawing diagonal.
pub fn penetration_value<S: Scalar>(state: &EnvState<S>, agent: usize) -> S {
    let own = state.label(agent);
    let mut sum = S::zero();
    for (j, a) in state.instance.anchors.iter().enumerate() {
        if j != agent {
            sum += penetration_distance(&own, a.pos);
        }
    }
    sum / state.instance.diagonal()
}

/// Rewards of the current state: `local_i = -overlap_value(i)` (optionally
/// minus a penetration penalty), `global = sum(local)`, and
/// `total_i = (1 - w) * global + w * local_i`.
pub fn compute_rewards<S: Scalar>(config: &EnvConfig<S>, state: &EnvState<S>) -> RewardTriple<S> {
    let n = state.instance.len();
    let local: Vec<S> = (0..n)
        .map(|i| {
            let mut r = -overlap_value(config, state, i);
            if config.penetration_penalty > S::zero() {
                r -= config.penetration_penalty * penetration_value(state, i);
            }
            r
        })
        .collect();
    let global = local.iter().fold(S::zero(), |acc, &x| acc + x);
    let w = config.local_weight;
    let total = local.iter().map(|&l| (S::one() - w) * global + w * l).collect();
    RewardTriple { local, global, total }
}

/// A state is conflict-free when no two labels overlap with positive area and
/// no label strictly contains a foreign anchor. Edge contact is fine; each
/// label's own anchor sits on its boundary by construction and is ignored.
pub fn is_conflict_free<S: Scalar>(state: &EnvState<S>) -> bool {
    let labels = state.labels();
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            if overlap_area(&labels[i], &labels[j]) > S::zero() {
                return false;
            }
        }
        for (j, a) in state.instance.anchors.iter().enumerate() {
            if j != i && penetration_distance(&labels[i], a.pos) > S::zero() {
                return false;
            }
        }
    }
    true
}
