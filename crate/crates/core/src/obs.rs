//! Per-agent observations: a ray-sensing mapping matrix plus a self-aware
//! vector of scalar summaries, flattened into one network input.
//!
//! Every entry is normalized into a documented bounded range: distances by
//! the drawing diagonal, counts by the number of labels, areas by the total
//! label area, time by the horizon.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvConfig, EnvState};
use crate::geometry::{cast_ray, penetration_distance, HitKind, Point, RayScene};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ObsError {
    #[error("ray count {0} not one of 8, 16, 32, 64, 128")]
    BadRayCount(usize),
    #[error("observation config selects no channels at all")]
    Empty,
}

/// Ray-reading channels of the mapping matrix, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapChannel {
    /// Signed distance to the nearest hit, from the agent's own boundary.
    Distance,
    /// Hit type: bound 0, label 1/2, anchor 1.
    HitType,
    /// Pierced-label count.
    Count,
    /// Pierced-label mass (area).
    Mass,
}

pub const ALL_MAP_CHANNELS: [MapChannel; 4] =
    [MapChannel::Distance, MapChannel::HitType, MapChannel::Count, MapChannel::Mass];

/// Scalar self-aware modalities, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfModality {
    /// Own overlap sum (plus conflict count when enabled).
    Overlap,
    /// Origin displacement: per-step and cumulative distance traveled.
    Displacement,
    /// Anchor penetration depth sum (plus conflict count when enabled).
    Penetration,
    /// Anchor position relative to the label.
    AnchorRelative,
    /// Anchor-to-origin distance.
    AnchorDistance,
    /// Normalized episode time.
    Time,
}

pub const ALL_SELF_MODALITIES: [SelfModality; 6] = [
    SelfModality::Overlap,
    SelfModality::Displacement,
    SelfModality::Penetration,
    SelfModality::AnchorRelative,
    SelfModality::AnchorDistance,
    SelfModality::Time,
];

/// Encoding of [`SelfModality::AnchorRelative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorRelativeMode {
    /// Two entries: anchor offset from the label center, divided by the
    /// label extent (each in `[-1/2, 1/2]`).
    #[default]
    Position,
    /// One entry: distance from the label center, divided by the label
    /// half-diagonal (a plain anchor-to-attachment distance would always be
    /// zero under the slider constraint).
    CenterDistance,
}

/// Observation-space configuration. The observation length is a pure
/// function of this struct, which travels inside checkpoints so a trained
/// network can never be fed a mismatched shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "S: Scalar")]
pub struct ObsConfig<S> {
    pub n_rays: usize,
    pub map_channels: Vec<MapChannel>,
    pub self_modalities: Vec<SelfModality>,
    /// Attach a conflict count to the overlap and penetration modalities.
    pub conflict_counts: bool,
    pub anchor_relative: AnchorRelativeMode,
    /// Collision footprint of anchors as seen by rays, in px.
    pub anchor_radius: S,
}

impl<S: Scalar> Default for ObsConfig<S> {
    fn default() -> Self {
        Self {
            n_rays: 32,
            map_channels: vec![MapChannel::Distance, MapChannel::Count, MapChannel::Mass],
            self_modalities: vec![
                SelfModality::Overlap,
                SelfModality::Penetration,
                SelfModality::AnchorRelative,
                SelfModality::AnchorDistance,
                SelfModality::Time,
            ],
            conflict_counts: true,
            anchor_relative: AnchorRelativeMode::default(),
            anchor_radius: S::of(2.0),
        }
    }
}

impl<S: Scalar> ObsConfig<S> {
    /// Full configuration: all four map channels and all six modalities.
    pub fn full() -> Self {
        Self {
            map_channels: ALL_MAP_CHANNELS.to_vec(),
            self_modalities: ALL_SELF_MODALITIES.to_vec(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ObsError> {
        if ![8, 16, 32, 64, 128].contains(&self.n_rays) {
            return Err(ObsError::BadRayCount(self.n_rays));
        }
        if self.map_channels.is_empty() && self.self_modalities.is_empty() {
            return Err(ObsError::Empty);
        }
        Ok(())
    }

    fn has(&self, m: SelfModality) -> bool {
        self.self_modalities.contains(&m)
    }

    /// Width of one mapping-matrix row.
    pub fn map_width(&self) -> usize {
        self.map_channels.len()
    }

    /// Length of the self-aware vector.
    pub fn self_len(&self) -> usize {
        let mut n = 0;
        if self.has(SelfModality::Overlap) {
            n += 1 + usize::from(self.conflict_counts);
        }
        if self.has(SelfModality::Displacement) {
            n += 2; // per-step + cumulative
        }
        if self.has(SelfModality::Penetration) {
            n += 1 + usize::from(self.conflict_counts);
        }
        if self.has(SelfModality::AnchorRelative) {
            n += match self.anchor_relative {
                AnchorRelativeMode::Position => 2,
                AnchorRelativeMode::CenterDistance => 1,
            };
        }
        if self.has(SelfModality::AnchorDistance) {
            n += 1;
        }
        if self.has(SelfModality::Time) {
            n += 1;
        }
        n
    }

    /// Total observation length: flattened mapping matrix plus self vector.
    pub fn obs_len(&self) -> usize {
        self.n_rays * self.map_width() + self.self_len()
    }
}

/// One agent's observation: the mapping matrix in row-major order (ray-major,
/// channel-minor) followed by the self-aware vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<S> {
    pub data: Vec<S>,
    pub n_rays: usize,
    pub map_width: usize,
}

impl<S: Scalar> Observation<S> {
    pub fn map_part(&self) -> &[S] {
        &self.data[..self.n_rays * self.map_width]
    }

    pub fn self_part(&self) -> &[S] {
        &self.data[self.n_rays * self.map_width..]
    }
}

fn hit_code<S: Scalar>(hit: HitKind) -> S {
    // Small integers {0, 1, 2} scaled into [0, 1].
    match hit {
        HitKind::Bound => S::zero(),
        HitKind::Label => S::of(0.5),
        HitKind::Anchor => S::one(),
    }
}

/// Ray readings of one agent against every other label, every foreign anchor
/// and the drawing bound.
pub fn ray_readings<S: Scalar>(
    state: &EnvState<S>,
    agent: usize,
    config: &ObsConfig<S>,
) -> Vec<crate::geometry::RayReading<S>> {
    let labels = state.labels();
    let own = labels[agent];
    let others: Vec<_> =
        labels.iter().enumerate().filter(|(j, _)| *j != agent).map(|(_, r)| *r).collect();
    let anchors: Vec<Point<S>> = state
        .instance
        .anchors
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != agent)
        .map(|(_, a)| a.pos)
        .collect();
    let total_area = labels.iter().fold(S::zero(), |acc, l| acc + l.area());
    let scene = RayScene {
        other_labels: &others,
        foreign_anchors: &anchors,
        bound: state.instance.bound_rect(),
        anchor_radius: config.anchor_radius,
        label_count: labels.len(),
        total_label_area: total_area,
    };
    (0..config.n_rays).map(|k| cast_ray(&own, k, config.n_rays, &scene)).collect()
}

/// Flattened mapping matrix (`n_rays` rows, one per direction, columns in
/// configured channel order).
pub fn mapping_vector<S: Scalar>(
    state: &EnvState<S>,
    agent: usize,
    config: &ObsConfig<S>,
) -> Vec<S> {
    let readings = ray_readings(state, agent, config);
    let mut out = Vec::with_capacity(config.n_rays * config.map_width());
    for r in readings {
        for ch in &config.map_channels {
            out.push(match ch {
                MapChannel::Distance => r.distance,
                MapChannel::HitType => hit_code(r.hit),
                MapChannel::Count => r.count,
                MapChannel::Mass => r.mass,
            });
        }
    }
    out
}

/// Self-aware scalar summaries in canonical modality order.
pub fn self_aware_vector<S: Scalar>(
    env_config: &EnvConfig<S>,
    state: &EnvState<S>,
    agent: usize,
    config: &ObsConfig<S>,
) -> Vec<S> {
    let n = S::of(state.instance.len() as f64);
    let diag = state.instance.diagonal();
    let own = state.label(agent);
    let anchor = state.instance.anchors[agent].pos;
    let mut out = Vec::with_capacity(config.self_len());

    if config.has(SelfModality::Overlap) {
        out.push(crate::env::overlap_value(env_config, state, agent));
        if config.conflict_counts {
            let count = (0..state.instance.len())
                .filter(|&j| {
                    j != agent
                        && crate::geometry::overlap_area(&own, &state.label(j)) > S::zero()
                })
                .count();
            out.push(S::of(count as f64) / n);
        }
    }
    if config.has(SelfModality::Displacement) {
        let step_dist = state.origins[agent].dist(state.prev_origins[agent]);
        out.push(step_dist / diag);
        // Cumulative travel normalized so a full-horizon episode stays in
        // [0, 1]: each step moves at most one drawing diagonal.
        out.push(state.traveled[agent] / (diag * S::of(state.horizon.max(1) as f64)));
    }
    if config.has(SelfModality::Penetration) {
        let mut sum = S::zero();
        let mut count = 0usize;
        for (j, a) in state.instance.anchors.iter().enumerate() {
            let d = penetration_distance(&own, a.pos);
            sum += d;
            if j != agent && d > S::zero() {
                count += 1;
            }
        }
        out.push(sum / diag);
        if config.conflict_counts {
            out.push(S::of(count as f64) / n);
        }
    }
    if config.has(SelfModality::AnchorRelative) {
        let c = own.center();
        match config.anchor_relative {
            AnchorRelativeMode::Position => {
                out.push((anchor.x - c.x) / own.w);
                out.push((anchor.y - c.y) / own.h);
            }
            AnchorRelativeMode::CenterDistance => {
                let half_diag = own.diagonal() / S::of(2.0);
                out.push(anchor.dist(c) / half_diag);
            }
        }
    }
    if config.has(SelfModality::AnchorDistance) {
        out.push(anchor.dist(state.origins[agent]) / diag);
    }
    if config.has(SelfModality::Time) {
        out.push(S::of(state.step as f64) / S::of(state.horizon.max(1) as f64));
    }
    out
}

/// Full observation of one agent.
pub fn observe<S: Scalar>(
    env_config: &EnvConfig<S>,
    state: &EnvState<S>,
    agent: usize,
    config: &ObsConfig<S>,
) -> Observation<S> {
    let mut data = mapping_vector(state, agent, config);
    data.extend(self_aware_vector(env_config, state, agent, config));
    debug_assert_eq!(data.len(), config.obs_len());
    Observation { data, n_rays: config.n_rays, map_width: config.map_width() }
}

/// Observations for all agents (parameter-shared policies evaluate each one
/// against the same network).
pub fn observe_all<S: Scalar>(
    env_config: &EnvConfig<S>,
    state: &EnvState<S>,
    config: &ObsConfig<S>,
) -> Vec<Observation<S>> {
    (0..state.instance.len()).map(|i| observe(env_config, state, i, config)).collect()
}
