//! Greedy position-based labeling: each anchor, in input order, takes the
//! first candidate position that causes no conflict with already-placed
//! labels. Candidates start at the four corner positions, continue with the
//! four edge midpoints, then positions sliding around the anchor, and — in
//! distant mode — an outward spiral of leader-line positions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Instance;
use crate::geometry::{overlap_area, slider_origin, Point, Rect};
use crate::layout::{Layout, Leader};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("slider candidate count {got} is below the minimum of 8")]
    TooFewSliderCandidates { got: usize },
}

/// Which candidate family produced a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateKind {
    /// One of the four corner positions (label in a quadrant of the anchor).
    Fixed4,
    /// One of the four edge-midpoint positions.
    Fixed8,
    /// A position on the slider circumference.
    Slider,
    /// A detached position on the outward spiral, connected by a leader.
    Distant,
}

/// One candidate position for a single anchor. `rank` is the 1-based index
/// in the anchor's full preference order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Candidate<S> {
    pub origin: Point<S>,
    pub rank: usize,
    pub kind: CandidateKind,
    pub leader: Option<Leader<S>>,
}

/// Candidate families to try, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PblMode {
    /// Adjacent positions only (corners, midpoints, slider).
    #[default]
    Adjacent,
    /// Adjacent positions first, then distant spiral positions.
    AdjacentDistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PblConfig {
    pub mode: PblMode,
    /// Number of slider-circumference candidates per anchor (minimum 8).
    pub slider_count: usize,
}

impl Default for PblConfig {
    fn default() -> Self {
        Self { mode: PblMode::Adjacent, slider_count: 64 }
    }
}

/// The four corner positions, ranks 1-4: upper-right, upper-left,
/// lower-right, lower-left. Rank 1 places the label origin on the anchor.
pub fn corner_candidates<S: Scalar>(anchor: Point<S>, dims: (S, S)) -> Vec<Candidate<S>> {
    let (w, h) = dims;
    let offsets = [
        (S::zero(), S::zero()),
        (-w, S::zero()),
        (S::zero(), -h),
        (-w, -h),
    ];
    offsets
        .iter()
        .enumerate()
        .map(|(i, &(dx, dy))| Candidate {
            origin: Point::new(anchor.x + dx, anchor.y + dy),
            rank: i + 1,
            kind: CandidateKind::Fixed4,
            leader: None,
        })
        .collect()
}

/// The four edge-midpoint positions, ranks 5-8: anchor centered on the
/// label's left, right, bottom, top edge respectively (label to the right,
/// left, above, below the anchor).
pub fn midpoint_candidates<S: Scalar>(anchor: Point<S>, dims: (S, S)) -> Vec<Candidate<S>> {
    let (w, h) = dims;
    let two = S::of(2.0);
    let offsets = [
        (S::zero(), -h / two),
        (-w, -h / two),
        (-w / two, S::zero()),
        (-w / two, -h),
    ];
    offsets
        .iter()
        .enumerate()
        .map(|(i, &(dx, dy))| Candidate {
            origin: Point::new(anchor.x + dx, anchor.y + dy),
            rank: i + 5,
            kind: CandidateKind::Fixed8,
            leader: None,
        })
        .collect()
}

/// `count` evenly spaced positions on the slider circumference, ordered by
/// angular distance from the upper-right corner angle (ties resolved toward
/// the counterclockwise side). The first candidate is exactly the rank-1
/// corner position. Ranks continue at `first_rank`.
pub fn slider_candidates<S: Scalar>(
    anchor: Point<S>,
    dims: (S, S),
    count: usize,
    first_rank: usize,
) -> Result<Vec<Candidate<S>>, BaselineError> {
    if count < 8 {
        return Err(BaselineError::TooFewSliderCandidates { got: count });
    }
    let alpha = dims.1.atan2(dims.0);
    let step = S::TAU() / S::from_usize(count).unwrap();
    let mut js: Vec<usize> = (0..count).collect();
    js.sort_by_key(|&j| (j.min(count - j), j));
    Ok(js
        .iter()
        .enumerate()
        .map(|(pos, &j)| {
            let phi = alpha + step * S::from_usize(j).unwrap();
            Candidate {
                origin: slider_origin(anchor, dims, phi),
                rank: first_rank + pos,
                kind: CandidateKind::Slider,
                leader: None,
            }
        })
        .collect())
}

/// Label-center positions on an Archimedean spiral `r = c * theta` around
/// the anchor, with `c = max(w, h) / tau`, sampled every `pi / 8` radians
/// until the radius exceeds four times `max(w, h)` (64 positions). Each
/// carries a leader from the anchor to the nearest point of the label.
pub fn spiral_candidates<S: Scalar>(
    anchor: Point<S>,
    dims: (S, S),
    first_rank: usize,
) -> Vec<Candidate<S>> {
    let (w, h) = dims;
    let side = w.max(h);
    let c = side / S::TAU();
    let step = S::PI() / S::of(8.0);
    let max_radius = S::of(4.0) * side;
    let mut out = Vec::new();
    let mut k = 1usize;
    loop {
        let theta = step * S::from_usize(k).unwrap();
        let r = c * theta;
        if r > max_radius {
            break;
        }
        let center = Point::new(anchor.x + r * theta.cos(), anchor.y + r * theta.sin());
        let rect = Rect::from_center(center, w, h);
        out.push(Candidate {
            origin: rect.origin,
            rank: first_rank + k - 1,
            kind: CandidateKind::Distant,
            leader: Some(Leader { from: anchor, to: rect.nearest_point(anchor) }),
        });
        k += 1;
    }
    out
}

/// The full ordered candidate sequence for one anchor under `config`.
pub fn candidates<S: Scalar>(
    anchor: Point<S>,
    dims: (S, S),
    config: &PblConfig,
) -> Result<Vec<Candidate<S>>, BaselineError> {
    let mut out = corner_candidates(anchor, dims);
    out.extend(midpoint_candidates(anchor, dims));
    let first = out.len() + 1;
    out.extend(slider_candidates(anchor, dims, config.slider_count, first)?);
    if config.mode == PblMode::AdjacentDistant {
        let first = out.len() + 1;
        out.extend(spiral_candidates(anchor, dims, first));
    }
    Ok(out)
}

/// True if a label rectangle is admissible against the drawing region, the
/// labels committed so far, and every anchor of the instance: it must stay
/// inside the region, overlap no committed label, and contain no anchor
/// strictly inside (boundary contact is fine).
fn admissible<S: Scalar>(rect: &Rect<S>, bound: &Rect<S>, placed: &[Rect<S>], anchors: &[Point<S>]) -> bool {
    if !rect.inside(bound) {
        return false;
    }
    if placed.iter().any(|p| overlap_area(p, rect) > S::zero()) {
        return false;
    }
    !anchors.iter().any(|&a| rect.contains_strict(a))
}

/// Greedy labeling over the anchors in input order. Each anchor commits the
/// first admissible candidate; an anchor with none is left unplaced with its
/// rank-1 origin recorded for rendering. Fully deterministic.
pub fn pbl_solve<S: Scalar>(
    instance: &Instance<S>,
    config: &PblConfig,
) -> Result<Layout<S>, BaselineError> {
    let bound = instance.bound_rect();
    let positions: Vec<Point<S>> = instance.anchors.iter().map(|a| a.pos).collect();
    let mut layout = Layout {
        origins: Vec::with_capacity(instance.len()),
        placed: Vec::with_capacity(instance.len()),
        leaders: Vec::with_capacity(instance.len()),
        steps: 0,
    };
    let mut committed: Vec<Rect<S>> = Vec::with_capacity(instance.len());
    for anchor in &instance.anchors {
        let dims = (anchor.label_w, anchor.label_h);
        let cands = candidates(anchor.pos, dims, config)?;
        let choice = cands.iter().find(|c| {
            let rect = Rect::new(c.origin, dims.0, dims.1);
            admissible(&rect, &bound, &committed, &positions)
        });
        match choice {
            Some(c) => {
                committed.push(Rect::new(c.origin, dims.0, dims.1));
                layout.origins.push(c.origin);
                layout.placed.push(true);
                layout.leaders.push(c.leader.clone());
            }
            None => {
                layout.origins.push(cands[0].origin);
                layout.placed.push(false);
                layout.leaders.push(None);
            }
        }
    }
    Ok(layout)
}
