//! Pure 2-D primitives for slider-model label placement.
//!
//! Conventions used throughout the crate:
//! * y grows upward; the drawing region is `[0, w] x [0, h]` with its origin
//!   at the bottom-left corner,
//! * a label is an axis-aligned rectangle identified by its bottom-left
//!   corner (its *origin*) plus width/height,
//! * the *slider rectangle* of an anchor is the locus of admissible label
//!   origins: keeping the origin on its circumference keeps the anchor on the
//!   label's boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid clip bounds: lo {lo} > hi {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("label ({w} x {h}) does not fit the drawing region ({dw} x {dh})")]
    InfeasibleLabel { w: f64, h: f64, dw: f64, dh: f64 },
    #[error("origin is {dist} px away from the slider circumference (tolerance {tol})")]
    OffCircumference { dist: f64, tol: f64 },
}

/// 2-D point (also used for vectors).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn add(self, other: Self) -> Self {
        Self::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y)
    }

    pub fn dist(self, other: Self) -> S {
        let d = self.sub(other);
        (d.x * d.x + d.y * d.y).sqrt()
    }
}

/// Axis-aligned rectangle: bottom-left origin plus extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<S> {
    pub origin: Point<S>,
    pub w: S,
    pub h: S,
}

impl<S: Scalar> Rect<S> {
    pub fn new(origin: Point<S>, w: S, h: S) -> Self {
        Self { origin, w, h }
    }

    pub fn from_corner(x: S, y: S, w: S, h: S) -> Self {
        Self::new(Point::new(x, y), w, h)
    }

    pub fn from_center(center: Point<S>, w: S, h: S) -> Self {
        let half = Point::new(w / S::of(2.0), h / S::of(2.0));
        Self::new(center.sub(half), w, h)
    }

    pub fn x1(&self) -> S {
        self.origin.x
    }

    pub fn y1(&self) -> S {
        self.origin.y
    }

    pub fn x2(&self) -> S {
        self.origin.x + self.w
    }

    pub fn y2(&self) -> S {
        self.origin.y + self.h
    }

    pub fn center(&self) -> Point<S> {
        Point::new(
            self.origin.x + self.w / S::of(2.0),
            self.origin.y + self.h / S::of(2.0),
        )
    }

    pub fn area(&self) -> S {
        self.w * self.h
    }

    pub fn diagonal(&self) -> S {
        (self.w * self.w + self.h * self.h).sqrt()
    }

    /// True if `p` lies strictly inside (boundary excluded).
    pub fn contains_strict(&self, p: Point<S>) -> bool {
        p.x > self.x1() && p.x < self.x2() && p.y > self.y1() && p.y < self.y2()
    }

    /// True if `p` lies inside or on the boundary.
    pub fn contains_closed(&self, p: Point<S>) -> bool {
        p.x >= self.x1() && p.x <= self.x2() && p.y >= self.y1() && p.y <= self.y2()
    }

    /// True if `self` lies entirely inside `outer` (boundary contact allowed).
    pub fn inside(&self, outer: &Rect<S>) -> bool {
        self.x1() >= outer.x1()
            && self.y1() >= outer.y1()
            && self.x2() <= outer.x2()
            && self.y2() <= outer.y2()
    }

    /// Nearest point of the closed rectangle to `p`.
    pub fn nearest_point(&self, p: Point<S>) -> Point<S> {
        Point::new(
            p.x.max(self.x1()).min(self.x2()),
            p.y.max(self.y1()).min(self.y2()),
        )
    }

    /// Projects an interior point onto the nearest circumference point.
    /// Points already outside or on the boundary are first clamped onto the
    /// rectangle, which for boundary points is the identity.
    pub fn project_to_boundary(&self, p: Point<S>) -> Point<S> {
        let c = self.nearest_point(p);
        if !self.contains_strict(c) {
            return c;
        }
        let dl = c.x - self.x1();
        let dr = self.x2() - c.x;
        let db = c.y - self.y1();
        let dt = self.y2() - c.y;
        let m = dl.min(dr).min(db).min(dt);
        if m == dl {
            Point::new(self.x1(), c.y)
        } else if m == dr {
            Point::new(self.x2(), c.y)
        } else if m == db {
            Point::new(c.x, self.y1())
        } else {
            Point::new(c.x, self.y2())
        }
    }
}

/// Clamps `x` into `[lo, hi]`.
pub fn clip<S: Scalar>(x: S, lo: S, hi: S) -> Result<S, GeometryError> {
    if lo > hi {
        return Err(GeometryError::InvalidBounds {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    Ok(x.max(lo).min(hi))
}

/// The slider rectangle of `anchor` for a label of size `dims`: origin
/// `(a_x - w, a_y - h)`, extent `(w, h)`. Keeping the label origin on its
/// circumference keeps the anchor on the label boundary.
pub fn slider_rect<S: Scalar>(anchor: Point<S>, dims: (S, S)) -> Rect<S> {
    Rect::new(Point::new(anchor.x - dims.0, anchor.y - dims.1), dims.0, dims.1)
}

/// Initial label origin: the anchor position clamped so the label stays
/// inside the drawing region. Unclipped, the label sits in the upper-right
/// quadrant of its anchor. If both clamps push the origin strictly inside the
/// slider rectangle (anchor close to the drawing's top-right corner), the
/// origin is projected back onto the slider circumference so the adjacency
/// property survives.
pub fn initial_origin<S: Scalar>(
    anchor: Point<S>,
    dims: (S, S),
    drawing: (S, S),
) -> Result<Point<S>, GeometryError> {
    let map_err = |_| GeometryError::InfeasibleLabel {
        w: dims.0.to_f64_lossy(),
        h: dims.1.to_f64_lossy(),
        dw: drawing.0.to_f64_lossy(),
        dh: drawing.1.to_f64_lossy(),
    };
    let x = clip(anchor.x, S::zero(), drawing.0 - dims.0).map_err(map_err)?;
    let y = clip(anchor.y, S::zero(), drawing.1 - dims.1).map_err(map_err)?;
    let origin = Point::new(x, y);
    let sigma = slider_rect(anchor, dims);
    if sigma.contains_strict(origin) {
        Ok(sigma.project_to_boundary(origin))
    } else {
        Ok(origin)
    }
}

/// Label origin for slider angle `phi`, i.e. the point of the slider
/// circumference hit by a ray leaving the slider center at angle `phi`
/// (measured counterclockwise from +x). Any finite angle is accepted and
/// wrapped into `[0, 2*pi)`.
///
/// `phi = 0` lands on the right-edge midpoint, `phi = atan2(h, w)` on the
/// top-right corner (origin = anchor, label in the upper-right quadrant).
pub fn slider_origin<S: Scalar>(anchor: Point<S>, dims: (S, S), phi: S) -> Point<S> {
    let two = S::of(2.0);
    let hw = dims.0 / two;
    let hh = dims.1 / two;
    let phi = wrap_angle(phi);
    let c = phi.cos();
    let s = phi.sin();
    // Relative to the slider center: exact on the dominant coordinate so the
    // anchor-on-boundary property holds to the last ulp on that axis.
    let rel = if hw * s.abs() <= hh * c.abs() {
        // Hits a vertical edge; c != 0 here.
        Point::new(hw * c.signum(), hw * s / c.abs())
    } else {
        Point::new(hh * c / s.abs(), hh * s.signum())
    };
    // anchor + (rel - half) rather than sigma_center + rel: when the origin
    // should coincide with an anchor coordinate the subtraction cancels
    // exactly and no rounding is introduced.
    Point::new(anchor.x + (rel.x - hw), anchor.y + (rel.y - hh))
}

/// Inverse of [`slider_origin`]: the slider angle of an origin lying on the
/// slider circumference (up to `tol` px). Returns the angle in `[0, 2*pi)`.
pub fn angle_of_origin<S: Scalar>(
    anchor: Point<S>,
    dims: (S, S),
    origin: Point<S>,
    tol: S,
) -> Result<S, GeometryError> {
    let two = S::of(2.0);
    let hw = dims.0 / two;
    let hh = dims.1 / two;
    let rel = Point::new(origin.x - (anchor.x - hw), origin.y - (anchor.y - hh));
    // Distance from the circumference: positive both inside and outside.
    let dx = rel.x.abs() - hw;
    let dy = rel.y.abs() - hh;
    let dist = if dx <= S::zero() && dy <= S::zero() {
        // Inside: distance to the nearest edge.
        (-dx).min(-dy)
    } else {
        // Outside: distance to the rectangle.
        let ox = dx.max(S::zero());
        let oy = dy.max(S::zero());
        (ox * ox + oy * oy).sqrt()
    };
    if dist > tol {
        return Err(GeometryError::OffCircumference {
            dist: dist.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    Ok(wrap_angle(rel.y.atan2(rel.x)))
}

/// Wraps any finite angle into `[0, 2*pi)`.
pub fn wrap_angle<S: Scalar>(phi: S) -> S {
    let tau = S::TAU();
    let r = phi % tau;
    if r < S::zero() {
        r + tau
    } else {
        r
    }
}

/// Area of the intersection of two rectangles. Touching edges or corners
/// produce zero overlap.
pub fn overlap_area<S: Scalar>(a: &Rect<S>, b: &Rect<S>) -> S {
    let w = a.x2().min(b.x2()) - a.x1().max(b.x1());
    let h = a.y2().min(b.y2()) - a.y1().max(b.y1());
    if w > S::zero() && h > S::zero() {
        w * h
    } else {
        S::zero()
    }
}

/// Depth of an anchor strictly inside a label: the smallest distance from the
/// point to the label boundary, 0 for points on or outside the boundary.
pub fn penetration_distance<S: Scalar>(label: &Rect<S>, anchor: Point<S>) -> S {
    if !label.contains_strict(anchor) {
        return S::zero();
    }
    (anchor.x - label.x1())
        .min(label.x2() - anchor.x)
        .min(anchor.y - label.y1())
        .min(label.y2() - anchor.y)
}

/// What a ray hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HitKind {
    /// The drawing-region boundary.
    Bound,
    /// Another agent's label.
    Label,
    /// A foreign anchor disc.
    Anchor,
}

/// One ray reading: signed normalized distance, what was hit, and how many
/// label interiors the ray pierces on its way to the drawing bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayReading<S> {
    /// Distance from the casting label's own boundary to the nearest hit,
    /// normalized by the drawing diagonal. Negative when the nearest obstacle
    /// point lies between the label center and its own boundary (overlap).
    pub distance: S,
    pub hit: HitKind,
    /// Pierced other-label count divided by the total label count.
    pub count: S,
    /// Pierced other-label area divided by the total label area.
    pub mass: S,
}

/// Static obstacle view for ray casting, built per agent: every *other*
/// label, every *foreign* anchor (the agent's own anchor always touches its
/// own boundary and would only add noise), and the drawing bound.
#[derive(Debug, Clone)]
pub struct RayScene<'a, S> {
    pub other_labels: &'a [Rect<S>],
    pub foreign_anchors: &'a [Point<S>],
    pub bound: Rect<S>,
    pub anchor_radius: S,
    /// Total number of labels in the scene, casting label included.
    pub label_count: usize,
    /// Total label area in the scene, casting label included.
    pub total_label_area: S,
}

/// Entry/exit parameters of the line `origin + t * dir` through a rectangle,
/// or `None` if it misses. `dir` need not be normalized but is unit-length at
/// all call sites, so parameters are Euclidean distances.
fn slab_interval<S: Scalar>(rect: &Rect<S>, origin: Point<S>, dir: Point<S>) -> Option<(S, S)> {
    let mut t0 = S::neg_infinity();
    let mut t1 = S::infinity();
    for (o, d, lo, hi) in [
        (origin.x, dir.x, rect.x1(), rect.x2()),
        (origin.y, dir.y, rect.y1(), rect.y2()),
    ] {
        if d == S::zero() {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let (a, b) = ((lo - o) / d, (hi - o) / d);
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// First intersection of the ray with a disc of radius `r` around `c`, under
/// solid-obstacle semantics: a ray starting inside the disc hits at t = 0.
fn disc_hit<S: Scalar>(c: Point<S>, r: S, origin: Point<S>, dir: Point<S>) -> Option<S> {
    let oc = origin.sub(c);
    let b = oc.x * dir.x + oc.y * dir.y;
    let q = oc.x * oc.x + oc.y * oc.y - r * r;
    if q <= S::zero() {
        return Some(S::zero()); // inside the disc
    }
    let disc = b * b - q;
    if disc < S::zero() {
        return None;
    }
    let t = -b - disc.sqrt();
    (t >= S::zero()).then_some(t)
}

/// Casts ray `direction_index` (of `n_rays` uniformly spaced directions,
/// ray 0 along +x, counterclockwise) from the center of `agent`.
///
/// Obstacles are solid: a ray that starts inside another label or anchor disc
/// hits it at zero range, which makes the reported distance `-t_own` (the
/// reading starts at the agent's own boundary). The drawing bound is a hollow
/// frame: from inside, the hit is the exit point; a ray starting beyond the
/// bound and pointing away reads the bound at zero range.
pub fn cast_ray<S: Scalar>(
    agent: &Rect<S>,
    direction_index: usize,
    n_rays: usize,
    scene: &RayScene<'_, S>,
) -> RayReading<S> {
    assert!(direction_index < n_rays, "ray index out of range");
    let theta = S::TAU() * S::of(direction_index as f64) / S::of(n_rays as f64);
    let dir = Point::new(theta.cos(), theta.sin());
    let origin = agent.center();

    // Distance from the center to the agent's own boundary along the ray.
    // The center is inside its own label, so the slab interval exists.
    let t_own = slab_interval(agent, origin, dir)
        .map(|(_, t1)| t1)
        .unwrap_or_else(S::zero);

    let t_bound = match slab_interval(&scene.bound, origin, dir) {
        Some((t0, t1)) if t1 >= S::zero() => {
            if t0 <= S::zero() {
                t1 // inside: exit point
            } else {
                t0 // outside, pointing back in: entry point
            }
        }
        _ => S::zero(), // outside and pointing away
    };

    let mut nearest = t_bound;
    let mut hit = HitKind::Bound;
    let mut count = 0usize;
    let mut mass = S::zero();

    for rect in scene.other_labels {
        if let Some((t0, t1)) = slab_interval(rect, origin, dir) {
            if t1 < S::zero() {
                continue;
            }
            let t_hit = if t0 > S::zero() { t0 } else { S::zero() };
            if t_hit < nearest {
                nearest = t_hit;
                hit = HitKind::Label;
            }
            // Interior crossing strictly before the bound.
            if t0.max(S::zero()) < t1.min(t_bound) {
                count += 1;
                mass += rect.area();
            }
        }
    }

    for &a in scene.foreign_anchors {
        if let Some(t) = disc_hit(a, scene.anchor_radius, origin, dir) {
            if t < nearest {
                nearest = t;
                hit = HitKind::Anchor;
            }
        }
    }

    let diag = scene.bound.diagonal();
    let labels = S::of(scene.label_count.max(1) as f64);
    let area_norm = if scene.total_label_area > S::zero() {
        scene.total_label_area
    } else {
        S::one()
    };
    RayReading {
        distance: (nearest - t_own) / diag,
        hit,
        count: S::of(count as f64) / labels,
        mass: mass / area_norm,
    }
}
