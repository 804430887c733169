//! Release acceptance suite: ten numbered end-to-end checks covering
//! geometry, gradients, advantage estimation, rewards, the benchmark
//! dataset, training, generalization, the greedy baselines, and model size.
//!
//! Each `cNN_*` test is one criterion and produces exactly one pass/fail
//! line in the harness output. Run with `--nocapture` to also see the
//! measured numbers behind each verdict. The training-backed checks (7, 8)
//! share a single training run and together take roughly twenty to thirty
//! minutes on one core; everything else finishes in well under a minute.

use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pointlabel_core::baselines::{pbl_solve, PblConfig, PblMode};
use pointlabel_core::benchmark::{
    audit, completeness, evaluate, generate_dataset, DatasetInstance, DatasetSpec, EvalRecord,
    Method, DEFAULT_DATASET_SEED,
};
use pointlabel_core::env::{
    self, generate_conflicted_instance, generate_instance, EnvConfig, EnvState, Instance,
};
use pointlabel_core::geometry::{
    angle_of_origin, cast_ray, overlap_area, penetration_distance, slider_origin, slider_rect,
    wrap_angle, Point, Rect, RayScene,
};
use pointlabel_core::infer::{policy_solve, random_policy_solve};
use pointlabel_core::net::{NetConfig, NetVariant, PolicyNet};
use pointlabel_core::obs::{observe_all, ObsConfig};
use pointlabel_core::seeding::mix_seed;
use pointlabel_core::trainer::{gae, train, IterStats, TrainConfig};
use pointlabel_core::Real;

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Shared configuration for the training-backed checks (criteria 7 and 8).
// ---------------------------------------------------------------------------

/// Master seed of the acceptance training run.
const TRAIN_SEED: u64 = 1;
/// Training schedule: iterations x transitions per iteration.
const TRAIN_ITERATIONS: usize = 150;
const TRAIN_BATCH: usize = 4096;
/// Wall-clock budget for the training run, in seconds. The stated budget is
/// one hour on an eight-core desktop; this suite enforces it on however few
/// cores the host offers, which is the stricter reading.
const TRAIN_BUDGET_SECS: f64 = 3600.0;

/// Criterion 7 evaluation: fresh two-agent instances with a guaranteed deep
/// conflict at reset (largest pairwise overlap at least half the smaller
/// label), solved within this horizon.
const C7_INSTANCES: usize = 500;
const C7_HORIZON: u32 = 100;
const C7_INSTANCE_SEED: u64 = 11;

/// Criterion 8 evaluation: benchmark compact instances, stochastic runs.
const C8_RUNS: usize = 10;
const C8_HORIZON: u32 = 500;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct Trained {
    net: PolicyNet<Real>,
    params: Vec<Real>,
    stats: Vec<IterStats>,
    wall_secs: f64,
}

static TRAINED: OnceLock<Trained> = OnceLock::new();

/// Trains the shared policy once; later callers reuse the result.
fn trained() -> &'static Trained {
    TRAINED.get_or_init(|| {
        let env_cfg = EnvConfig::<Real>::default();
        let obs_cfg = ObsConfig::<Real>::default();
        let net_cfg = NetConfig::<Real>::default();
        let train_cfg = TrainConfig {
            iterations: TRAIN_ITERATIONS,
            batch_size: TRAIN_BATCH,
            seed: TRAIN_SEED,
            ..TrainConfig::default()
        };
        let t0 = Instant::now();
        let result = train(&env_cfg, &obs_cfg, net_cfg, &train_cfg, |_, _| {})
            .expect("acceptance training run failed");
        Trained {
            net: result.net,
            params: result.params,
            stats: result.stats,
            wall_secs: t0.elapsed().as_secs_f64(),
        }
    })
}

// ---------------------------------------------------------------------------
// Small geometric helpers used by the oracles.
// ---------------------------------------------------------------------------

/// Distance from a point to the boundary (not the interior) of a rectangle.
fn boundary_distance(p: Point<f64>, r: &Rect<f64>) -> f64 {
    let inside_x = (p.x - r.x1()).min(r.x2() - p.x);
    let inside_y = (p.y - r.y1()).min(r.y2() - p.y);
    if inside_x >= 0.0 && inside_y >= 0.0 {
        inside_x.min(inside_y)
    } else {
        p.dist(r.nearest_point(p))
    }
}

/// Absolute angular distance on the circle.
fn wrap_dist(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// Rebuilds the final state of a solved episode and checks it for conflicts.
fn layout_is_conflict_free(cfg: &EnvConfig<Real>, inst: &Instance<Real>, origins: &[Point<Real>]) -> bool {
    let mut state = env::reset(cfg, inst).expect("reset");
    state.origins = origins.to_vec();
    env::is_conflict_free(&state)
}

// ---------------------------------------------------------------------------
// Criterion 1: geometry against independent oracles.
// ---------------------------------------------------------------------------

const GEO_CASES: u64 = 100_000;

/// Slider positions must land on the slider-rectangle circumference and keep
/// the anchor on the label boundary, to 1e-9 px.
fn geometry_circumference_suite() {
    (0..GEO_CASES).into_par_iter().for_each(|i| {
        let mut r = rng(mix_seed(&[0xC1A, i]));
        let anchor = Point::new(r.gen_range(0.0..600.0), r.gen_range(0.0..400.0));
        let dims = (r.gen_range(10.0..120.0), r.gen_range(5.0..40.0));
        let phi = if i % 16 == 0 {
            // Exercise the exact cardinal angles as well.
            (i / 16 % 4) as f64 * (PI / 2.0)
        } else {
            r.gen_range(0.0..TAU)
        };
        let origin = slider_origin(anchor, dims, phi);
        let sigma = slider_rect(anchor, dims);
        let d_sigma = boundary_distance(origin, &sigma);
        assert!(
            d_sigma <= 1e-9,
            "case {i}: origin {origin:?} off the slider circumference by {d_sigma:e}"
        );
        let label = Rect::new(origin, dims.0, dims.1);
        let d_label = boundary_distance(anchor, &label);
        assert!(
            d_label <= 1e-9,
            "case {i}: anchor {anchor:?} off its label boundary by {d_label:e}"
        );
    });
}

/// angle -> origin -> angle must return to the same circumference point.
fn geometry_round_trip_suite() {
    (0..GEO_CASES).into_par_iter().for_each(|i| {
        let mut r = rng(mix_seed(&[0xC1B, i]));
        let anchor = Point::new(r.gen_range(0.0..600.0), r.gen_range(0.0..400.0));
        let dims = (r.gen_range(10.0..120.0), r.gen_range(5.0..40.0));
        let phi = r.gen_range(0.0..TAU);
        let origin = slider_origin(anchor, dims, phi);
        let phi2 = angle_of_origin(anchor, dims, origin, 1e-6).expect("angle recovery");
        let origin2 = slider_origin(anchor, dims, phi2);
        assert!(
            wrap_dist(phi, phi2) <= 1e-9,
            "case {i}: angle round trip {phi} -> {phi2}"
        );
        assert!(
            origin.dist(origin2) <= 1e-9,
            "case {i}: origin round trip moved by {:e}",
            origin.dist(origin2)
        );
    });
}

/// Analytic overlap area versus counting 0.1 px pixel centers inside both
/// rectangles. The tolerance is the grid quantization bound: one cell row or
/// column of slack along each side of the intersection.
fn geometry_overlap_suite() {
    const CELL: f64 = 0.1;
    (0..GEO_CASES).into_par_iter().for_each(|i| {
        let mut r = rng(mix_seed(&[0xC1C, i]));
        let a: Rect<f64> = Rect::from_corner(
            r.gen_range(0.0..8.0),
            r.gen_range(0.0..8.0),
            r.gen_range(0.3..6.0),
            r.gen_range(0.3..6.0),
        );
        let b = match i % 4 {
            // Mostly nearby (frequent partial overlap)...
            0 | 1 => Rect::from_corner(
                a.x1() + r.gen_range(-4.0..4.0),
                a.y1() + r.gen_range(-4.0..4.0),
                r.gen_range(0.3..6.0),
                r.gen_range(0.3..6.0),
            ),
            // ...sometimes anywhere (often disjoint)...
            2 => Rect::from_corner(
                r.gen_range(0.0..16.0),
                r.gen_range(0.0..16.0),
                r.gen_range(0.3..6.0),
                r.gen_range(0.3..6.0),
            ),
            // ...and sometimes exactly edge-touching (zero area by contact).
            _ => Rect::from_corner(
                a.x2(),
                a.y1() + r.gen_range(-2.0..2.0),
                r.gen_range(0.3..6.0),
                r.gen_range(0.3..6.0),
            ),
        };
        let analytic = overlap_area(&a, &b);

        let xlo = a.x1().max(b.x1());
        let xhi = a.x2().min(b.x2());
        let ylo = a.y1().max(b.y1());
        let yhi = a.y2().min(b.y2());
        let (w, h) = ((xhi - xlo).max(0.0), (yhi - ylo).max(0.0));
        let mut cells = 0u64;
        if w > 0.0 && h > 0.0 {
            let ix0 = (xlo / CELL).floor() as i64 - 1;
            let ix1 = (xhi / CELL).ceil() as i64 + 1;
            let iy0 = (ylo / CELL).floor() as i64 - 1;
            let iy1 = (yhi / CELL).ceil() as i64 + 1;
            for ix in ix0..=ix1 {
                let cx = (ix as f64 + 0.5) * CELL;
                if cx <= xlo || cx >= xhi {
                    continue;
                }
                for iy in iy0..=iy1 {
                    let cy = (iy as f64 + 0.5) * CELL;
                    if cy > ylo && cy < yhi {
                        cells += 1;
                    }
                }
            }
        }
        let estimate = cells as f64 * CELL * CELL;
        let tol = CELL * (w + h) + 2.0 * CELL * CELL;
        assert!(
            (analytic - estimate).abs() <= tol,
            "case {i}: overlap {analytic} vs grid {estimate} (tol {tol})"
        );
    });
}

/// Analytic penetration depth versus a boundary-sampling oracle: ternary
/// search for the nearest point on each of the four edges.
fn geometry_penetration_suite() {
    (0..GEO_CASES).into_par_iter().for_each(|i| {
        let mut r = rng(mix_seed(&[0xC1D, i]));
        let label = Rect::from_corner(
            r.gen_range(0.0..500.0),
            r.gen_range(0.0..350.0),
            r.gen_range(5.0..90.0),
            r.gen_range(4.0..25.0),
        );
        let anchor = match i % 5 {
            // Mostly strictly inside...
            0 | 1 | 2 => Point::new(
                r.gen_range(label.x1()..label.x2()),
                r.gen_range(label.y1()..label.y2()),
            ),
            // ...sometimes in a ring around the label...
            3 => Point::new(
                r.gen_range(label.x1() - 5.0..label.x2() + 5.0),
                r.gen_range(label.y1() - 5.0..label.y2() + 5.0),
            ),
            // ...and sometimes exactly on the boundary.
            _ => Point::new(label.x1(), r.gen_range(label.y1()..label.y2())),
        };
        let analytic = penetration_distance(&label, anchor);
        if !label.contains_strict(anchor) {
            assert!(analytic == 0.0, "case {i}: outside point with depth {analytic}");
            return;
        }
        let corners = [
            Point::new(label.x1(), label.y1()),
            Point::new(label.x2(), label.y1()),
            Point::new(label.x2(), label.y2()),
            Point::new(label.x1(), label.y2()),
        ];
        let mut oracle = f64::INFINITY;
        for e in 0..4 {
            let (p0, p1) = (corners[e], corners[(e + 1) % 4]);
            // Distance along the edge is convex in the parameter: ternary
            // search converges to the edge minimum without any calculus.
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..100 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                let d1 = anchor.dist(lerp(p0, p1, m1));
                let d2 = anchor.dist(lerp(p0, p1, m2));
                if d1 < d2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            oracle = oracle.min(anchor.dist(lerp(p0, p1, (lo + hi) / 2.0)));
        }
        assert!(
            (analytic - oracle).abs() <= 1e-9,
            "case {i}: depth {analytic} vs boundary sampling {oracle}"
        );
    });
}

fn lerp(a: Point<f64>, b: Point<f64>, t: f64) -> Point<f64> {
    Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
}

/// Ray distances versus a segment-marching oracle: walk the ray in small
/// steps, bisect the first obstacle crossing, and compare the raw (un-
/// normalized) distance to 0.1 px.
fn geometry_ray_suite() {
    const STEP: f64 = 0.02;
    (0..GEO_CASES).into_par_iter().for_each(|i| {
        let mut r = rng(mix_seed(&[0xC1E, i]));
        let bound = Rect::from_corner(0.0, 0.0, 60.0, 45.0);
        let (aw, ah) = (r.gen_range(4.0..12.0), r.gen_range(2.0..6.0));
        let agent = Rect::from_corner(
            r.gen_range(1.0..60.0 - aw - 1.0),
            r.gen_range(1.0..45.0 - ah - 1.0),
            aw,
            ah,
        );
        let n_labels = r.gen_range(0..=4usize);
        let others: Vec<Rect<f64>> = (0..n_labels)
            .map(|_| {
                Rect::from_corner(
                    r.gen_range(-4.0..60.0),
                    r.gen_range(-4.0..45.0),
                    r.gen_range(3.0..12.0),
                    r.gen_range(2.0..6.0),
                )
            })
            .collect();
        let n_anchors = r.gen_range(0..=4usize);
        let anchors: Vec<Point<f64>> = (0..n_anchors)
            .map(|_| Point::new(r.gen_range(0.0..60.0), r.gen_range(0.0..45.0)))
            .collect();
        let radius = 2.0;
        let total_area = agent.area() + others.iter().map(|l| l.area()).sum::<f64>();
        let scene = RayScene {
            other_labels: &others,
            foreign_anchors: &anchors,
            bound,
            anchor_radius: radius,
            label_count: n_labels + 1,
            total_label_area: total_area,
        };
        let n_rays = [8usize, 16, 32][r.gen_range(0..3usize)];
        let idx = r.gen_range(0..n_rays);
        let reading = cast_ray(&agent, idx, n_rays, &scene);
        let analytic_raw = reading.distance * bound.diagonal();

        let theta = TAU * idx as f64 / n_rays as f64;
        let dir = Point::new(theta.cos(), theta.sin());
        let origin = agent.center();
        let at = |t: f64| Point::new(origin.x + t * dir.x, origin.y + t * dir.y);
        let obstacle = |t: f64| {
            let p = at(t);
            !bound.contains_closed(p)
                || others.iter().any(|l| l.contains_closed(p))
                || anchors.iter().any(|&a| p.dist(a) <= radius)
        };
        let own_exit = |t: f64| !agent.contains_closed(at(t));
        let t_max = bound.diagonal() + 8.0;
        let nearest = first_crossing(&obstacle, STEP, t_max)
            .expect("the bound exit guarantees an obstacle crossing");
        let t_own = first_crossing(&own_exit, STEP, t_max)
            .expect("the ray always leaves its own label");
        let oracle_raw = nearest - t_own;
        assert!(
            (analytic_raw - oracle_raw).abs() <= 0.1,
            "case {i}: ray {idx}/{n_rays} raw distance {analytic_raw} vs marching {oracle_raw}"
        );
    });
}

/// First parameter where `pred` flips to true, marching then bisecting.
fn first_crossing(pred: &dyn Fn(f64) -> bool, step: f64, t_max: f64) -> Option<f64> {
    if pred(0.0) {
        return Some(0.0);
    }
    let mut t = step;
    while t <= t_max {
        if pred(t) {
            let (mut lo, mut hi) = (t - step, t);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if pred(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        t += step;
    }
    None
}

#[test]
fn c01_geometry_matches_independent_oracles() {
    let t0 = Instant::now();
    geometry_circumference_suite();
    geometry_round_trip_suite();
    geometry_overlap_suite();
    geometry_penetration_suite();
    geometry_ray_suite();
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 120.0, "geometry suite took {secs:.1}s (budget 120s)");
    println!(
        "criterion 01 PASS: 5 x {GEO_CASES} geometry cases match their oracles ({secs:.1}s)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: analytic gradients against central finite differences.
// ---------------------------------------------------------------------------

const FD_H: f64 = 1e-4;
const FD_REL_TOL: f64 = 1e-3;
const FD_ROWS: usize = 10;

/// Builds a 10-row observation batch: realistic rows from rolled-out
/// environment states plus synthetic uniform rows for coverage.
fn fd_obs_batch(obs_cfg: &ObsConfig<Real>, seed: u64) -> Array2<Real> {
    let env_cfg = EnvConfig { agents: (2, 3), ..EnvConfig::default() };
    let mut r = rng(seed);
    let mut rows: Vec<Vec<Real>> = Vec::new();
    while rows.len() < FD_ROWS / 2 {
        let inst = generate_instance(&env_cfg, &mut r);
        let mut state = env::reset(&env_cfg, &inst).expect("reset");
        for _ in 0..2 {
            if state.done {
                break;
            }
            let actions: Vec<Real> =
                (0..inst.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
            let _ = env::step(&env_cfg, &mut state, &actions);
        }
        for o in observe_all(&env_cfg, &state, obs_cfg) {
            rows.push(o.data);
        }
    }
    rows.truncate(FD_ROWS / 2);
    let width = rows[0].len();
    while rows.len() < FD_ROWS {
        rows.push((0..width).map(|_| r.gen_range(-1.0..1.0)).collect());
    }
    let flat: Vec<Real> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((FD_ROWS, width), flat).expect("batch shape")
}

/// Checks d(loss)/d(param) for the given parameter indices, where the loss
/// is a fixed random projection of all three network outputs.
fn check_gradients(
    net: &PolicyNet<Real>,
    params: &[Real],
    batch: &Array2<Real>,
    indices: &[usize],
    label: &str,
) {
    let mut r = rng(mix_seed(&[0xC2C, params.len() as u64]));
    let c_mu = Array1::from_iter((0..FD_ROWS).map(|_| r.gen_range(-1.0..1.0)));
    let c_ls = Array1::from_iter((0..FD_ROWS).map(|_| r.gen_range(-1.0..1.0)));
    let c_v = Array1::from_iter((0..FD_ROWS).map(|_| r.gen_range(-1.0..1.0)));
    let pass = net.forward(params, batch.view()).expect("forward");
    let analytic = net.backward(params, &pass, c_mu.view(), c_ls.view(), c_v.view());
    let loss = |p: &[Real]| -> f64 {
        let f = net.forward(p, batch.view()).expect("forward");
        let mut l = 0.0;
        for row in 0..FD_ROWS {
            l += c_mu[row] * f.mu[row] + c_ls[row] * f.log_sigma[row] + c_v[row] * f.value_out[row];
        }
        l
    };
    indices.par_chunks(64).for_each(|chunk| {
        let mut p = params.to_vec();
        for &idx in chunk {
            let saved = p[idx];
            p[idx] = saved + FD_H;
            let up = loss(&p);
            p[idx] = saved - FD_H;
            let down = loss(&p);
            p[idx] = saved;
            let numeric = (up - down) / (2.0 * FD_H);
            let a = analytic[idx];
            let denom = a.abs().max(numeric.abs());
            if denom > 1e-8 {
                let rel = (a - numeric).abs() / denom;
                assert!(
                    rel <= FD_REL_TOL,
                    "{label}: param {idx} ({}) analytic {a:e} vs numeric {numeric:e} (rel {rel:e})",
                    tensor_of(net, idx)
                );
            }
        }
    });
}

/// Human-readable tensor name owning a flat parameter index.
fn tensor_of(net: &PolicyNet<Real>, idx: usize) -> String {
    let layout = net.layout();
    for (t, spec) in layout.tensors.iter().enumerate() {
        let o = layout.offset(t);
        if idx >= o && idx < o + spec.len() {
            return format!("{}[{}]", spec.name, idx - o);
        }
    }
    "?".into()
}

#[test]
fn c02_policy_gradients_match_finite_differences() {
    let t0 = Instant::now();
    // Exhaustive sweep: every parameter of every variant at reduced widths.
    // The full-width networks are too large for an exhaustive sweep inside
    // the runtime budget on small machines, so they get a stratified random
    // sample instead (every tensor represented); the analytic backward pass
    // is width-independent code, so the reduced sweep exercises every code
    // path while the sampled sweep pins the production sizes.
    let reduced_obs = ObsConfig { n_rays: 8, ..ObsConfig::default() };
    let reduced_batch = fd_obs_batch(&reduced_obs, 0xC2B);
    let mut swept = 0usize;
    for variant in NetVariant::ALL {
        let cfg = NetConfig {
            variant,
            filters: 3,
            kernel: 3,
            self_embed: 6,
            map_embed: 10,
            shared: 8,
            trunk_widths: vec![10, 8],
            head_widths: vec![8, 6],
            ..NetConfig::default()
        };
        let net = PolicyNet::new(cfg, &reduced_obs).expect("reduced net");
        let params = net.init_params(&mut rng(mix_seed(&[0xC2D, variant as u64])));
        let all: Vec<usize> = (0..params.len()).collect();
        check_gradients(&net, &params, &reduced_batch, &all, &format!("{variant:?}/reduced"));
        swept += params.len();
    }

    let full_obs = ObsConfig::<Real>::default();
    let full_batch = fd_obs_batch(&full_obs, 0xC2E);
    let mut sampled = 0usize;
    for variant in NetVariant::ALL {
        let cfg = NetConfig { variant, ..NetConfig::default() };
        let net = PolicyNet::new(cfg, &full_obs).expect("full net");
        let params = net.init_params(&mut rng(mix_seed(&[0xC2F, variant as u64])));
        let layout = net.layout().clone();
        let total = params.len();
        let mut indices = Vec::new();
        let mut pick = rng(mix_seed(&[0xC30, variant as u64]));
        for (t, spec) in layout.tensors.iter().enumerate() {
            let want = (300 * spec.len() / total).max(2).min(spec.len());
            let o = layout.offset(t);
            for _ in 0..want {
                indices.push(o + pick.gen_range(0..spec.len()));
            }
        }
        check_gradients(&net, &params, &full_batch, &indices, &format!("{variant:?}/full"));
        sampled += indices.len();
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 300.0, "gradient check took {secs:.1}s (budget 300s)");
    println!(
        "criterion 02 PASS: {swept} reduced-width params exhaustively + {sampled} full-width \
         samples match finite differences ({secs:.1}s)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: advantage recursion against the summed definition.
// ---------------------------------------------------------------------------

#[test]
fn c03_gae_recursion_matches_brute_force_definition() {
    let mut r = rng(0xC3);
    for episode in 0..1000 {
        let n = r.gen_range(1..=20usize);
        let rewards: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let values: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let gamma: f64 = r.gen_range(0.0..1.0);
        let lambda: f64 = r.gen_range(0.0..1.0);
        let (adv, targets) = gae::advantages(&rewards, &values, gamma, lambda);
        for t in 0..n {
            let mut brute = 0.0;
            let mut weight = 1.0;
            for l in 0..(n - t) {
                let next = if t + l + 1 < n { values[t + l + 1] } else { 0.0 };
                let delta = rewards[t + l] + gamma * next - values[t + l];
                brute += weight * delta;
                weight *= gamma * lambda;
            }
            assert!(
                (adv[t] - brute).abs() <= 1e-9,
                "episode {episode} t={t}: recursive {} vs brute {brute}",
                adv[t]
            );
            assert!(
                (targets[t] - (brute + values[t])).abs() <= 1e-9,
                "episode {episode} t={t}: target mismatch"
            );
        }
    }
    println!("criterion 03 PASS: 1000 random episodes, recursion == summed definition to 1e-9");
}

// ---------------------------------------------------------------------------
// Criterion 4: reward identities on random states.
// ---------------------------------------------------------------------------

#[test]
fn c04_reward_identities_hold_on_random_states() {
    let mut r = rng(0xC4);
    let mut with_overlap = 0usize;
    let mut without_overlap = 0usize;
    for case in 0..10_000 {
        // Alternate between crowded and spacious drawings so both sides of
        // the zero-reward equivalence get real coverage.
        let cfg = if case % 2 == 0 {
            EnvConfig { agents: (2, 6), ..EnvConfig::default() }
        } else {
            EnvConfig {
                drawing: (6000.0, 4000.0),
                agents: (1, 4),
                label_w_frac: (0.01, 0.015),
                label_h_frac: 0.005,
                ..EnvConfig::default()
            }
        };
        let inst = generate_instance(&cfg, &mut r);
        let origins: Vec<Point<Real>> = inst
            .anchors
            .iter()
            .map(|a| slider_origin(a.pos, a.dims(), r.gen_range(0.0..TAU)))
            .collect();
        let n = inst.len();
        let state = EnvState {
            instance: inst,
            origins: origins.clone(),
            prev_origins: origins,
            traveled: vec![0.0; n],
            step: r.gen_range(0..100),
            horizon: 100,
            done: false,
        };
        let rewards = env::compute_rewards(&cfg, &state);

        let sum = rewards.local.iter().fold(0.0, |acc, &x| acc + x);
        assert!(
            rewards.global == sum,
            "case {case}: global {} != sum of locals {}",
            rewards.global,
            sum
        );
        let w = cfg.local_weight;
        for i in 0..n {
            let expect = (1.0 - w) * rewards.global + w * rewards.local[i];
            assert!(
                (rewards.total[i] - expect).abs() <= 1e-12,
                "case {case}: agent {i} total {} vs mixed {}",
                rewards.total[i],
                expect
            );
        }
        let labels = state.labels();
        let mut any_overlap = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if overlap_area(&labels[i], &labels[j]) > 0.0 {
                    any_overlap = true;
                }
            }
        }
        let all_zero = rewards.local.iter().all(|&x| x == 0.0)
            && rewards.global == 0.0
            && rewards.total.iter().all(|&x| x == 0.0);
        assert!(
            all_zero == !any_overlap,
            "case {case}: zero-reward {all_zero} but overlap present {any_overlap}"
        );
        if any_overlap {
            with_overlap += 1;
        } else {
            without_overlap += 1;
        }
    }
    assert!(with_overlap >= 100 && without_overlap >= 100, "coverage too one-sided");
    println!(
        "criterion 04 PASS: 10000 states ({with_overlap} overlapping / {without_overlap} clean), \
         global == sum(local) exactly, totals within 1e-12, zero iff no overlap"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: dataset shape and bit-exact regeneration.
// ---------------------------------------------------------------------------

#[test]
fn c05_dataset_reproduces_exact_totals_and_bytes() {
    let spec = DatasetSpec::<Real>::default();
    assert_eq!(spec.total_instances(), 210);
    assert_eq!(spec.total_anchors(), 41_250);
    let d1 = generate_dataset(&spec, DEFAULT_DATASET_SEED);
    assert_eq!(d1.len(), 210);
    let anchors: usize = d1.iter().map(|d| d.instance.len()).sum();
    assert_eq!(anchors, 41_250);
    for d in &d1 {
        assert_eq!(d.instance.len(), d.count, "instance {}/{} count mismatch", d.part, d.index);
        for a in &d.instance.anchors {
            let text = a.text.as_deref().expect("dataset labels carry text");
            assert!(
                (3..=7).contains(&text.len()) && text.bytes().all(|b| b.is_ascii_uppercase()),
                "bad label text {text:?}"
            );
        }
    }
    let d2 = generate_dataset(&spec, DEFAULT_DATASET_SEED);
    let b1 = serde_json::to_vec(&d1).expect("serialize");
    let b2 = serde_json::to_vec(&d2).expect("serialize");
    assert!(b1 == b2, "same seed produced different bytes");
    let d3 = generate_dataset(&spec, DEFAULT_DATASET_SEED + 1);
    assert!(
        serde_json::to_vec(&d3).expect("serialize") != b1,
        "different seed produced identical bytes"
    );
    println!(
        "criterion 05 PASS: 210 instances / 41250 anchors, regeneration byte-identical \
         ({} bytes)",
        b1.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: completeness metric worked example.
// ---------------------------------------------------------------------------

#[test]
fn c06_completeness_matches_worked_example() {
    let records = |method: &str, complete_of_ten: usize| -> Vec<EvalRecord> {
        (0..10)
            .map(|i| EvalRecord {
                method: method.to_string(),
                part: "compact".into(),
                count: 10,
                index: i,
                run: 0,
                complete: i < complete_of_ten,
                placed: 10,
                audit_ok: i < complete_of_ten,
                steps: 0,
                wall_ms: 0.0,
            })
            .collect()
    };
    let m1 = completeness(&records("m1", 8)).expect("m1");
    let m2 = completeness(&records("m2", 9)).expect("m2");
    let none = completeness(&records("m3", 0)).expect("m3");
    assert!(m1 == 80.0, "8 of 10 complete gave {m1}");
    assert!(m2 == 90.0, "9 of 10 complete gave {m2}");
    assert!(none == 0.0, "0 of 10 complete gave {none}");
    assert!(completeness(&[]).is_err(), "empty record set must be an error");
    println!("criterion 06 PASS: 8/10 -> 80% and 9/10 -> 90% exactly");
}

// ---------------------------------------------------------------------------
// Criterion 7: desk-scale training beats the untrained policy.
// ---------------------------------------------------------------------------

#[test]
fn c07_desk_scale_training_beats_untrained_policy() {
    let tr = trained();
    assert!(
        tr.wall_secs < TRAIN_BUDGET_SECS,
        "training took {:.0}s (budget {TRAIN_BUDGET_SECS}s)",
        tr.wall_secs
    );

    // Fresh two-agent instances, every one starting in a deep conflict so an
    // idle policy cannot score.
    let cfg2 = EnvConfig { agents: (2, 2), ..EnvConfig::default() };
    let mut r = rng(C7_INSTANCE_SEED);
    let instances: Vec<Instance<Real>> = (0..C7_INSTANCES)
        .map(|_| generate_conflicted_instance(&cfg2, 0.5, &mut r).expect("conflicted instance"))
        .collect();
    let obs_cfg = ObsConfig::<Real>::default();
    let net_cfg = NetConfig::<Real>::default();

    let trained_solved: usize = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let layout = policy_solve(
                &cfg2,
                &obs_cfg,
                &tr.net,
                &tr.params,
                inst,
                C7_HORIZON,
                mix_seed(&[0xC7, 1, i as u64]),
            )
            .expect("trained solve");
            layout_is_conflict_free(&cfg2, inst, &layout.origins) as usize
        })
        .sum();
    let untrained_solved: usize = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let layout = random_policy_solve(
                &cfg2,
                &obs_cfg,
                &net_cfg,
                inst,
                C7_HORIZON,
                mix_seed(&[0xC7, 2, i as u64]),
            )
            .expect("untrained solve");
            layout_is_conflict_free(&cfg2, inst, &layout.origins) as usize
        })
        .sum();
    let trained_rate = trained_solved as f64 / C7_INSTANCES as f64;
    let untrained_rate = untrained_solved as f64 / C7_INSTANCES as f64;
    assert!(
        trained_rate >= 0.85,
        "trained conflict-free rate {:.1}% below 85%",
        100.0 * trained_rate
    );
    assert!(
        untrained_rate <= 0.50,
        "untrained conflict-free rate {:.1}% above 50%",
        100.0 * untrained_rate
    );

    // The reward curve, block-averaged for smoothing, must not decrease over
    // the final two thirds of training.
    let rewards: Vec<f64> = tr.stats.iter().map(|s| s.reward_mean).collect();
    let tail = &rewards[rewards.len() / 3..];
    let block = tail.len() / 4;
    let means: Vec<f64> = (0..4)
        .map(|b| {
            let lo = b * block;
            let hi = if b == 3 { tail.len() } else { (b + 1) * block };
            tail[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    for b in 1..means.len() {
        assert!(
            means[b] >= means[b - 1] - 0.01,
            "smoothed reward dropped in the final two thirds: {means:?}"
        );
    }
    println!(
        "criterion 07 PASS: trained {:.1}% vs untrained {:.1}% on {C7_INSTANCES} conflicted \
         instances (T={C7_HORIZON}); training {:.0}s; smoothed rewards {means:?}",
        100.0 * trained_rate,
        100.0 * untrained_rate,
        tr.wall_secs
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: generalization across anchor counts.
// ---------------------------------------------------------------------------

#[test]
fn c08_trained_policy_generalizes_across_anchor_counts() {
    let tr = trained();
    let dataset = generate_dataset(&DatasetSpec::<Real>::default(), DEFAULT_DATASET_SEED);
    let env_cfg = EnvConfig::<Real>::default();
    let obs_cfg = ObsConfig::<Real>::default();
    let small: Vec<DatasetInstance<Real>> = dataset
        .iter()
        .filter(|d| d.part == "compact" && d.count <= 20)
        .cloned()
        .collect();
    let trained_method =
        Method::Trained { net_cfg: NetConfig::default(), params: tr.params.clone() };
    let random_method = Method::Random { net_cfg: NetConfig::default() };
    let rec_t = evaluate(&env_cfg, &obs_cfg, &small, &trained_method, C8_RUNS, C8_HORIZON, 0xC8A)
        .expect("trained evaluation");
    let rec_r = evaluate(&env_cfg, &obs_cfg, &small, &random_method, C8_RUNS, C8_HORIZON, 0xC8B)
        .expect("untrained evaluation");
    let mut lines = Vec::new();
    for count in [5usize, 10, 15, 20] {
        let ct = completeness(
            &rec_t.iter().filter(|r| r.count == count).cloned().collect::<Vec<_>>(),
        )
        .expect("trained completeness");
        let cr = completeness(
            &rec_r.iter().filter(|r| r.count == count).cloned().collect::<Vec<_>>(),
        )
        .expect("untrained completeness");
        let gap = ct - cr;
        assert!(
            gap >= 30.0,
            "count {count}: trained {ct:.1}% vs untrained {cr:.1}% (gap {gap:.1}pp < 30pp)"
        );
        lines.push(format!("{count}: {ct:.0}%/{cr:.0}% (+{gap:.0}pp)"));
    }

    // Beyond thirty anchors the untrained policy stops finishing at all: its
    // episodes must run into the horizon.
    let big: Vec<DatasetInstance<Real>> = dataset
        .iter()
        .filter(|d| d.part == "compact" && [30usize, 40, 50].contains(&d.count))
        .cloned()
        .collect();
    let rec_big = evaluate(&env_cfg, &obs_cfg, &big, &random_method, 1, C8_HORIZON, 0xC8C)
        .expect("saturation evaluation");
    for count in [30usize, 40, 50] {
        let recs: Vec<&EvalRecord> = rec_big.iter().filter(|r| r.count == count).collect();
        let at_horizon =
            recs.iter().filter(|r| r.steps as u32 == C8_HORIZON).count() as f64 / recs.len() as f64;
        assert!(
            at_horizon >= 0.8,
            "count {count}: only {:.0}% of untrained episodes reached the horizon",
            100.0 * at_horizon
        );
    }
    println!(
        "criterion 08 PASS: trained/untrained completeness {} over {C8_RUNS} runs; untrained \
         episodes saturate the horizon at counts 30/40/50",
        lines.join(", ")
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: greedy baselines are audit-clean and deterministic.
// ---------------------------------------------------------------------------

#[test]
fn c09_greedy_baselines_are_audit_clean_and_deterministic() {
    let t0 = Instant::now();
    let dataset = generate_dataset(&DatasetSpec::<Real>::default(), DEFAULT_DATASET_SEED);
    let cfg_a = PblConfig { mode: PblMode::Adjacent, ..PblConfig::default() };
    let cfg_ad = PblConfig { mode: PblMode::AdjacentDistant, ..PblConfig::default() };
    let outcomes: Vec<(bool, bool, bool)> = dataset
        .par_iter()
        .map(|d| {
            let a1 = pbl_solve(&d.instance, &cfg_a).expect("adjacent solve");
            let a2 = pbl_solve(&d.instance, &cfg_a).expect("adjacent solve");
            let ad1 = pbl_solve(&d.instance, &cfg_ad).expect("adjacent+distant solve");
            let ad2 = pbl_solve(&d.instance, &cfg_ad).expect("adjacent+distant solve");
            let bytes = |l| serde_json::to_vec(l).expect("layout bytes");
            assert!(
                bytes(&a1) == bytes(&a2) && bytes(&ad1) == bytes(&ad2),
                "{}/{} count {}: repeated runs differ",
                d.part,
                d.index,
                d.count
            );
            let a_audit = audit(&d.instance, &a1);
            assert!(a_audit, "{}/{} count {}: adjacent layout fails audit", d.part, d.index, d.count);
            let a_complete = a_audit && a1.placed_count() == d.instance.len();
            let ad_complete =
                audit(&d.instance, &ad1) && ad1.placed_count() == d.instance.len();
            assert!(
                ad_complete || !a_complete,
                "{}/{} count {}: adjacent complete but adjacent+distant not",
                d.part,
                d.index,
                d.count
            );
            (a_complete, ad_complete, a_audit)
        })
        .collect();
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 60.0, "baseline pass took {secs:.1}s (budget 60s)");
    let a_total = outcomes.iter().filter(|o| o.0).count();
    let ad_total = outcomes.iter().filter(|o| o.1).count();
    println!(
        "criterion 09 PASS: 210 instances audit-clean and bit-deterministic; complete layouts \
         adjacent {a_total} <= adjacent+distant {ad_total} ({secs:.1}s)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: parameter-count band.
// ---------------------------------------------------------------------------

#[test]
fn c10_conv_parameter_count_sits_in_band() {
    let obs_cfg = ObsConfig::<Real>::default();
    let conv = PolicyNet::new(NetConfig::default(), &obs_cfg).expect("conv net");
    let n_conv = conv.param_count();
    assert!(
        (300_000..=500_000).contains(&n_conv),
        "conv variant has {n_conv} parameters (expected 300k..=500k)"
    );
    let baseline = PolicyNet::new(
        NetConfig { variant: NetVariant::Baseline, ..NetConfig::default() },
        &obs_cfg,
    )
    .expect("baseline net");
    let n_base = baseline.param_count();
    assert!(
        n_base < n_conv,
        "baseline ({n_base}) must be smaller than conv ({n_conv})"
    );
    println!("criterion 10 PASS: conv {n_conv} params in [300000, 500000], baseline {n_base} < conv");
}
