//! Point-feature label placement toolkit.
//!
//! The crate builds up from pure slider-model geometry to a multi-agent
//! labeling environment, ray-based observations, a Gaussian policy network
//! with hand-written forward/backward passes, a PPO trainer with generalized
//! advantage estimation, greedy position-based baselines, and a reproducible
//! benchmark harness with SVG rendering and binary checkpoints.
//!
//! All numeric code is generic over the scalar type via [`scalar::Scalar`]
//! (implemented for `f32`/`f64`); [`Real`] is the concrete default used by
//! the command-line pipeline.

pub mod ablate;
pub mod baselines;
pub mod benchmark;
pub mod env;
pub mod geometry;
pub mod infer;
pub mod io;
pub mod layout;
pub mod net;
pub mod obs;
pub mod render;
pub mod scalar;
pub mod seeding;
pub mod trainer;

pub use scalar::Scalar;

/// Default concrete scalar for the toolkit pipeline.
pub type Real = f64;
