//! Predefined configuration grids for the two ablation studies: network
//! architecture variants and observation-content sets.

use thiserror::Error;

use crate::net::{NetConfig, NetVariant};
use crate::obs::{MapChannel, ObsConfig, SelfModality, ALL_MAP_CHANNELS, ALL_SELF_MODALITIES};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum AblateError {
    #[error("observation set {set} is out of range 1..={max}")]
    UnknownSet { set: usize, max: usize },
    #[error("observation set {set} ({label}) replaces the ray sensor with origin/size scalars, which this implementation does not support")]
    UnsupportedSet { set: usize, label: String },
}

/// The architecture grid: every network variant under otherwise default
/// settings, labeled by its variant name.
pub fn architecture_grid<S: Scalar>() -> Vec<(String, NetConfig<S>)> {
    NetVariant::ALL
        .iter()
        .map(|&variant| {
            let cfg = NetConfig::<S> { variant, ..NetConfig::default() };
            (format!("{variant:?}"), cfg)
        })
        .collect()
}

pub const OBSERVATION_SETS: usize = 30;

const D: MapChannel = MapChannel::Distance;
const T: MapChannel = MapChannel::HitType;
const C: MapChannel = MapChannel::Count;
const M: MapChannel = MapChannel::Mass;

const SO: SelfModality = SelfModality::Overlap;
const SD: SelfModality = SelfModality::Displacement;
const SPEN: SelfModality = SelfModality::Penetration;
const SREL: SelfModality = SelfModality::AnchorRelative;
const SDIST: SelfModality = SelfModality::AnchorDistance;
const ST: SelfModality = SelfModality::Time;

fn cfg<S: Scalar>(rays: usize, map: &[MapChannel], selfm: &[SelfModality]) -> ObsConfig<S> {
    ObsConfig {
        n_rays: rays,
        map_channels: map.to_vec(),
        self_modalities: selfm.to_vec(),
        ..ObsConfig::default()
    }
}

fn unsupported_label(set: usize) -> Option<&'static str> {
    match set {
        7 => Some("M[Or Si] S[O Ape Apr Ad T]"),
        17 => Some("M[Or Si] S[O D Ape Apr Ad T]"),
        29 => Some("M[Or Si] S[O]"),
        _ => None,
    }
}

/// Human-readable label of one observation set, e.g.
/// `M032[d c m] S[O Ape Apr Ad T]`.
pub fn observation_set_label(set: usize) -> String {
    fn map_tag(ch: &[MapChannel]) -> String {
        ch.iter()
            .map(|c| match c {
                MapChannel::Distance => "d",
                MapChannel::HitType => "t",
                MapChannel::Count => "c",
                MapChannel::Mass => "m",
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
    fn self_tag(sm: &[SelfModality]) -> String {
        sm.iter()
            .map(|s| match s {
                SelfModality::Overlap => "O",
                SelfModality::Displacement => "D",
                SelfModality::Penetration => "Ape",
                SelfModality::AnchorRelative => "Apr",
                SelfModality::AnchorDistance => "Ad",
                SelfModality::Time => "T",
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
    if let Some(s) = unsupported_label(set) {
        return s.to_string();
    }
    match observation_set::<f64>(set) {
        Ok(c) => format!(
            "M{:03}[{}] S[{}]",
            c.n_rays,
            map_tag(&c.map_channels),
            self_tag(&c.self_modalities)
        ),
        Err(_) => format!("set {set}"),
    }
}

/// The observation-content grid, sets 1..=30. Three sets describe an
/// alternative sensor (anchor origin/size scalars instead of rays) that is
/// not implemented; those return [`AblateError::UnsupportedSet`].
pub fn observation_set<S: Scalar>(set: usize) -> Result<ObsConfig<S>, AblateError> {
    let base_self: &[SelfModality] = &[SO, SPEN, SREL, SDIST, ST];
    let full_self: &[SelfModality] = &ALL_SELF_MODALITIES;
    let base_map: &[MapChannel] = &[D, C, M];
    let full_map: &[MapChannel] = &ALL_MAP_CHANNELS;
    let out = match set {
        // Ray-count sweep around the lean map encoding.
        1 => cfg(8, base_map, base_self),
        2 => cfg(16, base_map, base_self),
        3 => cfg(32, base_map, base_self),
        4 => cfg(64, base_map, base_self),
        5 => cfg(128, base_map, base_self),
        // The lean encoding itself (same as set 3 at the default ray count).
        6 => cfg(32, base_map, base_self),
        7 | 17 | 29 => {
            return Err(AblateError::UnsupportedSet {
                set,
                label: unsupported_label(set).expect("static label").to_string(),
            })
        }
        // Drop one self modality from the lean encoding.
        8 => cfg(32, base_map, &[SPEN, SREL, SDIST, ST]),
        9 => cfg(32, base_map, &[SO, SREL, SDIST, ST]),
        10 => cfg(32, base_map, &[SO, SPEN, SDIST, ST]),
        11 => cfg(32, base_map, &[SO, SPEN, SREL, ST]),
        12 => cfg(32, base_map, &[SO, SPEN, SREL, SDIST]),
        // Drop one map channel from the lean encoding.
        13 => cfg(32, &[C, M], base_self),
        14 => cfg(32, &[D, M], base_self),
        15 => cfg(32, &[D, C], base_self),
        // The full encoding and its one-out variants.
        16 => cfg(32, full_map, full_self),
        18 => cfg(32, full_map, &[SD, SPEN, SREL, SDIST, ST]),
        19 => cfg(32, full_map, &[SO, SPEN, SREL, SDIST, ST]),
        20 => cfg(32, full_map, &[SO, SD, SREL, SDIST, ST]),
        21 => cfg(32, full_map, &[SO, SD, SPEN, SDIST, ST]),
        22 => cfg(32, full_map, &[SO, SD, SPEN, SREL, ST]),
        23 => cfg(32, full_map, &[SO, SD, SPEN, SREL, SDIST]),
        24 => cfg(32, &[T, C, M], full_self),
        25 => cfg(32, &[D, C, M], full_self),
        26 => cfg(32, &[D, T, M], full_self),
        27 => cfg(32, &[D, T, C], full_self),
        // Minimal self vector, with and without the ray sensor.
        28 => cfg(32, full_map, &[SO]),
        30 => cfg(32, &[], &[SO]),
        _ => return Err(AblateError::UnknownSet { set, max: OBSERVATION_SETS }),
    };
    Ok(out)
}
