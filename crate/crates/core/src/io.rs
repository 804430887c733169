//! File formats: instance and layout JSON, record and stats JSONL, and the
//! binary policy checkpoint.
//!
//! Checkpoint layout: an 8-byte magic string, a little-endian u32 format
//! version, a little-endian u32 header length, a JSON header (network,
//! observation and environment configuration, the named tensor manifest,
//! iteration counter, and seed), then every parameter as a little-endian
//! 32-bit float in manifest order.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvConfig, EnvError, Instance};
use crate::layout::Layout;
use crate::net::{NetConfig, NetError, PolicyNet, TensorSpec};
use crate::obs::ObsConfig;
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PTLBLCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {got} (expected {want})")]
    UnsupportedVersion { got: u32, want: u32 },
    #[error("checkpoint file is truncated")]
    Truncated,
    #[error("parameter payload holds {got} values but the manifest declares {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("checkpoint shape mismatch: {detail}")]
    ShapeMismatch { detail: String },
}

/// Everything a checkpoint stores besides the raw parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CheckpointHeader<S: Scalar> {
    pub net: NetConfig<S>,
    pub obs: ObsConfig<S>,
    pub env: EnvConfig<S>,
    pub manifest: Vec<TensorSpec>,
    /// Training iterations completed when the checkpoint was written.
    pub iteration: usize,
    /// Master seed of the producing run.
    pub seed: u64,
}

impl<S: Scalar> CheckpointHeader<S> {
    pub fn manifest_total(&self) -> usize {
        self.manifest.iter().map(TensorSpec::len).sum()
    }

    /// Rebuilds the policy network this checkpoint parameterizes and
    /// verifies the stored manifest matches it tensor by tensor.
    pub fn build_net(&self) -> Result<PolicyNet<S>, IoError> {
        let net = PolicyNet::new(self.net.clone(), &self.obs)?;
        let built = &net.layout().tensors;
        if built != &self.manifest {
            return Err(IoError::ShapeMismatch {
                detail: format!(
                    "stored manifest has {} tensors totalling {}, configuration rebuilds {} tensors totalling {}",
                    self.manifest.len(),
                    self.manifest_total(),
                    built.len(),
                    built.iter().map(TensorSpec::len).sum::<usize>()
                ),
            });
        }
        Ok(net)
    }

    /// Checks the checkpoint was produced for observations of the given
    /// length (guards against evaluating with a different observation
    /// configuration than the policy was trained on).
    pub fn ensure_obs_len(&self, expected: usize) -> Result<(), IoError> {
        let got = self.obs.obs_len();
        if got != expected {
            return Err(IoError::ShapeMismatch {
                detail: format!(
                    "checkpoint expects observations of length {got}, caller supplies {expected}"
                ),
            });
        }
        Ok(())
    }
}

/// Writes a checkpoint. Parameters are rounded to 32-bit floats; loading
/// the file back therefore reproduces them only at 32-bit precision, and a
/// save/load round trip after one such rounding is bit-exact.
pub fn save_checkpoint<S: Scalar>(
    path: &Path,
    header: &CheckpointHeader<S>,
    params: &[S],
) -> Result<(), IoError> {
    let want = header.manifest_total();
    if params.len() != want {
        return Err(IoError::LengthMismatch { got: params.len(), want });
    }
    let header_json = serde_json::to_vec(header)?;
    let mut buf =
        Vec::with_capacity(16 + header_json.len() + 4 * params.len());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for p in params {
        buf.extend_from_slice(&(p.to_f64_lossy() as f32).to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Reads a checkpoint back and verifies magic, version, payload length,
/// and that the stored manifest matches the network the stored
/// configuration builds.
pub fn load_checkpoint<S: Scalar>(
    path: &Path,
) -> Result<(CheckpointHeader<S>, Vec<S>), IoError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(if bytes.get(..8).is_some_and(|m| m != CHECKPOINT_MAGIC) {
            IoError::BadMagic
        } else {
            IoError::Truncated
        });
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(IoError::UnsupportedVersion { got: version, want: CHECKPOINT_VERSION });
    }
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let header_end = 16usize.checked_add(header_len).ok_or(IoError::Truncated)?;
    if bytes.len() < header_end {
        return Err(IoError::Truncated);
    }
    let header: CheckpointHeader<S> = serde_json::from_slice(&bytes[16..header_end])?;
    let payload = &bytes[header_end..];
    let want = header.manifest_total();
    if payload.len() < 4 * want {
        return Err(IoError::Truncated);
    }
    if payload.len() != 4 * want {
        return Err(IoError::LengthMismatch { got: payload.len() / 4, want });
    }
    header.build_net()?;
    let params = payload
        .chunks_exact(4)
        .map(|c| S::of(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
        .collect();
    Ok((header, params))
}

/// Writes an instance as pretty JSON.
pub fn save_instance<S: Scalar>(path: &Path, instance: &Instance<S>) -> Result<(), IoError> {
    fs::write(path, serde_json::to_vec_pretty(instance)?)?;
    Ok(())
}

/// Reads an instance and validates it (anchors inside the drawing region,
/// labels small enough to fit).
pub fn load_instance<S: Scalar>(path: &Path) -> Result<Instance<S>, IoError> {
    let instance: Instance<S> = serde_json::from_slice(&fs::read(path)?)?;
    instance.validate()?;
    Ok(instance)
}

pub fn save_layout<S: Scalar>(path: &Path, layout: &Layout<S>) -> Result<(), IoError> {
    fs::write(path, serde_json::to_vec_pretty(layout)?)?;
    Ok(())
}

pub fn load_layout<S: Scalar>(path: &Path) -> Result<Layout<S>, IoError> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Writes any serializable items as JSON Lines.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    let mut f = fs::File::create(path)?;
    for item in items {
        serde_json::to_writer(&mut f, item)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads JSON Lines back (blank lines are skipped).
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::EvalRecord;
    use crate::env::Anchor;
    use crate::geometry::Point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn small_header() -> (CheckpointHeader<f64>, Vec<f64>) {
        let net_cfg = NetConfig::<f64> {
            filters: 4,
            kernel: 3,
            self_embed: 8,
            map_embed: 16,
            shared: 16,
            ..NetConfig::default()
        };
        let obs = ObsConfig::default();
        let net = PolicyNet::new(net_cfg.clone(), &obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = net.init_params(&mut rng);
        let header = CheckpointHeader {
            net: net_cfg,
            obs,
            env: EnvConfig::default(),
            manifest: net.layout().tensors.clone(),
            iteration: 42,
            seed: 7,
        };
        (header, params)
    }

    #[test]
    fn checkpoint_round_trip_is_f32_exact_and_idempotent() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        let (header, params) = small_header();
        save_checkpoint(&path, &header, &params).unwrap();
        let (h2, p2) = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(header, h2);
        assert_eq!(params.len(), p2.len());
        for (a, b) in params.iter().zip(p2.iter()) {
            assert_eq!(*a as f32, *b as f32);
            assert_eq!(*b, (*a as f32) as f64);
        }
        // Once rounded to f32, a second round trip is bit-exact.
        let path2 = dir.path().join("p2.ckpt");
        save_checkpoint(&path2, &h2, &p2).unwrap();
        let (h3, p3) = load_checkpoint::<f64>(&path2).unwrap();
        assert_eq!(h2, h3);
        assert_eq!(p2, p3);
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        let (header, params) = small_header();
        save_checkpoint(&path, &header, &params).unwrap();
        let good = fs::read(&path).unwrap();

        // Bad magic.
        let mut bad = good.clone();
        bad[0] = b'X';
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint::<f64>(&path), Err(IoError::BadMagic)));

        // Unsupported version.
        let mut bad = good.clone();
        bad[8] = 99;
        fs::write(&path, &bad).unwrap();
        assert!(matches!(
            load_checkpoint::<f64>(&path),
            Err(IoError::UnsupportedVersion { got: 99, .. })
        ));

        // Truncated payload.
        fs::write(&path, &good[..good.len() - 5]).unwrap();
        assert!(matches!(load_checkpoint::<f64>(&path), Err(IoError::Truncated)));

        // Extra payload.
        let mut bad = good.clone();
        bad.extend_from_slice(&[0, 0, 0, 0]);
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint::<f64>(&path), Err(IoError::LengthMismatch { .. })));

        // Saving with the wrong parameter count is refused.
        let err = save_checkpoint(&path, &header, &params[..params.len() - 1]).unwrap_err();
        assert!(matches!(err, IoError::LengthMismatch { .. }));
    }

    #[test]
    fn checkpoint_guards_observation_length() {
        let (header, _) = small_header();
        // Default observation length is 104; the full configuration is 138.
        header.ensure_obs_len(104).unwrap();
        let err = header.ensure_obs_len(138).unwrap_err();
        assert!(matches!(err, IoError::ShapeMismatch { .. }));
    }

    #[test]
    fn instance_json_round_trip_and_validation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let inst = Instance::<f64> {
            drawing: (600.0, 400.0),
            anchors: vec![Anchor {
                pos: Point::new(10.0, 20.0),
                label_w: 40.0,
                label_h: 20.0,
                text: Some("AB".into()),
            }],
        };
        save_instance(&path, &inst).unwrap();
        assert_eq!(load_instance::<f64>(&path).unwrap(), inst);

        let bad = Instance::<f64> {
            anchors: vec![Anchor { pos: Point::new(700.0, 20.0), ..inst.anchors[0].clone() }],
            ..inst
        };
        save_instance(&path, &bad).unwrap();
        assert!(matches!(load_instance::<f64>(&path), Err(IoError::Env(_))));
    }

    #[test]
    fn layout_and_jsonl_round_trips() {
        let dir = tempdir().unwrap();
        let lpath = dir.path().join("layout.json");
        let layout = Layout::<f64> {
            origins: vec![Point::new(1.0, 2.0)],
            placed: vec![true],
            leaders: vec![None],
            steps: 3,
        };
        save_layout(&lpath, &layout).unwrap();
        assert_eq!(load_layout::<f64>(&lpath).unwrap(), layout);

        let rpath = dir.path().join("records.jsonl");
        let records = vec![EvalRecord {
            method: "pbl-a".into(),
            part: "compact".into(),
            count: 5,
            index: 0,
            run: 0,
            complete: true,
            placed: 5,
            audit_ok: true,
            steps: 0,
            wall_ms: 0.5,
        }];
        write_jsonl(&rpath, &records).unwrap();
        let back: Vec<EvalRecord> = read_jsonl(&rpath).unwrap();
        assert_eq!(records, back);
    }
}
