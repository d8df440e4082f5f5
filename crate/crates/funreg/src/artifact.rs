//! Model artifact on disk.
//!
//! One JSON document: `{"format_version": "1", "checksum": <sha256 hex>,
//! "model": {...}}`. The checksum covers the exact bytes of the `model`
//! value as written, so any edit or truncation is caught before the model is
//! used.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use funreg_core::pipeline::TrainedModel;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
struct Envelope<'a> {
    format_version: String,
    checksum: String,
    #[serde(borrow)]
    model: &'a RawValue,
}

#[derive(Deserialize)]
struct VersionOnly {
    format_version: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Serialized artifact text, newline-terminated.
pub fn to_string(model: &TrainedModel) -> String {
    let body = serde_json::to_string(model).expect("model serializes");
    let raw = RawValue::from_string(body).expect("valid JSON");
    let env = Envelope {
        format_version: FORMAT_VERSION.into(),
        checksum: sha256_hex(raw.get().as_bytes()),
        model: &raw,
    };
    let mut s = serde_json::to_string(&env).expect("envelope serializes");
    s.push('\n');
    s
}

pub fn from_str(text: &str, path: &Path) -> Result<TrainedModel> {
    let corrupt = |reason: String| Error::CorruptArtifact {
        path: path.into(),
        reason,
    };
    // A readable version tag is checked before anything else so that files
    // from other format versions get the more useful error.
    if let Ok(v) = serde_json::from_str::<VersionOnly>(text) {
        if v.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: v.format_version,
                expected: FORMAT_VERSION,
            });
        }
    }
    let env: Envelope = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let digest = sha256_hex(env.model.get().as_bytes());
    if digest != env.checksum {
        return Err(corrupt(format!("checksum mismatch: recorded {}, computed {digest}", env.checksum)));
    }
    let model: TrainedModel = serde_json::from_str(env.model.get()).map_err(|e| corrupt(e.to_string()))?;
    model.validate().map_err(|e| corrupt(e.to_string()))?;
    Ok(model)
}

pub fn save(model: &TrainedModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(model)).map_err(Error::io(path))
}

pub fn load(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    from_str(&text, path)
}
