//! Model file layout, all integers little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `OPTICSM\0` |
//! | 4 | header length `h` (u32) |
//! | h | UTF-8 JSON header: format version, label convention, feature config, fingerprint |
//! | 8 * hash_dim | weights as f64 |
//! | 8 | bias as f64 |
//! | 32 | SHA-256 of everything above |

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::FeatureConfig;
use super::model::{StudentModel, LABEL_CONVENTION, MODEL_VERSION};
use super::StudentError;

pub const MAGIC: &[u8; 8] = b"OPTICSM\0";
const DIGEST_LEN: usize = 32;

#[derive(Serialize, Deserialize)]
struct Header {
    version: String,
    label_convention: String,
    feature_config: FeatureConfig,
    training_fingerprint: String,
}

pub fn model_to_bytes(model: &StudentModel) -> Result<Vec<u8>, StudentError> {
    model.check()?;
    let header = serde_json::to_vec(&Header {
        version: model.version.clone(),
        label_convention: LABEL_CONVENTION.to_string(),
        feature_config: model.feature_config.clone(),
        training_fingerprint: model.training_fingerprint.clone(),
    })
    .map_err(|e| StudentError::Corrupt(e.to_string()))?;
    let mut out = Vec::with_capacity(12 + header.len() + 8 * (model.weights.len() + 1) + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for w in &model.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out.extend_from_slice(&model.bias.to_le_bytes());
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<StudentModel, StudentError> {
    let corrupt = |m: &str| StudentError::Corrupt(m.to_string());
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(corrupt("not a model file"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header_bytes = bytes.get(12..12 + header_len).ok_or_else(|| corrupt("truncated header"))?;
    let header: Header = serde_json::from_slice(header_bytes).map_err(|e| StudentError::Corrupt(format!("header: {e}")))?;
    if header.version != MODEL_VERSION {
        return Err(StudentError::VersionMismatch {
            found: header.version,
            expected: MODEL_VERSION.to_string(),
        });
    }
    if header.label_convention != LABEL_CONVENTION {
        return Err(StudentError::Corrupt(format!("unknown label convention {:?}", header.label_convention)));
    }
    header.feature_config.validate()?;
    let dim = header.feature_config.hash_dim;
    let body_start = 12 + header_len;
    let expected = body_start + 8 * (dim + 1) + DIGEST_LEN;
    if bytes.len() != expected {
        return Err(StudentError::Corrupt(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let (payload, digest) = bytes.split_at(expected - DIGEST_LEN);
    if Sha256::digest(payload).as_slice() != digest {
        return Err(corrupt("checksum mismatch"));
    }
    let floats: Vec<f64> = payload[body_start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (weights, bias) = floats.split_at(dim);
    Ok(StudentModel {
        weights: weights.to_vec(),
        bias: bias[0],
        feature_config: header.feature_config,
        version: header.version,
        training_fingerprint: header.training_fingerprint,
    })
}

/// Writes to a sibling temporary file first so a failed save never leaves a
/// half-written model behind.
pub fn save_model(model: &StudentModel, path: &Path) -> Result<(), StudentError> {
    let bytes = model_to_bytes(model)?;
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<StudentModel, StudentError> {
    model_from_bytes(&std::fs::read(path)?)
}
