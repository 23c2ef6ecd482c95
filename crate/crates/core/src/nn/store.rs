//! Weight container: a JSON manifest plus a binary blob of little-endian
//! f64 parameter values concatenated in manifest order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Model, ModelArch, Param, Tensor};
use crate::error::{Error, Result};

const FORMAT: &str = "weights/v1";

#[derive(Debug, Serialize, Deserialize)]
struct WeightManifest {
    format: String,
    arch: ModelArch,
    init_seed: u64,
    params: Vec<ParamEntry>,
    /// SHA-256 of the binary blob, hex.
    checksum: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let out = Sha256::new_with_prefix(bytes).finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn container_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

/// Writes `<stem>.json` and `<stem>.bin`.
pub fn save_weights(model: &Model, stem: &Path) -> Result<()> {
    let mut blob = Vec::new();
    let mut entries = Vec::new();
    for p in model.params() {
        entries.push(ParamEntry {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
        });
        for v in p.value.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = WeightManifest {
        format: FORMAT.into(),
        arch: model.arch().clone(),
        init_seed: model.init_seed(),
        params: entries,
        checksum: sha256_hex(&blob),
    };
    let (json_path, bin_path) = container_paths(stem);
    if let Some(dir) = json_path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&json_path, serde_json::to_string_pretty(&manifest)?)?;
    fs::write(&bin_path, blob)?;
    Ok(())
}

/// Loads a container saved by [`save_weights`], checking the blob checksum
/// and that the stored parameters match `arch` name-for-name and
/// shape-for-shape.
pub fn load_weights(arch: &ModelArch, stem: &Path) -> Result<Model> {
    let (json_path, bin_path) = container_paths(stem);
    let manifest: WeightManifest = serde_json::from_str(&fs::read_to_string(&json_path)?)?;
    if manifest.format != FORMAT {
        return Err(Error::CorruptContainer {
            reason: format!("unknown format {:?}", manifest.format),
        });
    }

    let expected = arch.param_specs()?;
    if manifest.params.len() != expected.len() {
        return Err(Error::CorruptContainer {
            reason: format!(
                "parameter count mismatch: arch has {}, container has {}",
                expected.len(),
                manifest.params.len()
            ),
        });
    }
    for (entry, (name, shape)) in manifest.params.iter().zip(expected.iter()) {
        if &entry.name != name || &entry.shape != shape {
            return Err(Error::ShapeMismatch {
                what: format!("parameter {}", entry.name),
                expected: shape.clone(),
                got: entry.shape.clone(),
            });
        }
    }

    let blob = fs::read(&bin_path)?;
    if sha256_hex(&blob) != manifest.checksum {
        return Err(Error::CorruptContainer {
            reason: "checksum mismatch".into(),
        });
    }
    let total: usize = expected
        .iter()
        .map(|(_, s)| s.iter().product::<usize>())
        .sum();
    if blob.len() != total * 8 {
        return Err(Error::CorruptContainer {
            reason: format!("blob length {} != {} values", blob.len(), total),
        });
    }

    let mut params = Vec::with_capacity(expected.len());
    let mut offset = 0usize;
    for (name, shape) in expected {
        let count: usize = shape.iter().product();
        let data: Vec<f64> = (0..count)
            .map(|i| {
                let at = (offset + i) * 8;
                f64::from_le_bytes(blob[at..at + 8].try_into().unwrap())
            })
            .collect();
        offset += count;
        params.push(Param {
            name,
            value: Tensor::from_vec(shape.clone(), data)?,
            grad: Tensor::zeros(shape),
        });
    }
    Model::from_parts(arch.clone(), params, manifest.init_seed)
}
