//! Dataset container: `<stem>.json` manifest plus `<stem>.bin` blob holding
//! all labels as little-endian f64 followed by all cell values as i8,
//! instance-major, in manifest-declared order.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use coreseis::lattice::{CoreGeometry, CrackConfig};
use coreseis::oracle::{Dataset, DatasetTag, Instance, NormParams};

use crate::CliError;

const FORMAT: &str = "dataset/v1";

#[derive(Debug, Serialize, Deserialize)]
struct GeometryManifest {
    width: usize,
    height: usize,
    levels: usize,
    /// One string per plan row; '1' marks a fuel channel.
    mask_rows: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetManifest {
    format: String,
    tag: String,
    count: usize,
    geometry: GeometryManifest,
    norm: NormParams,
    /// Blob layout, in order.
    layout: Vec<String>,
    /// SHA-256 of the blob, hex.
    checksum: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let out = Sha256::new_with_prefix(bytes).finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

pub fn write_dataset(dataset: &Dataset, stem: &Path) -> Result<(), CliError> {
    let g = dataset.geometry();
    let mask_rows = (0..g.plan_height())
        .map(|r| {
            (0..g.plan_width())
                .map(|c| if g.mask_at(r, c) { '1' } else { '0' })
                .collect()
        })
        .collect();

    let mut blob = Vec::with_capacity(dataset.len() * 8);
    for instance in dataset.instances() {
        blob.extend_from_slice(&instance.label.to_le_bytes());
    }
    for instance in dataset.instances() {
        blob.extend(instance.config.cells().iter().map(|&v| v as u8));
    }

    let manifest = DatasetManifest {
        format: FORMAT.into(),
        tag: dataset.tag().to_string(),
        count: dataset.len(),
        geometry: GeometryManifest {
            width: g.plan_width(),
            height: g.plan_height(),
            levels: g.levels(),
            mask_rows,
        },
        norm: dataset.norm(),
        layout: vec!["labels:f64le".into(), "cells:i8".into()],
        checksum: sha256_hex(&blob),
    };

    let (json_path, bin_path) = paths(stem);
    if let Some(dir) = json_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&json_path, serde_json::to_string_pretty(&manifest)?)?;
    std::fs::write(&bin_path, blob)?;
    Ok(())
}

pub fn read_dataset(stem: &Path) -> Result<Dataset, CliError> {
    let (json_path, bin_path) = paths(stem);
    let manifest: DatasetManifest =
        serde_json::from_str(&std::fs::read_to_string(&json_path)?)?;
    if manifest.format != FORMAT {
        return Err(CliError::Runtime(format!(
            "dataset container {}: unknown format {:?}",
            json_path.display(),
            manifest.format
        )));
    }
    let gm = &manifest.geometry;
    let mut mask = Vec::with_capacity(gm.width * gm.height);
    for row in &gm.mask_rows {
        for ch in row.chars() {
            mask.push(ch == '1');
        }
    }
    let geometry = Arc::new(CoreGeometry::from_mask(
        gm.width, gm.height, gm.levels, mask,
    )?);

    let blob = std::fs::read(&bin_path)?;
    if sha256_hex(&blob) != manifest.checksum {
        return Err(CliError::Runtime(format!(
            "dataset container {}: checksum mismatch",
            bin_path.display()
        )));
    }
    let cells_per = gm.levels * gm.height * gm.width;
    let expect = manifest.count * 8 + manifest.count * cells_per;
    if blob.len() != expect {
        return Err(CliError::Runtime(format!(
            "dataset container {}: blob is {} bytes, expected {expect}",
            bin_path.display(),
            blob.len()
        )));
    }

    let tag: DatasetTag = manifest.tag.parse()?;
    let mut instances = Vec::with_capacity(manifest.count);
    let cells_base = manifest.count * 8;
    for i in 0..manifest.count {
        let label = f64::from_le_bytes(blob[i * 8..(i + 1) * 8].try_into().unwrap());
        let at = cells_base + i * cells_per;
        let cells: Vec<i8> = blob[at..at + cells_per].iter().map(|&b| b as i8).collect();
        instances.push(Instance {
            config: CrackConfig::from_cells(geometry.clone(), cells)?,
            label,
            origin: i,
        });
    }
    Ok(Dataset::from_parts(geometry, tag, manifest.norm, instances))
}
