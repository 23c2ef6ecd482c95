//! Synthetic labeling oracle and dataset construction.
//!
//! The oracle stands in for an expensive solver: each cracked brick
//! contributes a Gaussian radial influence centered on the plan, plus an
//! optional symmetry-breaking directional term, plus seeded Gaussian noise.
//! The directional mode controls which plan transforms leave raw labels
//! exactly invariant: `None` keeps all five, `Saddle` keeps only R180,
//! `OddX` keeps only the horizontal mirror.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::augment::{apply_op, AugmentOp};
use crate::error::{Error, Result};
use crate::lattice::{CoreGeometry, CrackConfig};
use crate::nn::Tensor;
use crate::parallel;
use crate::seeding::derive;

/// Shape of the symmetry-breaking term added per cracked cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionalMode {
    /// Fully symmetric field; all five transforms preserve labels.
    None,
    /// Adds `x` per cracked cell; only the horizontal mirror preserves labels.
    OddX,
    /// Adds `x*y` per cracked cell; only the 180-degree rotation preserves labels.
    Saddle,
}

/// Parameters of the synthetic oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Label offset added to every instance.
    pub baseline: f64,
    /// Width of the Gaussian radial influence field (> 0).
    pub radial_scale: f64,
    pub directional_mode: DirectionalMode,
    /// Weight of the directional term (>= 0).
    pub break_weight: f64,
    /// Standard deviation of the per-instance label noise (>= 0).
    pub noise_std: f64,
    pub seed: u64,
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radial_scale > 0.0) {
            return Err(Error::InvalidValue {
                name: "radial_scale",
                message: format!("must be > 0, got {}", self.radial_scale),
            });
        }
        if !(self.break_weight >= 0.0) {
            return Err(Error::InvalidValue {
                name: "break_weight",
                message: format!("must be >= 0, got {}", self.break_weight),
            });
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::InvalidValue {
                name: "noise_std",
                message: format!("must be >= 0, got {}", self.noise_std),
            });
        }
        Ok(())
    }
}

/// Raw (unnormalized) label for one configuration.
///
/// `raw = baseline + sum over cracked cells of [w(rho) + kappa*v(x, y)] + eps`
/// with `w(rho) = exp(-rho^2 / (2 * radial_scale^2))`, `(x, y)` the cell
/// offsets from the plan center, and `eps ~ Normal(0, noise_std^2)` drawn
/// from a stream derived from `(oracle seed, noise_seed)`.
pub fn oracle_label(config: &CrackConfig, oc: &OracleConfig, noise_seed: u64) -> f64 {
    let geometry = config.geometry();
    let (cy, cx) = geometry.center();
    let (h, w) = (geometry.plan_height(), geometry.plan_width());
    let two_rho2 = 2.0 * oc.radial_scale * oc.radial_scale;

    let mut sum = 0.0;
    for (i, &v) in config.cells().iter().enumerate() {
        if v != 1 {
            continue;
        }
        let row = (i / w) % h;
        let col = i % w;
        let y = row as f64 - cy;
        let x = col as f64 - cx;
        let radial = (-(x * x + y * y) / two_rho2).exp();
        let directional = match oc.directional_mode {
            DirectionalMode::None => 0.0,
            DirectionalMode::OddX => x,
            DirectionalMode::Saddle => x * y,
        };
        sum += radial + oc.break_weight * directional;
    }

    let noise = if oc.noise_std > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(derive(oc.seed, noise_seed));
        Normal::new(0.0, oc.noise_std).unwrap().sample(&mut rng)
    } else {
        0.0
    };
    oc.baseline + sum + noise
}

/// Min-max normalization parameters fit on a training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub raw_min: f64,
    pub raw_max: f64,
}

impl NormParams {
    pub fn fit(raws: &[f64]) -> Result<Self> {
        let raw_min = raws.iter().cloned().fold(f64::INFINITY, f64::min);
        let raw_max = raws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(raw_min < raw_max) {
            return Err(Error::DegenerateLabels { value: raw_min });
        }
        Ok(Self { raw_min, raw_max })
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.raw_min) / (self.raw_max - self.raw_min)
    }

    pub fn denormalize(&self, norm: f64) -> f64 {
        self.raw_min + norm * (self.raw_max - self.raw_min)
    }
}

/// Provenance tag of a dataset. D1-D5 name the five augmented variants in
/// the conventional order: rotations 90/180/270, then vertical and
/// horizontal mirrors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetTag {
    D0,
    D1,
    D2,
    D3,
    D4,
    D5,
    Combined(Vec<DatasetTag>),
}

impl std::fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetTag::D0 => f.write_str("D0"),
            DatasetTag::D1 => f.write_str("D1"),
            DatasetTag::D2 => f.write_str("D2"),
            DatasetTag::D3 => f.write_str("D3"),
            DatasetTag::D4 => f.write_str("D4"),
            DatasetTag::D5 => f.write_str("D5"),
            DatasetTag::Combined(parts) => {
                f.write_str("combined:")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for DatasetTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let simple = |t: &str| match t {
            "D0" => Ok(DatasetTag::D0),
            "D1" => Ok(DatasetTag::D1),
            "D2" => Ok(DatasetTag::D2),
            "D3" => Ok(DatasetTag::D3),
            "D4" => Ok(DatasetTag::D4),
            "D5" => Ok(DatasetTag::D5),
            other => Err(Error::InvalidValue {
                name: "dataset tag",
                message: format!("unknown tag {other:?}"),
            }),
        };
        match s.strip_prefix("combined:") {
            None => simple(s),
            Some(rest) => Ok(DatasetTag::Combined(
                rest.split('+').map(simple).collect::<Result<Vec<_>>>()?,
            )),
        }
    }
}

/// One labeled instance. `origin` is the index of the D0 instance this one
/// descends from (its own index for unaugmented data), used to keep
/// augmented copies of validation instances out of training sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub config: CrackConfig,
    pub label: f64,
    pub origin: usize,
}

/// A labeled dataset sharing one geometry and one normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    geometry: Arc<CoreGeometry>,
    tag: DatasetTag,
    norm: NormParams,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn from_parts(
        geometry: Arc<CoreGeometry>,
        tag: DatasetTag,
        norm: NormParams,
        instances: Vec<Instance>,
    ) -> Self {
        Self {
            geometry,
            tag,
            norm,
            instances,
        }
    }

    pub fn geometry(&self) -> &Arc<CoreGeometry> {
        &self.geometry
    }

    pub fn tag(&self) -> &DatasetTag {
        &self.tag
    }

    pub fn norm(&self) -> NormParams {
        self.norm
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.instances.iter().map(|i| i.label).collect()
    }

    /// Packs features into an `n x levels x H x W` tensor of -1/0/+1 values
    /// alongside the label vector.
    pub fn to_tensor_data(&self) -> TensorData {
        let g = &self.geometry;
        let per = g.levels() * g.plan_height() * g.plan_width();
        let mut features = Vec::with_capacity(self.len() * per);
        for instance in &self.instances {
            features.extend(instance.config.cells().iter().map(|&v| v as f64));
        }
        TensorData {
            features: Tensor::from_vec(
                vec![self.len(), g.levels(), g.plan_height(), g.plan_width()],
                features,
            )
            .expect("cell count matches geometry"),
            labels: self.labels(),
        }
    }
}

/// Dense feature/label arrays ready for the network.
#[derive(Debug, Clone)]
pub struct TensorData {
    pub features: Tensor,
    pub labels: Vec<f64>,
}

impl TensorData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn raw_instances(
    geometry: &Arc<CoreGeometry>,
    oc: &OracleConfig,
    n: usize,
    fraction_range: (f64, f64),
    seed: u64,
) -> Result<Vec<(CrackConfig, f64)>> {
    oc.validate()?;
    let (lo, hi) = fraction_range;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidValue {
            name: "fraction_range",
            message: format!("need 0 <= lo <= hi <= 1, got ({lo}, {hi})"),
        });
    }
    if n < 2 {
        return Err(Error::InvalidValue {
            name: "dataset size",
            message: format!("need n >= 2, got {n}"),
        });
    }
    // Per-instance streams derive from (seed, index) so generation order is
    // irrelevant and instances can be produced in parallel.
    let per_instance_work =
        geometry.levels() * geometry.plan_height() * geometry.plan_width() * 16;
    Ok(parallel::map_indexed(n, per_instance_work, |i| {
        let s = derive(seed, i as u64);
        let mut rng = ChaCha12Rng::seed_from_u64(derive(s, 0));
        let fraction = lo + (hi - lo) * rand::Rng::gen::<f64>(&mut rng);
        let config = CrackConfig::random(geometry.clone(), fraction, derive(s, 1))
            .expect("fraction sampled within [lo, hi] subset of [0, 1]");
        let raw = oracle_label(&config, oc, derive(s, 2));
        (config, raw)
    }))
}

/// Generates a D0 dataset of `n` instances with crack fractions drawn
/// uniformly from `fraction_range`, labels min-max normalized to [0, 1].
pub fn generate_dataset(
    geometry: Arc<CoreGeometry>,
    oc: &OracleConfig,
    n: usize,
    fraction_range: (f64, f64),
    seed: u64,
) -> Result<Dataset> {
    let raw = raw_instances(&geometry, oc, n, fraction_range, seed)?;
    let norm = NormParams::fit(&raw.iter().map(|(_, r)| *r).collect::<Vec<_>>())?;
    let instances = raw
        .into_iter()
        .enumerate()
        .map(|(i, (config, r))| Instance {
            config,
            label: norm.normalize(r),
            origin: i,
        })
        .collect();
    Ok(Dataset::from_parts(geometry, DatasetTag::D0, norm, instances))
}

/// Generates an unaugmented evaluation set normalized with a previously fit
/// `norm` (labels may fall slightly outside [0, 1]).
pub fn generate_with_norm(
    geometry: Arc<CoreGeometry>,
    oc: &OracleConfig,
    n: usize,
    fraction_range: (f64, f64),
    seed: u64,
    norm: NormParams,
) -> Result<Dataset> {
    let raw = raw_instances(&geometry, oc, n, fraction_range, seed)?;
    let instances = raw
        .into_iter()
        .enumerate()
        .map(|(i, (config, r))| Instance {
            config,
            label: norm.normalize(r),
            origin: i,
        })
        .collect();
    Ok(Dataset::from_parts(geometry, DatasetTag::D0, norm, instances))
}

/// Discrepancy between oracle labels of transformed and original inputs,
/// over a set of base configurations. Noise is forced off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub max_abs: f64,
    pub mean_abs: f64,
}

/// Compares `oracle(T(x))` against `oracle(x)` on raw labels for one
/// transform. The check is about the deterministic field, so `noise_std`
/// is zeroed regardless of the configuration.
pub fn agreement_check(
    oc: &OracleConfig,
    base_instances: &[CrackConfig],
    op: AugmentOp,
) -> Result<AgreementStats> {
    if base_instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let quiet = OracleConfig {
        noise_std: 0.0,
        ..oc.clone()
    };
    let mut max_abs = 0.0f64;
    let mut total = 0.0f64;
    for config in base_instances {
        let transformed = apply_op(config, op)?;
        let d = (oracle_label(&transformed, &quiet, 0) - oracle_label(config, &quiet, 0)).abs();
        max_abs = max_abs.max(d);
        total += d;
    }
    Ok(AgreementStats {
        max_abs,
        mean_abs: total / base_instances.len() as f64,
    })
}
