//! Run configuration: JSON schema, defaults, semantic validation, and the
//! desk/paper scale profiles.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use coreseis::lattice::{CoreGeometry, MaskSpec};
use coreseis::oracle::{DirectionalMode, OracleConfig};
use coreseis::train::{Optimizer, TrainConfig};

use crate::CliError;

/// Scale presets. Desk runs in minutes on a laptop; paper mirrors the
/// published dataset and repeat counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum MaskConfig {
    Full,
    AgrLike,
    Disk { radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub mask: MaskConfig,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            width: 20,
            height: 20,
            levels: 3,
            mask: MaskConfig::AgrLike,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub baseline: f64,
    pub radial_scale: f64,
    pub mode: DirectionalMode,
    pub break_weight: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            baseline: 10.0,
            radial_scale: 5.0,
            mode: DirectionalMode::OddX,
            break_weight: 0.05,
            noise_std: 2.0,
            seed: 101,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub n_train: usize,
    pub n_test: usize,
    pub fraction_range: (f64, f64),
    pub seed: u64,
    /// Base instances used by `augment-validate`.
    pub agreement_instances: usize,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_test: 500,
            fraction_range: (0.1, 0.5),
            seed: 202,
            agreement_instances: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub val_fraction: f64,
    pub huber_delta: f64,
    pub mode_bins: usize,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::default(),
            batch_size: 32,
            max_epochs: 60,
            patience: 10,
            min_delta: 1e-5,
            val_fraction: 0.1,
            huber_delta: 1.0,
            mode_bins: 50,
            seed: 303,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Override the registry repeat count (32 fresh / 6 transfer).
    pub repeats: Option<usize>,
    /// Rayon worker cap for the repeat sweep; default uses every core.
    pub workers: Option<usize>,
    /// Diverged runs tolerated before the whole experiment aborts.
    pub max_failed_runs: usize,
    /// Use the published weighted-loss form (no unit floor) for E3/E4/E5.x.
    pub verbatim_eq1: bool,
    /// Where `pretrain` wrote M1..M5 (defaults to `<out>/pretrain`).
    pub pretrained_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub geometry: GeometryConfig,
    pub oracle: OracleSection,
    pub dataset: DatasetSection,
    pub train: TrainSection,
    pub experiment: ExperimentSection,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let config: Config = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Applies a scale profile on top of the current values.
    pub fn apply_profile(&mut self, profile: Profile) {
        match profile {
            Profile::Desk => {
                self.dataset.n_train = 2000;
                self.dataset.n_test = 500;
            }
            Profile::Paper => {
                self.dataset.n_train = 6136;
                self.dataset.n_test = 2000;
                self.train.max_epochs = self.train.max_epochs.max(200);
            }
        }
    }

    /// Re-seeds every stochastic stream from one master seed.
    pub fn reseed(&mut self, master: u64) {
        self.oracle.seed = coreseis::seeding::derive(master, 0);
        self.dataset.seed = coreseis::seeding::derive(master, 1);
        self.train.seed = coreseis::seeding::derive(master, 2);
    }

    /// Semantic validation with JSON-path error locations.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |path: &str, message: String| {
            Err(CliError::Config {
                path: path.into(),
                message,
            })
        };
        let g = &self.geometry;
        if g.width < 1 || g.height < 1 || g.levels < 1 {
            return fail(
                "geometry",
                format!("dims must be >= 1, got {}x{}x{}", g.width, g.height, g.levels),
            );
        }
        if let MaskConfig::Disk { radius } = g.mask {
            if !(radius > 0.0) {
                return fail("geometry.mask.disk.radius", format!("must be > 0, got {radius}"));
            }
        }
        if matches!(g.mask, MaskConfig::AgrLike) && g.width != g.height {
            return fail(
                "geometry.mask",
                format!("agr_like needs a square plan, got {}x{}", g.width, g.height),
            );
        }
        if !(self.oracle.radial_scale > 0.0) {
            return fail(
                "oracle.radial_scale",
                format!("must be > 0, got {}", self.oracle.radial_scale),
            );
        }
        if self.oracle.break_weight < 0.0 {
            return fail(
                "oracle.break_weight",
                format!("must be >= 0, got {}", self.oracle.break_weight),
            );
        }
        if self.oracle.noise_std < 0.0 {
            return fail(
                "oracle.noise_std",
                format!("must be >= 0, got {}", self.oracle.noise_std),
            );
        }
        let (lo, hi) = self.dataset.fraction_range;
        if lo > hi {
            return fail("dataset.fraction_range", "lo > hi".into());
        }
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return fail(
                "dataset.fraction_range",
                format!("must lie in [0, 1], got ({lo}, {hi})"),
            );
        }
        if self.dataset.n_train < 2 {
            return fail("dataset.n_train", "need at least 2 instances".into());
        }
        if self.dataset.n_test < 1 {
            return fail("dataset.n_test", "need at least 1 instance".into());
        }
        if self.train.batch_size == 0 {
            return fail("train.batch_size", "must be >= 1".into());
        }
        if !(self.train.val_fraction > 0.0 && self.train.val_fraction < 1.0) {
            return fail(
                "train.val_fraction",
                format!("must be in (0, 1), got {}", self.train.val_fraction),
            );
        }
        if !(self.train.huber_delta > 0.0) {
            return fail(
                "train.huber_delta",
                format!("must be > 0, got {}", self.train.huber_delta),
            );
        }
        if self.train.mode_bins == 0 {
            return fail("train.mode_bins", "must be >= 1".into());
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Arc<CoreGeometry>, CliError> {
        let mask = match self.geometry.mask {
            MaskConfig::Full => MaskSpec::Full,
            MaskConfig::AgrLike => MaskSpec::AgrLike,
            MaskConfig::Disk { radius } => MaskSpec::Disk(radius),
        };
        Ok(Arc::new(CoreGeometry::new(
            self.geometry.width,
            self.geometry.height,
            self.geometry.levels,
            mask,
        )?))
    }

    pub fn oracle(&self) -> OracleConfig {
        OracleConfig {
            baseline: self.oracle.baseline,
            radial_scale: self.oracle.radial_scale,
            directional_mode: self.oracle.mode,
            break_weight: self.oracle.break_weight,
            noise_std: self.oracle.noise_std,
            seed: self.oracle.seed,
        }
    }

    /// Training config with the experiment's loss filled in by the caller.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: self.train.optimizer,
            batch_size: self.train.batch_size,
            max_epochs: self.train.max_epochs,
            patience: self.train.patience,
            min_delta: self.train.min_delta,
            val_fraction: self.train.val_fraction,
            loss: coreseis::loss::LossSpec::Huber {
                delta: self.train.huber_delta,
            },
            mode_bins: self.train.mode_bins,
            seed: self.train.seed,
            shuffle_seed: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_match_desk_scale() {
        let config = Config::default();
        config.validate().unwrap();
        assert_eq!(config.dataset.n_train, 2000);
        assert_eq!(config.dataset.n_test, 500);
        let g = config.geometry().unwrap();
        assert_eq!(g.channel_count(), 284);
    }

    #[test]
    fn fraction_range_lo_gt_hi_reports_field_path() {
        let mut config = Config::default();
        config.dataset.fraction_range = (0.5, 0.4);
        let err = config.validate().unwrap_err();
        match err {
            CliError::Config { path, message } => {
                assert_eq!(path, "dataset.fraction_range");
                assert_eq!(message, "lo > hi");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{ "dataset": { "n_train": 10, "bogus": 1 } }"#;
        let err = serde_json::from_str::<Config>(text).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn paper_profile_scales_up() {
        let mut config = Config::default();
        config.apply_profile(Profile::Paper);
        assert_eq!(config.dataset.n_train, 6136);
        assert_eq!(config.dataset.n_test, 2000);
    }

    #[test]
    fn json_roundtrip() {
        let config = Config::default();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: Config = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&config).unwrap());
    }
}
