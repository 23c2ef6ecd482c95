//! Regression losses: MSE, MAE, Huber, and the Gaussian-density-weighted
//! loss with its ablation variants.
//!
//! The weighted loss scales each squared residual by a factor built from the
//! Gaussian density evaluated at the *prediction*:
//!
//! `F_i = base + (alpha * Z_i / beta)^p`,
//! `Z_i = exp(-(pred_i - mu)^2 / (2 sigma^2)) / (sigma sqrt(2 pi))`
//!
//! with `p = 2` when `squared` is set (else 1) and `base = 1` when
//! `floor_one` is set (else 0). `mu` is the histogram mode and `sigma` the
//! sample standard deviation of the training labels; `beta` is the supremum
//! of `Z`. The loss aggregates `F_i * (y_i - pred_i)^2` by mean or sum.
//! Gradients flow through `Z` (it depends on the prediction); `mu`, `sigma`
//! and `beta` are constants fit once on the training set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variant flags of the weighted loss.
///
/// The verbatim published form is `squared && take_mean && !floor_one`; the
/// default adds the unit floor so the factor decays to one away from the
/// mode instead of vanishing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSpec {
    pub alpha: f64,
    /// Square the `alpha * Z / beta` ratio.
    pub squared: bool,
    /// Aggregate by mean (else sum).
    pub take_mean: bool,
    /// Add 1 to the factor so it floors at one far from the mode.
    pub floor_one: bool,
    /// Use the batch maximum of `Z` as `beta` instead of the analytic
    /// supremum `1/(sigma sqrt(2 pi))`.
    #[serde(default)]
    pub batch_max_beta: bool,
}

impl WeightedSpec {
    pub fn verbatim(alpha: f64) -> Self {
        Self {
            alpha,
            squared: true,
            take_mean: true,
            floor_one: false,
            batch_max_beta: false,
        }
    }

    pub fn floored(alpha: f64) -> Self {
        Self {
            floor_one: true,
            ..Self::verbatim(alpha)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidValue {
                name: "alpha",
                message: format!("must be > 0, got {}", self.alpha),
            });
        }
        Ok(())
    }
}

/// Loss family selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    Mse,
    Mae,
    Huber { delta: f64 },
    Weighted(WeightedSpec),
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            LossSpec::Huber { delta } if !(*delta > 0.0) => Err(Error::InvalidValue {
                name: "huber delta",
                message: format!("must be > 0, got {delta}"),
            }),
            LossSpec::Weighted(w) => w.validate(),
            _ => Ok(()),
        }
    }

    pub fn needs_mode_fit(&self) -> bool {
        matches!(self, LossSpec::Weighted(_))
    }
}

/// Gaussian fit of the training-label distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFit {
    /// Center of the most populated histogram bin.
    pub mu: f64,
    /// Sample standard deviation (n-1 denominator).
    pub sigma: f64,
    /// Supremum of the density: `1 / (sigma sqrt(2 pi))`.
    pub beta: f64,
}

/// Histogram counts of labels over `bins` equal-width bins on [0, 1].
pub fn label_histogram(labels: &[f64], bins: usize) -> Vec<usize> {
    let mut hist = vec![0usize; bins];
    for &y in labels {
        let idx = ((y.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        hist[idx] += 1;
    }
    hist
}

/// Fits the histogram mode and sample standard deviation of labels on [0, 1].
/// Ties go to the lowest bin.
pub fn estimate_mode_sigma(labels: &[f64], bins: usize) -> Result<ModeFit> {
    if labels.len() < 2 || bins == 0 {
        return Err(Error::InvalidValue {
            name: "mode fit",
            message: format!("need >= 2 labels and >= 1 bin, got {} / {bins}", labels.len()),
        });
    }
    let hist = label_histogram(labels, bins);
    let mut best = 0usize;
    for (i, &c) in hist.iter().enumerate() {
        if c > hist[best] {
            best = i;
        }
    }
    let mu = (best as f64 + 0.5) / bins as f64;

    let n = labels.len() as f64;
    let mean = labels.iter().sum::<f64>() / n;
    let ss = labels.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>();
    let sigma = (ss / (n - 1.0)).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::DegenerateSigma);
    }
    Ok(ModeFit {
        mu,
        sigma,
        beta: 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()),
    })
}

/// Gaussian density at the prediction: the adjustment kernel `Z`.
pub fn z_factor(pred: f64, fit: &ModeFit) -> f64 {
    let d = pred - fit.mu;
    fit.beta * (-d * d / (2.0 * fit.sigma * fit.sigma)).exp()
}

fn effective_beta(preds: &[f64], spec: &WeightedSpec, fit: &ModeFit) -> f64 {
    if spec.batch_max_beta {
        preds
            .iter()
            .map(|&p| z_factor(p, fit))
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        fit.beta
    }
}

/// Density-weighted squared-error loss.
pub fn weighted_loss(preds: &[f64], truths: &[f64], spec: &WeightedSpec, fit: &ModeFit) -> f64 {
    assert_eq!(preds.len(), truths.len());
    assert!(!preds.is_empty());
    let beta = effective_beta(preds, spec, fit);
    let base = if spec.floor_one { 1.0 } else { 0.0 };
    let mut total = 0.0;
    for (&pred, &truth) in preds.iter().zip(truths.iter()) {
        let ratio = spec.alpha * z_factor(pred, fit) / beta;
        let factor = base + if spec.squared { ratio * ratio } else { ratio };
        let e = truth - pred;
        total += factor * e * e;
    }
    if spec.take_mean {
        total / preds.len() as f64
    } else {
        total
    }
}

/// d(loss)/d(pred) for every prediction. `mu`, `sigma` and `beta` are
/// treated as constants, so for each instance
/// `d/dp [F(p) (y - p)^2] = F'(p) (y - p)^2 - 2 F(p) (y - p)`.
pub fn weighted_loss_gradient(
    preds: &[f64],
    truths: &[f64],
    spec: &WeightedSpec,
    fit: &ModeFit,
) -> Vec<f64> {
    assert_eq!(preds.len(), truths.len());
    assert!(!preds.is_empty());
    let beta = effective_beta(preds, spec, fit);
    let base = if spec.floor_one { 1.0 } else { 0.0 };
    let scale = if spec.take_mean {
        1.0 / preds.len() as f64
    } else {
        1.0
    };
    preds
        .iter()
        .zip(truths.iter())
        .map(|(&pred, &truth)| {
            let z = z_factor(pred, fit);
            let dz = -z * (pred - fit.mu) / (fit.sigma * fit.sigma);
            let ratio = spec.alpha * z / beta;
            let dratio = spec.alpha * dz / beta;
            let (factor, dfactor) = if spec.squared {
                (base + ratio * ratio, 2.0 * ratio * dratio)
            } else {
                (base + ratio, dratio)
            };
            let e = truth - pred;
            scale * (dfactor * e * e - 2.0 * factor * e)
        })
        .collect()
}

/// Standard loss value. Huber is quadratic within `delta` and linear beyond.
pub fn standard_loss(preds: &[f64], truths: &[f64], spec: &LossSpec) -> f64 {
    assert_eq!(preds.len(), truths.len());
    assert!(!preds.is_empty());
    let n = preds.len() as f64;
    let total: f64 = preds
        .iter()
        .zip(truths.iter())
        .map(|(&p, &y)| {
            let e = y - p;
            match spec {
                LossSpec::Mse => e * e,
                LossSpec::Mae => e.abs(),
                LossSpec::Huber { delta } => {
                    if e.abs() <= *delta {
                        0.5 * e * e
                    } else {
                        delta * (e.abs() - 0.5 * delta)
                    }
                }
                LossSpec::Weighted(_) => unreachable!("weighted handled separately"),
            }
        })
        .sum();
    total / n
}

/// d(loss)/d(pred) for standard losses. The MAE subgradient at zero is 0.
pub fn standard_loss_gradient(preds: &[f64], truths: &[f64], spec: &LossSpec) -> Vec<f64> {
    assert_eq!(preds.len(), truths.len());
    let n = preds.len() as f64;
    preds
        .iter()
        .zip(truths.iter())
        .map(|(&p, &y)| {
            let e = y - p;
            match spec {
                LossSpec::Mse => -2.0 * e / n,
                LossSpec::Mae => -e.signum() * (e != 0.0) as i32 as f64 / n,
                LossSpec::Huber { delta } => {
                    if e.abs() <= *delta {
                        -e / n
                    } else {
                        -delta * e.signum() / n
                    }
                }
                LossSpec::Weighted(_) => unreachable!("weighted handled separately"),
            }
        })
        .collect()
}

/// Unified loss entry point used by the training loop.
pub fn loss_value(
    preds: &[f64],
    truths: &[f64],
    spec: &LossSpec,
    fit: Option<&ModeFit>,
) -> Result<f64> {
    match spec {
        LossSpec::Weighted(w) => {
            let fit = fit.ok_or(Error::InvalidValue {
                name: "loss",
                message: "weighted loss needs a mode fit".into(),
            })?;
            Ok(weighted_loss(preds, truths, w, fit))
        }
        other => Ok(standard_loss(preds, truths, other)),
    }
}

pub fn loss_gradient(
    preds: &[f64],
    truths: &[f64],
    spec: &LossSpec,
    fit: Option<&ModeFit>,
) -> Result<Vec<f64>> {
    match spec {
        LossSpec::Weighted(w) => {
            let fit = fit.ok_or(Error::InvalidValue {
                name: "loss",
                message: "weighted loss needs a mode fit".into(),
            })?;
            Ok(weighted_loss_gradient(preds, truths, w, fit))
        }
        other => Ok(standard_loss_gradient(preds, truths, other)),
    }
}
