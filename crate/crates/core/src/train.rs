//! Training loop with validation-based early stopping, repeat sweeps, and
//! transfer continuation.
//!
//! Validation loss is always plain MSE in eval mode, whatever loss trains
//! the model, so runs with different training losses share one convergence
//! criterion. Early stopping restores the weights of the epoch with the
//! lowest validation loss (earliest on ties).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{estimate_mode_sigma, loss_gradient, loss_value, LossSpec, ModeFit};
use crate::nn::{Model, ModelArch, Tensor};
use crate::oracle::{Dataset, TensorData};
use crate::parallel;
use crate::seeding::{derive, derive2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
    Sgd {
        lr: f64,
        momentum: f64,
    },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Consecutive epochs without a `min_delta` improvement tolerated before
    /// stopping; 0 stops on the first non-improving epoch.
    pub patience: usize,
    pub min_delta: f64,
    pub val_fraction: f64,
    pub loss: LossSpec,
    /// Histogram bins for the weighted-loss mode fit.
    pub mode_bins: usize,
    pub seed: u64,
    /// When set, every run shares this shuffle stream and `seed` varies only
    /// the dropout masks (transfer repeats vary dropout alone).
    pub shuffle_seed: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::default(),
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            min_delta: 1e-5,
            val_fraction: 0.1,
            loss: LossSpec::Huber { delta: 1.0 },
            mode_bins: 50,
            seed: 0,
            shuffle_seed: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidValue {
                name: "batch_size",
                message: "must be >= 1".into(),
            });
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidValue {
                name: "val_fraction",
                message: format!("must be in (0, 1), got {}", self.val_fraction),
            });
        }
        self.loss.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch with the minimum validation loss (earliest on ties); `None`
    /// when no epoch ran.
    pub best_epoch: Option<usize>,
    pub stopped: StopReason,
}

/// Seeded uniform split of an unaugmented dataset into train/validation
/// parts. Both sides keep their D0 origin ids, so augmented descendants of
/// validation instances can be excluded later.
pub fn split_validation(d0: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = d0.len();
    let n_val = ((n as f64) * fraction).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::EmptySplit {
            train: n.saturating_sub(n_val),
            val: n_val,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let (val_idx, train_idx) = idx.split_at(n_val);

    let pick = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        Dataset::from_parts(
            d0.geometry().clone(),
            d0.tag().clone(),
            d0.norm(),
            ids.iter().map(|&i| d0.instances()[i].clone()).collect(),
        )
    };
    Ok((pick(train_idx), pick(val_idx)))
}

fn gather_batch(data: &TensorData, order: &[usize], from: usize, to: usize) -> (Tensor, Vec<f64>) {
    let shape = data.features.shape();
    let row = shape[1] * shape[2] * shape[3];
    let n = to - from;
    let mut features = Vec::with_capacity(n * row);
    let mut labels = Vec::with_capacity(n);
    for &i in &order[from..to] {
        features.extend_from_slice(&data.features.data()[i * row..(i + 1) * row]);
        labels.push(data.labels[i]);
    }
    (
        Tensor::from_vec(vec![n, shape[1], shape[2], shape[3]], features)
            .expect("gathered rows match shape"),
        labels,
    )
}

/// Eval-mode MSE over a dataset, computed in fixed-size chunks.
pub fn eval_mse(model: &Model, data: &TensorData, chunk: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len();
    let order: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    let mut at = 0;
    while at < n {
        let to = (at + chunk).min(n);
        let (batch, labels) = gather_batch(data, &order, at, to);
        let preds = model.forward_eval(&batch)?;
        for (p, y) in preds.data().iter().zip(labels.iter()) {
            let e = y - p;
            total += e * e;
        }
        at = to;
    }
    Ok(total / n as f64)
}

struct OptimizerState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl OptimizerState {
    fn new(model: &Model) -> Self {
        let zeros: Vec<Vec<f64>> = model
            .params()
            .iter()
            .map(|p| vec![0.0; p.value.len()])
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut Model, opt: &Optimizer) {
        self.t += 1;
        match *opt {
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                for (pi, p) in model.params_mut().iter_mut().enumerate() {
                    let m = &mut self.m[pi];
                    let v = &mut self.v[pi];
                    let grad = p.grad.data().to_vec();
                    for (i, val) in p.value.data_mut().iter_mut().enumerate() {
                        let g = grad[i];
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                        let mhat = m[i] / bc1;
                        let vhat = v[i] / bc2;
                        *val -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
            Optimizer::Sgd { lr, momentum } => {
                for (pi, p) in model.params_mut().iter_mut().enumerate() {
                    let vel = &mut self.m[pi];
                    let grad = p.grad.data().to_vec();
                    for (i, val) in p.value.data_mut().iter_mut().enumerate() {
                        vel[i] = momentum * vel[i] + grad[i];
                        *val -= lr * vel[i];
                    }
                }
            }
        }
    }
}

/// Trains a model, returning the weights of the best validation epoch.
pub fn train(
    model: Model,
    train_set: &TensorData,
    val_set: &TensorData,
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    if val_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut model = model;
    let fit: Option<ModeFit> = if cfg.loss.needs_mode_fit() {
        Some(estimate_mode_sigma(&train_set.labels, cfg.mode_bins)?)
    } else {
        None
    };

    let n = train_set.len();
    let shuffle_base = cfg.shuffle_seed.unwrap_or_else(|| derive(cfg.seed, 0x5u64));
    let dropout_base = derive(cfg.seed, 0xd0u64);

    let mut state = OptimizerState::new(&model);
    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: None,
        stopped: StopReason::MaxEpochs,
    };
    let mut best_val = f64::INFINITY;
    let mut best_params: Option<Vec<crate::nn::Param>> = None;
    let mut wait = 0usize;

    for epoch in 0..cfg.max_epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(derive(shuffle_base, epoch as u64));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let mut at = 0usize;
        let mut batch_idx = 0u64;
        while at < n {
            let to = (at + cfg.batch_size).min(n);
            let (batch, labels) = gather_batch(train_set, &order, at, to);
            let preds =
                model.forward_train(&batch, derive2(dropout_base, epoch as u64, batch_idx))?;
            let value = loss_value(preds.data(), &labels, &cfg.loss, fit.as_ref())?;
            if !value.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            let grad = loss_gradient(preds.data(), &labels, &cfg.loss, fit.as_ref())?;
            model.backward(&Tensor::from_vec(vec![labels.len(), 1], grad)?)?;
            state.step(&mut model, &cfg.optimizer);

            loss_sum += value;
            batches += 1;
            at = to;
            batch_idx += 1;
        }

        let val_loss = eval_mse(&model, val_set, cfg.batch_size)?;
        if !val_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.epochs.push(EpochRecord {
            train_loss: loss_sum / batches as f64,
            val_loss,
        });

        if val_loss < best_val {
            best_val = val_loss;
            history.best_epoch = Some(epoch);
            best_params = Some(model.params().to_vec());
        }
        // Patience counts epochs without a min_delta improvement over the
        // best seen so far.
        let improved = history.best_epoch == Some(epoch)
            && (epoch == 0 || best_prev_gap(&history.epochs, epoch) > cfg.min_delta);
        if improved {
            wait = 0;
        } else {
            wait += 1;
        }
        if wait > cfg.patience {
            history.stopped = StopReason::Patience;
            break;
        }
    }

    if let Some(best) = best_params {
        for (p, b) in model.params_mut().iter_mut().zip(best) {
            p.value = b.value;
        }
    }
    Ok((model, history))
}

/// Gap between the best validation loss before `epoch` and the value at
/// `epoch` (positive when the new epoch is better).
fn best_prev_gap(epochs: &[EpochRecord], epoch: usize) -> f64 {
    let prev_best = epochs[..epoch]
        .iter()
        .map(|e| e.val_loss)
        .fold(f64::INFINITY, f64::min);
    prev_best - epochs[epoch].val_loss
}

/// Continues training from existing weights; nothing is re-initialized or
/// frozen. With `max_epochs` 0 the model comes back bit-identical.
pub fn transfer_train(
    pretrained: Model,
    train_set: &TensorData,
    val_set: &TensorData,
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    let (l, h, w) = pretrained.arch().input;
    let shape = train_set.features.shape();
    if shape[1] != l || shape[2] != h || shape[3] != w {
        return Err(Error::ShapeMismatch {
            what: "transfer data".into(),
            expected: vec![0, l, h, w],
            got: shape.to_vec(),
        });
    }
    train(pretrained, train_set, val_set, cfg)
}

/// How each repeat run starts.
pub enum StartMode<'a> {
    /// Fresh Glorot initialization per run.
    Fresh(&'a ModelArch),
    /// Clone of a pretrained model; runs differ only in dropout masks.
    Pretrained(&'a Model),
}

pub struct RepeatPlan<'a> {
    pub start: StartMode<'a>,
    pub train: &'a TensorData,
    pub val: &'a TensorData,
    pub test: &'a TensorData,
    pub cfg: TrainConfig,
}

/// Outcome of one repeat run. Failed (diverged) runs keep their error text.
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub outcome: std::result::Result<RunSuccess, String>,
}

pub struct RunSuccess {
    pub model: Model,
    pub history: TrainHistory,
    pub test_mse: f64,
}

/// Aggregate statistics over the successful runs of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatStats {
    pub per_run_mse: Vec<Option<f64>>,
    pub optimal: f64,
    pub mean: f64,
    pub failed: usize,
}

impl RepeatStats {
    pub fn from_mses(per_run_mse: Vec<Option<f64>>) -> Result<Self> {
        let ok: Vec<f64> = per_run_mse.iter().filter_map(|m| *m).collect();
        if ok.is_empty() {
            return Err(Error::AllRunsFailed {
                n: per_run_mse.len(),
            });
        }
        let optimal = ok.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = ok.iter().sum::<f64>() / ok.len() as f64;
        Ok(Self {
            failed: per_run_mse.len() - ok.len(),
            per_run_mse,
            optimal,
            mean,
        })
    }
}

/// Runs `n_repeats` independent trainings. Run `k` derives its seed from
/// `(base_seed, k)`. Fresh starts re-initialize per run; pretrained starts
/// share the starting weights and the shuffle stream, so repeats differ only
/// via dropout masks. Runs may execute in parallel; results merge by index.
pub fn run_repeats(plan: &RepeatPlan, n_repeats: usize, base_seed: u64) -> Vec<RunResult> {
    let shared_shuffle = match plan.start {
        StartMode::Pretrained(_) => Some(
            plan.cfg
                .shuffle_seed
                .unwrap_or_else(|| derive(base_seed, 0x5f)),
        ),
        StartMode::Fresh(_) => plan.cfg.shuffle_seed,
    };
    parallel::map_indexed(n_repeats, usize::MAX, |k| {
        let run_seed = derive(base_seed, k as u64);
        let mut cfg = plan.cfg.clone();
        cfg.seed = derive(run_seed, 1);
        cfg.shuffle_seed = shared_shuffle;
        let start = match plan.start {
            StartMode::Fresh(arch) => Model::init(arch.clone(), derive(run_seed, 0)),
            StartMode::Pretrained(model) => Ok(model.clone()),
        };
        let outcome = start
            .and_then(|model| train(model, plan.train, plan.val, &cfg))
            .and_then(|(model, history)| {
                let test_mse = eval_mse(&model, plan.test, cfg.batch_size)?;
                Ok(RunSuccess {
                    model,
                    history,
                    test_mse,
                })
            })
            .map_err(|e| e.to_string());
        RunResult {
            run: k,
            seed: run_seed,
            outcome,
        }
    })
}

/// Stats over the outcomes of [`run_repeats`].
pub fn repeat_stats(results: &[RunResult]) -> Result<RepeatStats> {
    RepeatStats::from_mses(
        results
            .iter()
            .map(|r| r.outcome.as_ref().ok().map(|s| s.test_mse))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{CoreGeometry, MaskSpec};
    use crate::nn::{Activation, LayerSpec};
    use crate::oracle::{generate_dataset, DirectionalMode, OracleConfig};
    use std::sync::Arc;

    fn small_dataset(n: usize, seed: u64) -> Dataset {
        let g = Arc::new(CoreGeometry::new(5, 5, 2, MaskSpec::Full).unwrap());
        let oc = OracleConfig {
            baseline: 1.0,
            radial_scale: 2.0,
            directional_mode: DirectionalMode::OddX,
            break_weight: 0.2,
            noise_std: 0.3,
            seed: 7,
        };
        generate_dataset(g, &oc, n, (0.1, 0.6), seed).unwrap()
    }

    #[test]
    fn split_is_disjoint_complete_and_deterministic() {
        let d0 = small_dataset(100, 1);
        let (train, val) = split_validation(&d0, 0.1, 42).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(val.len(), 10);
        let mut origins: Vec<usize> = train
            .instances()
            .iter()
            .chain(val.instances())
            .map(|i| i.origin)
            .collect();
        origins.sort_unstable();
        assert_eq!(origins, (0..100).collect::<Vec<_>>());

        let (t2, v2) = split_validation(&d0, 0.1, 42).unwrap();
        assert_eq!(train, t2);
        assert_eq!(val, v2);
    }

    #[test]
    fn augmented_descendants_of_validation_stay_out_of_training() {
        use crate::augment::{build_training_set, AugmentOp};
        let d0 = small_dataset(60, 3);
        let (train_part, val) = split_validation(&d0, 0.2, 9).unwrap();
        let combined = build_training_set(&train_part, &AugmentOp::ALL).unwrap();
        let val_origins: std::collections::HashSet<usize> =
            val.instances().iter().map(|i| i.origin).collect();
        for instance in combined.instances() {
            assert!(!val_origins.contains(&instance.origin));
        }
    }

    #[test]
    fn split_rejects_empty_sides() {
        let d0 = small_dataset(5, 1);
        assert!(matches!(
            split_validation(&d0, 0.01, 1).unwrap_err(),
            Error::EmptySplit { .. }
        ));
        assert!(split_validation(&d0, 0.99, 1).is_err());
    }

    fn linear_arch() -> ModelArch {
        ModelArch {
            input: (1, 1, 1),
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Linear,
                    dropout: 0.0,
                },
            ],
        }
    }

    fn linear_data(n: usize) -> TensorData {
        // y = 2x on a symmetric grid; least squares gives weight 2, bias 0.
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        TensorData {
            features: Tensor::from_vec(vec![n, 1, 1, 1], xs.clone()).unwrap(),
            labels: xs.iter().map(|x| 2.0 * x).collect(),
        }
    }

    #[test]
    fn linear_model_converges_to_slope_two() {
        let data = linear_data(64);
        let val = linear_data(16);
        let cfg = TrainConfig {
            optimizer: Optimizer::Adam {
                lr: 0.05,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            batch_size: 16,
            max_epochs: 400,
            patience: 50,
            min_delta: 1e-12,
            loss: LossSpec::Mse,
            seed: 4,
            ..TrainConfig::default()
        };
        let model = Model::init(linear_arch(), 1).unwrap();
        let (trained, history) = train(model, &data, &val, &cfg).unwrap();
        let w = trained.param("L1.dense.weight").unwrap().value.data()[0];
        let b = trained.param("L1.dense.bias").unwrap().value.data()[0];
        assert!((w - 2.0).abs() < 1e-3, "w = {w} after {:?}", history.epochs.len());
        assert!(b.abs() < 1e-3, "b = {b}");
    }

    #[test]
    fn training_is_deterministic() {
        let d0 = small_dataset(80, 5);
        let (train_part, val) = split_validation(&d0, 0.1, 2).unwrap();
        let train_data = train_part.to_tensor_data();
        let val_data = val.to_tensor_data();
        let cfg = TrainConfig {
            max_epochs: 3,
            seed: 11,
            ..TrainConfig::default()
        };
        let arch = ModelArch::simplified((2, 5, 5));
        let run = || {
            let model = Model::init(arch.clone(), 21).unwrap();
            train(model, &train_data, &val_data, &cfg).unwrap()
        };
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(h1, h2);
        assert_eq!(m1.weights_digest(), m2.weights_digest());
    }

    #[test]
    fn patience_zero_stops_on_first_non_improving_epoch() {
        let data = linear_data(8);
        let cfg = TrainConfig {
            optimizer: Optimizer::Sgd {
                lr: 0.0,
                momentum: 0.0,
            },
            batch_size: 8,
            max_epochs: 10,
            patience: 0,
            loss: LossSpec::Mse,
            seed: 1,
            ..TrainConfig::default()
        };
        let model = Model::init(linear_arch(), 3).unwrap();
        let (_, history) = train(model, &data, &data, &cfg).unwrap();
        // lr = 0: epoch 0 sets the best, epoch 1 cannot improve, stop.
        assert_eq!(history.epochs.len(), 2);
        assert_eq!(history.stopped, StopReason::Patience);
        assert_eq!(history.best_epoch, Some(0));
    }

    #[test]
    fn best_epoch_weights_are_restored() {
        let d0 = small_dataset(60, 8);
        let (train_part, val) = split_validation(&d0, 0.2, 3).unwrap();
        let train_data = train_part.to_tensor_data();
        let val_data = val.to_tensor_data();
        let cfg = TrainConfig {
            max_epochs: 6,
            patience: 10,
            seed: 9,
            ..TrainConfig::default()
        };
        let model = Model::init(ModelArch::simplified((2, 5, 5)), 17).unwrap();
        let (trained, history) = train(model, &train_data, &val_data, &cfg).unwrap();
        let best = history.best_epoch.unwrap();
        let best_val = history.epochs[best].val_loss;
        for (i, e) in history.epochs.iter().enumerate() {
            assert!(e.val_loss >= best_val || i == best);
        }
        // Re-evaluating the returned weights reproduces the recorded best.
        let again = eval_mse(&trained, &val_data, 32).unwrap();
        assert_eq!(again, best_val);
    }

    #[test]
    fn divergence_aborts_with_diagnostic() {
        let data = linear_data(16);
        let cfg = TrainConfig {
            optimizer: Optimizer::Sgd {
                lr: 1e12,
                momentum: 0.9,
            },
            batch_size: 4,
            max_epochs: 50,
            loss: LossSpec::Mse,
            seed: 2,
            ..TrainConfig::default()
        };
        let model = Model::init(linear_arch(), 5).unwrap();
        match train(model, &data, &data, &cfg) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {:?}", other.map(|(_, h)| h)),
        }
    }

    #[test]
    fn transfer_with_zero_epochs_is_bit_identical() {
        let data = linear_data(8);
        let cfg = TrainConfig {
            max_epochs: 0,
            loss: LossSpec::Mse,
            seed: 3,
            ..TrainConfig::default()
        };
        let pretrained = Model::init(linear_arch(), 8).unwrap();
        let digest = pretrained.weights_digest();
        let (out, history) = transfer_train(pretrained, &data, &data, &cfg).unwrap();
        assert_eq!(out.weights_digest(), digest);
        assert!(history.epochs.is_empty());
        assert_eq!(history.best_epoch, None);
        assert_eq!(history.stopped, StopReason::MaxEpochs);
    }

    #[test]
    fn transfer_rejects_mismatched_shapes() {
        let pretrained = Model::init(ModelArch::simplified((2, 5, 5)), 1).unwrap();
        let data = linear_data(8);
        assert!(matches!(
            transfer_train(pretrained, &data, &data, &TrainConfig::default()).unwrap_err(),
            Error::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn repeat_stats_arithmetic() {
        let stats =
            RepeatStats::from_mses(vec![Some(4e-3), Some(2e-3), Some(6e-3)]).unwrap();
        assert_eq!(stats.optimal, 2e-3);
        assert!((stats.mean - 4e-3).abs() < 1e-18);
        assert_eq!(stats.failed, 0);
        assert!(stats.optimal <= stats.mean);

        let single = RepeatStats::from_mses(vec![Some(5e-3)]).unwrap();
        assert_eq!(single.optimal, single.mean);

        let with_failure = RepeatStats::from_mses(vec![Some(1.0), None]).unwrap();
        assert_eq!(with_failure.failed, 1);
        assert!(RepeatStats::from_mses(vec![None, None]).is_err());
    }

    #[test]
    fn pretrained_repeats_share_starting_weights() {
        let d0 = small_dataset(40, 12);
        let (train_part, val) = split_validation(&d0, 0.2, 4).unwrap();
        let train_data = train_part.to_tensor_data();
        let val_data = val.to_tensor_data();
        let pretrained = Model::init(ModelArch::simplified((2, 5, 5)), 77).unwrap();
        let digest = pretrained.weights_digest();
        let plan = RepeatPlan {
            start: StartMode::Pretrained(&pretrained),
            train: &train_data,
            val: &val_data,
            test: &val_data,
            cfg: TrainConfig {
                max_epochs: 0,
                ..TrainConfig::default()
            },
        };
        // Zero-epoch runs expose the starting weights at "epoch 0".
        let results = run_repeats(&plan, 3, 100);
        for r in &results {
            let s = r.outcome.as_ref().unwrap();
            assert_eq!(s.model.weights_digest(), digest, "run {}", r.run);
        }
    }

    #[test]
    fn fresh_repeats_reinitialize_per_run() {
        let d0 = small_dataset(40, 13);
        let (train_part, val) = split_validation(&d0, 0.2, 4).unwrap();
        let train_data = train_part.to_tensor_data();
        let val_data = val.to_tensor_data();
        let arch = ModelArch::simplified((2, 5, 5));
        let plan = RepeatPlan {
            start: StartMode::Fresh(&arch),
            train: &train_data,
            val: &val_data,
            test: &val_data,
            cfg: TrainConfig {
                max_epochs: 0,
                ..TrainConfig::default()
            },
        };
        let results = run_repeats(&plan, 3, 100);
        let digests: std::collections::HashSet<String> = results
            .iter()
            .map(|r| r.outcome.as_ref().unwrap().model.weights_digest())
            .collect();
        assert_eq!(digests.len(), 3);
    }
}
