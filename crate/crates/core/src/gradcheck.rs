//! Finite-difference gradient verification.
//!
//! The checks here only ever call the forward pass and the loss value, so
//! they stay independent of the backward implementation they validate.

use crate::error::Result;
use crate::loss::{loss_gradient, loss_value, LossSpec, ModeFit};
use crate::nn::{Model, Tensor};

/// Central difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_diff<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative error with an absolute floor on the denominator, so near-zero
/// pairs compare on an absolute scale.
pub fn rel_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Maximum relative error between analytic parameter gradients and central
/// finite differences of the scalar loss, over every parameter value.
///
/// The same `dropout_seed` is used for every evaluation so the loss is a
/// smooth function of the parameters even with dropout active.
pub fn check_model_gradients(
    model: &mut Model,
    batch: &Tensor,
    truths: &[f64],
    spec: &LossSpec,
    fit: Option<&ModeFit>,
    dropout_seed: u64,
    h: f64,
) -> Result<f64> {
    // Analytic pass.
    let preds = model.forward_train(batch, dropout_seed)?;
    let grad = loss_gradient(preds.data(), truths, spec, fit)?;
    let upstream = Tensor::from_vec(vec![truths.len(), 1], grad)?;
    model.backward(&upstream)?;
    let analytic: Vec<Vec<f64>> = model.params().iter().map(|p| p.grad.data().to_vec()).collect();

    let mut max_rel: f64 = 0.0;
    for pi in 0..analytic.len() {
        for vi in 0..analytic[pi].len() {
            let original = model.params()[pi].value.data()[vi];

            let eval_at = |x: f64, model: &mut Model| -> Result<f64> {
                model.params_mut()[pi].value.data_mut()[vi] = x;
                let preds = model.forward_train(batch, dropout_seed)?;
                loss_value(preds.data(), truths, spec, fit)
            };
            let plus = eval_at(original + h, model)?;
            let minus = eval_at(original - h, model)?;
            model.params_mut()[pi].value.data_mut()[vi] = original;

            let fd = (plus - minus) / (2.0 * h);
            let rel = rel_error(analytic[pi][vi], fd, 1e-6);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}
