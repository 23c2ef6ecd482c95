//! Minimal dense/conv network with reverse-mode gradients.
//!
//! Everything is 64-bit and deterministic: initialization is seeded, train
//! mode draws per-instance dropout masks from a seeded stream, eval mode is
//! dropout-free (inverted dropout scales kept units during training so no
//! rescale is needed at eval). Forward in train mode retains the
//! intermediates backward needs.

mod store;
mod tensor;

pub use store::{load_weights, save_weights};
pub use tensor::Tensor;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::parallel;
use crate::seeding::derive2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Softplus,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Softplus => {
                if x > 0.0 {
                    x + (-x).exp().ln_1p()
                } else {
                    x.exp().ln_1p()
                }
            }
            Activation::Linear => x,
        }
    }

    /// Derivative evaluated at the pre-activation.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Softplus => sigmoid(x),
            Activation::Linear => 1.0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One architecture layer. Dropout is applied after the activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv2dSame {
        out_channels: usize,
        kernel: usize,
        activation: Activation,
        dropout: f64,
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
        dropout: f64,
    },
}

/// Network architecture over a `(levels, height, width)` input, the vertical
/// levels acting as input channels of the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArch {
    pub input: (usize, usize, usize),
    pub layers: Vec<LayerSpec>,
}

impl ModelArch {
    /// The simplified regression stack: one 16-filter 3x3 conv and two dense
    /// layers (32 then 64 units), tanh/softplus/tanh activations with 20%
    /// dropout each, and a linear scalar head.
    pub fn simplified(input: (usize, usize, usize)) -> Self {
        Self {
            input,
            layers: vec![
                LayerSpec::Conv2dSame {
                    out_channels: 16,
                    kernel: 3,
                    activation: Activation::Tanh,
                    dropout: 0.2,
                },
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    units: 32,
                    activation: Activation::Softplus,
                    dropout: 0.2,
                },
                LayerSpec::Dense {
                    units: 64,
                    activation: Activation::Tanh,
                    dropout: 0.2,
                },
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Linear,
                    dropout: 0.0,
                },
            ],
        }
    }

    /// Parameter names and shapes in declaration (and serialization) order.
    pub fn param_specs(&self) -> Result<Vec<(String, Vec<usize>)>> {
        Ok(self
            .plan()?
            .iter()
            .flat_map(|l| l.param_specs())
            .collect())
    }

    pub(crate) fn plan(&self) -> Result<Vec<LayerPlan>> {
        enum Shape {
            Spatial(usize, usize, usize),
            Flat(usize),
        }
        let (l, h, w) = self.input;
        if l * h * w == 0 {
            return Err(Error::InvalidValue {
                name: "arch input",
                message: format!("zero-sized input {:?}", self.input),
            });
        }
        let mut shape = Shape::Spatial(l, h, w);
        let mut plan = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            let resolved = match layer {
                LayerSpec::Conv2dSame {
                    out_channels,
                    kernel,
                    activation,
                    dropout,
                } => {
                    let Shape::Spatial(c, h, w) = shape else {
                        return Err(Error::InvalidValue {
                            name: "arch",
                            message: format!("conv layer {idx} needs a spatial input"),
                        });
                    };
                    if kernel % 2 == 0 || *kernel == 0 {
                        return Err(Error::InvalidValue {
                            name: "conv kernel",
                            message: format!("same-padding needs an odd kernel, got {kernel}"),
                        });
                    }
                    check_dropout(*dropout)?;
                    shape = Shape::Spatial(*out_channels, h, w);
                    LayerPlan {
                        index: idx,
                        kind: LayerKind::Conv {
                            in_ch: c,
                            out_ch: *out_channels,
                            k: *kernel,
                            h,
                            w,
                        },
                        activation: *activation,
                        dropout: *dropout,
                        out_size: out_channels * h * w,
                    }
                }
                LayerSpec::Flatten => {
                    let Shape::Spatial(c, h, w) = shape else {
                        return Err(Error::InvalidValue {
                            name: "arch",
                            message: format!("flatten layer {idx} needs a spatial input"),
                        });
                    };
                    shape = Shape::Flat(c * h * w);
                    LayerPlan {
                        index: idx,
                        kind: LayerKind::Flatten,
                        activation: Activation::Linear,
                        dropout: 0.0,
                        out_size: c * h * w,
                    }
                }
                LayerSpec::Dense {
                    units,
                    activation,
                    dropout,
                } => {
                    let in_features = match shape {
                        Shape::Flat(f) => f,
                        Shape::Spatial(..) => {
                            return Err(Error::InvalidValue {
                                name: "arch",
                                message: format!("dense layer {idx} needs a flattened input"),
                            })
                        }
                    };
                    check_dropout(*dropout)?;
                    shape = Shape::Flat(*units);
                    LayerPlan {
                        index: idx,
                        kind: LayerKind::Dense {
                            in_features,
                            out_features: *units,
                        },
                        activation: *activation,
                        dropout: *dropout,
                        out_size: *units,
                    }
                }
            };
            plan.push(resolved);
        }
        match shape {
            Shape::Flat(1) => Ok(plan),
            _ => Err(Error::InvalidValue {
                name: "arch",
                message: "output must be a single value".into(),
            }),
        }
    }
}

fn check_dropout(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidValue {
            name: "dropout",
            message: format!("rate must be in [0, 1), got {rate}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub(crate) enum LayerKind {
    Conv {
        in_ch: usize,
        out_ch: usize,
        k: usize,
        h: usize,
        w: usize,
    },
    Flatten,
    Dense {
        in_features: usize,
        out_features: usize,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct LayerPlan {
    index: usize,
    kind: LayerKind,
    activation: Activation,
    dropout: f64,
    out_size: usize,
}

impl LayerPlan {
    fn param_specs(&self) -> Vec<(String, Vec<usize>)> {
        match self.kind {
            LayerKind::Conv {
                in_ch, out_ch, k, ..
            } => vec![
                (
                    format!("L{}.conv.weight", self.index),
                    vec![out_ch, in_ch, k, k],
                ),
                (format!("L{}.conv.bias", self.index), vec![out_ch]),
            ],
            LayerKind::Flatten => vec![],
            LayerKind::Dense {
                in_features,
                out_features,
            } => vec![
                (
                    format!("L{}.dense.weight", self.index),
                    vec![in_features, out_features],
                ),
                (format!("L{}.dense.bias", self.index), vec![out_features]),
            ],
        }
    }

    fn glorot_bound(&self) -> Option<f64> {
        match self.kind {
            LayerKind::Conv {
                in_ch, out_ch, k, ..
            } => {
                let fan_in = (in_ch * k * k) as f64;
                let fan_out = (out_ch * k * k) as f64;
                Some((6.0 / (fan_in + fan_out)).sqrt())
            }
            LayerKind::Dense {
                in_features,
                out_features,
            } => Some((6.0 / (in_features + out_features) as f64).sqrt()),
            LayerKind::Flatten => None,
        }
    }
}

/// Named parameter tensor with its gradient slot.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

struct Tape {
    batch: usize,
    /// Input to each layer, layer order.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer (empty for flatten).
    pres: Vec<Vec<f64>>,
    /// Scaled dropout mask (0 or 1/(1-rate)) per layer output element.
    masks: Vec<Option<Vec<f64>>>,
}

/// A network instance: architecture plus parameter tensors.
pub struct Model {
    arch: ModelArch,
    plan: Vec<LayerPlan>,
    params: Vec<Param>,
    init_seed: u64,
    tape: Option<Tape>,
}

impl Clone for Model {
    fn clone(&self) -> Self {
        Self {
            arch: self.arch.clone(),
            plan: self.plan.clone(),
            params: self.params.clone(),
            init_seed: self.init_seed,
            tape: None,
        }
    }
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("arch", &self.arch)
            .field("params", &self.params.len())
            .field("init_seed", &self.init_seed)
            .finish()
    }
}

impl Model {
    /// Glorot-uniform weights, zero biases, deterministic in the seed.
    pub fn init(arch: ModelArch, seed: u64) -> Result<Self> {
        let plan = arch.plan()?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for layer in &plan {
            let specs = layer.param_specs();
            if specs.is_empty() {
                continue;
            }
            let bound = layer.glorot_bound().expect("parameterized layer");
            // weight first, then bias, matching param_specs order
            let (w_name, w_shape) = specs[0].clone();
            let w_len: usize = w_shape.iter().product();
            let data: Vec<f64> = (0..w_len).map(|_| rng.gen_range(-bound..bound)).collect();
            params.push(Param {
                name: w_name,
                value: Tensor::from_vec(w_shape.clone(), data)?,
                grad: Tensor::zeros(w_shape),
            });
            let (b_name, b_shape) = specs[1].clone();
            params.push(Param {
                name: b_name,
                value: Tensor::zeros(b_shape.clone()),
                grad: Tensor::zeros(b_shape),
            });
        }
        Ok(Self {
            arch,
            plan,
            params,
            init_seed: seed,
            tape: None,
        })
    }

    pub(crate) fn from_parts(arch: ModelArch, params: Vec<Param>, init_seed: u64) -> Result<Self> {
        let plan = arch.plan()?;
        Ok(Self {
            arch,
            plan,
            params,
            init_seed,
            tape: None,
        })
    }

    pub fn arch(&self) -> &ModelArch {
        &self.arch
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// SHA-256 over all parameter values, little-endian, declaration order.
    pub fn weights_digest(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.params {
            for v in p.value.data() {
                hasher.update(v.to_le_bytes());
            }
        }
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        let (l, h, w) = self.arch.input;
        let shape = batch.shape();
        if shape.len() != 4 || shape[1] != l || shape[2] != h || shape[3] != w || shape[0] == 0 {
            return Err(Error::ShapeMismatch {
                what: "input batch".into(),
                expected: vec![0, l, h, w],
                got: shape.to_vec(),
            });
        }
        Ok(shape[0])
    }

    /// Deterministic dropout-free forward pass.
    pub fn forward_eval(&self, batch: &Tensor) -> Result<Tensor> {
        let n = self.check_batch(batch)?;
        let (out, _) = self.run_forward(batch.data(), n, None);
        Tensor::from_vec(vec![n, 1], out)
    }

    /// Training forward pass: applies inverted dropout using masks derived
    /// from `dropout_seed` and retains intermediates for [`Model::backward`].
    pub fn forward_train(&mut self, batch: &Tensor, dropout_seed: u64) -> Result<Tensor> {
        let n = self.check_batch(batch)?;
        let (out, tape) = self.run_forward(batch.data(), n, Some(dropout_seed));
        self.tape = tape;
        Tensor::from_vec(vec![n, 1], out)
    }

    fn run_forward(
        &self,
        batch: &[f64],
        n: usize,
        dropout_seed: Option<u64>,
    ) -> (Vec<f64>, Option<Tape>) {
        let mut tape = dropout_seed.map(|_| Tape {
            batch: n,
            inputs: Vec::with_capacity(self.plan.len()),
            pres: Vec::with_capacity(self.plan.len()),
            masks: Vec::with_capacity(self.plan.len()),
        });

        let mut current = batch.to_vec();
        let mut param_cursor = 0usize;
        for (layer_idx, layer) in self.plan.iter().enumerate() {
            if let Some(t) = tape.as_mut() {
                t.inputs.push(current.clone());
            }
            let pre = match layer.kind {
                LayerKind::Conv {
                    in_ch,
                    out_ch,
                    k,
                    h,
                    w,
                } => {
                    let weight = self.params[param_cursor].value.data();
                    let bias = self.params[param_cursor + 1].value.data();
                    param_cursor += 2;
                    conv_forward(&current, n, in_ch, h, w, weight, bias, out_ch, k)
                }
                LayerKind::Flatten => std::mem::take(&mut current),
                LayerKind::Dense {
                    in_features,
                    out_features,
                } => {
                    let weight = self.params[param_cursor].value.data();
                    let bias = self.params[param_cursor + 1].value.data();
                    param_cursor += 2;
                    dense_forward(&current, n, in_features, weight, bias, out_features)
                }
            };

            let is_flatten = matches!(layer.kind, LayerKind::Flatten);
            let mut out = if is_flatten {
                pre.clone()
            } else {
                let act = layer.activation;
                let mut out = pre.clone();
                for v in out.iter_mut() {
                    *v = act.apply(*v);
                }
                out
            };

            let mask = match (dropout_seed, layer.dropout > 0.0) {
                (Some(seed), true) => {
                    let rate = layer.dropout;
                    let scale = 1.0 / (1.0 - rate);
                    let unit_count = layer.out_size;
                    let rows = parallel::map_indexed(n, unit_count * 8, |i| {
                        let mut rng = ChaCha12Rng::seed_from_u64(derive2(
                            seed,
                            layer_idx as u64,
                            i as u64,
                        ));
                        (0..unit_count)
                            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { scale })
                            .collect::<Vec<f64>>()
                    });
                    let mut mask = Vec::with_capacity(n * unit_count);
                    for row in rows {
                        mask.extend(row);
                    }
                    for (v, m) in out.iter_mut().zip(mask.iter()) {
                        *v *= m;
                    }
                    Some(mask)
                }
                _ => None,
            };

            if let Some(t) = tape.as_mut() {
                t.pres.push(if is_flatten { Vec::new() } else { pre });
                t.masks.push(mask);
            }
            current = out;
        }
        (current, tape)
    }

    /// Populates every parameter's gradient slot by back-propagating
    /// `upstream` (shape `n x 1`) through the retained forward pass.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<()> {
        let tape = self.tape.take().ok_or(Error::BackwardWithoutForward)?;
        if upstream.shape() != [tape.batch, 1] {
            return Err(Error::ShapeMismatch {
                what: "upstream gradient".into(),
                expected: vec![tape.batch, 1],
                got: upstream.shape().to_vec(),
            });
        }
        for p in &mut self.params {
            p.grad.fill(0.0);
        }

        // Parameter cursor positioned after the last layer's params.
        let mut param_end = self.params.len();
        let mut grad = upstream.data().to_vec();
        let n = tape.batch;

        for (layer_idx, layer) in self.plan.iter().enumerate().rev() {
            // Through dropout, then the activation.
            if let Some(mask) = &tape.masks[layer_idx] {
                for (g, m) in grad.iter_mut().zip(mask.iter()) {
                    *g *= m;
                }
            }
            if !matches!(layer.kind, LayerKind::Flatten) {
                let pre = &tape.pres[layer_idx];
                let act = layer.activation;
                for (g, &p) in grad.iter_mut().zip(pre.iter()) {
                    *g *= act.derivative(p);
                }
            }

            match layer.kind {
                LayerKind::Flatten => {}
                LayerKind::Dense {
                    in_features,
                    out_features,
                } => {
                    param_end -= 2;
                    let input = &tape.inputs[layer_idx];
                    let (dw, db, dx) = dense_backward(
                        input,
                        &grad,
                        self.params[param_end].value.data(),
                        n,
                        in_features,
                        out_features,
                    );
                    self.params[param_end].grad.data_mut().copy_from_slice(&dw);
                    self.params[param_end + 1]
                        .grad
                        .data_mut()
                        .copy_from_slice(&db);
                    grad = dx;
                }
                LayerKind::Conv {
                    in_ch,
                    out_ch,
                    k,
                    h,
                    w,
                } => {
                    param_end -= 2;
                    let input = &tape.inputs[layer_idx];
                    let (dw, db, dx) = conv_backward(
                        input,
                        &grad,
                        self.params[param_end].value.data(),
                        n,
                        in_ch,
                        out_ch,
                        k,
                        h,
                        w,
                    );
                    self.params[param_end].grad.data_mut().copy_from_slice(&dw);
                    self.params[param_end + 1]
                        .grad
                        .data_mut()
                        .copy_from_slice(&db);
                    grad = dx;
                }
            }
        }
        Ok(())
    }
}

fn conv_forward(
    input: &[f64],
    n: usize,
    in_ch: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    bias: &[f64],
    out_ch: usize,
    k: usize,
) -> Vec<f64> {
    let pad = k / 2;
    let plane = h * w;
    let mut out = vec![0.0; n * out_ch * plane];
    // One task per (instance, out-channel) plane keeps summation order fixed.
    parallel::for_each_chunk_mut(&mut out, plane, in_ch * k * k * 2, |task, out_plane| {
        let ni = task / out_ch;
        let oc = task % out_ch;
        let b = bias[oc];
        for r in 0..h {
            for c in 0..w {
                let mut acc = b;
                for ic in 0..in_ch {
                    let in_base = (ni * in_ch + ic) * plane;
                    let w_base = ((oc * in_ch + ic) * k) * k;
                    for dr in 0..k {
                        let rr = r + dr;
                        if rr < pad || rr - pad >= h {
                            continue;
                        }
                        let rr = rr - pad;
                        for dc in 0..k {
                            let cc = c + dc;
                            if cc < pad || cc - pad >= w {
                                continue;
                            }
                            let cc = cc - pad;
                            acc += input[in_base + rr * w + cc] * weight[w_base + dr * k + dc];
                        }
                    }
                }
                out_plane[r * w + c] = acc;
            }
        }
    });
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    grad_pre: &[f64],
    weight: &[f64],
    n: usize,
    in_ch: usize,
    out_ch: usize,
    k: usize,
    h: usize,
    w: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let pad = k / 2;
    let plane = h * w;

    let mut dw = vec![0.0; out_ch * in_ch * k * k];
    parallel::for_each_chunk_mut(&mut dw, in_ch * k * k, n * h * w * 2, |oc, dw_oc| {
        for ni in 0..n {
            let g_base = (ni * out_ch + oc) * plane;
            for r in 0..h {
                for c in 0..w {
                    let g = grad_pre[g_base + r * w + c];
                    if g == 0.0 {
                        continue;
                    }
                    for ic in 0..in_ch {
                        let in_base = (ni * in_ch + ic) * plane;
                        for dr in 0..k {
                            let rr = r + dr;
                            if rr < pad || rr - pad >= h {
                                continue;
                            }
                            let rr = rr - pad;
                            for dc in 0..k {
                                let cc = c + dc;
                                if cc < pad || cc - pad >= w {
                                    continue;
                                }
                                let cc = cc - pad;
                                dw_oc[(ic * k + dr) * k + dc] +=
                                    g * input[in_base + rr * w + cc];
                            }
                        }
                    }
                }
            }
        }
    });

    let mut db = vec![0.0; out_ch];
    parallel::for_each_chunk_mut(&mut db, 1, n * plane, |oc, slot| {
        let mut acc = 0.0;
        for ni in 0..n {
            let g_base = (ni * out_ch + oc) * plane;
            for i in 0..plane {
                acc += grad_pre[g_base + i];
            }
        }
        slot[0] = acc;
    });

    let mut dx = vec![0.0; n * in_ch * plane];
    parallel::for_each_chunk_mut(&mut dx, plane, out_ch * k * k * 2, |task, dx_plane| {
        let ni = task / in_ch;
        let ic = task % in_ch;
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for oc in 0..out_ch {
                    let g_base = (ni * out_ch + oc) * plane;
                    let w_base = ((oc * in_ch + ic) * k) * k;
                    for dr in 0..k {
                        let r = y + pad;
                        if r < dr || r - dr >= h {
                            continue;
                        }
                        let r = r - dr;
                        for dc in 0..k {
                            let c = x + pad;
                            if c < dc || c - dc >= w {
                                continue;
                            }
                            let c = c - dc;
                            acc += grad_pre[g_base + r * w + c] * weight[w_base + dr * k + dc];
                        }
                    }
                }
                dx_plane[y * w + x] = acc;
            }
        }
    });

    (dw, db, dx)
}

fn dense_forward(
    input: &[f64],
    n: usize,
    in_features: usize,
    weight: &[f64],
    bias: &[f64],
    out_features: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; n * out_features];
    parallel::for_each_chunk_mut(&mut out, out_features, in_features * 2, |ni, row| {
        row.copy_from_slice(bias);
        let x = &input[ni * in_features..(ni + 1) * in_features];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let w_row = &weight[i * out_features..(i + 1) * out_features];
            for (o, &wv) in row.iter_mut().zip(w_row.iter()) {
                *o += xi * wv;
            }
        }
    });
    out
}

fn dense_backward(
    input: &[f64],
    grad_pre: &[f64],
    weight: &[f64],
    n: usize,
    in_features: usize,
    out_features: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut dw = vec![0.0; in_features * out_features];
    // Block rows of the weight matrix so each task has real work.
    let rows_per_block = (4096 / out_features).max(1);
    parallel::for_each_chunk_mut(&mut dw, rows_per_block * out_features, n * 2, |block, dw_block| {
        let row0 = block * rows_per_block;
        let rows = dw_block.len() / out_features;
        for ni in 0..n {
            let g = &grad_pre[ni * out_features..(ni + 1) * out_features];
            for r in 0..rows {
                let xi = input[ni * in_features + row0 + r];
                if xi == 0.0 {
                    continue;
                }
                let dst = &mut dw_block[r * out_features..(r + 1) * out_features];
                for (d, &gv) in dst.iter_mut().zip(g.iter()) {
                    *d += xi * gv;
                }
            }
        }
    });

    let mut db = vec![0.0; out_features];
    for ni in 0..n {
        let g = &grad_pre[ni * out_features..(ni + 1) * out_features];
        for (d, &gv) in db.iter_mut().zip(g.iter()) {
            *d += gv;
        }
    }

    let mut dx = vec![0.0; n * in_features];
    parallel::for_each_chunk_mut(&mut dx, in_features, out_features * 2, |ni, dx_row| {
        let g = &grad_pre[ni * out_features..(ni + 1) * out_features];
        for (i, d) in dx_row.iter_mut().enumerate() {
            let w_row = &weight[i * out_features..(i + 1) * out_features];
            let mut acc = 0.0;
            for (&wv, &gv) in w_row.iter().zip(g.iter()) {
                acc += wv * gv;
            }
            *d = acc;
        }
    });

    (dw, db, dx)
}
