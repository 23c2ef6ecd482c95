//! Finite-difference gradient verification of every layer type and every
//! loss, singly and composed.

use coreseis::gradcheck::check_model_gradients;
use coreseis::loss::{LossSpec, ModeFit, WeightedSpec};
use coreseis::nn::{Activation, LayerSpec, Model, ModelArch, Tensor};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn fit() -> ModeFit {
    let sigma: f64 = 0.2;
    ModeFit {
        mu: 0.45,
        sigma,
        beta: 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()),
    }
}

fn batch(n: usize, shape: (usize, usize, usize), seed: u64) -> (Tensor, Vec<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let len = n * shape.0 * shape.1 * shape.2;
    let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let truths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..0.9)).collect();
    (
        Tensor::from_vec(vec![n, shape.0, shape.1, shape.2], data).unwrap(),
        truths,
    )
}

fn all_losses() -> Vec<LossSpec> {
    let mut specs = vec![
        LossSpec::Mse,
        LossSpec::Mae,
        LossSpec::Huber { delta: 0.3 },
    ];
    for squared in [true, false] {
        for take_mean in [true, false] {
            for floor_one in [true, false] {
                specs.push(LossSpec::Weighted(WeightedSpec {
                    alpha: 2.0,
                    squared,
                    take_mean,
                    floor_one,
                    batch_max_beta: false,
                }));
            }
        }
    }
    specs
}

fn check(arch: ModelArch, shape: (usize, usize, usize), dropout_seed: u64) {
    let (batch, truths) = batch(3, shape, 17);
    let fit = fit();
    for spec in all_losses() {
        let mut model = Model::init(arch.clone(), 5).unwrap();
        let max_rel =
            check_model_gradients(&mut model, &batch, &truths, &spec, Some(&fit), dropout_seed, H)
                .unwrap();
        assert!(max_rel < TOL, "{spec:?}: max rel error {max_rel}");
    }
}

#[test]
fn conv_layer_gradients() {
    let arch = ModelArch {
        input: (2, 4, 4),
        layers: vec![
            LayerSpec::Conv2dSame {
                out_channels: 3,
                kernel: 3,
                activation: Activation::Tanh,
                dropout: 0.0,
            },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Linear,
                dropout: 0.0,
            },
        ],
    };
    check(arch, (2, 4, 4), 3);
}

#[test]
fn dense_tanh_gradients() {
    let arch = ModelArch {
        input: (1, 2, 3),
        layers: vec![
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: 5,
                activation: Activation::Tanh,
                dropout: 0.0,
            },
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Linear,
                dropout: 0.0,
            },
        ],
    };
    check(arch, (1, 2, 3), 4);
}

#[test]
fn dense_softplus_gradients() {
    let arch = ModelArch {
        input: (1, 2, 3),
        layers: vec![
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: 4,
                activation: Activation::Softplus,
                dropout: 0.0,
            },
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Linear,
                dropout: 0.0,
            },
        ],
    };
    check(arch, (1, 2, 3), 5);
}

#[test]
fn dropout_active_gradients() {
    // Dropout masks are fixed by the seed, so the loss stays differentiable.
    let arch = ModelArch {
        input: (1, 3, 3),
        layers: vec![
            LayerSpec::Conv2dSame {
                out_channels: 2,
                kernel: 3,
                activation: Activation::Tanh,
                dropout: 0.3,
            },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: 6,
                activation: Activation::Softplus,
                dropout: 0.4,
            },
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Linear,
                dropout: 0.0,
            },
        ],
    };
    check(arch, (1, 3, 3), 11);
}

#[test]
fn composed_simplified_model_gradients() {
    // The full stack on a 3x3 single-level plan.
    check(ModelArch::simplified((1, 3, 3)), (1, 3, 3), 7);
}
