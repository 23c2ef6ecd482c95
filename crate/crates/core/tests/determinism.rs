//! The parallel kernels must produce the same bits whatever the thread
//! count: work splits over independent output slots and reductions keep a
//! fixed order.

use std::sync::Arc;

use coreseis::lattice::{CoreGeometry, MaskSpec};
use coreseis::loss::LossSpec;
use coreseis::nn::{Model, ModelArch};
use coreseis::oracle::{generate_dataset, DirectionalMode, OracleConfig};
use coreseis::train::{split_validation, train, TrainConfig};

fn pipeline_digest() -> (String, String) {
    let geometry = Arc::new(CoreGeometry::new(9, 9, 3, MaskSpec::Disk(4.0)).unwrap());
    let oc = OracleConfig {
        baseline: 4.0,
        radial_scale: 2.5,
        directional_mode: DirectionalMode::OddX,
        break_weight: 0.1,
        noise_std: 0.5,
        seed: 3,
    };
    let d0 = generate_dataset(geometry, &oc, 120, (0.1, 0.5), 8).unwrap();
    let (train_part, val_part) = split_validation(&d0, 0.1, 5).unwrap();
    let train_data = train_part.to_tensor_data();
    let val_data = val_part.to_tensor_data();
    let cfg = TrainConfig {
        max_epochs: 2,
        loss: LossSpec::Huber { delta: 1.0 },
        seed: 9,
        ..TrainConfig::default()
    };
    let model = Model::init(ModelArch::simplified((3, 9, 9)), 13).unwrap();
    let (trained, history) = train(model, &train_data, &val_data, &cfg).unwrap();
    (
        trained.weights_digest(),
        serde_json::to_string(&history).unwrap(),
    )
}

#[cfg(feature = "parallel")]
#[test]
fn results_are_identical_across_thread_counts() {
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(pipeline_digest)
    };
    let single = run_with(1);
    let four = run_with(4);
    assert_eq!(single, four);
    let eight = run_with(8);
    assert_eq!(single, eight);
}

#[test]
fn repeated_runs_are_identical() {
    assert_eq!(pipeline_digest(), pipeline_digest());
}
