//! Training workbench for surrogate models of lattice crack configurations.
//!
//! The crate generates synthetic labeled datasets over a masked 3D lattice,
//! augments them with the label-preserving plan symmetries, trains a small
//! convolutional regressor with standard or density-weighted losses, and
//! evaluates the results in the report formats the experiment runner emits.
//!
//! Modules follow the pipeline:
//!
//! - [`lattice`]: plan geometry and crack encodings
//! - [`oracle`]: synthetic labeling oracle and dataset generation
//! - [`augment`]: rotation/mirror transforms and dataset composition
//! - [`nn`]: tensors, the conv/dense network, weight containers
//! - [`loss`]: MSE/MAE/Huber and the Gaussian-density-weighted loss
//! - [`train`]: early-stopped training, repeat sweeps, transfer continuation
//! - [`eval`]: metrics and machine-readable reports
//! - [`gradcheck`]: finite-difference verification helpers
//!
//! Heavy inner loops (dataset generation, batch forward/backward, repeat
//! sweeps) run on rayon when the default `parallel` feature is enabled and
//! fall back to sequential execution without it; both paths produce
//! identical numbers.

pub mod augment;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod lattice;
pub mod loss;
pub mod nn;
pub mod oracle;
mod parallel;
pub mod seeding;
pub mod train;

pub use error::{Error, Result};
