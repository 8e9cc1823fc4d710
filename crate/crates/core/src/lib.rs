//! Binary classifiers built on two-layer networks and trained with criteria
//! whose optimum coincides with the likelihood ratio test.
//!
//! The crate is organised bottom-up:
//!
//! - [`loss`]: the nonlinearities `φ`, their derivatives and the output
//!   nonlinearity `ω` applied on top of the network.
//! - [`network`]: the two-layer ReLU network, its forward pass and the
//!   per-sample parameter gradients.
//! - [`trainer`]: RMS-normalised batch and stochastic gradient training for
//!   the difference criterion, plus the classical sum criterion (Hinge).
//! - [`oracle`]: Gaussian-mixture class models, the exact LRT and its error
//!   probabilities, and a brute-force optimality check on finite alphabets.
//! - [`data`]: synthetic sampling, MNIST / CIFAR-10 readers and
//!   preprocessing, and the training sample streams.
//! - [`eval`]: empirical error probabilities, empirical criterion, evolution
//!   logs and report export.
//! - [`config`] and [`experiment`]: JSON run configuration, presets and the
//!   orchestration used by the `lrtnet` binary.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod loss;
pub mod network;
pub mod oracle;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use loss::{Category, OutputNonlinearity, PhiSpec};
pub use network::NetParams;
