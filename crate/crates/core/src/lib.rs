//! Quantum extremal learning on a dense statevector simulator.
//!
//! The crate trains a variational circuit as a surrogate model of data (or of an
//! ODE residual) and then searches for the input that extremizes the trained
//! surrogate. Continuous inputs are optimized through analytic input gradients,
//! discrete inputs through a trainable extremizer feature map followed by
//! Z-basis sampling, and mixed inputs through a joint extremizer circuit.
//!
//! Module map:
//!
//! - [`sim`]: statevector, gates, magnetization, probabilities, sampling.
//! - [`circuit`]: parameterized circuit IR, feature maps, hardware-efficient ansatz, models.
//! - [`diff`]: parameter-shift gradients w.r.t. parameters, inputs and mixed derivatives.
//! - [`train`]: losses, ADAM, L-BFGS and the fitting loop.
//! - [`extremal`]: continuous, discrete and mixed extremizers.
//! - [`problems`]: benchmark generators and brute-force oracles.
//! - [`cli`]: experiment configs, runners, aggregation and emission.

pub mod circuit;
pub mod cli;
pub mod diff;
mod error;
pub mod extremal;
pub mod problems;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
