//! Transport-map coupling filter for joint state and parameter estimation.
//!
//! The crate is organised bottom-up:
//!
//! - [`map`]: lower-triangular monotone maps built from Hermite expansions,
//!   with evaluation, log-determinants, and conditional inversion;
//! - [`training`]: the sample-based KL objective, its analytic gradient, and
//!   per-component L-BFGS fitting;
//! - [`models`]: the state-space model contract, RK4, measurement noise, and
//!   the forced Duffing oscillator with augmented parameters;
//! - [`filter`]: likelihood oversampling, whitening, and the assimilation loop;
//! - [`oracles`]: closed-form Gaussian conditioning and Kalman references;
//! - [`experiment`]: configuration-driven runs that write CSV/JSON outputs.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod filter;
pub mod map;
pub mod models;
pub mod optim;
pub mod oracles;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
