//! Simulation and estimation library for pilotless continuous-variable QKD
//! reception.
//!
//! The crate covers the receiver-side evaluation chain for a discrete
//! phase-modulated quantum signal detected with a free-running local
//! oscillator: synthetic M-PSK signal generation with random-walk laser phase
//! noise ([`signal`]), particle-based carrier phase recovery at deeply
//! negative SNR ([`phase`]), state-space hyperparameter fitting ([`param`]),
//! blockwise symbol timing recovery ([`timing`]), excess-noise and
//! mutual-information metrics ([`metrics`]), and asymptotic secret key rates
//! over a lossy fiber link ([`keyrate`]).
//!
//! All generators and estimators are deterministic functions of their inputs
//! and an explicit seed; see [`rng`] for the stream-derivation scheme.

pub mod error;
pub mod keyrate;
pub mod metrics;
pub mod param;
pub mod phase;
pub mod rng;
pub mod signal;
pub mod timing;
pub mod util;

pub use error::{Error, Result};
