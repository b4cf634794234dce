//! Carrier phase estimation at ultra-low SNR.
//!
//! The estimators share one state-space model: the carrier phase follows a
//! random walk driven by a random-walk normalized frequency (see
//! [`crate::signal::gen_phase_trajectory`]). The measurement model is
//! revelation-aware: a revealed symbol contributes a single circular
//! Gaussian, an unrevealed one the equal-weight M-component mixture over the
//! alphabet.
//!
//! Log-domain weights are used throughout; at SNR levels of -35 dB the
//! likelihood ratios are far outside linear-domain range.

mod ambiguity;
mod bootstrap;
mod ekf;
mod freq;
mod measurement;
mod smoother;

pub use ambiguity::resolve_phase_ambiguity;
pub use bootstrap::{bootstrap_filter, BlockRun, BootstrapFilter};
pub use ekf::{ekf_run, EkfOutput, EkfState};
pub use freq::{acquire_blind, estimate_carrier, refine_carrier, CarrierEstimate};
pub use measurement::measurement_loglik;
pub use smoother::backward_simulation_smoother;

use crate::error::{Error, Result};
use crate::signal::StateSpaceParams;

/// Configuration of the bootstrap filter / backward-simulation smoother.
#[derive(Debug, Clone)]
pub struct SmootherConfig {
    /// Number of particles N.
    pub n_particles: usize,
    /// Number of backward trajectories drawn by the smoother.
    pub n_trajectories: usize,
    /// Resample when `N_eff < resample_fraction * N`.
    pub resample_fraction: f64,
    /// State-space hyperparameters used for propagation.
    pub params: StateSpaceParams,
    /// Stddev of the Gaussian phase initialization (used when any symbol is
    /// revealed; with no revelation the phase is initialized uniformly over
    /// one alphabet sector `[0, 2 pi / M)`).
    pub init_phase_stddev: f64,
    /// Mean of the Gaussian frequency initialization (rad/symbol).
    pub init_frequency_mean: f64,
    /// Stddev of the Gaussian frequency initialization (rad/symbol).
    pub init_frequency_stddev: f64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig {
            n_particles: 200,
            n_trajectories: 10,
            resample_fraction: 0.2,
            params: StateSpaceParams::default(),
            init_phase_stddev: 1.0,
            init_frequency_mean: 0.0,
            init_frequency_stddev: 5e-5,
        }
    }
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::invalid("n_particles must be >= 2"));
        }
        if self.n_trajectories < 1 {
            return Err(Error::invalid("n_trajectories must be >= 1"));
        }
        if !(self.resample_fraction > 0.0 && self.resample_fraction <= 1.0) {
            return Err(Error::invalid("resample_fraction must be in (0, 1]"));
        }
        self.params.validate()?;
        if !(self.init_phase_stddev >= 0.0 && self.init_phase_stddev.is_finite()) {
            return Err(Error::invalid("init_phase_stddev must be finite and >= 0"));
        }
        if !(self.init_frequency_stddev >= 0.0 && self.init_frequency_stddev.is_finite()) {
            return Err(Error::invalid("init_frequency_stddev must be finite and >= 0"));
        }
        Ok(())
    }
}

/// One step of the filtering distribution: particle states with log weights.
///
/// Clouds are stored before resampling, so weights and states together
/// represent the filtering posterior of their step.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    pub phases: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl ParticleCloud {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Weights after exponentiation and normalization.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let mx = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = self.log_weights.iter().map(|&lw| (lw - mx).exp()).collect();
        let s: f64 = w.iter().sum();
        for v in &mut w {
            *v /= s;
        }
        w
    }

    /// Effective particle count `1 / sum(w_i^2)` of the normalized weights.
    pub fn effective_count(&self) -> f64 {
        let w = self.normalized_weights();
        1.0 / w.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Phase estimate with per-step diagnostics.
#[derive(Debug, Clone)]
pub struct SmootherOutput {
    /// Estimated phase per symbol (rad), wrapped to `(-pi, pi]`.
    pub phase_estimate: Vec<f64>,
    /// Effective particle count per step.
    pub effective_count: Vec<f64>,
    /// Accumulated prediction log-density `sum_k log p(b_k | b_1..k-1)`.
    /// NaN on outputs of the backward smoother, which does not evaluate it;
    /// the filtering pass owns this quantity.
    pub log_likelihood: f64,
    /// Steps at which the weight set collapsed to a single effective
    /// particle. A trial with any such event should be flagged.
    pub degeneracy_events: Vec<usize>,
}
