//! Extended Kalman filter on the carrier state, used both as a cheap
//! tracker and as the likelihood engine for hyperparameter fitting.
//!
//! The measurement is the received sample in quadrature components,
//! `h(phi) = a_k exp(j phi)` linearized at the predicted state with noise
//! `P_TN/2` per quadrature. The trigonometric measurement map is 2-pi
//! periodic, so the innovation never accumulates whole carrier turns. For
//! unrevealed symbols the filter substitutes the hard decision taken in the
//! predicted-phase frame; that branch is an approximation and tracking
//! should rely on revealed data.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{
    nearest_alphabet_index, psk_alphabet, ReceivedSequence, RevelationMask, StateSpaceParams,
    SymbolSequence,
};

/// Gaussian state of the tracker: mean (phase, frequency) and covariance.
#[derive(Debug, Clone)]
pub struct EkfState {
    pub phase: f64,
    pub frequency: f64,
    pub covariance: Matrix2<f64>,
}

impl EkfState {
    pub fn new(phase: f64, frequency: f64, var_phase: f64, var_frequency: f64) -> Self {
        EkfState {
            phase,
            frequency,
            covariance: Matrix2::new(var_phase, 0.0, 0.0, var_frequency),
        }
    }
}

/// Filtered trajectory and the prediction-error decomposition.
#[derive(Debug, Clone)]
pub struct EkfOutput {
    /// Filtered phase per step (posterior mean, unwrapped).
    pub phase_estimate: Vec<f64>,
    /// Filtered frequency per step.
    pub frequency_estimate: Vec<f64>,
    /// Per-step `log p(b_k | b_1..k-1, theta)` from the innovation Gaussian.
    pub step_log_density: Vec<f64>,
    /// Sum of the per-step log densities.
    pub log_likelihood: f64,
}

/// Run the extended Kalman filter over a record.
pub fn ekf_run(
    b: &ReceivedSequence,
    mask: &RevelationMask,
    known: &SymbolSequence,
    params: &StateSpaceParams,
    init: &EkfState,
) -> Result<EkfOutput> {
    if b.len() != mask.len() || b.len() != known.len() {
        return Err(Error::invalid("received/mask/symbol lengths differ"));
    }
    params.validate()?;
    if !(b.total_noise_power > 0.0) {
        return Err(Error::invalid("EKF requires a positive total noise power"));
    }
    let alphabet = psk_alphabet(known.modulation_order)?;
    let r = b.total_noise_power / 2.0;
    let q = Matrix2::new(params.sigma2_phi, 0.0, 0.0, params.sigma2_omega);
    let f = Matrix2::new(1.0, 1.0, 0.0, 1.0);

    let mut x = Vector2::new(init.phase, init.frequency);
    let mut p = init.covariance;
    let k_total = b.len();
    let mut phase_estimate = Vec::with_capacity(k_total);
    let mut frequency_estimate = Vec::with_capacity(k_total);
    let mut step_log_density = Vec::with_capacity(k_total);
    let mut log_likelihood = 0.0;
    const LOG_TAU: f64 = 1.837877066409345; // ln(2 pi)

    for (k, &sample) in b.samples.iter().enumerate() {
        if k > 0 {
            x = f * x;
            p = f * p * f.transpose() + q;
        }

        let (s, c) = x[0].sin_cos();
        let rot = Complex64::new(c, s);
        let symbol = if mask.revealed[k] {
            known.symbols[k]
        } else {
            // hard decision in the predicted-phase frame
            let idx = nearest_alphabet_index(sample * rot.conj(), &alphabet);
            alphabet[idx]
        };
        let h = symbol * rot;
        // Jacobian of (Re h, Im h) with respect to (phase, frequency)
        let jac = Matrix2::new(-h.im, 0.0, h.re, 0.0);
        let innovation = Vector2::new(sample.re - h.re, sample.im - h.im);

        let s_mat = jac * p * jac.transpose() + Matrix2::new(r, 0.0, 0.0, r);
        let det = s_mat[(0, 0)] * s_mat[(1, 1)] - s_mat[(0, 1)] * s_mat[(1, 0)];
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "innovation covariance not positive definite at step {k}"
            )));
        }
        let s_inv = Matrix2::new(
            s_mat[(1, 1)] / det,
            -s_mat[(0, 1)] / det,
            -s_mat[(1, 0)] / det,
            s_mat[(0, 0)] / det,
        );
        let maha = (innovation.transpose() * s_inv * innovation)[(0, 0)];
        let ld = -LOG_TAU - 0.5 * det.ln() - 0.5 * maha;
        step_log_density.push(ld);
        log_likelihood += ld;

        let gain = p * jac.transpose() * s_inv;
        x += gain * innovation;
        // Joseph-form update keeps the covariance symmetric positive definite
        let ikh = Matrix2::identity() - gain * jac;
        p = ikh * p * ikh.transpose()
            + gain * Matrix2::new(r, 0.0, 0.0, r) * gain.transpose();
        p = (p + p.transpose()) * 0.5;
        if !(p[(0, 0)] > 0.0 && p[(1, 1)] > 0.0) || !p[(0, 0)].is_finite() {
            return Err(Error::NumericalFailure(format!(
                "state covariance lost positive definiteness at step {k}"
            )));
        }

        phase_estimate.push(x[0]);
        frequency_estimate.push(x[1]);
    }

    Ok(EkfOutput {
        phase_estimate,
        frequency_estimate,
        step_log_density,
        log_likelihood,
    })
}
