//! Asymptotic secret key rates over a lossy fiber link.
//!
//! The rate is `max(0, beta * I_AB - chi_BE)` with the hard-decision M-PSK
//! mutual information as `I_AB` and the Gaussian eavesdropper bound as
//! `chi_BE`. Excess noise enters as a pluggable model of the measured value
//! at Bob in shot noise units; it is referred back to the channel input as
//! `xi / T` (the receiver efficiency is treated as trusted detection loss,
//! not as part of the channel).

mod holevo;

pub use holevo::{
    entropy_g, gaussian_correlation, holevo_bound, holevo_bound_with, symplectic_eigenvalues,
    CorrelationFn,
};

use crate::error::{Error, Result};
use crate::metrics::theoretical_mi;

/// Launch-power search range, photons per symbol at Alice.
pub const LAUNCH_RANGE: (f64, f64) = (1e-4, 10.0);

/// Excess noise at Bob as a function of linear `SNR_b`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExcessNoiseModel {
    /// Reference curve with no excess noise.
    Zero,
    /// Fixed value in SNU.
    Constant(f64),
    /// `log10(xi) = sum_i coeffs[i] * log10(snr)^i`, the shape used for
    /// fits of simulated excess-noise curves.
    LogPolynomial { coeffs: Vec<f64> },
}

impl ExcessNoiseModel {
    pub fn xi(&self, snr_b: f64) -> f64 {
        match self {
            ExcessNoiseModel::Zero => 0.0,
            ExcessNoiseModel::Constant(v) => *v,
            ExcessNoiseModel::LogPolynomial { coeffs } => {
                let x = snr_b.log10();
                let mut acc = 0.0;
                let mut pow = 1.0;
                for &c in coeffs {
                    acc += c * pow;
                    pow *= x;
                }
                10f64.powf(acc)
            }
        }
    }
}

/// Link and receiver parameters for key-rate evaluation.
#[derive(Debug, Clone)]
pub struct LinkParams {
    pub distance_km: f64,
    /// Fiber loss (dB/km).
    pub loss_db_per_km: f64,
    /// Reconciliation efficiency in (0, 1].
    pub beta: f64,
    /// Receiver efficiency.
    pub eta: f64,
    /// Electrical-to-shot noise ratio.
    pub epsilon_el: f64,
    /// Measured excess noise at Bob as a function of SNR_b.
    pub excess_noise_model: ExcessNoiseModel,
    /// Receiver sensitivity: rates are zero below this linear SNR_b.
    pub snr_floor: f64,
}

impl LinkParams {
    /// Parameters of the modeled receiver at a given distance, with the
    /// zero-excess-noise reference model.
    pub fn reference(distance_km: f64) -> Self {
        LinkParams {
            distance_km,
            loss_db_per_km: 0.2,
            beta: 0.95,
            eta: 0.232,
            epsilon_el: 0.70,
            excess_noise_model: ExcessNoiseModel::Zero,
            snr_floor: 10f64.powf(-3.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_km >= 0.0) {
            return Err(Error::invalid("distance must be >= 0"));
        }
        if !(self.beta >= 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta must be in [0, 1]"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid("eta must be in (0, 1]"));
        }
        if !(self.epsilon_el >= 0.0) {
            return Err(Error::invalid("epsilon_el must be >= 0"));
        }
        if !(self.snr_floor >= 0.0) {
            return Err(Error::invalid("snr_floor must be >= 0"));
        }
        Ok(())
    }
}

/// Best rate over launch power.
#[derive(Debug, Clone, Copy)]
pub struct KeyRateResult {
    pub rate_bits_per_symbol: f64,
    /// Photons per symbol at Alice.
    pub optimal_launch_photons: f64,
    pub snr_b_at_optimum: f64,
}

/// Fiber power transmission `10^(-loss * distance / 10)`.
pub fn fiber_transmission(distance_km: f64, loss_db_per_km: f64) -> Result<f64> {
    if !(distance_km >= 0.0) {
        return Err(Error::invalid("distance must be >= 0"));
    }
    Ok(10f64.powf(-loss_db_per_km * distance_km / 10.0))
}

/// Secret key rate (bits/symbol) at a fixed launch power.
///
/// The SNR at Bob follows from the photon budget: `N_B = T N_A`,
/// `SNR_b = eta N_B / (1 + eps_el)`. Below the receiver sensitivity the
/// rate is 0.
pub fn key_rate(link: &LinkParams, modulation_order: usize, launch_photons: f64) -> Result<f64> {
    link.validate()?;
    if !(launch_photons > 0.0) {
        return Err(Error::invalid("launch power must be > 0"));
    }
    if link.beta == 0.0 {
        return Ok(0.0);
    }
    let t = fiber_transmission(link.distance_km, link.loss_db_per_km)?;
    let n_b = t * launch_photons;
    let snr_b = link.eta * n_b / (1.0 + link.epsilon_el);
    if snr_b < link.snr_floor {
        return Ok(0.0);
    }
    let i_ab = theoretical_mi(snr_b, modulation_order)?;
    let xi_bob = link.excess_noise_model.xi(snr_b);
    let xi_channel_input = xi_bob / t;
    let va = 2.0 * launch_photons;
    let chi = holevo_bound(t, xi_channel_input, va, link.eta, link.epsilon_el)?;
    Ok((link.beta * i_ab - chi).max(0.0))
}

/// Maximize the key rate over launch power on `LAUNCH_RANGE` with a coarse
/// log grid followed by golden-section refinement.
pub fn optimize_launch_power(link: &LinkParams, modulation_order: usize) -> Result<KeyRateResult> {
    link.validate()?;
    let (lo, hi) = (LAUNCH_RANGE.0.ln(), LAUNCH_RANGE.1.ln());
    let coarse = 33usize;
    let mut best_i = 0usize;
    let mut best_rate = -1.0;
    for i in 0..coarse {
        let x = lo + (hi - lo) * i as f64 / (coarse - 1) as f64;
        let r = key_rate(link, modulation_order, x.exp())?;
        if r > best_rate {
            best_rate = r;
            best_i = i;
        }
    }
    // refine inside the bracket around the best coarse point
    let step = (hi - lo) / (coarse - 1) as f64;
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = key_rate(link, modulation_order, x1.exp())?;
    let mut f2 = key_rate(link, modulation_order, x2.exp())?;
    for _ in 0..60 {
        if (b - a).abs() < 1e-8 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = key_rate(link, modulation_order, x2.exp())?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = key_rate(link, modulation_order, x1.exp())?;
        }
    }
    let x_best = if f1 > f2 { x1 } else { x2 };
    let mut rate = f1.max(f2);
    let mut launch = x_best.exp();
    if best_rate > rate {
        rate = best_rate;
        launch = (lo + step * best_i as f64).exp();
    }
    let t = fiber_transmission(link.distance_km, link.loss_db_per_km)?;
    Ok(KeyRateResult {
        rate_bits_per_symbol: rate,
        optimal_launch_photons: launch,
        snr_b_at_optimum: link.eta * t * launch / (1.0 + link.epsilon_el),
    })
}
