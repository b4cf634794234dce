//! Revelation-aware measurement log-density.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::psk_alphabet;

/// Precomputed measurement model shared by the filters.
#[derive(Debug, Clone)]
pub(crate) struct MeasurementModel {
    pub alphabet: Vec<Complex64>,
    pub p_tn: f64,
    /// log of the 2-D Gaussian peak density, `-ln(pi * P_TN)`.
    log_norm: f64,
    log_m: f64,
}

impl MeasurementModel {
    pub fn new(m: usize, p_tn: f64) -> Result<Self> {
        if !(p_tn > 0.0 && p_tn.is_finite()) {
            return Err(Error::invalid("total noise power must be finite and > 0"));
        }
        let alphabet = psk_alphabet(m)?;
        Ok(MeasurementModel {
            alphabet,
            p_tn,
            log_norm: -(std::f64::consts::PI * p_tn).ln(),
            log_m: (m as f64).ln(),
        })
    }

    /// Log density given the de-rotated sample `u = b * exp(-j phase)`.
    ///
    /// Rotating both the sample and the constellation by `-phase` preserves
    /// Euclidean distances, so the Gaussian exponents can be evaluated
    /// against the static alphabet.
    #[inline]
    pub fn loglik_rotated(&self, u: Complex64, known: Option<Complex64>) -> f64 {
        match known {
            Some(a) => self.log_norm - (u - a).norm_sqr() / self.p_tn,
            None => {
                // log-sum-exp over the alphabet mixture, allocation-free
                let inv = 1.0 / self.p_tn;
                let mut mx = f64::NEG_INFINITY;
                for a in &self.alphabet {
                    let e = -(u - a).norm_sqr() * inv;
                    if e > mx {
                        mx = e;
                    }
                }
                let sum: f64 = self
                    .alphabet
                    .iter()
                    .map(|a| (-(u - a).norm_sqr() * inv - mx).exp())
                    .sum();
                self.log_norm - self.log_m + mx + sum.ln()
            }
        }
    }

    #[inline]
    pub fn loglik(&self, sample: Complex64, phase: f64, known: Option<Complex64>) -> f64 {
        let (s, c) = phase.sin_cos();
        let u = sample * Complex64::new(c, -s);
        self.loglik_rotated(u, known)
    }
}

/// Measurement log-density of one received sample given the carrier phase.
///
/// Revealed (`revealed = true`, `known_symbol` present): log of the circular
/// Gaussian `N(a_k e^{j phase}, P_TN/2 * I_2)` at `sample`. Unrevealed: log
/// of the equal-weight M-component mixture over the alphabet, evaluated in
/// the log domain.
pub fn measurement_loglik(
    sample: Complex64,
    phase: f64,
    revealed: bool,
    known_symbol: Option<Complex64>,
    p_tn: f64,
    m: usize,
) -> Result<f64> {
    if revealed != known_symbol.is_some() {
        return Err(Error::invalid(
            "known_symbol must be present exactly when the symbol is revealed",
        ));
    }
    let model = MeasurementModel::new(m, p_tn)?;
    Ok(model.loglik(sample, phase, known_symbol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn peak_density_matches_gaussian_norm() {
        // sample exactly at the mean: density 1/(pi P_TN); P_TN = 0.5 gives
        // log(2/pi).
        let a = psk_alphabet(4).unwrap()[0];
        let phase = 0.37;
        let sample = a * Complex64::from_polar(1.0, phase);
        let ll = measurement_loglik(sample, phase, true, Some(a), 0.5, 4).unwrap();
        assert_abs_diff_eq!(ll, (2.0 / std::f64::consts::PI).ln(), epsilon = 1e-12);
    }

    #[test]
    fn mixture_is_invariant_under_sector_rotation() {
        let sample = Complex64::new(0.3, -1.1);
        for m in [2usize, 4, 8] {
            for phase in [-2.0, 0.0, 0.7] {
                let a = measurement_loglik(sample, phase, false, None, 0.8, m).unwrap();
                let b =
                    measurement_loglik(sample, phase + TAU / m as f64, false, None, 0.8, m).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mixture_matches_direct_summation() {
        // direct summation oracle over the 4 components
        let sample = Complex64::new(1.0, 0.0);
        let p_tn = 1.0;
        let alphabet = psk_alphabet(4).unwrap();
        let oracle = (alphabet
            .iter()
            .map(|a| (-(sample - a).norm_sqr() / p_tn).exp() / std::f64::consts::PI)
            .sum::<f64>()
            / 4.0)
            .ln();
        let ll = measurement_loglik(sample, 0.0, false, None, p_tn, 4).unwrap();
        assert_abs_diff_eq!(ll, oracle, epsilon = 1e-12);
    }

    #[test]
    fn revealed_reduces_the_mixture() {
        // forcing every mixture component to the known symbol must equal the
        // single-Gaussian branch
        let sample = Complex64::new(-0.2, 0.9);
        let a = psk_alphabet(4).unwrap()[2];
        let single = measurement_loglik(sample, 0.31, true, Some(a), 0.7, 4).unwrap();
        let model = MeasurementModel {
            alphabet: vec![a; 4],
            p_tn: 0.7,
            log_norm: -(std::f64::consts::PI * 0.7).ln(),
            log_m: 4.0_f64.ln(),
        };
        let forced = model.loglik(sample, 0.31, None);
        assert_abs_diff_eq!(single, forced, epsilon = 1e-12);
    }

    #[test]
    fn contract_violations_are_rejected() {
        let s = Complex64::new(1.0, 0.0);
        assert!(measurement_loglik(s, 0.0, true, None, 1.0, 4).is_err());
        assert!(measurement_loglik(s, 0.0, false, Some(s), 1.0, 4).is_err());
        assert!(measurement_loglik(s, 0.0, false, None, 0.0, 4).is_err());
        assert!(measurement_loglik(s, 0.0, false, None, 1.0, 1).is_err());
    }
}
