//! Synthetic ground truth: M-PSK symbols, random-walk phase trajectories,
//! AWGN channel output, and revelation masks.
//!
//! Normalization convention used throughout the crate: the signal component
//! has unit mean power (`|a_k| = 1`), so the total channel noise power is
//! `P_TN = 1 / SNR_b`. Phase trajectories are stored unwrapped; wrapping
//! happens only inside estimators.

pub mod pulse;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::rng::stream;

/// Alice's i.i.d. M-PSK symbols, unit modulus.
#[derive(Debug, Clone)]
pub struct SymbolSequence {
    pub symbols: Vec<Complex64>,
    pub modulation_order: usize,
}

impl SymbolSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Alphabet index of each symbol (nearest point of the exact alphabet).
    pub fn indices(&self) -> Vec<usize> {
        let alphabet = psk_alphabet(self.modulation_order).expect("valid order");
        self.symbols
            .iter()
            .map(|s| nearest_alphabet_index(*s, &alphabet))
            .collect()
    }

    /// View of a contiguous symbol range as a borrowed sequence.
    pub fn slice(&self, range: std::ops::Range<usize>) -> SymbolSequence {
        SymbolSequence {
            symbols: self.symbols[range].to_vec(),
            modulation_order: self.modulation_order,
        }
    }
}

/// Index of the alphabet point with the smallest Euclidean distance to `z`.
/// Ties break toward the lower index.
pub fn nearest_alphabet_index(z: Complex64, alphabet: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_corr = f64::NEG_INFINITY;
    for (i, a) in alphabet.iter().enumerate() {
        // max Re(z a*) is equivalent to min |z - a| for a unit-modulus alphabet
        let corr = z.re * a.re + z.im * a.im;
        if corr > best_corr {
            best_corr = corr;
            best = i;
        }
    }
    best
}

/// Hyperparameters of the random-walk state-space model: frequency-drift
/// variance and phase-diffusion variance, both per symbol step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpaceParams {
    /// Variance of the frequency random walk (rad^2 per step^2, i.e. the
    /// increment variance of the normalized frequency state).
    pub sigma2_omega: f64,
    /// Variance of the phase random walk (rad^2 per step).
    pub sigma2_phi: f64,
}

impl StateSpaceParams {
    pub fn new(sigma2_omega: f64, sigma2_phi: f64) -> Result<Self> {
        let p = StateSpaceParams {
            sigma2_omega,
            sigma2_phi,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2_omega.is_finite() && self.sigma2_omega >= 0.0) {
            return Err(Error::invalid("sigma2_omega must be finite and >= 0"));
        }
        if !(self.sigma2_phi.is_finite() && self.sigma2_phi >= 0.0) {
            return Err(Error::invalid("sigma2_phi must be finite and >= 0"));
        }
        Ok(())
    }
}

impl Default for StateSpaceParams {
    /// Hyperparameters fitted for the reference fiber-laser pair this
    /// simulator models.
    fn default() -> Self {
        StateSpaceParams {
            sigma2_omega: 1.66e-16,
            sigma2_phi: 6.36e-9,
        }
    }
}

/// True hidden state of the carrier: unwrapped phase and normalized
/// frequency per symbol step.
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    /// Unwrapped phase (rad).
    pub phase: Vec<f64>,
    /// Normalized frequency (rad per symbol).
    pub frequency: Vec<f64>,
    pub params: StateSpaceParams,
}

impl PhaseTrajectory {
    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }
}

/// Normalized channel output together with its known total noise power.
#[derive(Debug, Clone)]
pub struct ReceivedSequence {
    pub samples: Vec<Complex64>,
    /// Total noise power `P_TN = 1 / snr_b` (0 marks the noiseless limit).
    pub total_noise_power: f64,
    /// Linear symbol SNR.
    pub snr_b: f64,
}

impl ReceivedSequence {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Per-symbol revelation flags drawn with probability `p_r`.
#[derive(Debug, Clone)]
pub struct RevelationMask {
    pub revealed: Vec<bool>,
    pub p_r: f64,
}

impl RevelationMask {
    /// Mask with no revealed symbols.
    pub fn none(k: usize) -> Self {
        RevelationMask {
            revealed: vec![false; k],
            p_r: 0.0,
        }
    }

    /// Mask with every symbol revealed.
    pub fn all(k: usize) -> Self {
        RevelationMask {
            revealed: vec![true; k],
            p_r: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.revealed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revealed.is_empty()
    }

    pub fn count_revealed(&self) -> usize {
        self.revealed.iter().filter(|&&r| r).count()
    }
}

/// The M-PSK alphabet `{exp(j 2 pi i / M)}` for `i = 1..M`.
pub fn psk_alphabet(m: usize) -> Result<Vec<Complex64>> {
    if m < 2 {
        return Err(Error::invalid(format!("modulation order {m} < 2")));
    }
    Ok((1..=m)
        .map(|i| Complex64::from_polar(1.0, TAU * i as f64 / m as f64))
        .collect())
}

/// Draw `k` i.i.d. symbols uniformly from the M-PSK alphabet.
pub fn gen_symbols(m: usize, k: usize, seed: u64) -> Result<SymbolSequence> {
    let alphabet = psk_alphabet(m)?;
    let mut rng = stream(seed, "symbols");
    let symbols = (0..k)
        .map(|_| alphabet[rng.random_range(0..m)])
        .collect();
    Ok(SymbolSequence {
        symbols,
        modulation_order: m,
    })
}

/// Generate an unwrapped phase trajectory from the random-walk model
///
/// ```text
/// phi_k   = phi_{k-1} + omega_{k-1} + w_k,   w_k ~ N(0, sigma2_phi)
/// omega_k = omega_{k-1} + v_k,               v_k ~ N(0, sigma2_omega)
/// ```
pub fn gen_phase_trajectory(
    k: usize,
    params: &StateSpaceParams,
    init_phase: f64,
    init_frequency: f64,
    seed: u64,
) -> PhaseTrajectory {
    let mut rng = stream(seed, "phase");
    let sd_phi = params.sigma2_phi.sqrt();
    let sd_omega = params.sigma2_omega.sqrt();
    let mut phase = Vec::with_capacity(k);
    let mut frequency = Vec::with_capacity(k);
    let mut phi = init_phase;
    let mut omega = init_frequency;
    for step in 0..k {
        if step > 0 {
            let w: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            phi += omega + sd_phi * w;
            omega += sd_omega * v;
        }
        phase.push(phi);
        frequency.push(omega);
    }
    PhaseTrajectory {
        phase,
        frequency,
        params: *params,
    }
}

/// Pass symbols through the phase-rotating AWGN channel:
/// `b_k = a_k exp(j phi_k) + n_k` with `E|n_k|^2 = P_TN = 1 / snr_b`.
///
/// `snr_b = inf` is accepted as the noiseless limit (`P_TN = 0`).
pub fn apply_awgn_channel(
    a: &SymbolSequence,
    phi: &PhaseTrajectory,
    snr_b: f64,
    seed: u64,
) -> Result<ReceivedSequence> {
    if a.len() != phi.len() {
        return Err(Error::invalid(format!(
            "symbol/phase length mismatch: {} vs {}",
            a.len(),
            phi.len()
        )));
    }
    if !(snr_b > 0.0) {
        return Err(Error::invalid("snr_b must be > 0"));
    }
    let p_tn = if snr_b.is_infinite() { 0.0 } else { 1.0 / snr_b };
    let sd_quad = (p_tn / 2.0).sqrt();
    let mut rng = stream(seed, "channel-noise");
    let samples = a
        .symbols
        .iter()
        .zip(&phi.phase)
        .map(|(&sym, &ph)| {
            let rotated = sym * Complex64::from_polar(1.0, ph);
            if p_tn == 0.0 {
                rotated
            } else {
                let nr: f64 = rng.sample(StandardNormal);
                let ni: f64 = rng.sample(StandardNormal);
                rotated + Complex64::new(sd_quad * nr, sd_quad * ni)
            }
        })
        .collect();
    Ok(ReceivedSequence {
        samples,
        total_noise_power: p_tn,
        snr_b,
    })
}

/// Independent Bernoulli(`p_r`) revelation flags.
pub fn gen_revelation_mask(k: usize, p_r: f64, seed: u64) -> Result<RevelationMask> {
    if !(0.0..=1.0).contains(&p_r) {
        return Err(Error::invalid(format!("p_r {p_r} outside [0, 1]")));
    }
    let mut rng = stream(seed, "revelation");
    let revealed = (0..k).map(|_| rng.random_bool(p_r)).collect();
    Ok(RevelationMask { revealed, p_r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn alphabet_m2_and_m4() {
        let a2 = psk_alphabet(2).unwrap();
        assert_eq!(a2.len(), 2);
        assert_abs_diff_eq!(a2[0].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a2[0].im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a2[1].re, 1.0, epsilon = 1e-12);

        let a4 = psk_alphabet(4).unwrap();
        let expected = [(0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)];
        for (p, (re, im)) in a4.iter().zip(expected) {
            assert_abs_diff_eq!(p.re, re, epsilon = 1e-12);
            assert_abs_diff_eq!(p.im, im, epsilon = 1e-12);
        }
    }

    #[test]
    fn alphabet_points_unit_modulus_and_distinct() {
        for m in [2usize, 3, 4, 8, 16] {
            let a = psk_alphabet(m).unwrap();
            let product: Complex64 = a.iter().product();
            assert_abs_diff_eq!(product.norm(), 1.0, epsilon = 1e-12);
            for p in &a {
                assert_abs_diff_eq!(p.norm(), 1.0, epsilon = 1e-12);
            }
            for i in 0..m {
                for j in (i + 1)..m {
                    assert!((a[i] - a[j]).norm() > 1e-9);
                }
            }
        }
    }

    #[test]
    fn alphabet_rejects_small_order() {
        assert!(psk_alphabet(1).is_err());
        assert!(psk_alphabet(0).is_err());
    }

    #[test]
    fn symbols_are_deterministic_per_seed() {
        let a = gen_symbols(4, 1000, 42).unwrap();
        let b = gen_symbols(4, 1000, 42).unwrap();
        let c = gen_symbols(4, 1000, 43).unwrap();
        assert_eq!(a.symbols, b.symbols);
        assert_ne!(a.symbols, c.symbols);
    }

    #[test]
    fn symbol_frequencies_are_uniform() {
        // 4 sigma binomial bound per alphabet point at K = 1e6.
        let k = 1_000_000usize;
        let m = 4usize;
        let seq = gen_symbols(m, k, 7).unwrap();
        let idx = seq.indices();
        let mut counts = vec![0usize; m];
        for i in idx {
            counts[i] += 1;
        }
        let expected = k as f64 / m as f64;
        let sigma = (k as f64 * (1.0 / m as f64) * (1.0 - 1.0 / m as f64)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - expected).abs() < 4.0 * sigma,
                "count {c} vs expected {expected}"
            );
        }
    }

    #[test]
    fn symbol_sample_mean_is_small() {
        // |mean| <= 4/sqrt(K) holds with probability ~1 - e^-16; over 100
        // seeds no violation is expected.
        let k = 10_000usize;
        let bound = 4.0 / (k as f64).sqrt();
        let mut violations = 0;
        for seed in 0..100u64 {
            let seq = gen_symbols(4, k, seed).unwrap();
            let mean = seq.symbols.iter().sum::<Complex64>() / k as f64;
            if mean.norm() > bound {
                violations += 1;
            }
        }
        assert!(violations <= 1, "violations: {violations}");
    }

    #[test]
    fn trajectory_zero_noise_is_a_line() {
        let params = StateSpaceParams::new(0.0, 0.0).unwrap();
        let t = gen_phase_trajectory(1000, &params, 0.3, 0.01, 1);
        for (k, (&p, &f)) in t.phase.iter().zip(&t.frequency).enumerate() {
            assert_abs_diff_eq!(p, 0.3 + 0.01 * k as f64, epsilon = 1e-9);
            assert_abs_diff_eq!(f, 0.01, epsilon = 1e-15);
        }
    }

    #[test]
    fn trajectory_phase_walk_variance() {
        // With sigma2_omega = 0: Var(phi_K - phi_0 - K omega_0) = K sigma2_phi.
        let k = 1000usize;
        let s2 = 1e-6;
        let params = StateSpaceParams::new(0.0, s2).unwrap();
        let n = 400;
        let mut sq = 0.0;
        for seed in 0..n {
            let t = gen_phase_trajectory(k + 1, &params, 0.0, 0.001, seed);
            let d = t.phase[k] - t.phase[0] - k as f64 * 0.001;
            sq += d * d;
        }
        let var = sq / n as f64;
        let expected = k as f64 * s2;
        // chi^2 with n dof: relative 4 sigma band ~ 4 sqrt(2/n)
        let tol = 4.0 * (2.0 / n as f64).sqrt() * expected;
        assert!(
            (var - expected).abs() < tol,
            "var {var} vs expected {expected}"
        );
    }

    #[test]
    fn trajectory_lag_rms_matches_phase_walk() {
        // At lag 1000 with the default parameters the frequency random walk
        // contributes ~1e-5 of the phase-walk variance and is negligible.
        let lag = 1000usize;
        let params = StateSpaceParams::default();
        let expected = (lag as f64 * params.sigma2_phi).sqrt();
        let k = 40_000usize;
        let mut sq = 0.0;
        let mut n = 0usize;
        for seed in 100..110u64 {
            let t = gen_phase_trajectory(k, &params, 0.0, 0.0, seed);
            // non-overlapping lag windows are independent increments
            let mut i = 0;
            while i + lag < k {
                let d = t.phase[i + lag] - t.phase[i] - lag as f64 * t.frequency[i];
                sq += d * d;
                n += 1;
                i += lag;
            }
        }
        let rms = (sq / n as f64).sqrt();
        let tol = 4.0 * expected / (2.0 * n as f64).sqrt();
        assert!(
            (rms - expected).abs() < tol,
            "rms {rms:.6e} vs expected {expected:.6e} (n = {n})"
        );
    }

    #[test]
    fn channel_noiseless_limit_is_exact() {
        let a = gen_symbols(4, 100, 1).unwrap();
        let t = gen_phase_trajectory(100, &StateSpaceParams::default(), 0.2, 1e-4, 2);
        let b = apply_awgn_channel(&a, &t, f64::INFINITY, 3).unwrap();
        assert_eq!(b.total_noise_power, 0.0);
        for ((s, &ph), r) in a.symbols.iter().zip(&t.phase).zip(&b.samples) {
            let expect = s * Complex64::from_polar(1.0, ph);
            assert_abs_diff_eq!((expect - r).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn channel_power_decomposition() {
        // <|b|^2> = 1 + P_TN within 4 sigma, over several SNRs.
        let k = 200_000usize;
        for snr_db in [-20.0, 0.0, 10.0] {
            let snr = 10f64.powf(snr_db / 10.0);
            let a = gen_symbols(4, k, 11).unwrap();
            let t = gen_phase_trajectory(k, &StateSpaceParams::default(), 0.0, 0.0, 12);
            let b = apply_awgn_channel(&a, &t, snr, 13).unwrap();
            let p_b = b.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / k as f64;
            let expected = 1.0 + b.total_noise_power;
            // var(|b|^2) = 2 P_TN + P_TN^2 for signal+noise
            let var = 2.0 * b.total_noise_power + b.total_noise_power.powi(2);
            let tol = 4.0 * (var / k as f64).sqrt();
            assert!(
                (p_b - expected).abs() < tol,
                "snr {snr_db} dB: power {p_b} vs {expected}"
            );
        }
    }

    #[test]
    fn channel_noise_power_at_0db() {
        // Sample estimate of <|b - a e^{j phi}|^2> = 1.0 +- 0.004 at K = 1e6.
        let k = 1_000_000usize;
        let a = gen_symbols(4, k, 21).unwrap();
        let t = gen_phase_trajectory(k, &StateSpaceParams::default(), 0.1, 0.0, 22);
        let b = apply_awgn_channel(&a, &t, 1.0, 23).unwrap();
        let mut acc = 0.0;
        for ((s, &ph), r) in a.symbols.iter().zip(&t.phase).zip(&b.samples) {
            acc += (r - s * Complex64::from_polar(1.0, ph)).norm_sqr();
        }
        let est = acc / k as f64;
        assert!((est - 1.0).abs() < 0.004, "noise power {est}");
    }

    #[test]
    fn channel_rejects_length_mismatch() {
        let a = gen_symbols(4, 10, 1).unwrap();
        let t = gen_phase_trajectory(11, &StateSpaceParams::default(), 0.0, 0.0, 2);
        assert!(apply_awgn_channel(&a, &t, 1.0, 3).is_err());
    }

    #[test]
    fn mask_edge_probabilities() {
        let none = gen_revelation_mask(1000, 0.0, 5).unwrap();
        assert_eq!(none.count_revealed(), 0);
        let all = gen_revelation_mask(1000, 1.0, 5).unwrap();
        assert_eq!(all.count_revealed(), 1000);
        assert!(gen_revelation_mask(10, -0.1, 5).is_err());
        assert!(gen_revelation_mask(10, 1.1, 5).is_err());
    }

    #[test]
    fn mask_binomial_statistics() {
        let k = 1_000_000usize;
        let p = 0.05;
        let mask = gen_revelation_mask(k, p, 9).unwrap();
        let count = mask.count_revealed() as f64;
        let sigma = (k as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (count - k as f64 * p).abs() < 4.0 * sigma,
            "count {count}"
        );
    }

    #[test]
    fn increments_have_small_excess_kurtosis() {
        // Normality moment check on phase increments.
        let params = StateSpaceParams::new(0.0, 1e-6).unwrap();
        let k = 100_000usize;
        let t = gen_phase_trajectory(k, &params, 0.0, 0.0, 31);
        let incr: Vec<f64> = (1..k)
            .map(|i| t.phase[i] - t.phase[i - 1] - t.frequency[i - 1])
            .collect();
        let m = crate::util::mean(&incr);
        let var = crate::util::variance(&incr);
        let m4 = incr.iter().map(|&x| (x - m).powi(4)).sum::<f64>() / incr.len() as f64;
        let kurt = m4 / (var * var) - 3.0;
        // std of sample excess kurtosis for a normal is sqrt(24/n)
        let tol = 4.0 * (24.0 / incr.len() as f64).sqrt();
        assert!(kurt.abs() < tol, "excess kurtosis {kurt}");
    }
}
