//! Carrier frequency acquisition from a fully revealed block.
//!
//! Stripping the known modulation leaves a noisy complex exponential; its
//! frequency is located on a zero-padded periodogram and refined by a
//! coherent fine search around the winning bin. Acquisition is reliable as
//! long as the coherent peak clears the periodogram noise floor
//! (`SNR_b * K` of a few tens); the refined estimate then sits near the
//! Cramer-Rao floor, which matters because a residual frequency error turns
//! into a phase ramp across the whole payload.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Carrier estimate from an initialization block.
#[derive(Debug, Clone, Copy)]
pub struct CarrierEstimate {
    /// Estimated frequency (rad/symbol), in `(-pi, pi]`.
    pub frequency: f64,
    /// Estimated phase at the first sample of the block (rad).
    pub phase: f64,
    /// Conservative one-sigma uncertainty of the frequency estimate (one
    /// periodogram bin).
    pub frequency_stddev: f64,
}

/// Locate the strongest tone of a sequence: zero-padded periodogram peak,
/// golden-section refinement of the coherent power, and a floor-referenced
/// uncertainty. Returns `(frequency, phase at index 0, stddev)`.
fn tone_search(z: &[Complex64]) -> (f64, f64, f64) {
    let k = z.len();
    let nfft = (2 * k).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    buf[..k].copy_from_slice(z);
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let (peak, _) = buf
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .expect("non-empty spectrum");

    // noise floor from the median bin power; the peak-to-floor ratio feeds
    // the uncertainty estimate
    let mut powers: Vec<f64> = buf.iter().step_by(16.max(nfft / 4096)).map(|v| v.norm_sqr()).collect();
    let mid = powers.len() / 2;
    powers.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    // zero padding halves the mean bin power relative to the tone window
    let floor = powers[mid].max(1e-300) * 2.0;
    let peak_ratio = buf[peak].norm_sqr() / floor;

    let coherent = |omega: f64| -> f64 {
        z.iter()
            .enumerate()
            .map(|(i, v)| v * Complex64::from_polar(1.0, -omega * i as f64))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let bin = TAU / nfft as f64;
    let mut a = (peak as f64 - 1.5) * bin;
    let mut b = (peak as f64 + 1.5) * bin;
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = coherent(x1);
    let mut f2 = coherent(x2);
    for _ in 0..50 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = coherent(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = coherent(x1);
        }
    }
    let mut frequency = (0.5 * (a + b)).rem_euclid(TAU);
    if frequency > std::f64::consts::PI {
        frequency -= TAU;
    }

    let resultant: Complex64 = z
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, -frequency * i as f64))
        .sum();

    // near the Cramer-Rao floor when the tone is strong, one bin when it is
    // buried
    let crb_like = (6.0 / peak_ratio.max(1.0)).sqrt() * (TAU / k as f64);
    let stddev = crb_like.max(bin / 4.0);
    (frequency, resultant.arg(), stddev)
}

/// Estimate carrier frequency and phase from samples with known symbols.
pub fn estimate_carrier(samples: &[Complex64], symbols: &[Complex64]) -> Result<CarrierEstimate> {
    if samples.len() != symbols.len() {
        return Err(Error::invalid("sample/symbol lengths differ"));
    }
    if samples.len() < 16 {
        return Err(Error::invalid("need at least 16 samples for acquisition"));
    }
    let stripped: Vec<Complex64> = samples
        .iter()
        .zip(symbols)
        .map(|(b, a)| b * a.conj())
        .collect();
    let (frequency, phase, stddev) = tone_search(&stripped);
    Ok(CarrierEstimate {
        frequency,
        phase,
        frequency_stddev: stddev,
    })
}

/// Blind carrier acquisition from modulated samples: raising M-PSK to the
/// M-th power strips the modulation and leaves a tone at `M` times the
/// carrier frequency. The returned phase is defined modulo one alphabet
/// sector (the M-th root keeps the sector ambiguity), and the estimate is
/// only as good as the M-th-power tone: its noise floor grows like
/// `(1 + P_TN)^M`, which is exactly why blind demodulation collapses at low
/// SNR while a revelation-aided receiver keeps going.
pub fn acquire_blind(samples: &[Complex64], modulation_order: usize) -> Result<CarrierEstimate> {
    if samples.len() < 16 {
        return Err(Error::invalid("need at least 16 samples for acquisition"));
    }
    if modulation_order < 2 {
        return Err(Error::invalid("modulation order must be >= 2"));
    }
    let m = modulation_order as f64;
    let powered: Vec<Complex64> = samples
        .iter()
        .map(|b| b.powu(modulation_order as u32))
        .collect();
    let (freq_m, phase_m, stddev_m) = tone_search(&powered);
    Ok(CarrierEstimate {
        frequency: freq_m / m,
        phase: phase_m / m,
        frequency_stddev: stddev_m / m,
    })
}

/// Refine a residual carrier frequency on the revealed subset of a record.
///
/// After coarse acquisition and de-rotation the residual frequency is a
/// fraction of a periodogram bin, but even that matters: the phase tracker
/// turns a residual slope into a standing lag. Revealed symbols are public,
/// so they can pin the slope over the whole record baseline, which is far
/// longer than the initialization block. The sparse coherent metric
/// `|sum_rev z_k e^{-j w k}|^2` has sidelobes, so a grid scan brackets the
/// peak before golden-section refinement.
///
/// Returns the residual frequency, the phase at index 0 measured against
/// it, and the slope-fit uncertainty `sqrt((P_TN/2) / sum (k - kbar)^2)`.
pub fn refine_carrier(
    samples: &[Complex64],
    symbols: &[Complex64],
    revealed: &[bool],
    total_noise_power: f64,
    search_halfwidth: f64,
) -> Result<CarrierEstimate> {
    if samples.len() != symbols.len() || samples.len() != revealed.len() {
        return Err(Error::invalid("sample/symbol/mask lengths differ"));
    }
    let mut z: Vec<(f64, Complex64)> = Vec::new();
    for (k, ((b, a), &r)) in samples.iter().zip(symbols).zip(revealed).enumerate() {
        if r {
            z.push((k as f64, b * a.conj()));
        }
    }
    if z.len() < 16 {
        return Err(Error::invalid("need at least 16 revealed symbols"));
    }
    let n = z.len() as f64;
    let kbar = z.iter().map(|(k, _)| *k).sum::<f64>() / n;
    let spread: f64 = z.iter().map(|(k, _)| (k - kbar) * (k - kbar)).sum();

    let coherent = |omega: f64| -> f64 {
        z.iter()
            .map(|(k, v)| v * Complex64::from_polar(1.0, -omega * k))
            .sum::<Complex64>()
            .norm_sqr()
    };
    // grid at a quarter of the sparse main-lobe width, then golden section
    let baseline = samples.len() as f64;
    let step = TAU / (6.0 * baseline);
    let mut best = 0.0;
    let mut best_val = f64::NEG_INFINITY;
    let mut omega = -search_halfwidth;
    while omega <= search_halfwidth {
        let v = coherent(omega);
        if v > best_val {
            best_val = v;
            best = omega;
        }
        omega += step;
    }
    let mut a = best - step;
    let mut b = best + step;
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = coherent(x1);
    let mut f2 = coherent(x2);
    for _ in 0..40 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = coherent(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = coherent(x1);
        }
    }
    let frequency = 0.5 * (a + b);
    let resultant: Complex64 = z
        .iter()
        .map(|(k, v)| v * Complex64::from_polar(1.0, -frequency * k))
        .sum();
    let stddev = ((total_noise_power / 2.0) / spread).sqrt();
    Ok(CarrierEstimate {
        frequency,
        phase: resultant.arg(),
        frequency_stddev: stddev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{apply_awgn_channel, gen_phase_trajectory, gen_symbols, StateSpaceParams};

    #[test]
    fn recovers_tone_at_moderate_snr() {
        let k = 4096;
        let freq = 3.7e-3;
        let a = gen_symbols(4, k, 1).unwrap();
        let t = gen_phase_trajectory(k, &StateSpaceParams::new(0.0, 0.0).unwrap(), 0.8, freq, 2);
        let b = apply_awgn_channel(&a, &t, 10.0, 3).unwrap();
        let est = estimate_carrier(&b.samples, &a.symbols).unwrap();
        assert!(
            (est.frequency - freq).abs() < 2.0 * TAU / 8192.0,
            "frequency {} vs {}",
            est.frequency,
            freq
        );
        assert!((est.phase - 0.8).abs() < 0.05, "phase {}", est.phase);
    }

    #[test]
    fn acquires_deep_in_noise_with_long_block() {
        // SNR -30 dB needs K * snr well above the periodogram noise floor.
        let k = 20_000;
        let snr = 1e-3;
        let freq = -1.2e-3;
        let a = gen_symbols(4, k, 4).unwrap();
        let t = gen_phase_trajectory(k, &StateSpaceParams::default(), -0.4, freq, 5);
        let b = apply_awgn_channel(&a, &t, snr, 6).unwrap();
        let est = estimate_carrier(&b.samples, &a.symbols).unwrap();
        assert!(
            (est.frequency - freq).abs() < 3.0 * est.frequency_stddev,
            "frequency {} vs {}",
            est.frequency,
            freq
        );
    }

    #[test]
    fn rejects_bad_input() {
        let z = vec![Complex64::new(1.0, 0.0); 8];
        assert!(estimate_carrier(&z, &z[..7]).is_err());
        assert!(estimate_carrier(&z, &z).is_err());
        assert!(acquire_blind(&z, 4).is_err());
    }

    #[test]
    fn blind_acquisition_finds_the_carrier_at_moderate_snr() {
        let k = 50_000usize;
        let freq = 1e-3;
        let a = gen_symbols(4, k, 31).unwrap();
        let t = gen_phase_trajectory(k, &StateSpaceParams::default(), 0.7, freq, 32);
        let b = apply_awgn_channel(&a, &t, 10f64.powf(-0.2), 33).unwrap(); // -2 dB
        let est = acquire_blind(&b.samples, 4).unwrap();
        assert!(
            (est.frequency - freq).abs() < 1e-5,
            "blind frequency {} vs true {freq}",
            est.frequency
        );
        // the blind phase is defined modulo one sector
        let wrapped = crate::util::wrap_angle((est.phase - 0.7) * 4.0) / 4.0;
        assert!(wrapped.abs() < 0.05, "sector phase offset {wrapped}");
    }

    #[test]
    fn blind_acquisition_reports_wide_uncertainty_in_deep_noise() {
        // at -15 dB the fourth-power tone is far below the floor for this
        // record length; the estimate must admit that
        let k = 20_000usize;
        let a = gen_symbols(4, k, 41).unwrap();
        let t = gen_phase_trajectory(k, &StateSpaceParams::default(), 0.0, 1e-3, 42);
        let b = apply_awgn_channel(&a, &t, 10f64.powf(-1.5), 43).unwrap();
        let est = acquire_blind(&b.samples, 4).unwrap();
        assert!(
            est.frequency_stddev > 1e-6,
            "stddev {} suspiciously tight for a buried tone",
            est.frequency_stddev
        );
    }

    #[test]
    fn refinement_pins_a_small_residual_slope() {
        // sparse revelation over a long record beats the coarse stddev by
        // orders of magnitude
        let k = 100_000usize;
        let residual = 3.1e-6;
        let snr = 0.316; // -5 dB
        let a = gen_symbols(4, k, 21).unwrap();
        let t = gen_phase_trajectory(
            k,
            &StateSpaceParams::new(0.0, 0.0).unwrap(),
            0.3,
            residual,
            22,
        );
        let b = apply_awgn_channel(&a, &t, snr, 23).unwrap();
        let mask = crate::signal::gen_revelation_mask(k, 0.2, 24).unwrap();
        let est = refine_carrier(
            &b.samples,
            &a.symbols,
            &mask.revealed,
            b.total_noise_power,
            5e-5,
        )
        .unwrap();
        assert!(
            (est.frequency - residual).abs() < 4.0 * est.frequency_stddev,
            "refined {} vs true {residual} (stddev {})",
            est.frequency,
            est.frequency_stddev
        );
        assert!(est.frequency_stddev < 1e-6);
    }
}
