//! Sector-ambiguity resolution for runs without revealed symbols.
//!
//! With no revelation the mixture likelihood is invariant under rotations by
//! `2 pi / M`, so the estimated phase is defined only modulo one sector. For
//! evaluation against known transmitted symbols the rotation index is picked
//! by correlating the corrected output with the ground truth. This is an
//! evaluation aid applied before metrics, never inside estimation.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::signal::{ReceivedSequence, SymbolSequence};

/// Choose `m` in `0..M` maximizing the real part of the correlation between
/// `b_k e^{-j(phi_hat_k + 2 pi m / M)}` and `a_k`.
pub fn resolve_phase_ambiguity(
    phase_estimate: &[f64],
    b: &ReceivedSequence,
    a: &SymbolSequence,
) -> usize {
    assert_eq!(phase_estimate.len(), b.len());
    assert_eq!(phase_estimate.len(), a.len());
    let base: Complex64 = phase_estimate
        .iter()
        .zip(&b.samples)
        .zip(&a.symbols)
        .map(|((&ph, sample), sym)| sym.conj() * sample * Complex64::from_polar(1.0, -ph))
        .sum();
    let m = a.modulation_order;
    let mut best = 0;
    let mut best_corr = f64::NEG_INFINITY;
    for rot in 0..m {
        let corr = (base * Complex64::from_polar(1.0, -TAU * rot as f64 / m as f64)).re;
        if corr > best_corr {
            best_corr = corr;
            best = rot;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{apply_awgn_channel, gen_phase_trajectory, gen_symbols, StateSpaceParams};

    fn setup(k: usize, snr: f64) -> (SymbolSequence, ReceivedSequence, Vec<f64>) {
        let a = gen_symbols(4, k, 11).unwrap();
        let t = gen_phase_trajectory(k, &StateSpaceParams::new(0.0, 0.0).unwrap(), 0.3, 0.0, 12);
        let b = apply_awgn_channel(&a, &t, snr, 13).unwrap();
        (a, b, t.phase)
    }

    #[test]
    fn aligned_estimate_returns_zero() {
        let (a, b, phase) = setup(2000, 100.0);
        assert_eq!(resolve_phase_ambiguity(&phase, &b, &a), 0);
    }

    #[test]
    fn injected_sector_rotation_is_detected() {
        // an estimate lagging the truth by one sector needs rotation 1
        let (a, b, phase) = setup(2000, 100.0);
        let lag1: Vec<f64> = phase.iter().map(|p| p - TAU / 4.0).collect();
        assert_eq!(resolve_phase_ambiguity(&lag1, &b, &a), 1);
        // an estimate ahead by one sector needs the complementary rotation
        let lead1: Vec<f64> = phase.iter().map(|p| p + TAU / 4.0).collect();
        assert_eq!(resolve_phase_ambiguity(&lead1, &b, &a), 3);
    }

    #[test]
    fn chosen_rotation_minimizes_symbol_errors() {
        // high-SNR check over all rotations: the selected one demodulates
        // nearly error-free, the others fail at least half the time
        use crate::signal::{nearest_alphabet_index, psk_alphabet};
        let (a, b, phase) = setup(4000, 100.0);
        let alphabet = psk_alphabet(4).unwrap();
        let chosen = resolve_phase_ambiguity(&phase, &b, &a);
        let idx_true = a.indices();
        for rot in 0..4usize {
            let mut errors = 0usize;
            for k in 0..a.len() {
                let corrected = b.samples[k]
                    * Complex64::from_polar(1.0, -(phase[k] + TAU * rot as f64 / 4.0));
                if nearest_alphabet_index(corrected, &alphabet) != idx_true[k] {
                    errors += 1;
                }
            }
            let rate = errors as f64 / a.len() as f64;
            if rot == chosen {
                assert!(rate < 0.01, "chosen rotation error rate {rate}");
            } else {
                assert!(rate >= 0.5, "rotation {rot} error rate {rate}");
            }
        }
    }
}
