//! Hard-decision mutual information, empirical and analytic.

use num_complex::Complex64;
use statrs::function::erf::erfc;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::signal::{nearest_alphabet_index, psk_alphabet, SymbolSequence};

/// Phase density of `b = sqrt(snr) e^{j alpha} + n` with unit-power complex
/// noise, evaluated at `beta`.
pub fn p_beta(alpha: f64, beta: f64, snr: f64) -> f64 {
    let d = alpha - beta;
    let (s, c) = d.sin_cos();
    let root = snr.sqrt();
    (-snr).exp() / TAU
        + root / (2.0 * PI.sqrt()) * c * (-snr * s * s).exp() * erfc(-root * c)
}

/// Adaptive Simpson quadrature with an absolute tolerance.
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        if depth == 0 {
            return Err(Error::NumericalFailure(format!(
                "quadrature failed to converge on [{a}, {b}]"
            )));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }

    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Probability that the received phase falls in decision sector `j` given
/// the symbol at sector 0 was sent. Sectors are angular regions of width
/// `2 pi / M` centered on the alphabet points.
fn sector_probability(sector: usize, m: usize, snr: f64) -> Result<f64> {
    let center = TAU * sector as f64 / m as f64;
    let half = PI / m as f64;
    let f = |beta: f64| p_beta(0.0, beta, snr);
    // split at the sector center: the density peak (at beta = 0) then sits
    // on an interval endpoint, where adaptive refinement finds it reliably
    let left = adaptive_simpson(&f, center - half, center, 1e-10, 48)?;
    let right = adaptive_simpson(&f, center, center + half, 1e-10, 48)?;
    Ok(left + right)
}

/// Analytic hard-decision mutual information (bits/symbol) of M-PSK over
/// the AWGN channel at linear SNR `snr_b`, by numerical integration of the
/// received-phase density over each decision sector.
pub fn theoretical_mi(snr_b: f64, m: usize) -> Result<f64> {
    if !(snr_b >= 0.0) || !snr_b.is_finite() {
        return Err(Error::invalid("snr_b must be finite and >= 0"));
    }
    if m < 2 {
        return Err(Error::invalid("modulation order must be >= 2"));
    }
    // by symmetry the joint matrix is circulant: row i is row 0 rotated by i
    let mut q: Vec<f64> = (0..m)
        .map(|j| sector_probability(j, m, snr_b))
        .collect::<Result<_>>()?;
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::NumericalFailure(format!(
            "sector probabilities sum to {total}, expected 1"
        )));
    }
    // project residual quadrature error back onto the probability simplex
    for p in &mut q {
        *p /= total;
    }
    let mut mi = 0.0;
    for &p in &q {
        if p > 0.0 {
            mi += p * (p * m as f64).log2();
        }
    }
    Ok(mi)
}

/// Plug-in mutual information (bits/symbol) between transmitted symbols and
/// hard decisions on the received samples. `0 log 0` terms are zero.
pub fn hard_decision_mi(a: &SymbolSequence, received: &[Complex64], m: usize) -> Result<f64> {
    if a.len() != received.len() {
        return Err(Error::invalid("symbol/received lengths differ"));
    }
    if m < 2 {
        return Err(Error::invalid("modulation order must be >= 2"));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let alphabet = psk_alphabet(m)?;
    let mut joint = vec![0u64; m * m];
    for (sym, r) in a.symbols.iter().zip(received) {
        let i = nearest_alphabet_index(*sym, &alphabet);
        let j = nearest_alphabet_index(*r, &alphabet);
        joint[i * m + j] += 1;
    }
    let k = a.len() as f64;
    let mut row = vec![0.0; m];
    let mut col = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            let p = joint[i * m + j] as f64 / k;
            row[i] += p;
            col[j] += p;
        }
    }
    let mut mi = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = joint[i * m + j] as f64 / k;
            if p > 0.0 {
                mi += p * (p / (row[i] * col[j])).log2();
            }
        }
    }
    Ok(mi)
}
