//! Root-raised-cosine pulse shaping, matched filtering, and band-limited
//! fractional delay.
//!
//! Alignment convention: all waveform operations compensate their integer
//! group delay, so sample `k * sps` of any output corresponds to symbol `k`.
//! The first and last `span` symbols of a shaped waveform are filter
//! transients; metrics are expected to trim them.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::signal::SymbolSequence;

/// Length of the windowed-sinc fractional-delay kernel.
pub const DELAY_KERNEL_TAPS: usize = 64;

/// Oversampled pulse-shaped waveform.
#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub samples_per_symbol: usize,
    pub rolloff: f64,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of whole symbols covered by the waveform.
    pub fn symbol_count(&self) -> usize {
        self.samples.len() / self.samples_per_symbol
    }
}

/// Un-normalized RRC time response at `t` symbol periods from the center.
fn rrc_impulse(t: f64, rolloff: f64) -> f64 {
    if t.abs() < 1e-10 {
        1.0 + rolloff * (4.0 / PI - 1.0)
    } else if (t.abs() - 1.0 / (4.0 * rolloff)).abs() < 1e-10 {
        // removable singularity at t = +-1/(4 rolloff)
        let a = (1.0 + 2.0 / PI) * (PI / (4.0 * rolloff)).sin();
        let b = (1.0 - 2.0 / PI) * (PI / (4.0 * rolloff)).cos();
        rolloff / 2.0_f64.sqrt() * (a + b)
    } else {
        let num =
            (PI * t * (1.0 - rolloff)).sin() + 4.0 * rolloff * t * (PI * t * (1.0 + rolloff)).cos();
        let den = PI * t * (1.0 - (4.0 * rolloff * t).powi(2));
        num / den
    }
}

/// Unit-energy root-raised-cosine taps spanning `span` symbols on each side
/// of the center (length `2 * span * sps + 1`).
pub fn rrc_taps(sps: usize, rolloff: f64, span_symbols: usize) -> Vec<f64> {
    let len = 2 * span_symbols * sps + 1;
    let mid = (len - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| rrc_impulse((i as f64 - mid) / sps as f64, rolloff))
        .collect();
    let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    for h in &mut taps {
        *h /= norm;
    }
    taps
}

fn validate_pulse_args(sps: usize, rolloff: f64, span_symbols: usize) -> Result<()> {
    if sps < 2 {
        return Err(Error::invalid("samples_per_symbol must be >= 2"));
    }
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::invalid("rolloff must be in (0, 1]"));
    }
    if span_symbols < 8 {
        return Err(Error::invalid("filter span must be >= 8 symbols"));
    }
    Ok(())
}

/// Upsample symbols and convolve with a unit-energy RRC impulse response.
///
/// Output length is `symbols * sps`; sample `k * sps` is the center of
/// symbol `k`.
pub fn rrc_pulse_shape(
    a: &SymbolSequence,
    sps: usize,
    rolloff: f64,
    span_symbols: usize,
) -> Result<Waveform> {
    validate_pulse_args(sps, rolloff, span_symbols)?;
    let taps = rrc_taps(sps, rolloff, span_symbols);
    Ok(Waveform {
        samples: shape_with_taps(&a.symbols, sps, &taps),
        samples_per_symbol: sps,
        rolloff,
    })
}

/// Polyphase evaluation of `out[m] = sum_k a_k taps[m - k sps + d]` where
/// `d` is the tap center (group delay removed).
fn shape_with_taps(symbols: &[Complex64], sps: usize, taps: &[f64]) -> Vec<Complex64> {
    let d = (taps.len() - 1) as isize / 2;
    let n = symbols.len() * sps;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (m, slot) in out.iter_mut().enumerate() {
        let m = m as isize;
        // contributing k: |m - k sps| <= d
        let k_lo = ((m - d + sps as isize - 1).div_euclid(sps as isize)).max(0);
        let k_hi = ((m + d).div_euclid(sps as isize)).min(symbols.len() as isize - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut k = k_lo;
        while k <= k_hi {
            let tap_idx = (m - k * sps as isize + d) as usize;
            acc += symbols[k as usize] * taps[tap_idx];
            k += 1;
        }
        *slot = acc;
    }
    out
}

/// Apply the receive-side matched filter (the same unit-energy RRC),
/// preserving the alignment convention.
pub fn matched_filter(w: &Waveform, span_symbols: usize) -> Result<Waveform> {
    validate_pulse_args(w.samples_per_symbol, w.rolloff, span_symbols)?;
    let taps = rrc_taps(w.samples_per_symbol, w.rolloff, span_symbols);
    let d = (taps.len() - 1) / 2;
    let n = w.samples.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (m, slot) in out.iter_mut().enumerate() {
        let base = m as isize + d as isize;
        let j_lo = (base - n as isize + 1).max(0) as usize;
        let j_hi = (base.min(taps.len() as isize - 1)) as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &h) in taps[j_lo..=j_hi].iter().enumerate() {
            acc += w.samples[(base - (j_lo + j) as isize) as usize] * h;
        }
        *slot = acc;
    }
    Ok(Waveform {
        samples: out,
        samples_per_symbol: w.samples_per_symbol,
        rolloff: w.rolloff,
    })
}

/// Add circular complex white noise of per-sample power `noise_power` to a
/// waveform. With unit-energy shaping and matched filtering this produces a
/// symbol-level noise power equal to `noise_power`.
pub fn add_waveform_noise(w: &Waveform, noise_power: f64, seed: u64) -> Waveform {
    if noise_power == 0.0 {
        return w.clone();
    }
    let sd = (noise_power / 2.0).sqrt();
    let mut rng = stream(seed, "waveform-noise");
    let samples = w
        .samples
        .iter()
        .map(|&s| {
            let nr: f64 = rng.sample(StandardNormal);
            let ni: f64 = rng.sample(StandardNormal);
            s + Complex64::new(sd * nr, sd * ni)
        })
        .collect();
    Waveform {
        samples,
        samples_per_symbol: w.samples_per_symbol,
        rolloff: w.rolloff,
    }
}

/// Windowed-sinc kernel delaying by fractional sample `f` in [0, 1).
/// `kernel[c]` with `c = taps/2 - 1` is the unit tap for `f = 0`.
fn delay_kernel(f: f64, win: &[f64]) -> Vec<f64> {
    let taps = win.len();
    let c = taps / 2 - 1;
    if f.abs() < 1e-12 {
        let mut k = vec![0.0; taps];
        k[c] = 1.0;
        return k;
    }
    // sin(pi (j - c - f)) = (-1)^(j-c) sin(-pi f); one sine evaluation total
    let s = -(PI * f).sin();
    let mut k = Vec::with_capacity(taps);
    for (j, &w) in win.iter().enumerate() {
        let d = j as f64 - c as f64 - f;
        let sign = if (j as isize - c as isize) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        k.push(w * sign * s / (PI * d));
    }
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn blackman_window(taps: usize) -> Vec<f64> {
    (0..taps)
        .map(|j| {
            let x = j as f64 / (taps - 1) as f64;
            0.42 - 0.5 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).cos()
        })
        .collect()
}

/// Fractionally delay a waveform by `tau(k) = tau0 + drift_per_symbol * k`
/// symbol periods (`k` counted at the symbol rate), using band-limited
/// windowed-sinc interpolation. Samples shifted in from beyond the ends are
/// zero.
pub fn apply_timing_offset(w: &Waveform, tau0: f64, drift_per_symbol: f64) -> Result<Waveform> {
    if !(tau0.abs() < 1.0) {
        return Err(Error::invalid("|tau0| must be < 1 symbol period"));
    }
    let sps = w.samples_per_symbol as f64;
    let n = w.samples.len();
    let win = blackman_window(DELAY_KERNEL_TAPS);
    let c = DELAY_KERNEL_TAPS as isize / 2 - 1;
    let mut kernel: Vec<f64> = Vec::new();
    let mut kernel_frac = f64::NAN;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (m, slot) in out.iter_mut().enumerate() {
        let tau = tau0 + drift_per_symbol * (m as f64 / sps);
        let delay_samples = tau * sps;
        let n_int = delay_samples.floor() as isize;
        let frac = delay_samples - n_int as f64;
        // the drift moves the fractional part slowly; rebuild lazily
        if kernel_frac.is_nan() || (frac - kernel_frac).abs() > 5e-5 {
            kernel = delay_kernel(frac, &win);
            kernel_frac = frac;
        }
        let base = m as isize - n_int + c;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &h) in kernel.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            let idx = base - j as isize;
            if idx >= 0 && (idx as usize) < n {
                acc += w.samples[idx as usize] * h;
            }
        }
        *slot = acc;
    }
    Ok(Waveform {
        samples: out,
        samples_per_symbol: w.samples_per_symbol,
        rolloff: w.rolloff,
    })
}

/// Decimate an aligned waveform to one sample per symbol.
pub fn decimate_symbols(w: &Waveform) -> Vec<Complex64> {
    w.samples
        .iter()
        .step_by(w.samples_per_symbol)
        .copied()
        .collect()
}
