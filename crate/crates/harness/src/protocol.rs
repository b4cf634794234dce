//! The per-trial receive chain.
//!
//! Ground truth is generated for one initialization block plus the payload
//! blocks. The initialization block is fully revealed: it provides the
//! carrier frequency estimate that re-centers the down-conversion, exactly
//! like updating the receiver's local-oscillator frequency before the
//! quantum communication starts. Phase estimation then runs blockwise over
//! the payload with the particle population carried across block
//! boundaries, and all metrics are computed on the payload only.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use cvqkd_core::error::Error as CoreError;
use cvqkd_core::metrics::{
    estimate_quantum_power, excess_noise_calibrated, excess_noise_from_phase, hard_decision_mi,
    photons_per_symbol, theoretical_mi,
};
use cvqkd_core::phase::{
    acquire_blind, backward_simulation_smoother, estimate_carrier, refine_carrier,
    resolve_phase_ambiguity, BootstrapFilter, SmootherConfig,
};
use cvqkd_core::rng;
use cvqkd_core::signal::pulse::{
    add_waveform_noise, apply_timing_offset, matched_filter, rrc_pulse_shape, Waveform,
};
use cvqkd_core::signal::{
    apply_awgn_channel, gen_phase_trajectory, gen_revelation_mask, gen_symbols, ReceivedSequence,
    SymbolSequence,
};
use cvqkd_core::timing::{oerder_meyr_block, timing_ekf_step, TimingTrackerState};
use cvqkd_core::signal::StateSpaceParams;

use crate::config::ScenarioConfig;
use crate::records::TrialRecord;

/// One sweep grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub modulation_order: usize,
    pub p_r: f64,
    pub snr_db: f64,
}

/// Deterministic per-trial seed: a pure function of the master seed and the
/// grid coordinates, so any trial can be reproduced in isolation and the
/// execution order of a sweep is irrelevant.
pub fn trial_seed(master_seed: u64, point: &GridPoint, trial: u64) -> u64 {
    rng::derive(
        master_seed,
        &[
            point.modulation_order as u64,
            point.p_r.to_bits(),
            point.snr_db.to_bits(),
            trial,
        ],
    )
}

/// Run one trial; soft failures (estimator degeneracy and the like) are
/// reported inside the record, never as an error.
pub fn run_trial(cfg: &ScenarioConfig, point: &GridPoint, trial: u64, master_seed: u64) -> TrialRecord {
    let started = Instant::now();
    let mut record = match run_trial_inner(cfg, point, trial, master_seed) {
        Ok(r) => r,
        Err(e) => failed_record(cfg, point, trial, &e),
    };
    record.wall_ms = started.elapsed().as_millis() as u64;
    record
}

fn failed_record(cfg: &ScenarioConfig, point: &GridPoint, trial: u64, err: &CoreError) -> TrialRecord {
    TrialRecord {
        m: point.modulation_order,
        p_r: point.p_r,
        snr_db: point.snr_db,
        trial,
        symbols_per_block: cfg.symbols_per_block,
        blocks: cfg.blocks,
        xi_phase: f64::NAN,
        xi_calibrated: f64::NAN,
        mi_bits: f64::NAN,
        mi_theory_bits: f64::NAN,
        p_b: f64::NAN,
        p_q: f64::NAN,
        photons_per_symbol: f64::NAN,
        min_effective_count: f64::NAN,
        degeneracy_events: 0,
        ambiguity_rotation: 0,
        filter_log_likelihood: f64::NAN,
        failed: true,
        status: format!("error: {err}").replace(',', ";"),
        wall_ms: 0,
    }
}

fn run_trial_inner(
    cfg: &ScenarioConfig,
    point: &GridPoint,
    trial: u64,
    master_seed: u64,
) -> Result<TrialRecord, CoreError> {
    let m = point.modulation_order;
    let snr = 10f64.powf(point.snr_db / 10.0);
    let p_tn = 1.0 / snr;
    let k_block = cfg.symbols_per_block;
    let k_payload = cfg.blocks * k_block;
    // A run with any revelation is preceded by a fully revealed
    // initialization block that anchors the carrier; a p_r = 0 run has
    // nothing revealed at all and must acquire blind.
    let blind = point.p_r == 0.0;
    let k_total = if blind { k_payload } else { k_block + k_payload };
    let k0 = k_total - k_payload;
    let seed = trial_seed(master_seed, point, trial);

    let symbols = gen_symbols(m, k_total, seed)?;
    let init_phase = {
        use rand::Rng;
        let mut r = rng::stream(seed, "true-init-phase");
        r.random::<f64>() * TAU - PI
    };
    let trajectory = gen_phase_trajectory(k_total, &cfg.theta(), init_phase, cfg.carrier_offset, seed);
    let payload_mask = gen_revelation_mask(k_payload, point.p_r, seed)?;

    // channel: symbol-level AWGN, or the full pulse-shaped timing path
    let received = if cfg.timing_enabled {
        timing_path(cfg, &symbols, &trajectory, p_tn, snr, seed)?
    } else {
        apply_awgn_channel(&symbols, &trajectory, snr, seed)?
    };

    // Carrier acquisition on the revealed initialization block, then
    // down-conversion update: the whole record is de-rotated by the coarse
    // estimate. A second pass refines the residual slope on every revealed
    // symbol (the initialization block plus the payload revelation), whose
    // baseline is the full record; without it, the leftover fraction of a
    // periodogram bin turns into a standing phase lag in the tracker.
    let (payload_samples, residual_true, init_freq_stddev) = if blind {
        // no revealed data anywhere: acquire the carrier from the M-th
        // power of the record; when that tone is buried the estimate is
        // honest garbage with a wide uncertainty and demodulation collapses
        let acq = acquire_blind(&received.samples, m)?;
        let samples: Vec<Complex64> = received
            .samples
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                s * Complex64::from_polar(1.0, -acq.phase - acq.frequency * idx as f64)
            })
            .collect();
        let residual: Vec<f64> = (0..k_payload)
            .map(|idx| trajectory.phase[idx] - acq.phase - acq.frequency * idx as f64)
            .collect();
        let stddev = (3.0 * acq.frequency_stddev).clamp(1e-8, cfg.blind_frequency_stddev);
        (samples, residual, stddev)
    } else {
        let acq = estimate_carrier(&received.samples[..k_block], &symbols.symbols[..k_block])?;
        let coarse: Vec<Complex64> = received
            .samples
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                s * Complex64::from_polar(1.0, -acq.phase - acq.frequency * idx as f64)
            })
            .collect();
        let mut revealed_all = vec![true; k_block];
        revealed_all.extend_from_slice(&payload_mask.revealed);
        let refine = refine_carrier(
            &coarse,
            &symbols.symbols,
            &revealed_all,
            p_tn,
            3.0 * acq.frequency_stddev.max(1e-9),
        )?;
        let carrier_phase = |idx: usize| -> f64 {
            acq.phase + refine.phase + (acq.frequency + refine.frequency) * idx as f64
        };
        let samples: Vec<Complex64> = (0..k_payload)
            .map(|k| {
                let idx = k0 + k;
                received.samples[idx] * Complex64::from_polar(1.0, -carrier_phase(idx))
            })
            .collect();
        let residual: Vec<f64> = (0..k_payload)
            .map(|k| {
                let idx = k0 + k;
                trajectory.phase[idx] - carrier_phase(idx)
            })
            .collect();
        // cover the refined estimator error; anything much wider invites
        // particle lineages whose frequency never recovers
        let stddev = (3.0 * refine.frequency_stddev).clamp(1e-8, acq.frequency_stddev.max(1e-8));
        (samples, residual, stddev)
    };
    let payload = ReceivedSequence {
        samples: payload_samples,
        total_noise_power: p_tn,
        snr_b: snr,
    };

    // Blockwise filtering with the particle population carried across block
    // boundaries. Smoothing runs over a rolling window keeping its oldest
    // block, so every kept symbol (outside the final window) has
    // `smoothing_lookahead_blocks` of future data: a backward pass confined
    // to a single block would leave its trailing symbols at filter quality,
    // which turns any residual acquisition frequency error into a
    // seam-localized phase lag and starves sparse-revelation runs of the
    // long smoother memory they rely on.
    let smoother_cfg = SmootherConfig {
        init_frequency_stddev: init_freq_stddev,
        ..cfg.smoother()
    };
    let mut filter = BootstrapFilter::new(&smoother_cfg, m, p_tn, blind, seed)?;
    let mut phase_hat = Vec::with_capacity(k_payload);
    let mut min_neff = f64::INFINITY;
    let mut degeneracy_events = 0usize;
    let mut log_likelihood = 0.0;
    let mut window: Vec<cvqkd_core::phase::ParticleCloud> = Vec::new();
    for block in 0..cfg.blocks {
        let lo = block * k_block;
        let hi = lo + k_block;
        let run = filter.process_block(
            &payload.samples[lo..hi],
            &payload_mask.revealed[lo..hi],
            &symbols.symbols[k0 + lo..k0 + hi],
        )?;
        for &ne in &run.output.effective_count {
            min_neff = min_neff.min(ne);
        }
        degeneracy_events += run.output.degeneracy_events.len();
        log_likelihood += run.output.log_likelihood;

        window.extend(run.clouds);
        let window_blocks = 1 + cfg.smoothing_lookahead_blocks;
        if window.len() >= window_blocks * k_block {
            // full lookahead available: smooth the window, keep its oldest
            // block
            let kept_block = block + 1 - window_blocks;
            let smoothed = backward_simulation_smoother(
                &window,
                &smoother_cfg.params,
                smoother_cfg.n_trajectories,
                rng::derive(seed, &[0xB10C, kept_block as u64]),
            )?;
            phase_hat.extend_from_slice(&smoothed.phase_estimate[..k_block]);
            window.drain(..k_block);
        }
    }
    // the remaining window ends at the true end of data; smooth it once and
    // keep everything (its trailing block could not have more future)
    if !window.is_empty() {
        let first_kept = cfg.blocks - window.len() / k_block;
        let smoothed_last = backward_simulation_smoother(
            &window,
            &smoother_cfg.params,
            smoother_cfg.n_trajectories,
            rng::derive(seed, &[0xB10C, first_kept as u64]),
        )?;
        phase_hat.extend_from_slice(&smoothed_last.phase_estimate);
    }
    drop(window);

    // the payload symbols, for metric evaluation
    let payload_symbols = SymbolSequence {
        symbols: symbols.symbols[k0..].to_vec(),
        modulation_order: m,
    };

    // sector ambiguity: only a run with zero revelation needs resolution
    let ambiguity_rotation = if blind {
        let rot = resolve_phase_ambiguity(&phase_hat, &payload, &payload_symbols);
        let delta = TAU * rot as f64 / m as f64;
        for p in &mut phase_hat {
            *p += delta;
        }
        rot
    } else {
        0
    };

    // metrics on the payload
    let phase_err: Vec<f64> = residual_true
        .iter()
        .zip(&phase_hat)
        .map(|(t, e)| t - e)
        .collect();
    let xi_phase = excess_noise_from_phase(snr, cfg.epsilon_el, &phase_err);
    let corrected: Vec<Complex64> = payload
        .samples
        .iter()
        .zip(&phase_hat)
        .map(|(s, &ph)| s * Complex64::from_polar(1.0, -ph))
        .collect();
    let mi_bits = hard_decision_mi(&payload_symbols, &corrected, m)?;
    let mi_theory_bits = theoretical_mi(snr, m)?;
    let p_b = corrected.iter().map(|s| s.norm_sqr()).sum::<f64>() / corrected.len() as f64;
    let p_q = estimate_quantum_power(&payload_symbols, &corrected);
    let p_sn = p_tn / (1.0 + cfg.epsilon_el);
    let p_en = p_tn - p_sn;
    let xi_calibrated = excess_noise_calibrated(p_b, p_q, p_sn, p_en)?;
    let photons = photons_per_symbol(snr, cfg.epsilon_el, cfg.eta)?;
    let failed = !(mi_bits >= cfg.failure_threshold * mi_theory_bits);

    Ok(TrialRecord {
        m,
        p_r: point.p_r,
        snr_db: point.snr_db,
        trial,
        symbols_per_block: k_block,
        blocks: cfg.blocks,
        xi_phase,
        xi_calibrated,
        mi_bits,
        mi_theory_bits,
        p_b,
        p_q,
        photons_per_symbol: photons,
        min_effective_count: min_neff,
        degeneracy_events,
        ambiguity_rotation,
        filter_log_likelihood: log_likelihood,
        failed,
        status: if degeneracy_events > 0 {
            "degeneracy".to_string()
        } else {
            "ok".to_string()
        },
        wall_ms: 0,
    })
}

/// Pulse-shaped channel with clock offset, blockwise timing recovery, and
/// correction back to one sample per symbol.
fn timing_path(
    cfg: &ScenarioConfig,
    symbols: &SymbolSequence,
    trajectory: &cvqkd_core::signal::PhaseTrajectory,
    p_tn: f64,
    snr: f64,
    seed: u64,
) -> Result<ReceivedSequence, CoreError> {
    // carrier rotation applied at the symbol level: the phase moves by
    // ~1e-4 rad per symbol, far slower than the pulse span
    let rotated = SymbolSequence {
        symbols: symbols
            .symbols
            .iter()
            .zip(&trajectory.phase)
            .map(|(s, &ph)| s * Complex64::from_polar(1.0, ph))
            .collect(),
        modulation_order: symbols.modulation_order,
    };
    let shaped = rrc_pulse_shape(&rotated, cfg.sps, cfg.rolloff, cfg.rrc_span)?;
    let offset = apply_timing_offset(&shaped, cfg.timing_tau0, cfg.timing_drift_per_symbol)?;
    let noisy = add_waveform_noise(&offset, p_tn, seed);
    let filtered = matched_filter(&noisy, cfg.rrc_span)?;

    let k_block = cfg.symbols_per_block;
    let sps = cfg.sps;
    let n_blocks = filtered.symbol_count() / k_block;
    let timing_q = StateSpaceParams {
        sigma2_phi: cfg.timing_q_phase,
        sigma2_omega: cfg.timing_q_drift,
    };

    // measure every block first so an ensemble SNR_X estimate can weight
    // the tracker, then track and correct
    let mut measurements = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let lo = b * k_block * sps;
        let seg = Waveform {
            samples: filtered.samples[lo..lo + k_block * sps].to_vec(),
            samples_per_symbol: sps,
            rolloff: cfg.rolloff,
        };
        let mut res = oerder_meyr_block(&seg, k_block)?;
        res.block_index = b;
        measurements.push(res);
    }
    let snr_x = if n_blocks >= 10 {
        cvqkd_core::timing::estimate_snr_x(&measurements).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    for r in &mut measurements {
        r.snr_x = snr_x;
    }

    let mut state = TimingTrackerState::new(
        measurements[0].fourier_coefficient.arg(),
        0.0,
        0.5,
        0.01,
    );
    let mut corrected = Vec::with_capacity(n_blocks * k_block);
    let pad = 64usize; // interpolation margin, in samples
    for (b, meas) in measurements.iter().enumerate() {
        state = timing_ekf_step(&state, meas, &timing_q)?;
        // correct this block with the tracked offset; the fractional delay
        // needs margin samples from the neighboring blocks
        let tracked = -cvqkd_core::util::wrap_angle(state.timing_phase) / TAU;
        let lo = b * k_block * sps;
        let hi = lo + k_block * sps;
        let lo_pad = lo.saturating_sub(pad);
        let hi_pad = (hi + pad).min(filtered.samples.len());
        let seg = Waveform {
            samples: filtered.samples[lo_pad..hi_pad].to_vec(),
            samples_per_symbol: sps,
            rolloff: cfg.rolloff,
        };
        let fixed = apply_timing_offset(&seg, -tracked, 0.0)?;
        let skip = lo - lo_pad;
        for k in 0..k_block {
            corrected.push(fixed.samples[skip + k * sps]);
        }
    }
    // any residual symbols beyond whole blocks pass through uncorrected
    for k in n_blocks * k_block..filtered.symbol_count() {
        corrected.push(filtered.samples[k * sps]);
    }

    Ok(ReceivedSequence {
        samples: corrected,
        total_noise_power: p_tn,
        snr_b: snr,
    })
}
