//! Development probe runs for calibrating acceptance expectations.
//! Temporary tool; not part of the shipped interface.

use std::time::Instant;

use cvqkd_harness::config::ScenarioConfig;
use cvqkd_harness::records::TrialRecord;
use cvqkd_harness::sweep::run_sweep;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn summarize(records: &[TrialRecord]) {
    let mut points: Vec<(usize, f64, f64)> = Vec::new();
    for r in records {
        if !points.contains(&(r.m, r.p_r, r.snr_db)) {
            points.push((r.m, r.p_r, r.snr_db));
        }
    }
    for (m, p_r, snr_db) in points {
        let subset: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.m == m && r.p_r == p_r && r.snr_db == snr_db)
            .collect();
        let xi: Vec<f64> = subset.iter().map(|r| r.xi_phase).collect();
        let mi: Vec<f64> = subset.iter().map(|r| r.mi_bits).collect();
        let mi_th = subset[0].mi_theory_bits;
        let fails = subset.iter().filter(|r| r.failed).count();
        let degen: usize = subset.iter().map(|r| r.degeneracy_events).sum();
        println!(
            "m={m} p_r={p_r:<4} snr={snr_db:>6.1} dB  xi_mean={:.4e} mi={:.4e} mi_th={:.4e} fails={fails}/{} degen={degen}",
            mean(&xi),
            mean(&mi),
            mi_th,
            subset.len()
        );
    }
}

fn slope_fit(records: &[TrialRecord]) {
    // log-log slope of mean xi vs snr (dB per decade)
    let mut by_snr: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in records {
        match by_snr.iter_mut().find(|(s, _)| *s == r.snr_db) {
            Some((_, v)) => v.push(r.xi_phase),
            None => by_snr.push((r.snr_db, vec![r.xi_phase])),
        }
    }
    let x: Vec<f64> = by_snr.iter().map(|(s, _)| s / 10.0).collect();
    let y: Vec<f64> = by_snr.iter().map(|(_, v)| mean(v).log10()).collect();
    let n = x.len() as f64;
    let mx = mean(&x);
    let my = mean(&y);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let _ = n;
    println!("fitted slope: {:.3} dB/decade", 10.0 * sxy / sxx / 10.0 * 10.0);
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "slope".into());
    let seeds: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    let t0 = Instant::now();
    match mode.as_str() {
        "slope" => {
            let cfg = ScenarioConfig {
                modulation_orders: vec![4],
                p_r_grid: vec![1.0],
                snr_db_grid: vec![-30.0, -25.0, -20.0, -15.0, -10.0, -5.0],
                n_seeds: seeds,
                ..ScenarioConfig::default()
            };
            let records = run_sweep(&cfg, 1, 0).unwrap();
            summarize(&records);
            slope_fit(&records);
        }
        "threshold4" => {
            let cfg = ScenarioConfig {
                modulation_orders: vec![4],
                p_r_grid: vec![0.0],
                snr_db_grid: vec![-14.0, -12.0, -10.0, -8.0, -6.0, -4.0],
                n_seeds: seeds,
                ..ScenarioConfig::default()
            };
            let records = run_sweep(&cfg, 2, 0).unwrap();
            summarize(&records);
        }
        "threshold2" => {
            let cfg = ScenarioConfig {
                modulation_orders: vec![2],
                p_r_grid: vec![0.0],
                snr_db_grid: vec![-24.0, -22.0, -20.0, -18.0, -16.0, -14.0, -12.0],
                n_seeds: seeds,
                ..ScenarioConfig::default()
            };
            let records = run_sweep(&cfg, 3, 0).unwrap();
            summarize(&records);
        }
        "lowsnr" => {
            let cfg = ScenarioConfig {
                modulation_orders: vec![4],
                p_r_grid: vec![0.05],
                snr_db_grid: vec![-30.0],
                n_seeds: seeds,
                ..ScenarioConfig::default()
            };
            let records = run_sweep(&cfg, 4, 0).unwrap();
            summarize(&records);
        }
        "ratio" => {
            let cfg = ScenarioConfig {
                modulation_orders: vec![4],
                p_r_grid: vec![0.05, 1.0],
                snr_db_grid: vec![-25.0, -20.0, -15.0],
                n_seeds: seeds,
                ..ScenarioConfig::default()
            };
            let records = run_sweep(&cfg, 5, 0).unwrap();
            summarize(&records);
            for snr in [-25.0, -20.0, -15.0] {
                let xi = |p: f64| {
                    mean(
                        &records
                            .iter()
                            .filter(|r| r.p_r == p && r.snr_db == snr)
                            .map(|r| r.xi_phase)
                            .collect::<Vec<_>>(),
                    )
                };
                println!("snr {snr}: ratio {:.2}", xi(0.05) / xi(1.0));
            }
        }
        "monotone" => {
            let cfg = ScenarioConfig {
                modulation_orders: vec![4],
                p_r_grid: vec![0.0, 0.05, 1.0],
                snr_db_grid: vec![-20.0, -15.0],
                n_seeds: seeds,
                ..ScenarioConfig::default()
            };
            let records = run_sweep(&cfg, 6, 0).unwrap();
            summarize(&records);
        }
        "window" => {
            // lookahead study at fixed total payload
            let lookahead: usize = std::env::args()
                .nth(3)
                .and_then(|s| s.parse().ok())
                .unwrap_or(2);
            let cfg = ScenarioConfig {
                modulation_orders: vec![4],
                p_r_grid: vec![0.05],
                snr_db_grid: vec![-20.0],
                n_seeds: seeds,
                smoothing_lookahead_blocks: lookahead,
                ..ScenarioConfig::default()
            };
            let records = run_sweep(&cfg, 5, 0).unwrap();
            for r in &records {
                println!("trial {} xi={:.4e} mi={:.4e}", r.trial, r.xi_phase, r.mi_bits);
            }
            summarize(&records);
        }
        "theta" => {
            use cvqkd_core::param::{energy_function, simplex_minimize};
            use cvqkd_core::signal::{
                apply_awgn_channel, gen_phase_trajectory, gen_symbols, RevelationMask,
                StateSpaceParams,
            };
            let k = 200_000usize;
            let snr = 10f64.powf(1.15);
            let theta = StateSpaceParams::default();
            let mut hits = 0;
            for seed in 0..seeds {
                let a = gen_symbols(4, k, 1000 + seed).unwrap();
                let t = gen_phase_trajectory(k, &theta, 0.0, 0.0, 2000 + seed);
                let b = apply_awgn_channel(&a, &t, snr, 3000 + seed).unwrap();
                let mask = RevelationMask::all(k);
                let theta0 = StateSpaceParams::new(1e-14, 1e-7).unwrap();
                let res = simplex_minimize(
                    |th| energy_function(th, &b, &mask, &a).unwrap_or(f64::INFINITY),
                    &theta0,
                    1e-3,
                    200,
                )
                .unwrap();
                let r_om = res.theta_hat.sigma2_omega / theta.sigma2_omega;
                let r_ph = res.theta_hat.sigma2_phi / theta.sigma2_phi;
                let ok = (1.0 / 3.0..=3.0).contains(&r_om) && (1.0 / 3.0..=3.0).contains(&r_ph);
                hits += ok as usize;
                println!(
                    "seed {seed}: theta_hat=({:.3e}, {:.3e}) ratios=({:.2}, {:.2}) iters={} conv={} ok={ok}",
                    res.theta_hat.sigma2_omega, res.theta_hat.sigma2_phi, r_om, r_ph,
                    res.iterations, res.converged
                );
            }
            println!("recovered within factor 3: {hits}/{seeds}");
        }
        "snrx" => {
            use cvqkd_core::signal::gen_symbols;
            use cvqkd_core::signal::pulse::{
                add_waveform_noise, matched_filter, rrc_pulse_shape,
            };
            use cvqkd_core::timing::{estimate_snr_x, oerder_meyr_block};
            use rayon::prelude::*;
            // level check at the reference operating point
            let l = 680_000usize;
            let n_blocks = seeds as usize; // reuse arg as block count
            let snr = 0.01f64;
            let results: Vec<_> = (0..n_blocks)
                .into_par_iter()
                .map(|b| {
                    let a = gen_symbols(4, l, 9000 + b as u64).unwrap();
                    let tx = rrc_pulse_shape(&a, 4, 0.1, 32).unwrap();
                    let noisy = add_waveform_noise(&tx, 1.0 / snr, 500 + b as u64);
                    let rx = matched_filter(&noisy, 32).unwrap();
                    let mut r = oerder_meyr_block(&rx, l).unwrap();
                    r.block_index = b;
                    r
                })
                .collect();
            let est = estimate_snr_x(&results).unwrap();
            println!(
                "SNR_X at -20 dB, L=6.8e5, {n_blocks} blocks: {est:.4} = {:.2} dB (reference -0.75 dB)",
                10.0 * est.log10()
            );
        }
        "diag" => {
            let snr_db: f64 = std::env::args()
                .nth(3)
                .and_then(|s| s.parse().ok())
                .unwrap_or(-5.0);
            let p_r: f64 = std::env::args()
                .nth(4)
                .and_then(|s| s.parse().ok())
                .unwrap_or(1.0);
            let cfg = ScenarioConfig {
                modulation_orders: vec![4],
                p_r_grid: vec![p_r],
                snr_db_grid: vec![snr_db],
                n_seeds: seeds,
                ..ScenarioConfig::default()
            };
            let master: u64 = std::env::args()
                .nth(5)
                .and_then(|s| s.parse().ok())
                .unwrap_or(1);
            let records = run_sweep(&cfg, master, 0).unwrap();
            for r in &records {
                println!(
                    "trial {} xi={:.4e} mi={:.4e}/{:.4e} neff_min={:.1} degen={} status={}",
                    r.trial, r.xi_phase, r.mi_bits, r.mi_theory_bits,
                    r.min_effective_count, r.degeneracy_events, r.status
                );
            }
        }
        other => {
            eprintln!("unknown probe mode {other}");
            std::process::exit(2);
        }
    }
    println!("elapsed: {:.1} s", t0.elapsed().as_secs_f64());
}
