//! Command-line front end: sweeps, key rates, hyperparameter fitting, and a
//! quick self-test.

use anyhow::Context;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;

use cvqkd_core::metrics::{photons_per_symbol, theoretical_mi};
use cvqkd_core::param::{energy_function, simplex_minimize};
use cvqkd_core::signal::{
    apply_awgn_channel, gen_phase_trajectory, gen_symbols, psk_alphabet, RevelationMask,
    StateSpaceParams,
};

use cvqkd_harness::config::{KeyRateConfig, ScenarioConfig, ThetaFitConfig};
use cvqkd_harness::fit::fit_excess_noise;
use cvqkd_harness::keyrate_sweep::{emit_keyrate_csv, run_keyrate_sweep};
use cvqkd_harness::records::{emit_csv, emit_json, load_csv};
use cvqkd_harness::sweep::run_sweep;

#[derive(Parser)]
#[command(
    name = "cvqkd",
    about = "Simulation and evaluation harness for pilotless CV-QKD reception"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation sweep over SNR, revelation probability, and
    /// modulation order.
    Simulate {
        /// TOML scenario configuration (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed; every trial seed derives from it.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep achievable key rates over distance.
    Keyrate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Fit the excess-noise models from a trials CSV produced by
        /// `simulate` (overrides the configured coefficients).
        #[arg(long)]
        fit_from: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit the state-space hyperparameters on synthetic training data and
    /// write the optimizer trace.
    OptimizeTheta {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run fast internal consistency checks.
    Selftest,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            config,
            seed,
            jobs,
            out,
        } => simulate(config, seed, jobs, out),
        Command::Keyrate {
            config,
            fit_from,
            out,
        } => keyrate(config, fit_from, out),
        Command::OptimizeTheta { config, seed, out } => optimize_theta(config, seed, out),
        Command::Selftest => selftest(),
    }
}

fn load_scenario(path: Option<PathBuf>) -> anyhow::Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::from_toml_file(&p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn simulate(config: Option<PathBuf>, seed: u64, jobs: usize, out: PathBuf) -> anyhow::Result<()> {
    let cfg = load_scenario(config)?;
    std::fs::create_dir_all(&out).context("creating output directory")?;
    let records = run_sweep(&cfg, seed, jobs)?;
    let csv_path = out.join("trials.csv");
    let json_path = out.join("trials.json");
    emit_csv(&records, &csv_path)?;
    emit_json(&records, &json_path)?;
    let failures = records.iter().filter(|r| r.failed).count();
    println!(
        "wrote {} trials to {} ({} flagged as failed)",
        records.len(),
        csv_path.display(),
        failures
    );
    Ok(())
}

fn keyrate(
    config: Option<PathBuf>,
    fit_from: Option<PathBuf>,
    out: PathBuf,
) -> anyhow::Result<()> {
    let mut cfg = match config {
        Some(p) => KeyRateConfig::from_toml_file(&p)?,
        None => KeyRateConfig::default(),
    };
    if let Some(trials) = fit_from {
        let records = load_csv(&trials)?;
        cfg.fit_m4 = fit_excess_noise(&records, 4, 0.05, 2)
            .context("fitting M = 4 excess noise")?;
        cfg.fit_m2 = fit_excess_noise(&records, 2, 0.05, 2)
            .context("fitting M = 2 excess noise")?;
        println!("fitted m4 coefficients: {:?}", cfg.fit_m4);
        println!("fitted m2 coefficients: {:?}", cfg.fit_m2);
    }
    std::fs::create_dir_all(&out).context("creating output directory")?;
    let rows = run_keyrate_sweep(&cfg)?;
    let path = out.join("keyrates.csv");
    emit_keyrate_csv(&rows, &path)?;
    for series in ["xi_zero", "m4_fit", "m2_fit"] {
        let reach = cvqkd_harness::keyrate_sweep::max_positive_distance(&rows, series);
        match reach {
            Some(d) => println!("{series}: positive rate out to {d} km"),
            None => println!("{series}: no positive rate on the grid"),
        }
    }
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn optimize_theta(config: Option<PathBuf>, seed: u64, out: PathBuf) -> anyhow::Result<()> {
    let cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(&p)?;
            toml::from_str::<ThetaFitConfig>(&text)?
        }
        None => ThetaFitConfig::default(),
    };
    std::fs::create_dir_all(&out).context("creating output directory")?;

    let theta_true = StateSpaceParams::new(cfg.theta_true.0, cfg.theta_true.1)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let snr = 10f64.powf(cfg.snr_db / 10.0);
    let symbols = gen_symbols(4, cfg.symbols, seed).map_err(|e| anyhow::anyhow!("{e}"))?;
    let trajectory = gen_phase_trajectory(cfg.symbols, &theta_true, 0.0, 0.0, seed);
    let received =
        apply_awgn_channel(&symbols, &trajectory, snr, seed).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mask = RevelationMask::all(cfg.symbols);

    let theta0 = StateSpaceParams::new(cfg.theta_init.0, cfg.theta_init.1)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let result = simplex_minimize(
        |theta| match energy_function(theta, &received, &mask, &symbols) {
            Ok(e) => e,
            Err(_) => f64::INFINITY,
        },
        &theta0,
        cfg.tolerance,
        cfg.max_iter,
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;

    let trace_path = out.join("theta_trace.csv");
    let mut file = std::fs::File::create(&trace_path)?;
    writeln!(file, "iteration,sigma2_omega,sigma2_phi,energy")?;
    for (it, theta, energy) in &result.trace {
        writeln!(
            file,
            "{it},{},{},{energy}",
            theta.sigma2_omega, theta.sigma2_phi
        )?;
    }
    println!(
        "theta_hat = ({:.4e}, {:.4e}), energy {:.3}, {} iterations, converged: {}",
        result.theta_hat.sigma2_omega,
        result.theta_hat.sigma2_phi,
        result.energy,
        result.iterations,
        result.converged
    );
    println!(
        "generating theta = ({:.4e}, {:.4e}); trace in {}",
        theta_true.sigma2_omega,
        theta_true.sigma2_phi,
        trace_path.display()
    );
    Ok(())
}

fn selftest() -> anyhow::Result<()> {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {name}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    let alphabet = psk_alphabet(4).map_err(|e| anyhow::anyhow!("{e}"))?;
    check(
        "qpsk alphabet on the unit circle",
        alphabet.iter().all(|a| (a.norm() - 1.0).abs() < 1e-12),
    );

    let mi = theoretical_mi(1.0, 4).map_err(|e| anyhow::anyhow!("{e}"))?;
    check("analytic MI at 0 dB within (0, 2)", mi > 0.0 && mi < 2.0);

    let budget = photons_per_symbol(1.0, 0.70, 0.232).map_err(|e| anyhow::anyhow!("{e}"))?;
    check("photon budget 7.33 per unit SNR", (budget - 7.328).abs() < 0.005);

    let chi = cvqkd_core::keyrate::holevo_bound(1.0, 0.0, 0.5, 1.0, 0.0)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    check("identity channel leaks nothing", chi.abs() < 1e-9);

    let cfg = ScenarioConfig {
        snr_db_grid: vec![0.0],
        p_r_grid: vec![1.0],
        n_seeds: 1,
        symbols_per_block: 2000,
        blocks: 1,
        ..ScenarioConfig::default()
    };
    let a = run_sweep(&cfg, 5, 1)?;
    let b = run_sweep(&cfg, 5, 1)?;
    check(
        "sweep determinism",
        a.len() == 1 && a[0].mi_bits == b[0].mi_bits && a[0].xi_phase == b[0].xi_phase,
    );

    anyhow::ensure!(all_ok, "self-test failed");
    println!("all self-tests passed");
    Ok(())
}
