//! Scenario and key-rate configuration with reference-receiver defaults.

use serde::{Deserialize, Serialize};

use cvqkd_core::phase::SmootherConfig;
use cvqkd_core::signal::StateSpaceParams;

/// Sweep scenario. Every field has a default matching the modeled receiver;
/// a TOML config file may override any subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Modulation orders to sweep.
    pub modulation_orders: Vec<usize>,
    /// SNR_b grid in dB.
    pub snr_db_grid: Vec<f64>,
    /// Revelation probabilities to sweep.
    pub p_r_grid: Vec<f64>,
    /// Trials per grid point (trial index enters the seed derivation).
    pub n_seeds: u64,
    /// Symbols per DSP block.
    pub symbols_per_block: usize,
    /// Payload blocks per trial (an extra fully revealed block always
    /// precedes them to initialize the carrier frequency).
    pub blocks: usize,
    /// Frequency-drift variance of the state model (rad^2/step^2).
    pub sigma2_omega: f64,
    /// Phase-diffusion variance of the state model (rad^2/step).
    pub sigma2_phi: f64,
    /// Particle count of the bootstrap filter.
    pub n_particles: usize,
    /// Backward trajectories of the smoother.
    pub n_trajectories: usize,
    /// Resample when N_eff falls below this fraction of N.
    pub resample_fraction: f64,
    /// Blocks of future data available when a block is smoothed. At sparse
    /// revelation the smoother memory spans multiple blocks, so estimates
    /// improve with lookahead at the cost of holding more particle history.
    pub smoothing_lookahead_blocks: usize,
    /// Filter phase-initialization stddev after carrier acquisition (rad).
    pub init_phase_stddev: f64,
    /// Electrical-to-shot noise ratio of the receiver.
    pub epsilon_el: f64,
    /// Receiver efficiency.
    pub eta: f64,
    /// True initial carrier frequency offset (rad/symbol); acquisition must
    /// find and remove it.
    pub carrier_offset: f64,
    /// Frequency prior of the filter for runs without any revelation, which
    /// cannot anchor the carrier on a revealed block and must acquire it
    /// blind (rad/symbol).
    pub blind_frequency_stddev: f64,
    /// Oversampling for the pulse-shaped path.
    pub sps: usize,
    /// RRC roll-off factor.
    pub rolloff: f64,
    /// RRC span in symbols on each side.
    pub rrc_span: usize,
    /// Route trials through pulse shaping, timing offset, and timing
    /// recovery instead of the symbol-level channel.
    pub timing_enabled: bool,
    /// Static timing offset (symbol periods).
    pub timing_tau0: f64,
    /// Timing drift (symbol periods per symbol).
    pub timing_drift_per_symbol: f64,
    /// Per-block process noise of the timing tracker (phase, drift).
    pub timing_q_phase: f64,
    /// See `timing_q_phase`.
    pub timing_q_drift: f64,
    /// A trial fails when MI drops below this fraction of theory.
    pub failure_threshold: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let theta = StateSpaceParams::default();
        ScenarioConfig {
            modulation_orders: vec![4],
            snr_db_grid: vec![0.0],
            p_r_grid: vec![0.05],
            n_seeds: 10,
            symbols_per_block: 20_000,
            blocks: 10,
            sigma2_omega: theta.sigma2_omega,
            sigma2_phi: theta.sigma2_phi,
            n_particles: 200,
            n_trajectories: 10,
            resample_fraction: 0.2,
            smoothing_lookahead_blocks: 2,
            init_phase_stddev: 0.75,
            epsilon_el: 0.70,
            eta: 0.232,
            carrier_offset: 1e-3,
            blind_frequency_stddev: 2e-3,
            sps: 4,
            rolloff: 0.1,
            rrc_span: 32,
            timing_enabled: false,
            timing_tau0: 0.0,
            timing_drift_per_symbol: 0.0,
            timing_q_phase: 1e-4,
            timing_q_drift: 1e-8,
            failure_threshold: 0.5,
        }
    }
}

impl ScenarioConfig {
    pub fn theta(&self) -> StateSpaceParams {
        StateSpaceParams {
            sigma2_omega: self.sigma2_omega,
            sigma2_phi: self.sigma2_phi,
        }
    }

    pub fn smoother(&self) -> SmootherConfig {
        SmootherConfig {
            n_particles: self.n_particles,
            n_trajectories: self.n_trajectories,
            resample_fraction: self.resample_fraction,
            params: self.theta(),
            init_phase_stddev: self.init_phase_stddev,
            init_frequency_mean: 0.0,
            init_frequency_stddev: 5e-5,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(!self.modulation_orders.is_empty(), "empty modulation grid");
        anyhow::ensure!(!self.snr_db_grid.is_empty(), "empty SNR grid");
        anyhow::ensure!(!self.p_r_grid.is_empty(), "empty p_r grid");
        anyhow::ensure!(self.n_seeds >= 1, "need at least one trial per point");
        anyhow::ensure!(self.symbols_per_block >= 100, "blocks are too short");
        anyhow::ensure!(self.blocks >= 1, "need at least one payload block");
        anyhow::ensure!(
            self.smoothing_lookahead_blocks >= 1,
            "smoothing needs at least one block of lookahead"
        );
        for &p in &self.p_r_grid {
            anyhow::ensure!((0.0..=1.0).contains(&p), "p_r {p} outside [0, 1]");
        }
        Ok(())
    }

    pub fn from_toml_file(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        let cfg: ScenarioConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Excess-noise fit coefficients for the key-rate sweep
/// (`log10 xi = sum_i c_i log10(snr)^i`), obtained from this simulator's own
/// sweep at p_r = 0.05 (see the fitting module).
pub const DEFAULT_FIT_M4: &[f64] = &[-3.8633, 0.3246, -0.0121];
pub const DEFAULT_FIT_M2: &[f64] = &[-3.9312, 0.3305, -0.0126];

/// Key-rate sweep configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct KeyRateConfig {
    /// Distance grid (km).
    pub distances_km: Vec<f64>,
    pub loss_db_per_km: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    pub eta: f64,
    pub epsilon_el: f64,
    /// Receiver sensitivity (dB).
    pub snr_floor_db: f64,
    /// Symbol rate for bits-per-second conversion.
    pub symbol_rate_baud: f64,
    /// Log-polynomial excess-noise fit for M = 4.
    pub fit_m4: Vec<f64>,
    /// Log-polynomial excess-noise fit for M = 2.
    pub fit_m2: Vec<f64>,
}

impl Default for KeyRateConfig {
    fn default() -> Self {
        KeyRateConfig {
            distances_km: (0..=45).map(|i| 2.0 * i as f64).collect(),
            loss_db_per_km: 0.2,
            beta: 0.95,
            eta: 0.232,
            epsilon_el: 0.70,
            snr_floor_db: -35.0,
            symbol_rate_baud: 17e9,
            fit_m4: DEFAULT_FIT_M4.to_vec(),
            fit_m2: DEFAULT_FIT_M2.to_vec(),
        }
    }
}

impl KeyRateConfig {
    pub fn from_toml_file(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }
}

/// Hyperparameter-fit run configuration for the `optimize-theta` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ThetaFitConfig {
    /// Training SNR in dB.
    pub snr_db: f64,
    /// Training record length.
    pub symbols: usize,
    /// Generating parameters of the synthetic training data.
    pub theta_true: (f64, f64),
    /// Optimizer start.
    pub theta_init: (f64, f64),
    /// Simplex diameter tolerance in log-parameter space.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for ThetaFitConfig {
    fn default() -> Self {
        let theta = StateSpaceParams::default();
        ThetaFitConfig {
            snr_db: 11.5,
            symbols: 200_000,
            theta_true: (theta.sigma2_omega, theta.sigma2_phi),
            theta_init: (1e-14, 1e-7),
            tolerance: 1e-3,
            max_iter: 200,
        }
    }
}
