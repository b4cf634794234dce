//! Bootstrap particle filter over the carrier state (phase, frequency).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::phase::measurement::MeasurementModel;
use crate::phase::{ParticleCloud, SmootherConfig, SmootherOutput};
use crate::rng::stream;
use crate::signal::{ReceivedSequence, RevelationMask, SymbolSequence};

/// Filter output for one processed block.
#[derive(Debug)]
pub struct BlockRun {
    /// Per-step particle clouds (stored before resampling).
    pub clouds: Vec<ParticleCloud>,
    /// Filtered estimate and diagnostics for the block.
    pub output: SmootherOutput,
}

/// Sequential bootstrap filter with explicit state, so a long record can be
/// processed block by block while the particle population carries across
/// block boundaries.
pub struct BootstrapFilter {
    cfg: SmootherConfig,
    model: MeasurementModel,
    rng: ChaCha8Rng,
    phases: Vec<f64>,
    frequencies: Vec<f64>,
    log_weights: Vec<f64>,
    /// log-sum-exp of the current (shifted) log weights.
    lse: f64,
    steps_done: usize,
    // per-step scratch
    sinv: Vec<f64>,
    cosv: Vec<f64>,
    wnorm: Vec<f64>,
    resample_idx: Vec<usize>,
    scratch: Vec<f64>,
}

impl BootstrapFilter {
    /// Create a filter with freshly initialized particles.
    ///
    /// `sector_init = true` draws initial phases uniformly over one alphabet
    /// sector `[0, 2 pi / M)` (the rotation symmetry of the unrevealed
    /// mixture makes a wider prior redundant); otherwise phases are Gaussian
    /// around 0 with `cfg.init_phase_stddev`.
    pub fn new(
        cfg: &SmootherConfig,
        modulation_order: usize,
        total_noise_power: f64,
        sector_init: bool,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let model = MeasurementModel::new(modulation_order, total_noise_power)?;
        let mut rng = stream(seed, "bootstrap-filter");
        let n = cfg.n_particles;
        let mut phases = Vec::with_capacity(n);
        let mut frequencies = Vec::with_capacity(n);
        for _ in 0..n {
            let phase = if sector_init {
                rng.random::<f64>() * TAU / modulation_order as f64
            } else {
                let g: f64 = rng.sample(StandardNormal);
                cfg.init_phase_stddev * g
            };
            let g: f64 = rng.sample(StandardNormal);
            phases.push(phase);
            frequencies.push(cfg.init_frequency_mean + cfg.init_frequency_stddev * g);
        }
        Ok(BootstrapFilter {
            cfg: cfg.clone(),
            model,
            rng,
            phases,
            frequencies,
            log_weights: vec![0.0; n],
            lse: (n as f64).ln(),
            steps_done: 0,
            sinv: vec![0.0; n],
            cosv: vec![0.0; n],
            wnorm: vec![0.0; n],
            resample_idx: vec![0; n],
            scratch: vec![0.0; n],
        })
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    /// Process one block of samples; lengths of the three slices must match.
    pub fn process_block(
        &mut self,
        samples: &[Complex64],
        revealed: &[bool],
        known: &[Complex64],
    ) -> Result<BlockRun> {
        if samples.len() != revealed.len() || samples.len() != known.len() {
            return Err(Error::invalid("block slice lengths differ"));
        }
        let n = self.cfg.n_particles;
        let k_block = samples.len();
        let mut clouds = Vec::with_capacity(k_block);
        let mut phase_estimate = Vec::with_capacity(k_block);
        let mut effective_count = Vec::with_capacity(k_block);
        let mut degeneracy_events = Vec::new();
        let mut log_likelihood = 0.0;

        let sd_phi = self.cfg.params.sigma2_phi.sqrt();
        let sd_omega = self.cfg.params.sigma2_omega.sqrt();
        let threshold = self.cfg.resample_fraction * n as f64;

        for (k, &b) in samples.iter().enumerate() {
            let step = self.steps_done;
            if step > 0 {
                // propagate through the state model: phase moves by the old
                // frequency, then the frequency takes its own step
                for i in 0..n {
                    let w: f64 = self.rng.sample(StandardNormal);
                    let v: f64 = self.rng.sample(StandardNormal);
                    self.phases[i] += self.frequencies[i] + sd_phi * w;
                    self.frequencies[i] += sd_omega * v;
                }
            }

            let known_symbol = if revealed[k] { Some(known[k]) } else { None };
            for i in 0..n {
                let (s, c) = self.phases[i].sin_cos();
                self.sinv[i] = s;
                self.cosv[i] = c;
                let u = Complex64::new(b.re * c + b.im * s, b.im * c - b.re * s);
                self.log_weights[i] += self.model.loglik_rotated(u, known_symbol);
            }

            let mx = self
                .log_weights
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            if mx.is_nan() {
                return Err(Error::NumericalFailure(format!(
                    "NaN particle weight at step {step}"
                )));
            }
            if mx == f64::NEG_INFINITY {
                return Err(Error::Degeneracy { step });
            }

            let mut sum = 0.0;
            for i in 0..n {
                let w = (self.log_weights[i] - mx).exp();
                self.wnorm[i] = w;
                sum += w;
            }
            // prediction log-density increment: LSE(new) - LSE(old)
            let lse_new = mx + sum.ln();
            log_likelihood += lse_new - self.lse;
            // keep log weights near zero to preserve precision over long runs
            for lw in &mut self.log_weights {
                *lw -= mx;
            }
            self.lse = lse_new - mx;

            let mut sum_sq = 0.0;
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..n {
                let w = self.wnorm[i];
                sum_sq += w * w;
                re += w * self.cosv[i];
                im += w * self.sinv[i];
            }
            let neff = (sum * sum) / sum_sq;
            effective_count.push(neff);
            phase_estimate.push(im.atan2(re));
            if neff <= 1.0 + 1e-9 {
                degeneracy_events.push(step);
            }

            clouds.push(ParticleCloud {
                phases: self.phases.clone(),
                frequencies: self.frequencies.clone(),
                log_weights: self.log_weights.clone(),
            });

            if neff < threshold {
                self.systematic_resample(sum);
            }
            self.steps_done += 1;
        }

        Ok(BlockRun {
            clouds,
            output: SmootherOutput {
                phase_estimate,
                effective_count,
                log_likelihood,
                degeneracy_events,
            },
        })
    }

    /// Systematic resampling over the normalized weights in `wnorm / sum`.
    fn systematic_resample(&mut self, sum: f64) {
        let n = self.cfg.n_particles;
        let step = 1.0 / n as f64;
        let start: f64 = self.rng.random::<f64>() * step;
        let mut cum = self.wnorm[0] / sum;
        let mut i = 0usize;
        for j in 0..n {
            let target = start + j as f64 * step;
            while cum < target && i + 1 < n {
                i += 1;
                cum += self.wnorm[i] / sum;
            }
            self.resample_idx[j] = i;
        }
        // gather states; scratch avoids aliasing
        for j in 0..n {
            self.scratch[j] = self.phases[self.resample_idx[j]];
        }
        std::mem::swap(&mut self.phases, &mut self.scratch);
        for j in 0..n {
            self.scratch[j] = self.frequencies[self.resample_idx[j]];
        }
        std::mem::swap(&mut self.frequencies, &mut self.scratch);
        for lw in &mut self.log_weights {
            *lw = 0.0;
        }
        self.lse = (n as f64).ln();
    }
}

/// Run the bootstrap filter over a full record in one pass.
///
/// Returns the per-step particle clouds (inputs to
/// [`super::backward_simulation_smoother`]) and the filtered output. The
/// phase initialization is the uniform alphabet sector when the mask reveals
/// nothing, Gaussian otherwise.
pub fn bootstrap_filter(
    b: &ReceivedSequence,
    mask: &RevelationMask,
    known: &SymbolSequence,
    cfg: &SmootherConfig,
    seed: u64,
) -> Result<(Vec<ParticleCloud>, SmootherOutput)> {
    if b.len() != mask.len() || b.len() != known.len() {
        return Err(Error::invalid("received/mask/symbol lengths differ"));
    }
    let sector_init = mask.count_revealed() == 0;
    let mut filter = BootstrapFilter::new(
        cfg,
        known.modulation_order,
        b.total_noise_power,
        sector_init,
        seed,
    )?;
    let run = filter.process_block(&b.samples, &mask.revealed, &known.symbols)?;
    Ok((run.clouds, run.output))
}
