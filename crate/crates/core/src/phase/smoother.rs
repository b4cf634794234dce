//! Backward-simulation particle smoother.
//!
//! Draws full state trajectories backwards through the stored filter clouds:
//! the last state is sampled from the final filter weights, and each earlier
//! state from weights proportional to `filter weight x transition density`.
//! The smoothed phase is the circular mean across trajectories.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::phase::{ParticleCloud, SmootherOutput};
use crate::rng::substream;
use crate::signal::StateSpaceParams;

/// Log transition factor for one Gaussian increment; a zero-variance model
/// degenerates to an indicator on the deterministic step.
#[inline]
fn log_step(diff: f64, sigma2: f64) -> f64 {
    if sigma2 > 0.0 {
        -diff * diff / (2.0 * sigma2)
    } else if diff.abs() < 1e-12 {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Backward-simulation smoothing over stored filter clouds.
///
/// Normalization constants of the transition density cancel inside each
/// step's categorical draw and are omitted.
pub fn backward_simulation_smoother(
    clouds: &[ParticleCloud],
    params: &StateSpaceParams,
    n_trajectories: usize,
    seed: u64,
) -> Result<SmootherOutput> {
    if clouds.is_empty() {
        return Err(Error::invalid("no filter clouds to smooth"));
    }
    if n_trajectories < 1 {
        return Err(Error::invalid("n_trajectories must be >= 1"));
    }
    params.validate()?;
    let k_total = clouds.len();
    let n = clouds[0].len();

    let final_weights = clouds[k_total - 1].normalized_weights();
    let mut resultant = vec![Complex64::new(0.0, 0.0); k_total];
    let mut backward_lw = vec![0.0f64; n];

    for traj in 0..n_trajectories {
        let mut rng = substream(seed, "backward-trajectory", &[traj as u64]);
        let mut idx = categorical(&final_weights, rng.random());
        let mut phase = clouds[k_total - 1].phases[idx];
        let mut freq = clouds[k_total - 1].frequencies[idx];
        let (s, c) = phase.sin_cos();
        resultant[k_total - 1] += Complex64::new(c, s);

        for k in (0..k_total - 1).rev() {
            let cloud = &clouds[k];
            let mut mx = f64::NEG_INFINITY;
            // candidates 80 nats down on the transition alone cannot win the
            // draw even with a dominant filter weight; with a
            // near-deterministic frequency walk the frequency distance
            // prunes almost every candidate cheaply
            let omega_cut = 160.0 * params.sigma2_omega;
            let phi_cut = 160.0 * params.sigma2_phi;
            for i in 0..n {
                let domega = freq - cloud.frequencies[i];
                if params.sigma2_omega > 0.0 && domega * domega > omega_cut {
                    backward_lw[i] = f64::NEG_INFINITY;
                    continue;
                }
                let dphi = phase - (cloud.phases[i] + cloud.frequencies[i]);
                if params.sigma2_phi > 0.0 && dphi * dphi > phi_cut {
                    backward_lw[i] = f64::NEG_INFINITY;
                    continue;
                }
                let lw = cloud.log_weights[i]
                    + log_step(dphi, params.sigma2_phi)
                    + log_step(domega, params.sigma2_omega);
                backward_lw[i] = lw;
                if lw > mx {
                    mx = lw;
                }
            }
            if mx == f64::NEG_INFINITY {
                // unreachable ancestry; the genealogical parent always has
                // finite weight, so this indicates inconsistent inputs
                return Err(Error::NumericalFailure(format!(
                    "no reachable ancestor at smoother step {k}"
                )));
            }
            let mut sum = 0.0;
            for lw in backward_lw.iter_mut() {
                // weights 40 nats below the peak cannot influence the draw
                *lw = if *lw - mx > -40.0 {
                    (*lw - mx).exp()
                } else {
                    0.0
                };
                sum += *lw;
            }
            let u: f64 = rng.random::<f64>() * sum;
            let mut cum = 0.0;
            idx = n - 1;
            for (i, &w) in backward_lw.iter().enumerate() {
                cum += w;
                if cum >= u {
                    idx = i;
                    break;
                }
            }
            phase = cloud.phases[idx];
            freq = cloud.frequencies[idx];
            let (s, c) = phase.sin_cos();
            resultant[k] += Complex64::new(c, s);
        }
    }

    let phase_estimate: Vec<f64> = resultant.iter().map(|r| r.im.atan2(r.re)).collect();
    let effective_count = clouds.iter().map(|c| c.effective_count()).collect();
    Ok(SmootherOutput {
        phase_estimate,
        effective_count,
        log_likelihood: f64::NAN,
        degeneracy_events: Vec::new(),
    })
}

fn categorical(weights: &[f64], u01: f64) -> usize {
    let u = u01 * weights.iter().sum::<f64>();
    let mut cum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cum += w;
        if cum >= u {
            return i;
        }
    }
    weights.len() - 1
}
