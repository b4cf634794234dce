//! State-space hyperparameter optimization.
//!
//! The energy of a parameter vector is the negative accumulated prediction
//! log-density of the extended Kalman filter run with those parameters,
//! minus the log prior. With the default flat prior in log-parameter space
//! this is the negative log marginal likelihood up to a constant, so energies
//! are comparable only within one dataset. The minimizer works in
//! log-parameter coordinates, which makes positivity structural.

mod nelder_mead;

pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult, TracePoint};

use crate::error::{Error, Result};
use crate::phase::{ekf_run, EkfState};
use crate::signal::{ReceivedSequence, RevelationMask, StateSpaceParams, SymbolSequence};

/// Support of the flat log-space prior, per component.
pub const PRIOR_BOX: (f64, f64) = (1e-20, 1e-2);

/// Default EKF initialization used by the energy function: diffuse phase,
/// narrow frequency.
fn default_energy_init() -> EkfState {
    EkfState::new(0.0, 0.0, 2.0, 1e-5)
}

/// One evaluated point of the energy landscape.
#[derive(Debug, Clone)]
pub struct EnergyEvaluation {
    pub theta: StateSpaceParams,
    pub energy: f64,
    /// Number of symbols the evaluation used.
    pub k: usize,
}

/// Outcome of a simplex search over the energy function.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub theta_hat: StateSpaceParams,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted best vertex per iteration, in raw parameters.
    pub trace: Vec<(usize, StateSpaceParams, f64)>,
}

/// Negative log posterior (up to a constant) of the hyperparameters given a
/// record. Returns `+inf` outside the prior box.
pub fn energy_function(
    theta: &StateSpaceParams,
    b: &ReceivedSequence,
    mask: &RevelationMask,
    known: &SymbolSequence,
) -> Result<f64> {
    if !(theta.sigma2_omega > 0.0 && theta.sigma2_phi > 0.0) {
        return Err(Error::invalid("energy requires strictly positive theta"));
    }
    if b.len() < 100 {
        return Err(Error::invalid("energy evaluation needs at least 100 symbols"));
    }
    if outside_prior(theta) {
        return Ok(f64::INFINITY);
    }
    let run = ekf_run(b, mask, known, theta, &default_energy_init()).map_err(|e| {
        Error::NumericalFailure(format!(
            "EKF failed at theta = ({:.3e}, {:.3e}): {e}",
            theta.sigma2_omega, theta.sigma2_phi
        ))
    })?;
    // flat prior in log space contributes a constant inside the box
    Ok(-run.log_likelihood)
}

fn outside_prior(theta: &StateSpaceParams) -> bool {
    theta.sigma2_omega < PRIOR_BOX.0
        || theta.sigma2_omega > PRIOR_BOX.1
        || theta.sigma2_phi < PRIOR_BOX.0
        || theta.sigma2_phi > PRIOR_BOX.1
}

/// Minimize an energy objective over the hyperparameters with Nelder-Mead in
/// log-parameter space.
///
/// The tolerance is a simplex diameter in log coordinates. Exceeding
/// `max_iter` yields `converged = false`, not an error.
pub fn simplex_minimize(
    mut objective: impl FnMut(&StateSpaceParams) -> f64,
    theta0: &StateSpaceParams,
    tolerance: f64,
    max_iter: usize,
) -> Result<OptimizationResult> {
    theta0.validate()?;
    if !(theta0.sigma2_omega > 0.0 && theta0.sigma2_phi > 0.0) {
        return Err(Error::invalid("theta0 must be strictly positive"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be > 0"));
    }
    let x0 = [theta0.sigma2_omega.ln(), theta0.sigma2_phi.ln()];
    let from_log = |x: &[f64]| StateSpaceParams {
        sigma2_omega: x[0].exp(),
        sigma2_phi: x[1].exp(),
    };
    let r = nelder_mead(
        |x| objective(&from_log(x)),
        &x0,
        &NelderMeadOptions {
            tolerance,
            max_iter,
            initial_step: 1.0,
        },
    );
    Ok(OptimizationResult {
        theta_hat: from_log(&r.x),
        energy: r.f,
        iterations: r.iterations,
        converged: r.converged,
        trace: r
            .trace
            .iter()
            .map(|t| (t.iteration, from_log(&t.best_x), t.best_f))
            .collect(),
    })
}
