//! Eavesdropper information bound for a linear Gaussian channel with a
//! trusted heterodyne receiver.
//!
//! The bound is computed from explicitly constructed covariance matrices:
//! the two-mode entangled state after the channel gives `S(E)` through its
//! symplectic eigenvalues; modeling the receiver as a beamsplitter of
//! transmission `eta` fed by an EPR state sized to the electrical noise and
//! conditioning on the heterodyne outcome gives `S(E|b)` through the
//! conditional state of the unmeasured modes (the global state is pure, so
//! Eve's conditional entropy equals that of the remaining trusted modes).
//!
//! The Alice-Bob correlation entering the covariance is pluggable so a
//! discrete-modulation reduction can replace the Gaussian-modulation term;
//! the shipped default is the Gaussian one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Correlation term `z` of the pre-channel covariance, as a function of the
/// modulation order and modulation variance (shot noise units).
pub type CorrelationFn = dyn Fn(usize, f64) -> f64 + Sync;

/// Gaussian-modulation correlation `sqrt(V^2 - 1)` with `V = va + 1`.
pub fn gaussian_correlation(_m: usize, va: f64) -> f64 {
    (va * va + 2.0 * va).sqrt()
}

/// Bosonic entropy contribution `G(x) = (x+1) log2(x+1) - x log2 x`,
/// with `G(0) = 0`.
pub fn entropy_g(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (x + 1.0) * (x + 1.0).log2() - x * x.log2()
    }
}

fn entropy_from_eigenvalues(nus: &[f64]) -> f64 {
    nus.iter().map(|&nu| entropy_g((nu - 1.0) / 2.0)).sum()
}

/// Symplectic eigenvalues of a covariance matrix in the `(x1, p1, x2, p2,
/// ...)` quadrature ordering: the moduli of the eigenvalues of `i Omega
/// gamma`, which come in pairs.
///
/// Eigenvalues below `1 - 1e-9` are rejected as unphysical; values within
/// the tolerance are clamped to 1.
pub fn symplectic_eigenvalues(gamma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = gamma.nrows();
    if n % 2 != 0 || gamma.ncols() != n || n == 0 {
        return Err(Error::invalid("covariance must be square of even size"));
    }
    let modes = n / 2;
    let mut omega = DMatrix::zeros(n, n);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    let m = omega * gamma;
    let eig = m.complex_eigenvalues();
    let mut mags: Vec<f64> = eig.iter().map(|l| l.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut nus = Vec::with_capacity(modes);
    for k in 0..modes {
        // eigenvalues come as +-i nu; average the pair
        let nu = 0.5 * (mags[2 * k] + mags[2 * k + 1]);
        if nu < 1.0 - 1e-9 {
            return Err(Error::InvalidPhysicalState(format!(
                "symplectic eigenvalue {nu} < 1"
            )));
        }
        nus.push(nu.max(1.0));
    }
    Ok(nus)
}

/// Heterodyne conditioning: Schur complement of the measured mode (its two
/// quadratures are the final two rows/columns) against `gamma_bb + I`.
fn condition_on_heterodyne(gamma: &DMatrix<f64>) -> DMatrix<f64> {
    let n = gamma.nrows();
    let r = n - 2;
    let gamma_rr = gamma.view((0, 0), (r, r)).into_owned();
    let gamma_rb = gamma.view((0, r), (r, 2)).into_owned();
    let mut gamma_bb = gamma.view((r, r), (2, 2)).into_owned();
    gamma_bb[(0, 0)] += 1.0;
    gamma_bb[(1, 1)] += 1.0;
    let det = gamma_bb[(0, 0)] * gamma_bb[(1, 1)] - gamma_bb[(0, 1)] * gamma_bb[(1, 0)];
    let inv = DMatrix::from_row_slice(
        2,
        2,
        &[
            gamma_bb[(1, 1)] / det,
            -gamma_bb[(0, 1)] / det,
            -gamma_bb[(1, 0)] / det,
            gamma_bb[(0, 0)] / det,
        ],
    );
    &gamma_rr - &gamma_rb * inv * gamma_rb.transpose()
}

/// Holevo bound `chi_BE` with an explicit correlation plug-in.
///
/// * `t` - channel transmission in (0, 1]
/// * `xi` - excess noise at the channel input, SNU
/// * `va` - modulation variance, SNU
/// * `eta` - receiver efficiency (trusted)
/// * `epsilon_el` - electrical-to-shot noise ratio (trusted, per Eq. below
///   treated as SNU variance added by detection)
pub fn holevo_bound_with(
    t: f64,
    xi: f64,
    va: f64,
    eta: f64,
    epsilon_el: f64,
    modulation_order: usize,
    correlation: &CorrelationFn,
) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::invalid("transmission must be in (0, 1]"));
    }
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::invalid("excess noise must be finite and >= 0"));
    }
    if !(va > 0.0 && va.is_finite()) {
        return Err(Error::invalid("modulation variance must be > 0"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid("eta must be in (0, 1]"));
    }
    if !(epsilon_el >= 0.0) {
        return Err(Error::invalid("epsilon_el must be >= 0"));
    }

    let v = va + 1.0;
    let z = correlation(modulation_order, va);
    let a = v;
    let b = t * (v - 1.0) + 1.0 + t * xi;
    let c = t.sqrt() * z;

    // S(E) = S(AB) before detection
    let sz = [1.0, -1.0];
    let mut gamma_ab = DMatrix::zeros(4, 4);
    for q in 0..2 {
        gamma_ab[(q, q)] = a;
        gamma_ab[(2 + q, 2 + q)] = b;
        gamma_ab[(q, 2 + q)] = c * sz[q];
        gamma_ab[(2 + q, q)] = c * sz[q];
    }
    let s_e = entropy_from_eigenvalues(&symplectic_eigenvalues(&gamma_ab)?);

    // S(E|b): condition the trusted-receiver picture on the heterodyne
    // outcome. An ideal detector needs no ancilla modes.
    let ideal_detector = (1.0 - eta).abs() < 1e-12 && epsilon_el == 0.0;
    let s_cond = if ideal_detector {
        // mode B is already the trailing mode of gamma_ab
        let cond = condition_on_heterodyne(&gamma_ab);
        entropy_from_eigenvalues(&symplectic_eigenvalues(&cond)?)
    } else {
        // electrical noise at unit efficiency still needs a lossy port
        let eta_eff = eta.min(1.0 - 1e-6);
        let v_d = if epsilon_el == 0.0 {
            1.0
        } else {
            1.0 + 2.0 * epsilon_el / (1.0 - eta_eff)
        };
        // modes [A, B, F0, G0]
        let mut g = DMatrix::zeros(8, 8);
        for q in 0..2 {
            g[(q, q)] = a;
            g[(2 + q, 2 + q)] = b;
            g[(q, 2 + q)] = c * sz[q];
            g[(2 + q, q)] = c * sz[q];
            g[(4 + q, 4 + q)] = v_d;
            g[(6 + q, 6 + q)] = v_d;
            let cd = (v_d * v_d - 1.0).max(0.0).sqrt();
            g[(4 + q, 6 + q)] = cd * sz[q];
            g[(6 + q, 4 + q)] = cd * sz[q];
        }
        // beamsplitter eta_eff on (B, F0)
        let mut s = DMatrix::identity(8, 8);
        let ct = eta_eff.sqrt();
        let st = (1.0 - eta_eff).sqrt();
        for q in 0..2 {
            s[(2 + q, 2 + q)] = ct;
            s[(2 + q, 4 + q)] = st;
            s[(4 + q, 2 + q)] = -st;
            s[(4 + q, 4 + q)] = ct;
        }
        let g = &s * g * s.transpose();
        // reorder to [A, F', G0, B'] so the measured mode sits last
        let perm = [0usize, 1, 4, 5, 6, 7, 2, 3];
        let mut gp = DMatrix::zeros(8, 8);
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                gp[(i, j)] = g[(pi, pj)];
            }
        }
        let cond = condition_on_heterodyne(&gp);
        entropy_from_eigenvalues(&symplectic_eigenvalues(&cond)?)
    };

    Ok(s_e - s_cond)
}

/// Holevo bound with the default Gaussian-modulation correlation.
pub fn holevo_bound(t: f64, xi: f64, va: f64, eta: f64, epsilon_el: f64) -> Result<f64> {
    holevo_bound_with(t, xi, va, eta, epsilon_el, 0, &gaussian_correlation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn g_function_properties() {
        assert_eq!(entropy_g(0.0), 0.0);
        for x in [1e-6, 0.1, 1.0, 5.0, 100.0] {
            assert!(entropy_g(x) > 0.0);
        }
        // thermal-state entropy grows with occupation
        assert!(entropy_g(2.0) > entropy_g(1.0));
    }

    #[test]
    fn pure_lossless_channel_leaks_nothing() {
        let chi = holevo_bound(1.0, 0.0, 0.5, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(chi, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn ideal_detector_matches_closed_form() {
        // nu_3 = a - c^2/(b+1) for heterodyne conditioning of a two-mode
        // Gaussian state with an ideal detector
        let (t, xi, va) = (0.4f64, 0.05f64, 1.2f64);
        let v = va + 1.0;
        let a = v;
        let b = t * (v - 1.0) + 1.0 + t * xi;
        let c = (t * (v * v - 1.0)).sqrt();
        let delta = a * a + b * b - 2.0 * c * c;
        let d = a * b - c * c;
        let nu1s = 0.5 * (delta + (delta * delta - 4.0 * d * d).sqrt());
        let nu2s = 0.5 * (delta - (delta * delta - 4.0 * d * d).sqrt());
        let nu3 = a - c * c / (b + 1.0);
        let expected = entropy_g((nu1s.sqrt() - 1.0) / 2.0)
            + entropy_g((nu2s.sqrt() - 1.0) / 2.0)
            - entropy_g((nu3 - 1.0) / 2.0);
        let chi = holevo_bound(t, xi, va, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(chi, expected, epsilon = 1e-9);
    }

    #[test]
    fn chi_is_monotone_in_excess_noise() {
        for &t in &[0.1, 0.5, 0.9] {
            for &va in &[0.2, 1.0, 4.0] {
                let mut prev = -1.0;
                for &xi in &[0.0, 0.01, 0.05, 0.1, 0.3] {
                    let chi = holevo_bound(t, xi, va, 0.232, 0.70).unwrap();
                    assert!(
                        chi >= prev - 1e-10,
                        "chi not monotone at t={t}, va={va}, xi={xi}"
                    );
                    prev = chi;
                }
            }
        }
    }

    #[test]
    fn eigenvalues_valid_on_random_parameter_grid() {
        // uncertainty-principle sweep across 1e4 random valid parameters
        use rand::Rng;
        let mut rng = crate::rng::stream(2024, "holevo-grid");
        for _ in 0..10_000 {
            let t: f64 = rng.random_range(0.01..1.0);
            let xi: f64 = rng.random_range(0.0..0.5);
            let va: f64 = rng.random_range(0.05..10.0);
            let eta: f64 = rng.random_range(0.05..0.999);
            let eps: f64 = rng.random_range(0.0..1.0);
            let chi = holevo_bound(t, xi, va, eta, eps);
            assert!(
                chi.is_ok(),
                "valid parameters rejected: t={t} xi={xi} va={va} eta={eta} eps={eps}: {chi:?}"
            );
        }
    }

    #[test]
    fn unphysical_covariance_is_rejected() {
        // below-vacuum variance violates the uncertainty principle
        let gamma = DMatrix::from_diagonal_element(2, 2, 0.5);
        assert!(matches!(
            symplectic_eigenvalues(&gamma),
            Err(Error::InvalidPhysicalState(_))
        ));
    }

    #[test]
    fn argument_validation() {
        assert!(holevo_bound(0.0, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(holevo_bound(1.1, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(holevo_bound(0.5, -0.1, 1.0, 1.0, 0.0).is_err());
        assert!(holevo_bound(0.5, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(holevo_bound(0.5, 0.0, 1.0, 0.0, 0.0).is_err());
    }
}
