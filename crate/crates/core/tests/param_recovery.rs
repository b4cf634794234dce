//! Hyperparameter recovery smoke test (the full 10-seed version lives in
//! the harness acceptance suite).

use cvqkd_core::param::{energy_function, simplex_minimize};
use cvqkd_core::signal::{
    apply_awgn_channel, gen_phase_trajectory, gen_symbols, RevelationMask, StateSpaceParams,
};

#[test]
fn simplex_recovers_generating_parameters() {
    let k = 200_000usize;
    let snr = 10f64.powf(1.15);
    let theta = StateSpaceParams::default();
    let a = gen_symbols(4, k, 1).unwrap();
    let t = gen_phase_trajectory(k, &theta, 0.0, 0.0, 2);
    let b = apply_awgn_channel(&a, &t, snr, 3).unwrap();
    let mask = RevelationMask::all(k);
    let theta0 = StateSpaceParams::new(1e-14, 1e-7).unwrap();
    let energy0 = energy_function(&theta0, &b, &mask, &a).unwrap();
    let res = simplex_minimize(
        |th| energy_function(th, &b, &mask, &a).unwrap_or(f64::INFINITY),
        &theta0,
        1e-3,
        200,
    )
    .unwrap();
    assert!(res.converged, "optimizer hit the iteration cap");
    // descent property
    assert!(res.energy <= energy0);
    let r_om = res.theta_hat.sigma2_omega / theta.sigma2_omega;
    let r_ph = res.theta_hat.sigma2_phi / theta.sigma2_phi;
    assert!(
        (1.0 / 3.0..=3.0).contains(&r_om),
        "sigma2_omega ratio {r_om:.2}"
    );
    assert!(
        (1.0 / 3.0..=3.0).contains(&r_ph),
        "sigma2_phi ratio {r_ph:.2}"
    );
}

#[test]
fn optimizer_stays_near_the_optimum_when_started_there() {
    // stationarity: starting at the generating parameters must not move
    // either component by more than a factor of 3 (averaged over seeds)
    let k = 100_000usize;
    let snr = 10f64.powf(1.15);
    let theta = StateSpaceParams::default();
    let mut log_drift_om = 0.0;
    let mut log_drift_ph = 0.0;
    let seeds = 4u64;
    for seed in 0..seeds {
        let a = gen_symbols(4, k, 10 + seed).unwrap();
        let t = gen_phase_trajectory(k, &theta, 0.0, 0.0, 20 + seed);
        let b = apply_awgn_channel(&a, &t, snr, 30 + seed).unwrap();
        let mask = RevelationMask::all(k);
        let res = simplex_minimize(
            |th| energy_function(th, &b, &mask, &a).unwrap_or(f64::INFINITY),
            &theta,
            1e-3,
            200,
        )
        .unwrap();
        log_drift_om += (res.theta_hat.sigma2_omega / theta.sigma2_omega).ln();
        log_drift_ph += (res.theta_hat.sigma2_phi / theta.sigma2_phi).ln();
    }
    let mean_om = (log_drift_om / seeds as f64).exp();
    let mean_ph = (log_drift_ph / seeds as f64).exp();
    assert!(
        (1.0 / 3.0..=3.0).contains(&mean_om),
        "sigma2_omega drifted by {mean_om:.2}"
    );
    assert!(
        (1.0 / 3.0..=3.0).contains(&mean_ph),
        "sigma2_phi drifted by {mean_ph:.2}"
    );
}
