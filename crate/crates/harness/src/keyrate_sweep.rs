//! Distance sweep of achievable key rates.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use cvqkd_core::keyrate::{optimize_launch_power, ExcessNoiseModel, LinkParams};

use crate::config::KeyRateConfig;

/// One emitted key-rate row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KeyRateRow {
    pub distance_km: f64,
    /// Which excess-noise series this row belongs to.
    pub series: String,
    pub optimal_launch_photons: f64,
    pub snr_b: f64,
    pub xi_used: f64,
    pub rate_bits_per_symbol: f64,
    pub rate_bits_per_second: f64,
}

pub const KEYRATE_CSV_SCHEMA: &[&str] = &[
    "distance_km",
    "series",
    "optimal_launch_photons",
    "snr_b",
    "xi_used",
    "rate_bits_per_symbol",
    "rate_bits_per_second",
];

pub const KEYRATE_CSV_VERSION_COMMENT: &str = "# cvqkd-keyrates schema v1";

fn series_list(cfg: &KeyRateConfig) -> Vec<(String, usize, ExcessNoiseModel)> {
    vec![
        ("xi_zero".into(), 4, ExcessNoiseModel::Zero),
        (
            "m4_fit".into(),
            4,
            ExcessNoiseModel::LogPolynomial {
                coeffs: cfg.fit_m4.clone(),
            },
        ),
        (
            "m2_fit".into(),
            2,
            ExcessNoiseModel::LogPolynomial {
                coeffs: cfg.fit_m2.clone(),
            },
        ),
    ]
}

/// Optimize launch power at every grid distance for the three standard
/// series (zero-excess reference, M = 4 fit, M = 2 fit).
pub fn run_keyrate_sweep(cfg: &KeyRateConfig) -> anyhow::Result<Vec<KeyRateRow>> {
    let mut rows = Vec::new();
    for (series, m, model) in series_list(cfg) {
        for &d in &cfg.distances_km {
            let link = LinkParams {
                distance_km: d,
                loss_db_per_km: cfg.loss_db_per_km,
                beta: cfg.beta,
                eta: cfg.eta,
                epsilon_el: cfg.epsilon_el,
                excess_noise_model: model.clone(),
                snr_floor: 10f64.powf(cfg.snr_floor_db / 10.0),
            };
            let res = optimize_launch_power(&link, m)
                .map_err(|e| anyhow::anyhow!("series {series} at {d} km: {e}"))?;
            rows.push(KeyRateRow {
                distance_km: d,
                series: series.clone(),
                optimal_launch_photons: res.optimal_launch_photons,
                snr_b: res.snr_b_at_optimum,
                xi_used: model.xi(res.snr_b_at_optimum),
                rate_bits_per_symbol: res.rate_bits_per_symbol,
                rate_bits_per_second: res.rate_bits_per_symbol * cfg.symbol_rate_baud,
            });
        }
    }
    Ok(rows)
}

pub fn emit_keyrate_csv(rows: &[KeyRateRow], path: &Path) -> anyhow::Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", path.display()))?;
    writeln!(file, "{KEYRATE_CSV_VERSION_COMMENT}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(KEYRATE_CSV_SCHEMA)?;
    for r in rows {
        w.write_record(&[
            r.distance_km.to_string(),
            r.series.clone(),
            r.optimal_launch_photons.to_string(),
            r.snr_b.to_string(),
            r.xi_used.to_string(),
            r.rate_bits_per_symbol.to_string(),
            r.rate_bits_per_second.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Largest grid distance with a strictly positive rate, per series.
pub fn max_positive_distance(rows: &[KeyRateRow], series: &str) -> Option<f64> {
    rows.iter()
        .filter(|r| r.series == series && r.rate_bits_per_symbol > 0.0)
        .map(|r| r.distance_km)
        .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
}
