//! Least-squares polynomial fits of excess-noise curves in log-log space.

use crate::records::TrialRecord;

/// Polynomial least squares via the normal equations (degrees here are 1-3,
/// where this is perfectly conditioned enough).
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> anyhow::Result<Vec<f64>> {
    anyhow::ensure!(x.len() == y.len(), "x/y length mismatch");
    anyhow::ensure!(x.len() > degree, "not enough points for the degree");
    let n = degree + 1;
    let mut ata = vec![vec![0.0f64; n]; n];
    let mut atb = vec![0.0f64; n];
    for (&xi, &yi) in x.iter().zip(y) {
        let mut powers = Vec::with_capacity(2 * n);
        let mut p = 1.0;
        for _ in 0..2 * n {
            powers.push(p);
            p *= xi;
        }
        for r in 0..n {
            for c in 0..n {
                ata[r][c] += powers[r + c];
            }
            atb[r] += powers[r] * yi;
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs()))
            .unwrap();
        anyhow::ensure!(ata[pivot][col].abs() > 1e-300, "singular normal equations");
        ata.swap(col, pivot);
        atb.swap(col, pivot);
        for row in col + 1..n {
            let f = ata[row][col] / ata[col][col];
            for c in col..n {
                ata[row][c] -= f * ata[col][c];
            }
            atb[row] -= f * atb[col];
        }
    }
    let mut coeffs = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = atb[row];
        for c in row + 1..n {
            acc -= ata[row][c] * coeffs[c];
        }
        coeffs[row] = acc / ata[row][row];
    }
    Ok(coeffs)
}

/// Fit `log10(xi_phase)` against `log10(snr)` for one (M, p_r) series of a
/// sweep, skipping failed trials and non-positive excess noise.
pub fn fit_excess_noise(
    records: &[TrialRecord],
    m: usize,
    p_r: f64,
    degree: usize,
) -> anyhow::Result<Vec<f64>> {
    // average per SNR point first so dense seed replication does not weight
    // the fit
    let mut by_snr: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in records {
        if r.m != m || r.p_r != p_r || r.failed || !(r.xi_phase > 0.0) {
            continue;
        }
        match by_snr.iter_mut().find(|(s, _)| *s == r.snr_db) {
            Some((_, v)) => v.push(r.xi_phase),
            None => by_snr.push((r.snr_db, vec![r.xi_phase])),
        }
    }
    anyhow::ensure!(
        by_snr.len() > degree,
        "need more than {degree} usable SNR points for M = {m}, p_r = {p_r}"
    );
    let x: Vec<f64> = by_snr.iter().map(|(s, _)| s / 10.0).collect();
    let y: Vec<f64> = by_snr
        .iter()
        .map(|(_, v)| (v.iter().sum::<f64>() / v.len() as f64).log10())
        .collect();
    polyfit(&x, &y, degree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_polynomial_is_recovered() {
        let x: Vec<f64> = (0..20).map(|i| -3.0 + 0.3 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| 1.5 - 0.4 * v + 0.02 * v * v).collect();
        let c = polyfit(&x, &y, 2).unwrap();
        assert!((c[0] - 1.5).abs() < 1e-9);
        assert!((c[1] + 0.4).abs() < 1e-9);
        assert!((c[2] - 0.02).abs() < 1e-9);
    }

    #[test]
    fn underdetermined_fit_is_rejected() {
        assert!(polyfit(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
    }
}
