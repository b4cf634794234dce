//! Trial records and their CSV / JSON persistence.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// One row per (scenario point, trial).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialRecord {
    pub m: usize,
    pub p_r: f64,
    pub snr_db: f64,
    pub trial: u64,
    pub symbols_per_block: usize,
    pub blocks: usize,
    /// Excess noise from the phase-error route (SNU).
    pub xi_phase: f64,
    /// Excess noise from the calibrated power decomposition (SNU).
    pub xi_calibrated: f64,
    pub mi_bits: f64,
    pub mi_theory_bits: f64,
    pub p_b: f64,
    pub p_q: f64,
    pub photons_per_symbol: f64,
    pub min_effective_count: f64,
    pub degeneracy_events: usize,
    pub ambiguity_rotation: usize,
    pub filter_log_likelihood: f64,
    pub failed: bool,
    pub status: String,
    /// Wall-clock time of the trial; excluded from determinism comparisons.
    pub wall_ms: u64,
}

/// Column order of the CSV schema. `wall_ms` is last so determinism checks
/// can strip it.
pub const CSV_SCHEMA: &[&str] = &[
    "m",
    "p_r",
    "snr_db",
    "trial",
    "symbols_per_block",
    "blocks",
    "xi_phase",
    "xi_calibrated",
    "mi_bits",
    "mi_theory_bits",
    "p_b",
    "p_q",
    "photons_per_symbol",
    "min_effective_count",
    "degeneracy_events",
    "ambiguity_rotation",
    "filter_log_likelihood",
    "failed",
    "status",
    "wall_ms",
];

/// Schema identifier written as the first line of every trials CSV.
pub const CSV_VERSION_COMMENT: &str = "# cvqkd-trials schema v1";

/// Canonical record ordering: scenario point, then trial.
pub fn canonical_sort(records: &mut [TrialRecord]) {
    records.sort_by(|a, b| {
        a.m.cmp(&b.m)
            .then(a.p_r.total_cmp(&b.p_r))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.trial.cmp(&b.trial))
    });
}

/// Write records as CSV with a leading schema-version comment line.
/// Numbers are written in shortest round-trip form (full precision).
pub fn emit_csv(records: &[TrialRecord], path: &Path) -> anyhow::Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", path.display()))?;
    writeln!(file, "{CSV_VERSION_COMMENT}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CSV_SCHEMA)?;
    for r in records {
        w.write_record(&[
            r.m.to_string(),
            r.p_r.to_string(),
            r.snr_db.to_string(),
            r.trial.to_string(),
            r.symbols_per_block.to_string(),
            r.blocks.to_string(),
            r.xi_phase.to_string(),
            r.xi_calibrated.to_string(),
            r.mi_bits.to_string(),
            r.mi_theory_bits.to_string(),
            r.p_b.to_string(),
            r.p_q.to_string(),
            r.photons_per_symbol.to_string(),
            r.min_effective_count.to_string(),
            r.degeneracy_events.to_string(),
            r.ambiguity_rotation.to_string(),
            r.filter_log_likelihood.to_string(),
            r.failed.to_string(),
            r.status.clone(),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Record group of one scenario point, for the nested JSON layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointGroup {
    pub m: usize,
    pub p_r: f64,
    pub snr_db: f64,
    pub trials: Vec<TrialRecord>,
}

/// Write records as JSON nested by scenario point.
pub fn emit_json(records: &[TrialRecord], path: &Path) -> anyhow::Result<()> {
    let mut groups: Vec<PointGroup> = Vec::new();
    for r in records {
        let point_matches = |g: &PointGroup| g.m == r.m && g.p_r == r.p_r && g.snr_db == r.snr_db;
        match groups.last_mut() {
            Some(g) if point_matches(g) => g.trials.push(r.clone()),
            _ => groups.push(PointGroup {
                m: r.m,
                p_r: r.p_r,
                snr_db: r.snr_db,
                trials: vec![r.clone()],
            }),
        }
    }
    let file = std::fs::File::create(path)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", path.display()))?;
    serde_json::to_writer_pretty(file, &groups)?;
    Ok(())
}

/// Reload a JSON result file into flat records.
pub fn load_json(path: &Path) -> anyhow::Result<Vec<TrialRecord>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let groups: Vec<PointGroup> = serde_json::from_str(&text)?;
    Ok(groups.into_iter().flat_map(|g| g.trials).collect())
}

/// Reload a trials CSV (skipping the version comment).
pub fn load_csv(path: &Path) -> anyhow::Result<Vec<TrialRecord>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let body = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record(trial: u64) -> TrialRecord {
        TrialRecord {
            m: 4,
            p_r: 0.05,
            snr_db: -10.0,
            trial,
            symbols_per_block: 1000,
            blocks: 2,
            xi_phase: 1.25e-4,
            xi_calibrated: 1.3e-4,
            mi_bits: 0.31,
            mi_theory_bits: 0.33,
            p_b: 11.0,
            p_q: 1.0,
            photons_per_symbol: 0.73,
            min_effective_count: 42.0,
            degeneracy_events: 0,
            ambiguity_rotation: 0,
            filter_log_likelihood: -12345.6,
            failed: false,
            status: "ok".into(),
            wall_ms: 17,
        }
    }

    #[test]
    fn csv_has_header_and_schema_width() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_VERSION_COMMENT);
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), CSV_SCHEMA.len());
        assert!(lines.next().is_none(), "empty record set is header-only");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let records = vec![sample_record(0), sample_record(1)];
        emit_json(&records, &path).unwrap();
        let reloaded = load_json(&path).unwrap();
        assert_eq!(records, reloaded);
    }

    #[test]
    fn csv_round_trip_preserves_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let records = vec![sample_record(0), sample_record(1)];
        emit_csv(&records, &path).unwrap();
        let reloaded = load_csv(&path).unwrap();
        assert_eq!(records, reloaded);
    }

    #[test]
    fn sorting_is_canonical() {
        let mut records = vec![sample_record(1), sample_record(0)];
        records[0].snr_db = -5.0;
        canonical_sort(&mut records);
        assert_eq!(records[0].snr_db, -10.0);
    }
}
