//! Trial records, cell summaries, and deterministic report files.
//!
//! `trials.csv` has a fixed column order and one row per trial;
//! `summary.json` echoes the config and aggregates each grid cell with
//! Wilson 95% intervals. Both are byte-identical across reruns of the same
//! config and seed; wall-time fields (`wall_ms`, `total_wall_ms`) are the
//! only nondeterministic content and are segregated so consumers can strip
//! them before byte comparison.

use super::config::ExperimentConfig;
use super::ExperimentError;
use crate::rational::Rational;
use crate::sampling::AcceptanceMode;
use num::bigint::BigUint;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str = "experiment_kind,cell_id,n,m,epsilon,epsilon_prime,delta,trial_index,derived_seed,accepted_regular,acceptance_mode,copy_count,expected_count,bad_flag,good_vertex_count,verdict_kind,retries,wall_ms";

/// One trial's measured quantities. Fields that a kind does not produce
/// stay `None` and serialize as empty CSV cells.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub experiment_kind: &'static str,
    pub cell_id: String,
    pub n: usize,
    pub m: usize,
    pub epsilon: Option<Rational>,
    pub epsilon_prime: Option<Rational>,
    pub delta: Option<Rational>,
    /// Global trial index: `cell_index * trials_per_cell + trial_in_cell`.
    pub trial_index: usize,
    pub derived_seed: u64,
    pub accepted_regular: Option<bool>,
    pub acceptance_mode: Option<AcceptanceMode>,
    pub copy_count: Option<BigUint>,
    pub expected_count: Option<Rational>,
    pub bad_flag: Option<bool>,
    pub good_vertex_count: Option<usize>,
    pub verdict_kind: Option<&'static str>,
    pub retries: usize,
    pub wall_ms: u64,
}

impl TrialRecord {
    pub fn csv_row(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        let cols = [
            self.experiment_kind.to_string(),
            self.cell_id.clone(),
            self.n.to_string(),
            self.m.to_string(),
            opt(&self.epsilon),
            opt(&self.epsilon_prime),
            opt(&self.delta),
            self.trial_index.to_string(),
            self.derived_seed.to_string(),
            opt(&self.accepted_regular),
            self.acceptance_mode
                .map(|m| m.as_str().to_string())
                .unwrap_or_default(),
            opt(&self.copy_count),
            opt(&self.expected_count),
            opt(&self.bad_flag),
            opt(&self.good_vertex_count),
            self.verdict_kind.unwrap_or_default().to_string(),
            self.retries.to_string(),
            self.wall_ms.to_string(),
        ];
        cols.join(",")
    }
}

/// A named count/denominator pair with its Wilson 95% interval.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FractionStat {
    pub numerator: usize,
    pub denominator: usize,
    pub fraction: Option<f64>,
    pub wilson_low: Option<f64>,
    pub wilson_high: Option<f64>,
}

impl FractionStat {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        if denominator == 0 {
            return FractionStat {
                numerator,
                denominator,
                fraction: None,
                wilson_low: None,
                wilson_high: None,
            };
        }
        let (low, high) = wilson_interval(numerator, denominator, 1.96);
        FractionStat {
            numerator,
            denominator,
            fraction: Some(numerator as f64 / denominator as f64),
            wilson_low: Some(low),
            wilson_high: Some(high),
        }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub cell_id: String,
    pub trials: usize,
    /// Set on cells excluded by validation rules (with zero trials).
    pub skipped: bool,
    pub fractions: BTreeMap<String, FractionStat>,
    /// `failure fraction <= beta` when a beta bound is configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_beta: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub version: String,
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
    pub total_wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct ReportPaths {
    pub trials_csv: PathBuf,
    pub summary_json: PathBuf,
}

/// Writes `trials.csv` and `summary.json` into `out_dir` (created if
/// needed). Byte-identical for identical records and summary.
pub fn write_report(
    records: &[TrialRecord],
    summary: &Summary,
    out_dir: &Path,
) -> Result<ReportPaths, ExperimentError> {
    fs::create_dir_all(out_dir)?;
    let mut csv = String::with_capacity(64 * (records.len() + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for r in records {
        let _ = writeln!(csv, "{}", r.csv_row());
    }
    let trials_csv = out_dir.join("trials.csv");
    fs::write(&trials_csv, csv)?;
    let summary_json = out_dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(summary)
        .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
    json.push('\n');
    fs::write(&summary_json, json)?;
    Ok(ReportPaths {
        trials_csv,
        summary_json,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_reference_value() {
        // 8 successes in 10 trials at z = 1.96: [0.490, 0.943].
        let (lo, hi) = wilson_interval(8, 10, 1.96);
        assert!((lo - 0.4901).abs() < 5e-4, "lo = {lo}");
        assert!((hi - 0.9433).abs() < 5e-4, "hi = {hi}");
    }

    #[test]
    fn zero_denominator_yields_null_stats() {
        let f = FractionStat::new(0, 0);
        assert!(f.fraction.is_none());
        assert!(f.wilson_low.is_none());
    }

    #[test]
    fn csv_row_has_fixed_arity() {
        let r = TrialRecord {
            experiment_kind: "counting",
            cell_id: "n9_m40".into(),
            n: 9,
            m: 40,
            epsilon: Some(crate::rational::rat(1, 2)),
            epsilon_prime: None,
            delta: Some(crate::rational::rat(1, 2)),
            trial_index: 3,
            derived_seed: 99,
            accepted_regular: Some(true),
            acceptance_mode: Some(AcceptanceMode::Certified),
            copy_count: Some(123u32.into()),
            expected_count: Some(crate::rational::rat(250, 2)),
            bad_flag: Some(false),
            good_vertex_count: None,
            verdict_kind: Some("certified-regular"),
            retries: 0,
            wall_ms: 7,
        };
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("counting,n9_m40,9,40,1/2,,1/2,3,99,true,certified,123,125,"));
    }
}
