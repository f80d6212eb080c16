//! Error records, trial-median summaries, and CSV/JSON emission.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};

/// One measured error: a method at a sampling budget in a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub method: Method,
    /// Stochastic degrees of freedom: the number of parameter samples.
    pub sdof: usize,
    pub trial: usize,
    /// Relative energy-norm error of the expectation field.
    pub rel_err_mean: f64,
    /// Relative energy-norm error of the standard-deviation field.
    pub rel_err_std: f64,
}

/// A solver that hit its iteration cap (or another recoverable numerical
/// problem) while its record was still produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlagNote {
    pub method: Method,
    pub sdof: usize,
    pub trial: usize,
    pub detail: String,
}

/// Per-(method, sdof) trial medians, ready for log-log plotting.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub sdof: usize,
    pub trials: usize,
    pub median_rel_err_mean: f64,
    pub median_rel_err_std: f64,
}

/// Median of a nonempty slice: middle element, or the average of the two
/// middles for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Collapses records into per-(method, sdof) trial medians, ordered by
/// first appearance.
pub fn summarize(records: &[ErrorRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, usize)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.method, r.sdof)) {
            keys.push((r.method, r.sdof));
        }
    }
    keys.iter()
        .map(|&(method, sdof)| {
            let means: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.sdof == sdof)
                .map(|r| r.rel_err_mean)
                .collect();
            let stds: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.sdof == sdof)
                .map(|r| r.rel_err_std)
                .collect();
            SummaryRow {
                method,
                sdof,
                trials: means.len(),
                median_rel_err_mean: median(&means),
                median_rel_err_std: median(&stds),
            }
        })
        .collect()
}

/// Metadata sidecar accompanying every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub trial_seed_rule: String,
    pub reference_seed: u64,
    pub reference_samples: usize,
    /// Relative change of the reference fields when built from half the
    /// samples: an error-floor estimate for the reported errors.
    pub reference_floor_mean: f64,
    pub reference_floor_std: f64,
    pub flags: Vec<FlagNote>,
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub records_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub metadata_json: PathBuf,
}

/// Writes the records CSV (`method,sdof,trial,rel_err_mean,rel_err_std`),
/// the per-(method, sdof) median summary CSV, and the JSON metadata
/// sidecar under `dir` with the given file stem.
pub fn emit_report(
    records: &[ErrorRecord],
    metadata: &RunMetadata,
    dir: &Path,
    stem: &str,
) -> Result<ReportPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records_csv = dir.join(format!("{stem}.csv"));
    let mut out = String::from("method,sdof,trial,rel_err_mean,rel_err_std\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method.name(),
            r.sdof,
            r.trial,
            r.rel_err_mean,
            r.rel_err_std
        ));
    }
    std::fs::write(&records_csv, out).map_err(|e| Error::io(&records_csv, e))?;

    let summary_csv = dir.join(format!("{stem}_summary.csv"));
    let mut out = String::from("method,sdof,median_rel_err_mean,median_rel_err_std\n");
    for row in summarize(records) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.method.name(),
            row.sdof,
            row.median_rel_err_mean,
            row.median_rel_err_std
        ));
    }
    std::fs::write(&summary_csv, out).map_err(|e| Error::io(&summary_csv, e))?;

    let metadata_json = dir.join(format!("{stem}_meta.json"));
    let text = serde_json::to_string_pretty(metadata)
        .map_err(|e| Error::parse(&metadata_json, e.to_string()))?;
    std::fs::write(&metadata_json, text).map_err(|e| Error::io(&metadata_json, e))?;

    Ok(ReportPaths {
        records_csv,
        summary_csv,
        metadata_json,
    })
}

/// Parses a records CSV written by [`emit_report`].
pub fn parse_records(path: &Path) -> Result<Vec<ErrorRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("method,sdof,trial,rel_err_mean,rel_err_std") => {}
        other => {
            return Err(Error::parse(
                path,
                format!("unexpected header {other:?}"),
            ))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                path,
                format!("line {}: expected 5 fields", lineno + 2),
            ));
        }
        let method = match fields[0] {
            "scs" => Method::Scs,
            "mc" => Method::Mc,
            "ols" => Method::Ols,
            "reference" => Method::Reference,
            other => {
                return Err(Error::parse(path, format!("unknown method {other}")));
            }
        };
        let parse_err = |e: &dyn std::fmt::Display| {
            Error::parse(path, format!("line {}: {e}", lineno + 2))
        };
        records.push(ErrorRecord {
            method,
            sdof: fields[1].parse().map_err(|e: std::num::ParseIntError| parse_err(&e))?,
            trial: fields[2].parse().map_err(|e: std::num::ParseIntError| parse_err(&e))?,
            rel_err_mean: fields[3]
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(&e))?,
            rel_err_std: fields[4]
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(&e))?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> RunMetadata {
        RunMetadata {
            config: ExperimentConfig::default(),
            code_version: "test".into(),
            trial_seed_rule: "seed + trial".into(),
            reference_seed: 6,
            reference_samples: 100,
            reference_floor_mean: 1e-4,
            reference_floor_std: 2e-4,
            flags: vec![],
        }
    }

    #[test]
    fn empty_records_still_write_valid_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&[], &meta(), dir.path(), "empty").unwrap();
        let text = std::fs::read_to_string(&paths.records_csv).unwrap();
        assert_eq!(text, "method,sdof,trial,rel_err_mean,rel_err_std\n");
        let parsed = parse_records(&paths.records_csv).unwrap();
        assert!(parsed.is_empty());
        let meta_text = std::fs::read_to_string(&paths.metadata_json).unwrap();
        assert!(serde_json::from_str::<serde_json::Value>(&meta_text).is_ok());
    }

    #[test]
    fn records_round_trip_exactly() {
        let records = vec![
            ErrorRecord {
                method: Method::Scs,
                sdof: 20,
                trial: 0,
                rel_err_mean: 0.012345678901234567,
                rel_err_std: 1.5e-3,
            },
            ErrorRecord {
                method: Method::Mc,
                sdof: 20,
                trial: 0,
                rel_err_mean: 0.25,
                rel_err_std: f64::MIN_POSITIVE,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&records, &meta(), dir.path(), "rt").unwrap();
        let parsed = parse_records(&paths.records_csv).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn medians_match_hand_recomputation() {
        // three records at one key: medians are the middle values
        let records = vec![
            ErrorRecord { method: Method::Scs, sdof: 10, trial: 0, rel_err_mean: 0.3, rel_err_std: 0.09 },
            ErrorRecord { method: Method::Scs, sdof: 10, trial: 1, rel_err_mean: 0.1, rel_err_std: 0.07 },
            ErrorRecord { method: Method::Scs, sdof: 10, trial: 2, rel_err_mean: 0.2, rel_err_std: 0.11 },
        ];
        let rows = summarize(&records);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].trials, 3);
        assert_eq!(rows[0].median_rel_err_mean, 0.2);
        assert_eq!(rows[0].median_rel_err_std, 0.09);
        // even count: average of the two middles
        assert_eq!(median(&[1.0, 2.0, 3.0, 10.0]), 2.5);
    }
}
