//! Result files: coefficient table (JSON and text), per-replicate and
//! per-bin mean distances, and the ranked dimension list.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{DimensionReport, DistanceSeries, ExperimentResult};
use crate::corpus::{write_atomic, Condition, CorpusError};
use crate::embedding::ContextPattern;
use crate::stats::RegressionFit;

pub const COEFFICIENTS_JSON: &str = "coefficients.json";
pub const COEFFICIENTS_TXT: &str = "coefficients.txt";
pub const DISTANCES_CSV: &str = "distances.csv";
pub const MEAN_DISTANCES_CSV: &str = "mean_distances.csv";
pub const DIMENSIONS_CSV: &str = "dimensions.csv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub replicate: usize,
    pub condition: Condition,
    pub bin: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanDistanceRecord {
    pub condition: Condition,
    pub bin: usize,
    pub mean_distance: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DimensionRecord {
    pattern: String,
    slope: f64,
    pearson_r: f64,
    p_value: f64,
}

pub fn distance_records(series: &[DistanceSeries]) -> Vec<DistanceRecord> {
    let mut out: Vec<DistanceRecord> = series
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |&(bin, distance)| DistanceRecord {
                replicate: s.replicate_id,
                condition: s.condition,
                bin,
                distance,
            })
        })
        .collect();
    out.sort_by_key(|r| (r.replicate, r.condition, r.bin));
    out
}

/// Mean and sample standard deviation per (condition, bin); the curves of an
/// interaction plot.
pub fn mean_distances(records: &[DistanceRecord]) -> Vec<MeanDistanceRecord> {
    let mut groups: BTreeMap<(Condition, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.condition, r.bin)).or_default().push(r.distance);
    }
    groups
        .into_iter()
        .map(|((condition, bin), xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            MeanDistanceRecord {
                condition,
                bin,
                mean_distance: mean,
                sd,
                n,
            }
        })
        .collect()
}

fn to_csv<T: Serialize>(records: &[T], header: &[&str]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn from_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ReportError> {
    let err = |message: String| ReportError::Read {
        path: path.display().to_string(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(|e| err(e.to_string()))).collect()
}

pub fn write_distances(path: &Path, records: &[DistanceRecord]) -> Result<(), ReportError> {
    Ok(write_atomic(path, &to_csv(records, &["replicate", "condition", "bin", "distance"]))?)
}

pub fn read_distances(path: &Path) -> Result<Vec<DistanceRecord>, ReportError> {
    from_csv(path)
}

pub fn write_mean_distances(path: &Path, records: &[MeanDistanceRecord]) -> Result<(), ReportError> {
    Ok(write_atomic(
        path,
        &to_csv(records, &["condition", "bin", "mean_distance", "sd", "n"]),
    )?)
}

pub fn read_mean_distances(path: &Path) -> Result<Vec<MeanDistanceRecord>, ReportError> {
    from_csv(path)
}

pub fn write_dimensions(path: &Path, reports: &[DimensionReport]) -> Result<(), ReportError> {
    let records: Vec<DimensionRecord> = reports
        .iter()
        .map(|d| DimensionRecord {
            pattern: d.pattern.to_string(),
            slope: d.slope,
            pearson_r: d.pearson_r,
            p_value: d.p_value,
        })
        .collect();
    Ok(write_atomic(path, &to_csv(&records, &["pattern", "slope", "pearson_r", "p_value"]))?)
}

pub fn read_dimensions(path: &Path) -> Result<Vec<DimensionReport>, ReportError> {
    from_csv::<DimensionRecord>(path)?
        .into_iter()
        .map(|r| {
            Ok(DimensionReport {
                pattern: ContextPattern::new(r.pattern).map_err(|e| ReportError::Read {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?,
                slope: r.slope,
                pearson_r: r.pearson_r,
                p_value: r.p_value,
            })
        })
        .collect()
}

pub fn write_fit(dir: &Path, fit: &RegressionFit) -> Result<(), ReportError> {
    let json = serde_json::to_vec_pretty(fit).expect("fit serializes");
    write_atomic(&dir.join(COEFFICIENTS_JSON), &json)?;
    write_atomic(&dir.join(COEFFICIENTS_TXT), format!("{fit}\n").as_bytes())?;
    Ok(())
}

pub fn read_fit(path: &Path) -> Result<RegressionFit, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ReportError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Ranked dimensions as an aligned text table (header kept when empty).
pub fn dimensions_table(reports: &[DimensionReport], limit: usize) -> String {
    let mut s = format!("{:<10}{:>10}{:>12}{:>12}\n", "pattern", "slope", "pearson_r", "p_value");
    for d in reports.iter().take(limit) {
        s.push_str(&format!(
            "{:<10}{:>10.4}{:>12.4}{:>12.4}\n",
            d.pattern.as_str(),
            d.slope,
            d.pearson_r,
            d.p_value
        ));
    }
    s
}

/// Writes every result file into `dir` and returns their paths.
pub fn write_all(dir: &Path, result: &ExperimentResult) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    write_fit(dir, &result.fit)?;
    let records = distance_records(&result.series);
    write_distances(&dir.join(DISTANCES_CSV), &records)?;
    write_mean_distances(&dir.join(MEAN_DISTANCES_CSV), &mean_distances(&records))?;
    write_dimensions(&dir.join(DIMENSIONS_CSV), &result.dimensions.reports)?;
    Ok([COEFFICIENTS_JSON, COEFFICIENTS_TXT, DISTANCES_CSV, MEAN_DISTANCES_CSV, DIMENSIONS_CSV]
        .iter()
        .map(|f| dir.join(f))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dimension_table_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(DIMENSIONS_CSV);
        write_dimensions(&path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "pattern,slope,pearson_r,p_value\n");
        assert!(read_dimensions(&path).unwrap().is_empty());
        assert_eq!(dimensions_table(&[], 5).lines().count(), 1);
    }

    #[test]
    fn distances_round_trip() {
        let records = vec![
            DistanceRecord {
                replicate: 0,
                condition: Condition::Target,
                bin: 1,
                distance: 4.123456789012345,
            },
            DistanceRecord {
                replicate: 0,
                condition: Condition::Control,
                bin: 1,
                distance: 0.1 + 0.2,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(DISTANCES_CSV);
        write_distances(&path, &records).unwrap();
        assert_eq!(read_distances(&path).unwrap(), records);
    }

    #[test]
    fn means_per_condition_and_bin() {
        let rec = |replicate, condition, bin, distance| DistanceRecord {
            replicate,
            condition,
            bin,
            distance,
        };
        let m = mean_distances(&[
            rec(0, Condition::Target, 1, 1.0),
            rec(1, Condition::Target, 1, 3.0),
            rec(0, Condition::Control, 1, 2.0),
        ]);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].condition, Condition::Target);
        assert_eq!(m[0].mean_distance, 2.0);
        assert!((m[0].sd - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m[1].n, 1);
    }
}
