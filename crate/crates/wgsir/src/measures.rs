//! Distribution-valued observations represented as finite samples.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One distribution-valued observation: an empirical measure backed by a
/// finite sample of r-dimensional points.
///
/// Immutable after construction. For univariate measures the order
/// statistics are cached on first use (compute-then-publish, so the fill
/// is race-safe).
#[derive(Debug, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    /// Row-major m x dim storage.
    points: Vec<f64>,
    dim: usize,
    m: usize,
    #[serde(skip)]
    sorted_cache: OnceLock<Vec<f64>>,
}

impl Clone for EmpiricalMeasure {
    fn clone(&self) -> Self {
        let cache = OnceLock::new();
        if let Some(s) = self.sorted_cache.get() {
            let _ = cache.set(s.clone());
        }
        Self {
            points: self.points.clone(),
            dim: self.dim,
            m: self.m,
            sorted_cache: cache,
        }
    }
}

impl PartialEq for EmpiricalMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points
    }
}

impl EmpiricalMeasure {
    /// Validates and builds a measure from a list of r-vectors.
    pub fn from_samples(points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::EmptySample);
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::RaggedDimensions(i));
            }
            for &v in p {
                if !v.is_finite() {
                    return Err(Error::NonFinite(i));
                }
            }
            flat.extend_from_slice(p);
        }
        Ok(Self {
            points: flat,
            dim,
            m: points.len(),
            sorted_cache: OnceLock::new(),
        })
    }

    /// Builds a univariate measure from scalar samples.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self {
            points: values.to_vec(),
            dim: 1,
            m: values.len(),
            sorted_cache: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major m x dim storage.
    pub fn flat(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Ascending order statistics; only meaningful for dim == 1.
    pub fn sorted(&self) -> &[f64] {
        debug_assert_eq!(self.dim, 1, "order statistics require a univariate measure");
        self.sorted_cache.get_or_init(|| {
            let mut s = self.points.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s
        })
    }

    /// Left-continuous empirical quantile at level s in (0, 1).
    pub fn quantile(&self, s: f64) -> f64 {
        let sorted = self.sorted();
        let m = self.m as f64;
        let idx = (s * m).ceil() as usize;
        sorted[idx.clamp(1, self.m) - 1]
    }
}

/// Paired predictor/response samples with observation labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetPair {
    pub predictors: Vec<EmpiricalMeasure>,
    pub responses: Vec<EmpiricalMeasure>,
    pub ids: Vec<String>,
}

impl DatasetPair {
    pub fn new(
        predictors: Vec<EmpiricalMeasure>,
        responses: Vec<EmpiricalMeasure>,
        ids: Vec<String>,
    ) -> Result<Self> {
        if predictors.len() != responses.len() || predictors.len() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: predictors.len(),
                found: responses.len(),
            });
        }
        if predictors.len() < 2 {
            return Err(Error::TooFewObservations {
                need: 2,
                found: predictors.len(),
            });
        }
        for list in [&predictors, &responses] {
            let d = list[0].dim();
            if let Some(i) = list.iter().position(|mm| mm.dim() != d) {
                return Err(Error::RaggedDimensions(i));
            }
        }
        Ok(Self {
            predictors,
            responses,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }
}

/// Measures loaded from a long-format CSV, keyed by first-appearance order.
#[derive(Debug, Clone)]
pub struct LabeledMeasures {
    pub ids: Vec<String>,
    pub measures: Vec<EmpiricalMeasure>,
}

/// Loads measures from a long-format CSV: header `id,v1[,v2,...]`, one row
/// per sample point, rows grouped by id in first-appearance order. Group
/// sizes may differ.
pub fn load_measures_csv<P: AsRef<Path>>(path: P) -> Result<LabeledMeasures> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header_len = reader.headers()?.len();
    if header_len < 2 {
        return Err(Error::CsvData {
            row: 1,
            message: "header must be id,v1[,v2,...]".into(),
        });
    }
    let dim = header_len - 1;

    let mut ids: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<Vec<f64>>> = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let record = record?;
        let row = ri + 2; // 1-based, after header
        if record.len() != header_len {
            return Err(Error::CsvData {
                row,
                message: format!("expected {header_len} columns, found {}", record.len()),
            });
        }
        let id = record[0].to_string();
        let mut point = Vec::with_capacity(dim);
        for c in 1..record.len() {
            let v: f64 = record[c].trim().parse().map_err(|_| Error::CsvData {
                row,
                message: format!("unparsable numeric cell in column {}", c + 1),
            })?;
            point.push(v);
        }
        match ids.iter().position(|x| *x == id) {
            Some(g) => groups[g].push(point),
            None => {
                ids.push(id);
                groups.push(vec![point]);
            }
        }
    }
    if ids.is_empty() {
        return Err(Error::NoDataRows);
    }
    let measures = groups
        .iter()
        .map(|g| EmpiricalMeasure::from_samples(g))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledMeasures { ids, measures })
}

/// Writes measures in the same long CSV format. Uses Rust's shortest
/// round-trip float formatting, so reloading reproduces points exactly.
pub fn write_measures_csv<P: AsRef<Path>>(
    path: P,
    ids: &[String],
    measures: &[EmpiricalMeasure],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let dim = measures.first().map(|m| m.dim()).unwrap_or(1);
    let mut header = vec!["id".to_string()];
    for c in 1..=dim {
        header.push(format!("v{c}"));
    }
    w.write_record(&header)?;
    for (id, m) in ids.iter().zip(measures) {
        for p in m.iter_points() {
            let mut rec = vec![id.clone()];
            rec.extend(p.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn from_samples_sorts_on_demand() {
        let m = EmpiricalMeasure::from_samples(&[vec![1.0], vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(m.sorted(), &[0.0, 1.0, 2.0]);
        // idempotent
        assert_eq!(m.sorted(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn from_samples_bivariate_shape() {
        let m = EmpiricalMeasure::from_samples(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.len(), 2);
        assert_eq!(m.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn ragged_input_reports_index() {
        let err = EmpiricalMeasure::from_samples(&[vec![1.0], vec![2.0, 3.0]]).unwrap_err();
        assert!(matches!(err, Error::RaggedDimensions(1)));
    }

    #[test]
    fn empty_and_nonfinite_rejected() {
        assert!(matches!(
            EmpiricalMeasure::from_samples(&[]),
            Err(Error::EmptySample)
        ));
        assert!(matches!(
            EmpiricalMeasure::from_scalars(&[0.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn csv_grouping() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "id,v1\na,1.0\na,2.0\nb,3.0\nb,4.0\n").unwrap();
        let lm = load_measures_csv(&p).unwrap();
        assert_eq!(lm.ids, vec!["a", "b"]);
        assert_eq!(lm.measures.len(), 2);
        assert_eq!(lm.measures[0].flat(), &[1.0, 2.0]);
    }

    #[test]
    fn csv_bivariate_grouping() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(
            &p,
            "id,v1,v2\na,1,2\na,3,4\na,5,6\nb,7,8\nb,9,10\nb,11,12\n",
        )
        .unwrap();
        let lm = load_measures_csv(&p).unwrap();
        assert_eq!(lm.measures.len(), 2);
        assert_eq!(lm.measures[0].dim(), 2);
        assert_eq!(lm.measures[0].len(), 3);
    }

    #[test]
    fn csv_header_only_is_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "id,v1\n").unwrap();
        assert!(matches!(load_measures_csv(&p), Err(Error::NoDataRows)));
    }

    #[test]
    fn csv_bad_cell_reports_row() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "id,v1\na,1.0\na,oops\n").unwrap();
        match load_measures_csv(&p) {
            Err(Error::CsvData { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected CsvData error, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_exact() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let ms = vec![
            EmpiricalMeasure::from_scalars(&[0.1, 0.2 + 1e-17, -1.5e-300]).unwrap(),
            EmpiricalMeasure::from_scalars(&[std::f64::consts::PI]).unwrap(),
        ];
        let ids = vec!["a".to_string(), "b".to_string()];
        write_measures_csv(&p, &ids, &ms).unwrap();
        let lm = load_measures_csv(&p).unwrap();
        assert_eq!(lm.measures, ms);
    }

    #[test]
    fn quantile_left_continuous() {
        let m = EmpiricalMeasure::from_scalars(&[2.0, 1.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.quantile(0.25), 1.0);
        assert_eq!(m.quantile(0.26), 2.0);
        assert_eq!(m.quantile(1.0), 4.0);
    }
}
