use std::path::Path;

use ndarray::Array2;

use crate::dataio::Label;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Leading non-feature columns of a feature CSV.
pub const FEATURE_TABLE_META: [&str; 3] = ["id", "label", "patient_id"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow<T> {
    pub id: String,
    pub label: Label,
    pub patient_id: String,
    pub values: Vec<T>,
}

/// Named feature matrix with per-row metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable<T> {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow<T>>,
}

impl<T: Real> FeatureTable<T> {
    pub fn new(names: Vec<String>) -> Self {
        FeatureTable { names, rows: Vec::new() }
    }

    pub fn push(&mut self, row: FeatureRow<T>) -> Result<()> {
        if row.values.len() != self.names.len() {
            return Err(Error::DimensionMismatch { expected: self.names.len(), got: row.values.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn matrix(&self) -> Array2<T> {
        let mut m = Array2::zeros((self.rows.len(), self.names.len()));
        for (mut dst, row) in m.rows_mut().into_iter().zip(&self.rows) {
            dst.iter_mut().zip(&row.values).for_each(|(d, &v)| *d = v);
        }
        m
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(FEATURE_TABLE_META.iter().copied().chain(self.names.iter().map(String::as_str)))?;
        for r in &self.rows {
            let mut rec = vec![r.id.clone(), r.label.as_str().to_string(), r.patient_id.clone()];
            // `{:?}` keeps the shortest round-trip representation.
            rec.extend(r.values.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let bad = |line: usize, message: String| Error::Manifest { path: path.to_path_buf(), line, message };
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < 3 || header[..3] != FEATURE_TABLE_META {
            return Err(bad(1, format!("feature CSV header must start with {}", FEATURE_TABLE_META.join(","))));
        }
        let mut table = FeatureTable::new(header[3..].to_vec());
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let label = rec[1].parse::<Label>().map_err(|e| bad(line, e.to_string()))?;
            let values = rec
                .iter()
                .skip(3)
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(T::lit)
                        .ok_or_else(|| bad(line, format!("non-numeric feature value {s:?}")))
                })
                .collect::<Result<Vec<T>>>()?;
            table
                .push(FeatureRow { id: rec[0].to_string(), label, patient_id: rec[2].to_string(), values })
                .map_err(|e| bad(line, e.to_string()))?;
        }
        Ok(table)
    }
}
