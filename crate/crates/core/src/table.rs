//! Feature tables: subjects x named feature columns, with an optional
//! regression target, plus CSV ingestion and emission.
//!
//! CSV layout: one header row, comma separated, `.` decimal point, UTF-8.
//! The first column holds opaque subject ids; every other column is numeric.

use std::collections::HashSet;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// An immutable n x p table of finite feature values with unique subject ids
/// and column names, and an optional length-n target vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    id_name: String,
    subject_ids: Vec<String>,
    columns: Vec<String>,
    values: Array2<f64>,
    target_name: Option<String>,
    target: Option<Array1<f64>>,
}

impl FeatureTable {
    /// Build a table, validating all invariants.
    pub fn new(
        id_name: String,
        subject_ids: Vec<String>,
        columns: Vec<String>,
        values: Array2<f64>,
        target_name: Option<String>,
        target: Option<Array1<f64>>,
    ) -> Result<Self> {
        let n = subject_ids.len();
        if values.nrows() != n {
            return Err(Error::TargetLengthMismatch {
                got: values.nrows(),
                expected: n,
            });
        }
        if values.ncols() != columns.len() {
            return Err(Error::ColumnCountMismatch {
                expected: columns.len(),
                got: values.ncols(),
            });
        }
        let mut seen = HashSet::new();
        for id in &subject_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateSubjectId(id.clone()));
            }
        }
        let mut seen = HashSet::new();
        for name in columns.iter().chain(target_name.iter()) {
            if name == &id_name || !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for (i, row) in values.outer_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteCell {
                        row: i + 2,
                        column: columns[j].clone(),
                    });
                }
            }
        }
        if let Some(t) = &target {
            if t.len() != n {
                return Err(Error::TargetLengthMismatch {
                    got: t.len(),
                    expected: n,
                });
            }
            if let Some(i) = t.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCell {
                    row: i + 2,
                    column: target_name.clone().unwrap_or_else(|| "target".into()),
                });
            }
        }
        Ok(FeatureTable {
            id_name,
            subject_ids,
            columns,
            values,
            target_name,
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn id_name(&self) -> &str {
        &self.id_name
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target_name.as_deref()
    }

    pub fn target(&self) -> Option<&Array1<f64>> {
        self.target.as_ref()
    }

    /// Sub-table holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        let ids = rows.iter().map(|&i| self.subject_ids[i].clone()).collect();
        let values = ndarray::stack(
            ndarray::Axis(0),
            &rows.iter().map(|&i| self.values.row(i)).collect::<Vec<_>>(),
        )
        .expect("row selection from a consistent table");
        let target = self
            .target
            .as_ref()
            .map(|t| Array1::from_iter(rows.iter().map(|&i| t[i])));
        FeatureTable {
            id_name: self.id_name.clone(),
            subject_ids: ids,
            columns: self.columns.clone(),
            values,
            target_name: self.target_name.clone(),
            target,
        }
    }

    /// Feature matrix with columns reordered to `names`. Extra input columns
    /// are ignored; a missing name is an error naming the first mismatch.
    pub fn gather_columns(&self, names: &[String]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((self.n_rows(), names.len()));
        for (j, name) in names.iter().enumerate() {
            let src = self
                .columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingTargetColumn(name.clone()))?;
            out.column_mut(j).assign(&self.values.column(src));
        }
        Ok(out)
    }

    /// Write the table back to CSV, target column last when present.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = Vec::with_capacity(2 + self.columns.len());
        header.push(&self.id_name);
        header.extend(self.columns.iter().map(|s| s.as_str()));
        if let Some(t) = &self.target_name {
            header.push(t);
        }
        w.write_record(&header)?;
        for (i, id) in self.subject_ids.iter().enumerate() {
            let mut rec: Vec<String> = Vec::with_capacity(header.len());
            rec.push(id.clone());
            for v in self.values.row(i) {
                rec.push(format!("{v}"));
            }
            if let Some(t) = &self.target {
                rec.push(format!("{}", t[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Load a feature table from CSV. The first column is the subject id; when
/// `target_column` is given, that column becomes the target instead of a
/// feature.
pub fn load_csv(path: &Path, target_column: Option<&str>) -> Result<FeatureTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::EmptyTable(
            "need at least a subject id column and one feature column".into(),
        ));
    }
    let id_name = header[0].to_string();
    let all_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();

    let target_idx = match target_column {
        Some(name) => Some(
            all_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingTargetColumn(name.to_string()))?,
        ),
        None => None,
    };
    let columns: Vec<String> = all_names
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != target_idx)
        .map(|(_, c)| c.clone())
        .collect();

    let mut subject_ids = Vec::new();
    let mut flat = Vec::new();
    let mut target_vals = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = i + 2; // 1-based, after the header
        if record.len() != header.len() {
            return Err(Error::EmptyTable(format!(
                "row {row_no} has {} fields, expected {}",
                record.len(),
                header.len()
            )));
        }
        subject_ids.push(record[0].to_string());
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                row: row_no,
                column: all_names[j].clone(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteCell {
                    row: row_no,
                    column: all_names[j].clone(),
                });
            }
            if Some(j) == target_idx {
                target_vals.push(v);
            } else {
                flat.push(v);
            }
        }
    }
    if subject_ids.is_empty() {
        return Err(Error::EmptyTable("no data rows".into()));
    }
    let n = subject_ids.len();
    let p = columns.len();
    let values = Array2::from_shape_vec((n, p), flat).expect("row-major cell buffer");
    let (target_name, target) = match target_idx {
        Some(j) => (Some(all_names[j].clone()), Some(Array1::from(target_vals))),
        None => (None, None),
    };
    FeatureTable::new(id_name, subject_ids, columns, values, target_name, target)
}
