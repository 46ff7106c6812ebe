//! Dataset representation and CSV ingestion.
//!
//! Files are UTF-8, comma-delimited, with a header row. When labels are
//! present they occupy the last column, which must be named `label`.
//! Missing values, non-finite numbers and labels outside {0, 1} are
//! rejected rather than repaired.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{DataError, Error, Result};

pub const LABEL_COLUMN: &str = "label";

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from rows. All rows must have `n_cols` entries.
    pub fn from_rows(rows: &[Vec<f64>], n_cols: usize) -> Result<Self, DataError> {
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(DataError::Ragged {
                    row: i + 1,
                    expected: n_cols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            n_rows: rows.len(),
            n_cols,
            values,
        })
    }

    /// Single-column matrix, handy for one-feature data.
    pub fn column(values: &[f64]) -> Self {
        Self {
            n_rows: values.len(),
            n_cols: 1,
            values: values.to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks(self.n_cols.max(1)).take(self.n_rows)
    }
}

/// Parsed CSV content before the `n >= 1` check. Prediction inputs may
/// legitimately have zero rows; training inputs may not.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<u8>>,
}

/// Training or prediction input: an n×d feature matrix with optional
/// binary labels. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Option<Vec<u8>>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Validates and builds a dataset.
    pub fn new(
        features: Matrix,
        labels: Option<Vec<u8>>,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if features.n_cols() == 0 {
            return Err(DataError::NoFeatures);
        }
        if features.n_rows() == 0 {
            return Err(DataError::NoRows);
        }
        if feature_names.len() != features.n_cols() {
            return Err(DataError::Malformed(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.n_cols()
            )));
        }
        for (i, row) in features.rows().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NonFinite {
                        row: i + 1,
                        column: feature_names[j].clone(),
                        value: v.to_string(),
                    });
                }
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != features.n_rows() {
                return Err(DataError::Malformed(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    features.n_rows()
                )));
            }
            if let Some(i) = labels.iter().position(|&y| y > 1) {
                return Err(DataError::BadLabel {
                    row: i + 1,
                    value: labels[i].to_string(),
                });
            }
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    /// Convenience constructor with generated names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<u8>>) -> Result<Self, DataError> {
        let d = rows.first().map_or(0, Vec::len);
        let names = default_feature_names(d);
        Self::new(Matrix::from_rows(rows, d)?, labels, names)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Writes the dataset as CSV with `\n` line endings. Numbers use the
    /// shortest representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut header = self.feature_names.join(",");
        if self.labels.is_some() {
            header.push(',');
            header.push_str(LABEL_COLUMN);
        }
        writeln!(out, "{header}")?;
        for (i, row) in self.features.rows().enumerate() {
            let mut line = row
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            if let Some(labels) = &self.labels {
                line.push(',');
                line.push_str(&labels[i].to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

impl TryFrom<Table> for Dataset {
    type Error = DataError;

    fn try_from(table: Table) -> Result<Self, DataError> {
        let d = table.feature_names.len();
        let features = Matrix::from_rows(&table.rows, d)?;
        Dataset::new(features, table.labels, table.feature_names)
    }
}

pub fn default_feature_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Parses CSV text into a [`Table`].
///
/// With `expect_labels` the last column must be `label`. Without it, a
/// trailing `label` column is still recognised and split off, so the same
/// file can be used for training and prediction.
pub fn parse_table<R: Read>(reader: R, expect_labels: bool) -> Result<Table, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(DataError::Empty),
        Some(rec) => rec.map_err(csv_error)?,
    };
    let mut names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if names.len() == 1 && names[0].is_empty() {
        return Err(DataError::Empty);
    }
    let width = names.len();

    let has_labels = names.last().map(String::as_str) == Some(LABEL_COLUMN);
    if expect_labels && !has_labels {
        return Err(DataError::MissingLabelColumn {
            found: names.last().cloned().unwrap_or_default(),
        });
    }
    if has_labels {
        names.pop();
    }
    if names.is_empty() {
        return Err(DataError::NoFeatures);
    }
    let d = names.len();

    let mut rows = Vec::new();
    let mut labels = has_labels.then(Vec::new);
    for (i, rec) in records.enumerate() {
        let row_no = i + 1;
        let rec = rec.map_err(csv_error)?;
        if rec.len() != width {
            return Err(DataError::Ragged {
                row: row_no,
                expected: width,
                found: rec.len(),
            });
        }
        let mut row = Vec::with_capacity(d);
        for (j, cell) in rec.iter().take(d).enumerate() {
            row.push(parse_cell(cell, row_no, &names[j])?);
        }
        if let Some(labels) = labels.as_mut() {
            labels.push(parse_label(&rec[d], row_no)?);
        }
        rows.push(row);
    }

    Ok(Table {
        feature_names: names,
        rows,
        labels,
    })
}

/// Reads a CSV file into a [`Table`] without requiring any rows.
pub fn load_table(path: impl AsRef<Path>, expect_labels: bool) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_table(io::BufReader::new(file), expect_labels)?)
}

/// Reads and validates a dataset from a CSV file.
pub fn load_csv(path: impl AsRef<Path>, expect_labels: bool) -> Result<Dataset> {
    let table = load_table(path, expect_labels)?;
    Ok(Dataset::try_from(table)?)
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64, DataError> {
    let s = cell.trim();
    if s.is_empty() {
        return Err(DataError::MissingValue {
            row,
            column: column.to_string(),
        });
    }
    // Rust's float grammar also accepts "inf" and "NaN"; those are
    // recognised so they can be reported as non-finite.
    let v: f64 = s.parse().map_err(|_| DataError::NonNumeric {
        row,
        column: column.to_string(),
        value: s.to_string(),
    })?;
    if !v.is_finite() {
        return Err(DataError::NonFinite {
            row,
            column: column.to_string(),
            value: s.to_string(),
        });
    }
    Ok(v)
}

fn parse_label(cell: &str, row: usize) -> Result<u8, DataError> {
    let s = cell.trim();
    if s.is_empty() {
        return Err(DataError::MissingValue {
            row,
            column: LABEL_COLUMN.to_string(),
        });
    }
    match s.parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        _ => Err(DataError::BadLabel {
            row,
            value: s.to_string(),
        }),
    }
}

fn csv_error(e: csv::Error) -> DataError {
    DataError::Malformed(e.to_string())
}
