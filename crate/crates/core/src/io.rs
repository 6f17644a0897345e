//! CSV ingestion for regression data sets and design matrices.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::model::Dataset;
use crate::{Error, Result};

/// Reads a regression data set from CSV.
///
/// The first row must be a header; every following row holds the regressor
/// columns and then the response as the final column. With `intercept` set,
/// a leading column of ones is prepended to the design.
pub fn read_dataset_csv(path: impl AsRef<Path>, intercept: bool) -> Result<Dataset> {
    let (columns, mut rows) = read_numeric_csv(path.as_ref())?;
    if columns < 2 {
        return Err(Error::Data(format!(
            "need at least one regressor column and a response, got {columns} column(s)"
        )));
    }
    let n = rows.len();
    let y = DVector::from_iterator(n, rows.iter().map(|row| row[columns - 1]));
    if intercept {
        for row in &mut rows {
            row.insert(0, 1.0);
        }
    }
    let p = columns - 1 + usize::from(intercept);
    let x = DMatrix::from_row_iterator(n, p, rows.iter().flat_map(|row| row[..p].iter().copied()));
    Dataset::new(x, y)
}

/// Reads a design matrix (regressor columns only, no response) from CSV.
/// The first row must be a header.
pub fn read_design_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let (columns, rows) = read_numeric_csv(path.as_ref())?;
    let n = rows.len();
    Ok(DMatrix::from_row_iterator(n, columns, rows.into_iter().flatten()))
}

/// Shared CSV parsing: validates the header, parses every cell as finite
/// f64, and enforces a rectangular shape.
fn read_numeric_csv(path: &Path) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let columns = headers.len();
    if columns == 0 {
        return Err(Error::Data(format!("{}: empty file", path.display())));
    }
    // A fully numeric first row almost certainly means the header is missing.
    if headers.iter().all(|f| f.parse::<f64>().is_ok()) {
        return Err(Error::Data(format!(
            "{}: first row is numeric; a header row is required",
            path.display()
        )));
    }

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if record.len() != columns {
            return Err(Error::Data(format!(
                "{}: row {} has {} fields, header has {columns}",
                path.display(),
                idx + 2,
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(columns);
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                Error::Data(format!(
                    "{}: row {}, column {}: cannot parse {field:?} as a number",
                    path.display(),
                    idx + 2,
                    col + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!(
                    "{}: row {}, column {}: non-finite value",
                    path.display(),
                    idx + 2,
                    col + 1
                )));
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok((columns, rows))
}
