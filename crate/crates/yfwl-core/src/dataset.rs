//! Column-labeled numeric datasets and CSV ingestion.
//!
//! Input contract: RFC-4180-style CSV, UTF-8, first row is the header,
//! numeric cells are decimal reals with no thousands separators. A designated
//! cluster column may be non-numeric; its cells are kept as categorical
//! labels. Empty cells and the literals `NA`/`NaN` count as missing: rows
//! containing one are rejected, or dropped (and counted) when
//! `drop_missing` is set.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;
use std::io::Read;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct ClusterColumn {
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Dataset<T> {
    names: Vec<String>,
    values: Mat<T>,
    cluster: Option<ClusterColumn>,
    dropped_rows: usize,
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    /// Drop rows with missing cells instead of rejecting the file.
    pub drop_missing: bool,
    /// Column to keep as categorical cluster labels rather than numbers.
    pub cluster: Option<String>,
}

impl<T: Scalar> Dataset<T> {
    /// Assemble a dataset from in-memory columns (used by generators and
    /// tests); enforces the same invariants as ingestion.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<T>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        check_unique(&names)?;
        let n = columns.first().map_or(0, Vec::len);
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        for c in &columns {
            if c.len() != n {
                return Err(Error::ShapeMismatch("ragged columns".into()));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("non-finite value in dataset".into()));
            }
        }
        Ok(Dataset { names, values: Mat::from_cols(&columns), cluster: None, dropped_rows: 0 })
    }

    pub fn with_cluster(mut self, cluster: ClusterColumn) -> Result<Self> {
        if cluster.labels.len() != self.n_rows() {
            return Err(Error::ShapeMismatch("cluster labels must match the row count".into()));
        }
        self.cluster = Some(cluster);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn cluster(&self) -> Option<&ClusterColumn> {
        self.cluster.as_ref()
    }

    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<T>> {
        Ok(self.values.col(self.column_index(name)?))
    }

    /// Matrix of the named columns, in the order given.
    pub fn columns(&self, names: &[String]) -> Result<Mat<T>> {
        let cols: Result<Vec<Vec<T>>> = names.iter().map(|n| self.column(n)).collect();
        let cols = cols?;
        if cols.is_empty() {
            return Ok(Mat::zeros(self.n_rows(), 0));
        }
        Ok(Mat::from_cols(&cols))
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::DuplicateHeader(n.clone()));
        }
    }
    Ok(())
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA" || t == "NaN" || t == "nan"
}

/// Parse a CSV file into a [`Dataset`].
pub fn ingest_csv<T: Scalar>(path: &Path, opts: &IngestOptions) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path)?;
    ingest_csv_reader(file, opts)
}

/// Reader-based variant of [`ingest_csv`].
pub fn ingest_csv_reader<T: Scalar, R: Read>(reader: R, opts: &IngestOptions) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);

    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, col: 0, msg: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    check_unique(&headers)?;

    let cluster_idx = match &opts.cluster {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::UnknownColumn(name.clone()))?,
        ),
        None => None,
    };

    let numeric_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != cluster_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut columns: Vec<Vec<T>> = vec![Vec::new(); numeric_names.len()];
    let mut labels: Vec<String> = Vec::new();
    let mut dropped = 0usize;

    for (row_i, record) in rdr.records().enumerate() {
        let line = row_i + 2; // header is line 1
        let record = record.map_err(|e| Error::Parse { line, col: 0, msg: e.to_string() })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                col: 0,
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }

        if record.iter().enumerate().any(|(j, cell)| Some(j) != cluster_idx && is_missing(cell)) {
            if opts.drop_missing {
                dropped += 1;
                continue;
            }
            let col = record
                .iter()
                .enumerate()
                .find(|(j, cell)| Some(*j) != cluster_idx && is_missing(cell))
                .map(|(j, _)| headers[j].clone())
                .unwrap_or_default();
            return Err(Error::MissingValue { line, col });
        }

        let mut k = 0usize;
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == cluster_idx {
                labels.push(cell.trim().to_string());
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line,
                col: j + 1,
                msg: format!("`{}` is not a decimal real in column `{}`", cell, headers[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    col: j + 1,
                    msg: format!("non-finite value in column `{}`", headers[j]),
                });
            }
            columns[k].push(T::of(v));
            k += 1;
        }
    }

    let n = columns.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::EmptyFile);
    }
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }

    let mut ds = Dataset {
        names: numeric_names,
        values: Mat::from_cols(&columns),
        cluster: None,
        dropped_rows: dropped,
    };
    if let Some(idx) = cluster_idx {
        ds.cluster = Some(ClusterColumn { name: headers[idx].clone(), labels });
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str, opts: &IngestOptions) -> Result<Dataset<f64>> {
        ingest_csv_reader(text.as_bytes(), opts)
    }

    #[test]
    fn header_only_file_is_empty() {
        assert!(matches!(ingest("a,b\n", &IngestOptions::default()), Err(Error::EmptyFile)));
    }

    #[test]
    fn duplicate_header_is_rejected() {
        let r = ingest("a,a\n1,2\n2,3\n", &IngestOptions::default());
        assert!(matches!(r, Err(Error::DuplicateHeader(_))));
    }

    #[test]
    fn missing_cells_reject_or_drop() {
        let text = "a,b\n1,2\n,3\n4,5\n";
        let r = ingest(text, &IngestOptions::default());
        assert!(matches!(r, Err(Error::MissingValue { line: 3, .. })));
        let ds = ingest(text, &IngestOptions { drop_missing: true, cluster: None }).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.dropped_rows(), 1);
    }

    #[test]
    fn cluster_column_keeps_labels() {
        let opts = IngestOptions { drop_missing: false, cluster: Some("g".into()) };
        let ds = ingest("x,g,y\n1,a,2\n3,b,4\n5,a,6\n", &opts).unwrap();
        assert_eq!(ds.column_names(), &["x".to_string(), "y".to_string()]);
        assert_eq!(ds.cluster().unwrap().labels, vec!["a", "b", "a"]);
        assert_eq!(ds.column("y").unwrap(), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn parse_error_carries_position() {
        let r = ingest("a,b\n1,2\n3,oops\n", &IngestOptions::default());
        match r {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(col, 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
