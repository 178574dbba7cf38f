//! CSV ingestion.
//!
//! Dialect: comma separated, decimal point, optional single header row. The
//! header is detected when the selected cell of the first row does not parse
//! as a number.

use std::path::Path;

use crate::error::{Error, Result};
use crate::models::Series;

/// Which column holds the series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    /// Zero-based position.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl ColumnSelector {
    /// Parses `"3"` as an index and anything else as a name.
    pub fn parse(s: &str) -> Self {
        s.trim()
            .parse::<usize>()
            .map(Self::Index)
            .unwrap_or_else(|_| Self::Name(s.trim().to_string()))
    }
}

impl Default for ColumnSelector {
    fn default() -> Self {
        Self::Index(0)
    }
}

/// Reads one numeric column; the first `p` values become initial lags.
pub fn ingest_csv(path: &Path, column: &ColumnSelector, p: usize) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut col: Option<usize> = match column {
        ColumnSelector::Index(i) => Some(*i),
        ColumnSelector::Name(_) => None,
    };
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Input(format!("row {row}: {e}")))?;
        if i == 0 {
            let header = match column {
                ColumnSelector::Name(name) => {
                    let pos = record.iter().position(|h| h == name).ok_or_else(|| {
                        Error::Input(format!("no column named '{name}' in header"))
                    })?;
                    col = Some(pos);
                    true
                }
                ColumnSelector::Index(c) => record
                    .get(*c)
                    .is_some_and(|cell| cell.parse::<f64>().is_err()),
            };
            if header {
                continue;
            }
        }
        let c = col.expect("column resolved");
        let cell = record
            .get(c)
            .ok_or_else(|| Error::Input(format!("row {row}: missing column {c}")))?;
        let v: f64 = cell
            .parse()
            .map_err(|_| Error::Input(format!("row {row}: cannot parse '{cell}' as a number")))?;
        if !v.is_finite() {
            return Err(Error::Input(format!(
                "row {row}: non-finite value '{cell}'"
            )));
        }
        values.push(v);
    }
    if values.len() < p + 2 {
        return Err(Error::Input(format!(
            "need at least {} data rows for lag order {p}, found {}",
            p + 2,
            values.len()
        )));
    }
    Series::new(values, p)
}
