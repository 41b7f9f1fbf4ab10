use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::value::format_number;

/// Abstract description of a data frame: known columns (in order of
/// introduction) and a row-count interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataFrameShape {
    pub columns: Vec<String>,
    /// More columns may exist than the ones listed.
    pub open: bool,
    /// Inclusive bounds on the row count; `None` when unknown.
    pub rows: Option<(f64, f64)>,
}

impl DataFrameShape {
    pub fn exact(columns: impl IntoIterator<Item = impl Into<String>>, rows: Option<(f64, f64)>) -> Self {
        DataFrameShape {
            columns: columns.into_iter().map(Into::into).collect(),
            open: false,
            rows,
        }
    }

    /// Nothing known.
    pub fn unknown() -> Self {
        DataFrameShape {
            columns: Vec::new(),
            open: true,
            rows: None,
        }
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    /// Whether `name` is known to be absent.
    pub fn lacks_column(&self, name: &str) -> bool {
        !self.open && !self.has_column(name)
    }

    pub fn join(&self, other: &DataFrameShape) -> DataFrameShape {
        let same = !self.open
            && !other.open
            && self.columns.len() == other.columns.len()
            && self.columns.iter().all(|c| other.has_column(c));
        let columns = if same {
            self.columns.clone()
        } else {
            self.columns.iter().filter(|c| other.has_column(c)).cloned().collect()
        };
        let rows = match (self.rows, other.rows) {
            (Some((a, b)), Some((c, d))) => Some((a.min(c), b.max(d))),
            _ => None,
        };
        DataFrameShape {
            columns,
            open: !same,
            rows,
        }
    }

    pub fn add_column(&mut self, name: &str) {
        if !self.has_column(name) {
            self.columns.push(name.to_string());
        }
    }

    pub fn remove_column(&mut self, name: &str) {
        self.columns.retain(|c| c != name);
    }
}

impl fmt::Display for DataFrameShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = match self.rows {
            Some((lo, hi)) if lo == hi => format_number(lo, false),
            Some((lo, hi)) => format!("between {} and {}", format_number(lo, false), format_number(hi, false)),
            None => "between 0 and Inf".to_string(),
        };
        let columns = if self.columns.is_empty() {
            "none".to_string()
        } else {
            self.columns.join(", ")
        };
        write!(f, "a data frame with {rows} rows, and known columns: {columns}")
    }
}

/// Header and record count of a CSV file, if it can be read.
pub fn csv_shape(path: &Path) -> Option<DataFrameShape> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).ok()?;
    let columns: Vec<String> = reader.headers().ok()?.iter().map(str::to_string).collect();
    let mut count = 0u64;
    for record in reader.records() {
        record.ok()?;
        count += 1;
    }
    Some(DataFrameShape::exact(columns, Some((count as f64, count as f64))))
}
