//! Raw tabular ingestion: CSV loading with the CICFlowMeter quirks handled.
//!
//! Rate columns in CICFlowMeter exports contain literal "Infinity" and "NaN"
//! tokens (zero-duration flows). Infinity is replaced by the column's
//! observed finite maximum; a NaN in a modified-feature column drops the row;
//! a NaN elsewhere becomes 0. Malformed rows (unparseable fields, repeated
//! header lines, wrong field counts) are skipped and counted, and more than
//! 1% of them fails the load outright.

use std::path::Path;

use crate::error::{Error, Result};
use crate::profiles::{CsvSource, DatasetProfile};
use crate::schema::FeatureGroup;

/// Raw rows in profile-declared columns, before encoding and normalization.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub numeric_names: Vec<String>,
    pub categorical_names: Vec<String>,
    /// Per row: numeric values aligned with `numeric_names`.
    pub numeric: Vec<Vec<f64>>,
    /// Per row: categorical tokens aligned with `categorical_names`.
    pub categorical: Vec<Vec<String>>,
    pub labels: Vec<String>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.numeric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numeric.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> RawTable {
        RawTable {
            numeric_names: self.numeric_names.clone(),
            categorical_names: self.categorical_names.clone(),
            numeric: indices.iter().map(|&i| self.numeric[i].clone()).collect(),
            categorical: indices
                .iter()
                .map(|&i| self.categorical[i].clone())
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }
}

/// Operator-visible load counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub rows_read: usize,
    pub rows_skipped_malformed: usize,
    pub rows_skipped_nan_mf: usize,
    pub infinity_substituted: usize,
    pub nan_substituted: usize,
}

impl LoadStats {
    pub fn rows_skipped(&self) -> usize {
        self.rows_skipped_malformed + self.rows_skipped_nan_mf
    }
}

const MALFORMED_LIMIT_PERCENT: f64 = 1.0;

#[derive(Clone, Copy, PartialEq)]
enum Cell {
    Value(f64),
    Infinity,
    Nan,
}

fn parse_cell(token: &str) -> Option<Cell> {
    let t = token.trim();
    if t.is_empty() {
        return None;
    }
    let lower = t.to_ascii_lowercase();
    match lower.as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => return Some(Cell::Infinity),
        "nan" => return Some(Cell::Nan),
        _ => {}
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(Cell::Value(v)),
        Ok(v) if v.is_infinite() && v > 0.0 => Some(Cell::Infinity),
        Ok(_) => Some(Cell::Nan),
        Err(_) => None,
    }
}

/// Load one or more CSV files into the profile's raw columns.
pub fn load_csv(paths: &[impl AsRef<Path>], profile: &DatasetProfile) -> Result<(RawTable, LoadStats)> {
    let numeric_cols = profile.numeric_columns();
    let categorical_cols = profile.categorical_columns();
    // Modified-feature source columns get the NaN-drops-row policy.
    let mf_cols: Vec<String> = profile
        .features
        .iter()
        .filter(|f| matches!(f.group, FeatureGroup::Modified(_)))
        .filter_map(|f| match &f.source {
            CsvSource::Numeric { column, .. } => Some(column.clone()),
            CsvSource::OneHot { .. } => None,
        })
        .collect();

    let mut stats = LoadStats::default();
    // Buffered rows: (numeric cells, categorical tokens, label)
    let mut pending: Vec<(Vec<Cell>, Vec<String>, String)> = Vec::new();

    for path in paths {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(path.as_ref())?;
        let headers = reader.headers()?.clone();
        let find = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let numeric_idx: Vec<usize> = numeric_cols
            .iter()
            .map(|(name, _)| find(name))
            .collect::<Result<_>>()?;
        let categorical_idx: Vec<usize> = categorical_cols
            .iter()
            .map(|name| find(name))
            .collect::<Result<_>>()?;
        let label_idx = find(&profile.label_column)?;

        for record in reader.records() {
            let record = match record {
                Ok(r) => r,
                Err(_) => {
                    stats.rows_read += 1;
                    stats.rows_skipped_malformed += 1;
                    continue;
                }
            };
            stats.rows_read += 1;
            let mut cells = Vec::with_capacity(numeric_idx.len());
            let mut bad = false;
            for &i in &numeric_idx {
                match record.get(i).and_then(parse_cell) {
                    Some(c) => cells.push(c),
                    None => {
                        bad = true;
                        break;
                    }
                }
            }
            let label = record.get(label_idx).unwrap_or("").trim().to_string();
            if bad || label.is_empty() {
                stats.rows_skipped_malformed += 1;
                continue;
            }
            let cats: Vec<String> = categorical_idx
                .iter()
                .map(|&i| record.get(i).unwrap_or("").trim().to_string())
                .collect();
            pending.push((cells, cats, label));
        }
    }

    // Observed finite maximum per rate column (the Infinity substitution cap).
    let mut caps = vec![0.0f64; numeric_cols.len()];
    for (cells, _, _) in &pending {
        for (k, cell) in cells.iter().enumerate() {
            if let Cell::Value(v) = cell {
                if *v > caps[k] {
                    caps[k] = *v;
                }
            }
        }
    }

    let mut table = RawTable {
        numeric_names: numeric_cols.iter().map(|(n, _)| n.clone()).collect(),
        categorical_names: categorical_cols.clone(),
        numeric: Vec::with_capacity(pending.len()),
        categorical: Vec::with_capacity(pending.len()),
        labels: Vec::with_capacity(pending.len()),
    };

    'rows: for (cells, cats, label) in pending {
        let mut values = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            let (name, is_rate) = &numeric_cols[k];
            match cell {
                Cell::Value(v) => values.push(*v),
                Cell::Infinity => {
                    if *is_rate {
                        values.push(caps[k]);
                        stats.infinity_substituted += 1;
                    } else {
                        stats.rows_skipped_malformed += 1;
                        continue 'rows;
                    }
                }
                Cell::Nan => {
                    if mf_cols.iter().any(|c| c == name) {
                        stats.rows_skipped_nan_mf += 1;
                        continue 'rows;
                    }
                    values.push(0.0);
                    stats.nan_substituted += 1;
                }
            }
        }
        table.numeric.push(values);
        table.categorical.push(cats);
        table.labels.push(label);
    }

    if stats.rows_read > 0 {
        let frac = 100.0 * stats.rows_skipped_malformed as f64 / stats.rows_read as f64;
        if frac > MALFORMED_LIMIT_PERCENT {
            return Err(Error::TooManyMalformed {
                skipped: stats.rows_skipped_malformed,
                total: stats.rows_read,
                limit_percent: MALFORMED_LIMIT_PERCENT,
            });
        }
    }

    Ok((table, stats))
}
