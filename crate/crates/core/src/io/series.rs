use std::path::Path;

use csv::{ReaderBuilder, Trim};

use super::{format_g17, write_atomic};
use crate::error::{Error, Result};
use crate::model::{ControlSequence, Trajectory};
use crate::numerics::Vector;

/// A CSV time series: an integer `t` column followed by one column per
/// component, with `t` increasing by exactly one per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    pub t0: i64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SeriesTable {
    pub fn from_rows(t0: i64, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != columns.len()) {
            return Err(Error::mismatch("series row width", columns.len(), r.len()));
        }
        Ok(SeriesTable { t0, columns, rows })
    }

    /// Series of state vectors with the given (or default `x1..xn`) names.
    pub fn from_states(t0: i64, names: Option<&[String]>, states: &[Vector]) -> Result<Self> {
        let dim = states.first().map_or(0, Vector::dim);
        let columns = column_names(names, "x", dim)?;
        Self::from_rows(
            t0,
            columns,
            states.iter().map(|s| s.as_slice().to_vec()).collect(),
        )
    }

    pub fn from_trajectory(t0: i64, names: Option<&[String]>, x: &Trajectory) -> Result<Self> {
        Self::from_states(t0, names, x.states())
    }

    pub fn from_controls(t0: i64, names: Option<&[String]>, u: &ControlSequence) -> Result<Self> {
        let columns = column_names(names, "u", u.m())?;
        Self::from_rows(
            t0,
            columns,
            u.inputs().iter().map(|v| v.as_slice().to_vec()).collect(),
        )
    }

    /// Measured and predicted series side by side as `xi,xi_pred` pairs.
    pub fn overlay(
        t0: i64,
        names: Option<&[String]>,
        real: &Trajectory,
        predicted: &Trajectory,
    ) -> Result<Self> {
        if real.len() != predicted.len() {
            return Err(Error::mismatch(
                "prediction length",
                real.len(),
                predicted.len(),
            ));
        }
        if real.n() != predicted.n() {
            return Err(Error::mismatch(
                "prediction dimension",
                real.n(),
                predicted.n(),
            ));
        }
        let base = column_names(names, "x", real.n())?;
        let columns = base
            .iter()
            .flat_map(|c| [c.clone(), format!("{c}_pred")])
            .collect();
        let rows = real
            .states()
            .iter()
            .zip(predicted.states())
            .map(|(r, p)| r.iter().zip(p.iter()).flat_map(|(a, b)| [*a, *b]).collect())
            .collect();
        Self::from_rows(t0, columns, rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Keeps rows with `from ≤ t ≤ to`.
    pub fn restrict(&self, from: Option<i64>, to: Option<i64>) -> SeriesTable {
        let lo = from.unwrap_or(i64::MIN);
        let hi = to.unwrap_or(i64::MAX);
        let kept: Vec<(i64, Vec<f64>)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (self.t0 + i as i64, r.clone()))
            .filter(|(t, _)| (lo..=hi).contains(t))
            .collect();
        SeriesTable {
            t0: kept.first().map_or(lo.max(self.t0), |(t, _)| *t),
            columns: self.columns.clone(),
            rows: kept.into_iter().map(|(_, r)| r).collect(),
        }
    }

    pub fn to_trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(self.rows.clone())
    }

    pub fn to_controls(&self) -> Result<ControlSequence> {
        ControlSequence::new(self.columns.len(), self.rows.clone())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&(self.t0 + i as i64).to_string());
            for v in row {
                out.push(',');
                out.push_str(&format_g17(*v));
            }
            out.push('\n');
        }
        out
    }
}

fn column_names(names: Option<&[String]>, prefix: &str, dim: usize) -> Result<Vec<String>> {
    match names {
        Some(names) if names.len() != dim => Err(Error::mismatch("column names", dim, names.len())),
        Some(names) => Ok(names.to_vec()),
        None => Ok((1..=dim).map(|i| format!("{prefix}{i}")).collect()),
    }
}

/// Reads a series file. With `positive`, every data cell must be > 0.
pub fn read_table(path: &Path, positive: bool) -> Result<SeriesTable> {
    let shown = path.display().to_string();
    let parse_err = |message: String| Error::Parse {
        path: shown.clone(),
        message,
    };
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => parse_err(format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(format!("header: {e}")))?
        .clone();
    if headers.get(0) != Some("t") {
        return Err(parse_err("line 1: first column must be named `t`".into()));
    }
    if headers.len() < 2 {
        return Err(parse_err(
            "line 1: expected at least one data column after `t`".into(),
        ));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();

    let mut t0 = None;
    let mut prev: Option<i64> = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line()) as usize;
        let t_cell = record.get(0).unwrap_or("");
        let t: i64 = t_cell.parse().map_err(|_| {
            parse_err(format!(
                "line {line}, column `t`: expected an integer step, got `{t_cell}`"
            ))
        })?;
        if let Some(p) = prev {
            if p.checked_add(1) != Some(t) {
                return Err(Error::GapInTime {
                    path: shown.clone(),
                    line,
                    prev: p,
                    next: t,
                });
            }
        }
        prev = Some(t);
        t0.get_or_insert(t);

        let mut row = Vec::with_capacity(columns.len());
        for (j, name) in columns.iter().enumerate() {
            let cell = record.get(j + 1).unwrap_or("");
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    parse_err(format!(
                        "line {line}, column `{name}`: expected a finite number, got `{cell}`"
                    ))
                })?;
            if positive && v <= 0.0 {
                return Err(Error::NonPositiveEntry {
                    value: v,
                    location: format!("{shown} line {line}, column `{name}`"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err("no data rows".into()));
    }
    SeriesTable::from_rows(t0.unwrap_or(0), columns, rows)
}

/// Reads a strictly positive state series.
pub fn read_series(path: &Path) -> Result<Trajectory> {
    read_table(path, true)?.to_trajectory()
}

/// Reads a strictly positive input series.
pub fn read_controls(path: &Path) -> Result<ControlSequence> {
    read_table(path, true)?.to_controls()
}

pub fn write_series(path: &Path, table: &SeriesTable) -> Result<()> {
    write_atomic(path, table.to_csv().as_bytes())
}
