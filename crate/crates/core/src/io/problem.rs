use std::collections::BTreeMap;
use std::path::Path;

use super::model_file::parse_lines;
use super::{read_table, read_to_string};
use crate::control::{ControlProblem, InputBounds};
use crate::error::{Error, Result};
use crate::model::LogLinearModel;
use crate::numerics::{Matrix, Vector};

/// Reads a tracking problem for `model`.
///
/// Keys (all values whitespace separated):
///
/// * `horizon`: number of inputs T.
/// * `x1` (positive) or `x1_log`: initial state.
/// * `Q`, `R`: a scalar `s` meaning `s·I`, or all entries row-major.
/// * `ref` (positive) or `ref_log`: a constant target, or `refs`, a series
///   CSV of T positive target states, resolved relative to the problem file.
/// * `u_min`/`u_max` (positive) or `u_min_log`/`u_max_log`: optional input
///   bounds, one value per input or a single value for all.
pub fn read_problem(path: &Path, model: &LogLinearModel) -> Result<ControlProblem> {
    let origin = path.display().to_string();
    let fields = parse_lines(&read_to_string(path)?, &origin)?;
    let cfg = Config {
        fields: &fields,
        origin: &origin,
    };
    for key in fields.keys() {
        if !KNOWN.contains(&key.as_str()) {
            return Err(cfg.err(format!("unknown key `{key}`")));
        }
    }
    let (n, m) = (model.n(), model.m());

    let horizon = match cfg.numbers("horizon")?.as_deref() {
        Some([h]) if *h >= 1.0 && h.fract() == 0.0 => *h as usize,
        Some(_) => return Err(cfg.err("`horizon` must be a positive integer".into())),
        None => return Err(cfg.err("missing key `horizon`".into())),
    };
    let x1_log = cfg
        .log_vector("x1", n, false)?
        .ok_or_else(|| cfg.err("missing key `x1` or `x1_log`".into()))?;
    let q = cfg.weight("Q", n)?;
    let r = cfg.weight("R", m)?;

    let refs = match (fields.get("refs"), cfg.log_vector("ref", n, false)?) {
        (Some(_), Some(_)) => {
            return Err(cfg.err("give either `refs` or `ref`/`ref_log`, not both".into()))
        }
        (Some((_, file)), None) => {
            let csv = path.parent().unwrap_or_else(|| Path::new(".")).join(file);
            let table = read_table(&csv, true)?;
            if table.columns.len() != n {
                return Err(Error::mismatch("reference columns", n, table.columns.len()));
            }
            table
                .rows
                .iter()
                .map(|row| Vector::new(row.iter().map(|v| v.ln()).collect()))
                .collect::<Result<Vec<_>>>()?
        }
        (None, Some(target)) => vec![target; horizon],
        (None, None) => return Err(cfg.err("missing key `ref`, `ref_log` or `refs`".into())),
    };

    let bounds = match (
        cfg.log_vector("u_min", m, true)?,
        cfg.log_vector("u_max", m, true)?,
    ) {
        (None, None) => None,
        (Some(lo), Some(hi)) => Some(InputBounds::uniform(lo, hi, horizon)?),
        _ => return Err(cfg.err("input bounds need both a lower and an upper value".into())),
    };
    ControlProblem::new(model.clone(), x1_log, horizon, refs, q, r, bounds)
}

const KNOWN: &[&str] = &[
    "horizon",
    "x1",
    "x1_log",
    "Q",
    "R",
    "ref",
    "ref_log",
    "refs",
    "u_min",
    "u_min_log",
    "u_max",
    "u_max_log",
];

struct Config<'a> {
    fields: &'a BTreeMap<String, (usize, String)>,
    origin: &'a str,
}

impl Config<'_> {
    fn err(&self, message: String) -> Error {
        Error::Parse {
            path: self.origin.to_string(),
            message,
        }
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((line, raw)) = self.fields.get(key) else {
            return Ok(None);
        };
        raw.split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        self.err(format!(
                            "line {line}: `{key}` has a non-numeric value `{tok}`"
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Reads `key` (positive, logged here) or `key_log`; at most one may be present.
    fn log_vector(&self, key: &str, dim: usize, broadcast: bool) -> Result<Option<Vector>> {
        let log_key = format!("{key}_log");
        let (values, positive, used) = match (self.numbers(key)?, self.numbers(&log_key)?) {
            (Some(_), Some(_)) => {
                return Err(self.err(format!("give either `{key}` or `{log_key}`, not both")))
            }
            (Some(v), None) => (v, true, key.to_string()),
            (None, Some(v)) => (v, false, log_key),
            (None, None) => return Ok(None),
        };
        let values = match values.len() {
            1 if broadcast => vec![values[0]; dim],
            len if len == dim => values,
            len => return Err(Error::mismatch(format!("`{used}` values"), dim, len)),
        };
        if positive {
            if let Some(&v) = values.iter().find(|v| **v <= 0.0) {
                return Err(Error::NonPositiveEntry {
                    value: v,
                    location: format!("{} key `{used}`", self.origin),
                });
            }
            return Vector::new(values.iter().map(|v| v.ln()).collect()).map(Some);
        }
        Vector::new(values).map(Some)
    }

    fn weight(&self, key: &str, dim: usize) -> Result<Matrix> {
        let values = self
            .numbers(key)?
            .ok_or_else(|| self.err(format!("missing key `{key}`")))?;
        match values.len() {
            1 => {
                let mut w = Matrix::identity(dim);
                for i in 0..dim {
                    w.set(i, i, values[0]);
                }
                Ok(w)
            }
            len if len == dim * dim => Matrix::new(dim, dim, values),
            len => Err(Error::mismatch(format!("`{key}` entries"), dim * dim, len)),
        }
    }
}
