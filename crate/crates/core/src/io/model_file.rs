use std::collections::BTreeMap;
use std::path::Path;

use super::{format_g17, read_to_string, write_atomic};
use crate::error::{Error, Result};
use crate::model::LogLinearModel;
use crate::numerics::{Matrix, Vector};

/// A model plus an optional noise estimate, stored as `key = values` lines.
///
/// ```text
/// n = 2
/// m = 0
/// A = 0.74 -0.37 0.21 0.7
/// c = 2 0.23
/// sigma_hat = 0.25
/// ```
///
/// Matrices are row-major; `B` is present iff `m > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub model: LogLinearModel,
    pub sigma_hat: Option<f64>,
}

impl ModelFile {
    pub fn new(model: LogLinearModel) -> Self {
        ModelFile {
            model,
            sigma_hat: None,
        }
    }

    pub fn render(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format_g17(*x))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let model = &self.model;
        let mut out = String::from(
            "# log-linear model: x[t+1]_i = c_i * prod_j x[t]_j^A_ij * prod_k u[t]_k^B_ik\n",
        );
        out.push_str(&format!("n = {}\nm = {}\n", model.n(), model.m()));
        out.push_str(&format!("A = {}\n", join(model.a().as_slice())));
        out.push_str(&format!("c = {}\n", join(model.c().as_slice())));
        if let Some(b) = model.b() {
            out.push_str(&format!("B = {}\n", join(b.as_slice())));
        }
        if let Some(s) = self.sigma_hat {
            out.push_str(&format!("sigma_hat = {}\n", format_g17(s)));
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let fields = parse_fields(text, origin)?;
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            message,
        };
        let get = |key: &str| -> Result<&Vec<f64>> {
            fields
                .get(key)
                .map(|(_, v)| v)
                .ok_or_else(|| err(format!("missing key `{key}`")))
        };
        let count = |key: &str| -> Result<usize> {
            match get(key)?.as_slice() {
                [v] if *v >= 0.0 && v.fract() == 0.0 => Ok(*v as usize),
                _ => Err(err(format!(
                    "`{key}` must be a single non-negative integer"
                ))),
            }
        };
        let sized = |key: &str, len: usize| -> Result<Vec<f64>> {
            let v = get(key)?;
            if v.len() != len {
                let line = fields[key].0;
                return Err(err(format!(
                    "line {line}: `{key}` needs {len} values, found {}",
                    v.len()
                )));
            }
            Ok(v.clone())
        };

        let n = count("n")?;
        let m = count("m")?;
        let a = Matrix::new(n, n, sized("A", n * n)?)?;
        let c = Vector::new(sized("c", n)?)?;
        let b = if m > 0 {
            Some(Matrix::new(n, m, sized("B", n * m)?)?)
        } else {
            if fields.contains_key("B") {
                return Err(err("`B` given but m = 0".into()));
            }
            None
        };
        let sigma_hat = match fields.get("sigma_hat") {
            None => None,
            Some((_, v)) if v.len() == 1 && v[0] >= 0.0 => Some(v[0]),
            Some((line, _)) => {
                return Err(err(format!(
                    "line {line}: `sigma_hat` must be one non-negative number"
                )))
            }
        };
        for key in fields.keys() {
            if !["n", "m", "A", "c", "B", "sigma_hat"].contains(&key.as_str()) {
                return Err(err(format!("unknown key `{key}`")));
            }
        }
        Ok(ModelFile {
            model: LogLinearModel::new(a, c, b)?,
            sigma_hat,
        })
    }
}

/// Parses `key = numbers…` lines, skipping blanks and `#` comments.
/// Values keep the line they came from for diagnostics.
pub(super) fn parse_fields(
    text: &str,
    origin: &str,
) -> Result<BTreeMap<String, (usize, Vec<f64>)>> {
    let mut out = BTreeMap::new();
    for (k, raw) in parse_lines(text, origin)? {
        let (line, value) = raw;
        let nums = value
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: origin.to_string(),
                        message: format!("line {line}: `{k}` has a non-numeric value `{tok}`"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(k, (line, nums));
    }
    Ok(out)
}

/// Raw `key = value` pairs with their line numbers; duplicate keys are an error.
pub(super) fn parse_lines(text: &str, origin: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            path: origin.to_string(),
            message: format!("line {line}: expected `key = value`"),
        })?;
        let key = key.trim().to_string();
        if out
            .insert(key.clone(), (line, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::Parse {
                path: origin.to_string(),
                message: format!("line {line}: duplicate key `{key}`"),
            });
        }
    }
    Ok(out)
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    ModelFile::parse(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_model(path: &Path, file: &ModelFile) -> Result<()> {
    write_atomic(path, file.render().as_bytes())
}
