//! Models, trajectories and the log/exp change of variables.
//!
//! All positivity and dimension checks happen in the constructors, so every
//! value of these types is valid for the rest of the crate.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// Largest log-space magnitude the simulator accepts before reporting
/// [`Error::Overflow`].
pub const LOG_LIMIT: f64 = 700.0;

/// Monomial dynamics `x⁺_i = c_i Π_j x_j^{A_ij} Π_k u_k^{B_ik}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLinearModel {
    a: Matrix,
    c: Vector,
    c_hat: Vector,
    b: Option<Matrix>,
}

impl LogLinearModel {
    pub fn new(a: Matrix, c: Vector, b: Option<Matrix>) -> Result<Self> {
        let n = check_shapes(&a, c.dim(), b.as_ref())?;
        for i in 0..n {
            if c[i] <= 0.0 {
                return Err(Error::NonPositiveEntry {
                    value: c[i],
                    location: format!("offset c entry {}", i + 1),
                });
            }
        }
        let c_hat = Vector::from_finite(c.iter().map(|v| v.ln()).collect());
        Ok(LogLinearModel { a, c, c_hat, b })
    }

    /// Builds a model from the log-space offset `ĉ = log c`.
    pub fn from_log_offset(a: Matrix, c_hat: Vector, b: Option<Matrix>) -> Result<Self> {
        check_shapes(&a, c_hat.dim(), b.as_ref())?;
        let mut c = Vec::with_capacity(c_hat.dim());
        for &v in c_hat.iter() {
            let e = v.exp();
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::Overflow {
                    value: v,
                    limit: LOG_LIMIT,
                });
            }
            c.push(e);
        }
        Ok(LogLinearModel {
            a,
            c: Vector::from_finite(c),
            c_hat,
            b,
        })
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Control dimension, zero for an autonomous model.
    pub fn m(&self) -> usize {
        self.b.as_ref().map_or(0, Matrix::cols)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> Option<&Matrix> {
        self.b.as_ref()
    }

    pub fn c(&self) -> &Vector {
        &self.c
    }

    /// `ĉ_i = ln c_i`.
    pub fn log_offset(&self) -> &Vector {
        &self.c_hat
    }

    /// Affine log-space update `A x̂ + B û + ĉ + ẑ` without range checks.
    pub(crate) fn affine_step(
        &self,
        x_hat: &[f64],
        u_hat: Option<&[f64]>,
        z_hat: Option<&[f64]>,
    ) -> Vec<f64> {
        let mut next = self.a.mul_vec(x_hat);
        for (v, c) in next.iter_mut().zip(self.c_hat.iter()) {
            *v += c;
        }
        if let (Some(b), Some(u)) = (&self.b, u_hat) {
            for (v, bu) in next.iter_mut().zip(b.mul_vec(u)) {
                *v += bu;
            }
        }
        if let Some(z) = z_hat {
            for (v, z) in next.iter_mut().zip(z) {
                *v += z;
            }
        }
        next
    }
}

fn check_shapes(a: &Matrix, c_dim: usize, b: Option<&Matrix>) -> Result<usize> {
    let n = a.rows();
    if n == 0 {
        return Err(Error::InvalidValue(
            "state dimension must be at least 1".into(),
        ));
    }
    if !a.is_square() {
        return Err(Error::mismatch("columns of A", n, a.cols()));
    }
    if c_dim != n {
        return Err(Error::mismatch("offset c", n, c_dim));
    }
    if let Some(b) = b {
        if b.rows() != n {
            return Err(Error::mismatch("rows of B", n, b.rows()));
        }
        if b.cols() == 0 {
            return Err(Error::InvalidValue(
                "control matrix B must have at least one column (omit it for m = 0)".into(),
            ));
        }
    }
    Ok(n)
}

fn validate_rows(
    rows: Vec<Vec<f64>>,
    dim: usize,
    what: &str,
    positive: bool,
) -> Result<Vec<Vector>> {
    rows.into_iter()
        .enumerate()
        .map(|(t, row)| {
            if row.len() != dim {
                return Err(Error::mismatch(format!("{what} {}", t + 1), dim, row.len()));
            }
            for (i, &v) in row.iter().enumerate() {
                let location = || format!("{what} {}, component {}", t + 1, i + 1);
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        value: v,
                        location: location(),
                    });
                }
                if positive && v <= 0.0 {
                    return Err(Error::NonPositiveEntry {
                        value: v,
                        location: location(),
                    });
                }
            }
            Ok(Vector::from_finite(row))
        })
        .collect()
}

fn first_dim(rows: &[Vec<f64>], what: &str) -> Result<usize> {
    let n = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidValue(format!("{what} must contain at least one state")))?;
    if n == 0 {
        return Err(Error::InvalidValue(format!(
            "{what} state dimension must be at least 1"
        )));
    }
    Ok(n)
}

fn exp_rows(rows: &[Vector]) -> Result<Vec<Vector>> {
    rows.iter().map(|v| exp_vector(v.as_slice())).collect()
}

/// Elementwise exponential; fails when a result is not a positive finite number.
pub(crate) fn exp_vector(x: &[f64]) -> Result<Vector> {
    x.iter()
        .map(|&v| {
            let e = v.exp();
            if e.is_finite() && e > 0.0 {
                Ok(e)
            } else {
                Err(Error::Overflow {
                    value: v,
                    limit: LOG_LIMIT,
                })
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(Vector::from_finite)
}

/// Elementwise natural log of a vector whose entries are known to be positive.
pub(crate) fn ln_vector(x: &Vector) -> Vec<f64> {
    x.iter().map(|v| v.ln()).collect()
}

/// Checks a primal vector for positivity.
pub(crate) fn positive_vector(x: &[f64], what: &str) -> Result<Vector> {
    let mut rows = validate_rows(vec![x.to_vec()], x.len(), what, true)?;
    Ok(rows.pop().unwrap_or_default())
}

/// Strictly positive states `x_1, …, x_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    n: usize,
    states: Vec<Vector>,
}

impl Trajectory {
    pub fn new(states: Vec<Vec<f64>>) -> Result<Self> {
        let n = first_dim(&states, "trajectory")?;
        let states = validate_rows(states, n, "state", true)?;
        Ok(Trajectory { n, states })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn to_log(&self) -> LogTrajectory {
        LogTrajectory {
            n: self.n,
            states: self
                .states
                .iter()
                .map(|s| Vector::from_finite(ln_vector(s)))
                .collect(),
        }
    }

    pub(crate) fn from_validated(n: usize, states: Vec<Vector>) -> Self {
        Trajectory { n, states }
    }
}

/// Log-space states `x̂_t = ln x_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogTrajectory {
    n: usize,
    states: Vec<Vector>,
}

impl LogTrajectory {
    pub fn new(states: Vec<Vec<f64>>) -> Result<Self> {
        let n = first_dim(&states, "log trajectory")?;
        let states = validate_rows(states, n, "log state", false)?;
        Ok(LogTrajectory { n, states })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn to_primal(&self) -> Result<Trajectory> {
        Ok(Trajectory {
            n: self.n,
            states: exp_rows(&self.states)?,
        })
    }
}

/// Strictly positive control inputs `u_1, …`. May be empty; `m = 0` stands
/// for an autonomous system.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSequence {
    m: usize,
    inputs: Vec<Vector>,
}

impl ControlSequence {
    pub fn new(m: usize, inputs: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = validate_rows(inputs, m, "input", true)?;
        Ok(ControlSequence { m, inputs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vector] {
        &self.inputs
    }

    pub fn to_log(&self) -> LogControlSequence {
        LogControlSequence {
            m: self.m,
            inputs: self
                .inputs
                .iter()
                .map(|u| Vector::from_finite(ln_vector(u)))
                .collect(),
        }
    }
}

/// Log-space control inputs `û_t = ln u_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogControlSequence {
    m: usize,
    inputs: Vec<Vector>,
}

impl LogControlSequence {
    pub fn new(m: usize, inputs: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = validate_rows(inputs, m, "log input", false)?;
        Ok(LogControlSequence { m, inputs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vector] {
        &self.inputs
    }

    pub fn to_primal(&self) -> Result<ControlSequence> {
        Ok(ControlSequence {
            m: self.m,
            inputs: exp_rows(&self.inputs)?,
        })
    }
}

pub fn log_transform(x: &Trajectory) -> LogTrajectory {
    x.to_log()
}

/// Fails with [`Error::Overflow`] if an entry does not exponentiate to a
/// positive finite number.
pub fn exp_transform(x_hat: &LogTrajectory) -> Result<Trajectory> {
    x_hat.to_primal()
}

pub fn log_offset(model: &LogLinearModel) -> &Vector {
    model.log_offset()
}
