//! Least-squares identification of log-linear dynamics.
//!
//! Each log-state row `x̂_{t+1}` is regressed on `[x̂_t, û_t, 1]`; all state
//! components share one design matrix and are solved as a single
//! multi-right-hand-side problem.

use crate::error::{Error, Result};
use crate::model::{ControlSequence, LogLinearModel, Trajectory};
use crate::numerics::{least_squares, Matrix, Vector};

/// Fitted model together with its log-space one-step residuals.
#[derive(Clone, Debug)]
pub struct SysIdResult {
    pub model: LogLinearModel,
    /// `r̂_t = x̂_{t+1} − A x̂_t − B û_t − ĉ` for `t = 1..T−1`.
    pub residuals: Vec<Vector>,
    /// Degrees-of-freedom corrected per-component noise scale.
    pub sigma_hat: f64,
    /// Attained sum of squared residuals.
    pub sse: f64,
}

/// Fits `A` and `ĉ` from an autonomous trajectory.
pub fn identify(x: &Trajectory) -> Result<SysIdResult> {
    fit(x, None)
}

/// Fits `A`, `B` and `ĉ` from states and the `T − 1` inputs that drove them.
/// An input sequence with `m = 0` reduces to [`identify`].
pub fn identify_controlled(x: &Trajectory, u: &ControlSequence) -> Result<SysIdResult> {
    if u.len() != x.len().saturating_sub(1) {
        return Err(Error::mismatch(
            "input sequence length",
            x.len().saturating_sub(1),
            u.len(),
        ));
    }
    fit(x, Some(u))
}

fn fit(x: &Trajectory, u: Option<&ControlSequence>) -> Result<SysIdResult> {
    let u = u.filter(|u| u.m() > 0);
    let n = x.n();
    let m = u.map_or(0, ControlSequence::m);
    let params = n + m + 1;
    let rows = x.len().saturating_sub(1);
    if rows <= params {
        return Err(Error::TooShort {
            len: x.len(),
            min: params + 2,
        });
    }

    let x_hat = x.to_log();
    let u_hat = u.map(ControlSequence::to_log);
    let mut design = Vec::with_capacity(rows * params);
    let mut target = Vec::with_capacity(rows * n);
    for t in 0..rows {
        design.extend_from_slice(x_hat.states()[t].as_slice());
        if let Some(u_hat) = &u_hat {
            design.extend_from_slice(u_hat.inputs()[t].as_slice());
        }
        design.push(1.0);
        target.extend_from_slice(x_hat.states()[t + 1].as_slice());
    }
    let design = Matrix::new(rows, params, design)?;
    let target = Matrix::new(rows, n, target)?;
    let w = least_squares(&design, &target)?;

    // W is params × n with rows [Aᵀ; Bᵀ; ĉᵀ].
    let mut a = Matrix::zeros(n, n);
    let mut b = (m > 0).then(|| Matrix::zeros(n, m));
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, w.get(j, i));
        }
        if let Some(b) = b.as_mut() {
            for k in 0..m {
                b.set(i, k, w.get(n + k, i));
            }
        }
    }
    let c_hat = Vector::from_finite((0..n).map(|i| w.get(n + m, i)).collect());
    let model = LogLinearModel::from_log_offset(a, c_hat, b)?;

    let residuals: Vec<Vector> = (0..rows)
        .map(|t| {
            let pred = model.affine_step(
                x_hat.states()[t].as_slice(),
                u_hat.as_ref().map(|u| u.inputs()[t].as_slice()),
                None,
            );
            let r = x_hat.states()[t + 1]
                .iter()
                .zip(pred)
                .map(|(obs, p)| obs - p)
                .collect();
            Vector::from_finite(r)
        })
        .collect();
    let sse = residuals.iter().map(Vector::norm_sq).sum();
    let sigma_hat = estimate_sigma(&residuals, n, params)?;
    Ok(SysIdResult {
        model,
        residuals,
        sigma_hat,
        sse,
    })
}

/// `σ̂ = sqrt(Σ_t ‖r̂_t‖² / (n (N − p)))` for `N` residuals of dimension `n`
/// and `p` fitted parameters per state row.
pub fn estimate_sigma(residuals: &[Vector], n: usize, params_per_row: usize) -> Result<f64> {
    let count = residuals.len();
    if count == 0 || n == 0 || count <= params_per_row {
        return Err(Error::InsufficientData {
            residuals: count,
            params: params_per_row,
        });
    }
    if let Some(r) = residuals.iter().find(|r| r.dim() != n) {
        return Err(Error::mismatch("residual", n, r.dim()));
    }
    let sse: f64 = residuals.iter().map(Vector::norm_sq).sum();
    Ok((sse / (n * (count - params_per_row)) as f64).sqrt())
}
