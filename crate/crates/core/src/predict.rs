//! One-step-ahead and free-run predictions of an autonomous model.

use crate::error::{Error, Result};
use crate::model::{LogLinearModel, Trajectory};
use crate::simulate::{simulate, step};

fn check(model: &LogLinearModel, x: &Trajectory) -> Result<()> {
    if model.m() > 0 {
        return Err(Error::mismatch(
            "prediction needs an autonomous model; control dimension",
            0,
            model.m(),
        ));
    }
    if x.n() != model.n() {
        return Err(Error::mismatch("series dimension", model.n(), x.n()));
    }
    Ok(())
}

/// Applies the model to each measured state: `p_1 = x_1`, `p_{t+1} = step(x_t)`.
pub fn one_step_predict(model: &LogLinearModel, x: &Trajectory) -> Result<Trajectory> {
    check(model, x)?;
    let mut states = Vec::with_capacity(x.len());
    states.push(x.states()[0].clone());
    for prev in &x.states()[..x.len() - 1] {
        states.push(step(model, prev, None, None)?);
    }
    Ok(Trajectory::from_validated(x.n(), states))
}

/// Rolls the model out from the first measured state for the series length.
pub fn free_run(model: &LogLinearModel, x: &Trajectory) -> Result<Trajectory> {
    check(model, x)?;
    simulate(model, &x.states()[0], None, None, x.len())
}

/// Root mean square of `ln(p_t / x_t)` over `t ≥ 2` and all components, the
/// typical relative error of the predictions.
pub fn log_rmse(real: &Trajectory, predicted: &Trajectory) -> Result<f64> {
    if real.len() != predicted.len() || real.n() != predicted.n() {
        return Err(Error::mismatch(
            "prediction length",
            real.len(),
            predicted.len(),
        ));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (r, p) in real.states().iter().zip(predicted.states()).skip(1) {
        for (a, b) in r.iter().zip(p.iter()) {
            sum += (b / a).ln().powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok((sum / count as f64).sqrt())
}
