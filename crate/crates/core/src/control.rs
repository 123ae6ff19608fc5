//! Finite-horizon quadratic tracking control over the log-space dynamics.
//!
//! The problem is
//!
//! ```text
//! minimize   Σ_{t=1}^{T} (x̂_{t+1} − r_{t+1})ᵀ Q (x̂_{t+1} − r_{t+1}) + û_tᵀ R û_t
//! subject to x̂_{t+1} = A x̂_t + B û_t + ĉ
//!            lower_t ≤ û_t ≤ upper_t            (optional)
//! ```
//!
//! Without bounds the states are eliminated through the dynamics, leaving a
//! strictly convex quadratic in the stacked inputs that is solved directly.
//! With bounds the same reduced objective is minimized by projected gradient
//! with Armijo backtracking, warm-started from the clipped unconstrained
//! minimizer.

use crate::error::{Error, Result};
use crate::model::{exp_vector, ControlSequence, LogLinearModel, Trajectory};
use crate::numerics::{cholesky, dot, norm_inf, solve_linear, Matrix, Vector};

/// Symmetry tolerance for the weight matrices, relative to `max(1, max |W_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// `Q` must satisfy `xᵀQx ≥ −WEIGHT_TOL` and `R` must satisfy
/// `xᵀRx ≥ WEIGHT_TOL` for every unit vector `x`.
pub const WEIGHT_TOL: f64 = 1e-10;
/// Projected-gradient stationarity tolerance for bounded problems.
pub const STATIONARITY_TOL: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 100_000;

const ARMIJO_SLOPE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Element-wise bounds on the log-inputs, one pair per step.
#[derive(Clone, Debug, PartialEq)]
pub struct InputBounds {
    lower: Vec<Vector>,
    upper: Vec<Vector>,
}

impl InputBounds {
    pub fn new(lower: Vec<Vector>, upper: Vec<Vector>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::mismatch("bound steps", lower.len(), upper.len()));
        }
        for (step, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.dim() != hi.dim() {
                return Err(Error::mismatch("bound dimension", lo.dim(), hi.dim()));
            }
            for (component, (&l, &h)) in lo.iter().zip(hi.iter()).enumerate() {
                if l >= h {
                    return Err(Error::InfeasibleBounds {
                        step: step + 1,
                        component: component + 1,
                        lower: l,
                        upper: h,
                    });
                }
            }
        }
        Ok(InputBounds { lower, upper })
    }

    /// The same bounds at every step of the horizon.
    pub fn uniform(lower: Vector, upper: Vector, horizon: usize) -> Result<Self> {
        Self::new(vec![lower; horizon], vec![upper; horizon])
    }

    pub fn lower(&self) -> &[Vector] {
        &self.lower
    }

    pub fn upper(&self) -> &[Vector] {
        &self.upper
    }

    fn project(&self, u: &mut [f64], m: usize) {
        for (t, chunk) in u.chunks_mut(m).enumerate() {
            for (k, v) in chunk.iter_mut().enumerate() {
                *v = v.clamp(self.lower[t][k], self.upper[t][k]);
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ControlProblem {
    model: LogLinearModel,
    x1_log: Vector,
    refs: Vec<Vector>,
    q: Matrix,
    r: Matrix,
    bounds: Option<InputBounds>,
}

impl ControlProblem {
    /// `refs` holds the log-space targets for `x̂_2, …, x̂_{T+1}`.
    pub fn new(
        model: LogLinearModel,
        x1_log: Vector,
        horizon: usize,
        refs: Vec<Vector>,
        q: Matrix,
        r: Matrix,
        bounds: Option<InputBounds>,
    ) -> Result<Self> {
        let (n, m) = (model.n(), model.m());
        if m == 0 {
            return Err(Error::mismatch(
                "control problem needs a control matrix; columns of B",
                1,
                0,
            ));
        }
        if horizon == 0 {
            return Err(Error::InvalidValue(
                "control horizon must be at least 1".into(),
            ));
        }
        if x1_log.dim() != n {
            return Err(Error::mismatch("initial log-state", n, x1_log.dim()));
        }
        if refs.len() != horizon {
            return Err(Error::mismatch(
                "reference trajectory length",
                horizon,
                refs.len(),
            ));
        }
        if let Some(r) = refs.iter().find(|r| r.dim() != n) {
            return Err(Error::mismatch("reference state", n, r.dim()));
        }
        check_weight(&q, n, "state weight Q", -WEIGHT_TOL)?;
        check_weight(&r, m, "input weight R", WEIGHT_TOL)?;
        if let Some(b) = &bounds {
            if b.lower.len() != horizon {
                return Err(Error::mismatch("bound steps", horizon, b.lower.len()));
            }
            if let Some(lo) = b.lower.iter().find(|lo| lo.dim() != m) {
                return Err(Error::mismatch("bound dimension", m, lo.dim()));
            }
        }
        Ok(ControlProblem {
            model,
            x1_log,
            refs,
            q,
            r,
            bounds,
        })
    }

    pub fn model(&self) -> &LogLinearModel {
        &self.model
    }

    pub fn x1_log(&self) -> &Vector {
        &self.x1_log
    }

    pub fn horizon(&self) -> usize {
        self.refs.len()
    }

    pub fn refs(&self) -> &[Vector] {
        &self.refs
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn bounds(&self) -> Option<&InputBounds> {
        self.bounds.as_ref()
    }

    /// Same problem with the bounds removed.
    pub fn without_bounds(&self) -> ControlProblem {
        ControlProblem {
            bounds: None,
            ..self.clone()
        }
    }

    fn stacked(&self, u: &[Vector]) -> Result<Vec<f64>> {
        let m = self.model.m();
        if u.len() != self.horizon() {
            return Err(Error::mismatch(
                "input sequence length",
                self.horizon(),
                u.len(),
            ));
        }
        if let Some(bad) = u.iter().find(|v| v.dim() != m) {
            return Err(Error::mismatch("input dimension", m, bad.dim()));
        }
        Ok(u.iter().flat_map(|v| v.iter().copied()).collect())
    }

    /// Log-states `x̂_2..x̂_{T+1}` under stacked inputs.
    fn rollout(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let m = self.model.m();
        let mut x = self.x1_log.as_slice().to_vec();
        u.chunks(m)
            .map(|ut| {
                x = self.model.affine_step(&x, Some(ut), None);
                x.clone()
            })
            .collect()
    }

    fn objective_stacked(&self, u: &[f64]) -> f64 {
        let m = self.model.m();
        self.rollout(u)
            .iter()
            .zip(&self.refs)
            .zip(u.chunks(m))
            .map(|((x, r), ut)| {
                let e: Vec<f64> = x.iter().zip(r.iter()).map(|(a, b)| a - b).collect();
                self.q.quad_form(&e) + self.r.quad_form(ut)
            })
            .sum()
    }

    /// Gradient of the reduced objective by a backward (adjoint) sweep.
    fn gradient_stacked(&self, u: &[f64]) -> Vec<f64> {
        let (n, m) = (self.model.n(), self.model.m());
        let a_t = self.model.a().transpose();
        let b_t = self.model.b().expect("control problem has B").transpose();
        let states = self.rollout(u);
        let mut grad = vec![0.0; u.len()];
        let mut costate = vec![0.0; n];
        for t in (0..self.horizon()).rev() {
            let e: Vec<f64> = states[t]
                .iter()
                .zip(self.refs[t].iter())
                .map(|(a, b)| a - b)
                .collect();
            let qe = self.q.mul_vec(&e);
            let propagated = a_t.mul_vec(&costate);
            for i in 0..n {
                costate[i] = qe[i] + propagated[i];
            }
            let ru = self.r.mul_vec(&u[t * m..(t + 1) * m]);
            let bl = b_t.mul_vec(&costate);
            for k in 0..m {
                grad[t * m + k] = 2.0 * (ru[k] + bl[k]);
            }
        }
        grad
    }
}

fn check_weight(w: &Matrix, dim: usize, name: &str, min_eig: f64) -> Result<()> {
    if w.rows() != dim || w.cols() != dim {
        return Err(Error::mismatch(
            format!("{name} size"),
            dim,
            if w.rows() != dim { w.rows() } else { w.cols() },
        ));
    }
    let tol = SYMMETRY_TOL * w.max_abs().max(1.0);
    for i in 0..dim {
        for j in 0..i {
            if (w.get(i, j) - w.get(j, i)).abs() > tol {
                return Err(Error::InvalidWeight(format!(
                    "{name} is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    // W − min_eig·I is positive definite iff every unit quadratic form of W exceeds min_eig.
    let mut shifted = w.clone();
    for i in 0..dim {
        shifted.set(i, i, w.get(i, i) - min_eig);
    }
    if cholesky(&shifted).is_none() {
        let what = if min_eig > 0.0 {
            "positive definite"
        } else {
            "positive semidefinite"
        };
        return Err(Error::InvalidWeight(format!("{name} is not {what}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ControlSolution {
    /// `û_1..û_T`.
    pub log_inputs: Vec<Vector>,
    /// Predicted `x̂_2..x̂_{T+1}`.
    pub log_states: Vec<Vector>,
    /// `u_t = exp(û_t)`.
    pub primal_inputs: ControlSequence,
    pub objective: f64,
    /// Infinity norm of the reduced gradient (unconstrained) or of the
    /// projected-gradient step `û − Π(û − ∇)` (bounded).
    pub kkt_residual: f64,
    /// Projected-gradient iterations; zero for the direct solve.
    pub iterations: usize,
}

/// Condensed form `J(U) = UᵀHU + 2 gᵀU + const` of the reduced objective.
struct Condensed {
    hessian_half: Matrix,
    linear: Vec<f64>,
}

impl Condensed {
    fn build(p: &ControlProblem) -> Result<Self> {
        let model = &p.model;
        let (n, m, horizon) = (model.n(), model.m(), p.horizon());
        let a = model.a();
        let b = model.b().expect("control problem has B");

        // Impulse blocks A^k B, k = 0..T-1.
        let mut impulse = Vec::with_capacity(horizon);
        impulse.push(b.clone());
        for k in 1..horizon {
            let next = a.matmul(&impulse[k - 1]);
            impulse.push(next);
        }
        // G is (nT × mT) block lower triangular with block (t, s) = A^{t-s} B.
        let (rows, cols) = (n * horizon, m * horizon);
        let mut g = Matrix::zeros(rows, cols);
        for t in 0..horizon {
            for s in 0..=t {
                let blk = &impulse[t - s];
                for i in 0..n {
                    for k in 0..m {
                        g.set(t * n + i, s * m + k, blk.get(i, k));
                    }
                }
            }
        }
        // Free response minus reference.
        let free = p.rollout(&vec![0.0; cols]);
        let mut offset = Vec::with_capacity(rows);
        for (x, r) in free.iter().zip(&p.refs) {
            offset.extend(x.iter().zip(r.iter()).map(|(a, b)| a - b));
        }

        // Q̄ G and Q̄ e applied block by block.
        let mut qg = Matrix::zeros(rows, cols);
        let mut qe = vec![0.0; rows];
        for t in 0..horizon {
            for i in 0..n {
                for j in 0..n {
                    let q = p.q.get(i, j);
                    if q == 0.0 {
                        continue;
                    }
                    for c in 0..cols {
                        let v = qg.get(t * n + i, c) + q * g.get(t * n + j, c);
                        qg.set(t * n + i, c, v);
                    }
                    qe[t * n + i] += q * offset[t * n + j];
                }
            }
        }
        let gt = g.transpose();
        let mut hessian_half = gt.matmul(&qg);
        for t in 0..horizon {
            for k in 0..m {
                for l in 0..m {
                    let v = hessian_half.get(t * m + k, t * m + l) + p.r.get(k, l);
                    hessian_half.set(t * m + k, t * m + l, v);
                }
            }
        }
        let linear = gt.mul_vec(&qe);
        Ok(Condensed {
            hessian_half,
            linear,
        })
    }

    fn minimizer(&self) -> Result<Vec<f64>> {
        let rhs = Vector::new(self.linear.iter().map(|v| -v).collect())?;
        Ok(solve_linear(&self.hessian_half, &rhs)?.into_inner())
    }
}

/// Solves the tracking problem; see the module docs for the method.
pub fn solve_control(p: &ControlProblem) -> Result<ControlSolution> {
    let condensed = Condensed::build(p)?;
    let mut u = condensed.minimizer()?;
    let m = p.model.m();

    let (kkt_residual, iterations) = match &p.bounds {
        None => (norm_inf(&p.gradient_stacked(&u)), 0),
        Some(bounds) => {
            bounds.project(&mut u, m);
            projected_gradient(p, bounds, &mut u)?
        }
    };

    let log_inputs: Vec<Vector> = u
        .chunks(m)
        .map(|c| Vector::from_finite(c.to_vec()))
        .collect();
    let log_states = p
        .rollout(&u)
        .into_iter()
        .map(Vector::new)
        .collect::<Result<Vec<_>>>()?;
    let primal = log_inputs
        .iter()
        .map(|v| exp_vector(v.as_slice()).map(Vector::into_inner))
        .collect::<Result<Vec<_>>>()?;
    Ok(ControlSolution {
        objective: p.objective_stacked(&u),
        log_inputs,
        log_states,
        primal_inputs: ControlSequence::new(m, primal)?,
        kkt_residual,
        iterations,
    })
}

fn stationarity(p: &ControlProblem, bounds: &InputBounds, u: &[f64], grad: &[f64]) -> f64 {
    let mut trial: Vec<f64> = u.iter().zip(grad).map(|(x, g)| x - g).collect();
    bounds.project(&mut trial, p.model.m());
    u.iter()
        .zip(&trial)
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
}

fn projected_gradient(
    p: &ControlProblem,
    bounds: &InputBounds,
    u: &mut Vec<f64>,
) -> Result<(f64, usize)> {
    let m = p.model.m();
    let mut value = p.objective_stacked(u);
    let mut alpha = 1.0;
    for iteration in 0..MAX_ITERATIONS {
        let grad = p.gradient_stacked(u);
        let residual = stationarity(p, bounds, u, &grad);
        if residual <= STATIONARITY_TOL {
            return Ok((residual, iteration));
        }
        alpha *= 2.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial: Vec<f64> = u.iter().zip(&grad).map(|(x, g)| x - alpha * g).collect();
            bounds.project(&mut trial, m);
            let step: Vec<f64> = trial.iter().zip(u.iter()).map(|(a, b)| a - b).collect();
            let trial_value = p.objective_stacked(&trial);
            if trial_value <= value + ARMIJO_SLOPE * dot(&grad, &step) {
                *u = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Round-off floor: the objective can no longer resolve a decrease.
            return Err(Error::IterationLimit {
                iterations: iteration,
                residual,
            });
        }
    }
    let residual = stationarity(p, bounds, u, &p.gradient_stacked(u));
    if residual <= STATIONARITY_TOL {
        return Ok((residual, MAX_ITERATIONS));
    }
    Err(Error::IterationLimit {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// Rolls the dynamics forward from `x̂₁` under `u` and sums the stage costs.
pub fn objective_value(p: &ControlProblem, u: &[Vector]) -> Result<f64> {
    Ok(p.objective_stacked(&p.stacked(u)?))
}

/// Gradient of the reduced objective with respect to the stacked log-inputs.
pub fn reduced_gradient(p: &ControlProblem, u: &[Vector]) -> Result<Vec<f64>> {
    Ok(p.gradient_stacked(&p.stacked(u)?))
}

/// `x₁` followed by the exponentiated predicted log-states of `solution`.
pub fn rollout_controlled(
    model: &LogLinearModel,
    x1: &Vector,
    solution: &ControlSolution,
) -> Result<Trajectory> {
    let (n, m) = (model.n(), model.m());
    if x1.dim() != n {
        return Err(Error::mismatch("initial state", n, x1.dim()));
    }
    if solution.primal_inputs.m() != m {
        return Err(Error::mismatch(
            "solution control dimension",
            m,
            solution.primal_inputs.m(),
        ));
    }
    if let Some(x) = solution.log_states.iter().find(|x| x.dim() != n) {
        return Err(Error::mismatch("solution state dimension", n, x.dim()));
    }
    let mut states = Vec::with_capacity(solution.log_states.len() + 1);
    states.push(x1.as_slice().to_vec());
    for x in &solution.log_states {
        states.push(exp_vector(x.as_slice())?.into_inner());
    }
    Trajectory::new(states)
}
