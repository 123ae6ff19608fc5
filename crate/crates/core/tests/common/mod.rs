//! Test-only generators and oracles. Nothing here calls into the solver
//! paths it is used to check.
#![allow(dead_code)]

use llds::{ControlProblem, LogLinearModel, Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(x: &[f64]) -> Vector {
    Vector::from_slice(x).unwrap()
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        }
    }
    out
}

/// Upper estimate of the spectral radius from `‖A^(2^k)‖_F^(1/2^k)` with
/// k = 10, renormalizing each squaring.
pub fn spectral_radius(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut p = a.as_slice().to_vec();
    let mut log_scale = 0.0_f64;
    let mut power = 1.0_f64;
    for _ in 0..10 {
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for x in p.iter_mut() {
            *x /= norm;
        }
        log_scale += norm.ln() / power;
        p = matmul(&p, &p, n);
        power *= 2.0;
    }
    let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    (log_scale + norm.ln() / power).exp()
}

/// A random matrix rescaled so its spectral radius is at most `target`.
pub fn stable_matrix(rng: &mut ChaCha8Rng, n: usize, target: f64) -> Matrix {
    let raw = Matrix::new(
        n,
        n,
        (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let rho = spectral_radius(&raw);
    let scale = if rho > 0.0 { target / rho } else { 1.0 };
    Matrix::new(n, n, raw.as_slice().iter().map(|x| x * scale).collect()).unwrap()
}

pub fn positive_vector(rng: &mut ChaCha8Rng, n: usize, log_span: f64) -> Vector {
    v(&(0..n)
        .map(|_| rng.random_range(-log_span..log_span).exp())
        .collect::<Vec<_>>())
}

/// Random stable autonomous model with spectral radius in [0.3, 0.9].
pub fn stable_model(rng: &mut ChaCha8Rng, n: usize) -> LogLinearModel {
    let target = rng.random_range(0.3..0.9);
    let a = stable_matrix(rng, n, target);
    let c = positive_vector(rng, n, 1.0);
    LogLinearModel::new(a, c, None).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
    .unwrap()
}

/// Random symmetric matrix `M Mᵀ + shift·I`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Matrix {
    let m = random_matrix(rng, n, n);
    let mut data = m.matmul(&m.transpose()).as_slice().to_vec();
    for i in 0..n {
        data[i * n + i] += shift;
    }
    // Exact symmetry.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
            data[i * n + j] = avg;
            data[j * n + i] = avg;
        }
    }
    Matrix::new(n, n, data).unwrap()
}

/// Random unconstrained tracking problem with the given sizes.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize, horizon: usize) -> ControlProblem {
    let target = rng.random_range(0.2..1.1);
    let a = stable_matrix(rng, n, target);
    let b = random_matrix(rng, n, m);
    let c = positive_vector(rng, n, 1.0);
    let model = LogLinearModel::new(a, c, Some(b)).unwrap();
    let x1 = v(&(0..n)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect::<Vec<_>>());
    let refs = (0..horizon)
        .map(|_| {
            v(&(0..n)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect::<Vec<_>>())
        })
        .collect();
    let q = random_spd(rng, n, 0.1);
    let r = random_spd(rng, m, 0.1);
    ControlProblem::new(model, x1, horizon, refs, q, r, None).unwrap()
}

/// Direct evaluation of the tracking objective from the problem data.
pub fn brute_objective(p: &ControlProblem, u: &[f64]) -> f64 {
    let model = p.model();
    let (n, m) = (model.n(), model.m());
    let a = model.a();
    let b = model.b().unwrap();
    let c_hat = model.log_offset();
    let mut x = p.x1_log().as_slice().to_vec();
    let mut total = 0.0;
    for t in 0..p.horizon() {
        let ut = &u[t * m..(t + 1) * m];
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let ax: f64 = (0..n).map(|j| a.get(i, j) * x[j]).sum();
                let bu: f64 = (0..m).map(|k| b.get(i, k) * ut[k]).sum();
                ax + bu + c_hat[i]
            })
            .collect();
        let e: Vec<f64> = (0..n).map(|i| next[i] - p.refs()[t][i]).collect();
        for i in 0..n {
            for j in 0..n {
                total += e[i] * p.q().get(i, j) * e[j];
            }
        }
        for k in 0..m {
            for l in 0..m {
                total += ut[k] * p.r().get(k, l) * ut[l];
            }
        }
        x = next;
    }
    total
}

/// Coarse-to-fine grid search started at the origin, optionally clamped to
/// a box. Returns the best point and value found.
pub fn grid_search(
    p: &ControlProblem,
    lower: Option<&[f64]>,
    upper: Option<&[f64]>,
    span: f64,
    levels: usize,
) -> (Vec<f64>, f64) {
    let dim = p.model().m() * p.horizon();
    let per_axis = 9usize;
    let mut center = vec![0.0; dim];
    let clamp = |u: &mut [f64]| {
        if let (Some(lo), Some(hi)) = (lower, upper) {
            for (k, x) in u.iter_mut().enumerate() {
                *x = x.clamp(lo[k], hi[k]);
            }
        }
    };
    clamp(&mut center);
    let mut best_val = brute_objective(p, &center);
    let mut width = span;
    for _ in 0..levels {
        let spacing = 2.0 * width / (per_axis - 1) as f64;
        let total = per_axis.pow(dim as u32);
        let base = center.clone();
        for idx in 0..total {
            let mut rem = idx;
            let mut u = base.clone();
            for x in u.iter_mut() {
                let k = rem % per_axis;
                rem /= per_axis;
                *x += -width + spacing * k as f64;
            }
            clamp(&mut u);
            let val = brute_objective(p, &u);
            if val < best_val {
                best_val = val;
                center = u;
            }
        }
        width /= 2.0;
    }
    (center, best_val)
}

/// Best objective over `samples` uniform points in the cube `u* ± radius`.
pub fn random_search(
    p: &ControlProblem,
    center: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = rng(seed);
    let mut best = f64::INFINITY;
    let mut u = center.to_vec();
    for _ in 0..samples {
        for (x, c) in u.iter_mut().zip(center) {
            *x = c + rng.random_range(-radius..radius);
        }
        best = best.min(brute_objective(p, &u));
    }
    best
}

/// Central finite-difference gradient.
pub fn fd_gradient(p: &ControlProblem, u: &[f64], h: f64) -> Vec<f64> {
    (0..u.len())
        .map(|k| {
            let mut plus = u.to_vec();
            let mut minus = u.to_vec();
            plus[k] += h;
            minus[k] -= h;
            (brute_objective(p, &plus) - brute_objective(p, &minus)) / (2.0 * h)
        })
        .collect()
}

pub fn stack(u: &[Vector]) -> Vec<f64> {
    u.iter().flat_map(|x| x.iter().copied()).collect()
}

pub fn unstack(u: &[f64], m: usize) -> Vec<Vector> {
    u.chunks(m).map(v).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}
