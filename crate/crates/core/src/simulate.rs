//! Stepping, rollouts, fixed points and log-normal noise.
//!
//! Every step is taken in log space, `x̂⁺ = A x̂ + B û + ĉ + ẑ`, and
//! exponentiated once. A log-state entry with magnitude above
//! [`LOG_LIMIT`] is reported as [`Error::Overflow`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    exp_vector, ln_vector, positive_vector, ControlSequence, LogLinearModel, Trajectory, LOG_LIMIT,
};
use crate::numerics::{solve_linear, Matrix, Vector};

/// Isotropic log-space Gaussian noise `ẑ_t ~ N(0, σ² I)`.
///
/// Draws come from a ChaCha8 stream (`rand_chacha::ChaCha8Rng`, seeded with
/// `seed_from_u64(seed)`) passed through the ziggurat sampler of
/// `rand_distr::StandardNormal`, one draw per component in step-major order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    sigma: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "noise sigma must be a finite non-negative number, got {sigma}"
            )));
        }
        Ok(NoiseSpec { sigma, seed })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draws `steps` noise vectors of dimension `n`.
pub fn sample_noise(spec: &NoiseSpec, n: usize, steps: usize) -> Vec<Vector> {
    if spec.sigma == 0.0 {
        return vec![Vector::zeros(n); steps];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..steps)
        .map(|_| {
            let z: Vec<f64> = (0..n)
                .map(|_| {
                    let draw: f64 = StandardNormal.sample(&mut rng);
                    spec.sigma * draw
                })
                .collect();
            Vector::from_finite(z)
        })
        .collect()
}

fn check_dim(v: &Vector, expected: usize, context: &str) -> Result<()> {
    if v.dim() != expected {
        return Err(Error::mismatch(context, expected, v.dim()));
    }
    Ok(())
}

fn check_range(x_hat: &[f64]) -> Result<()> {
    match x_hat.iter().find(|v| v.abs() > LOG_LIMIT) {
        Some(&value) => Err(Error::Overflow {
            value,
            limit: LOG_LIMIT,
        }),
        None => Ok(()),
    }
}

/// One log-space update `A x̂ + B û + ĉ + ẑ`.
pub fn step_log(
    model: &LogLinearModel,
    x_hat: &Vector,
    u_hat: Option<&Vector>,
    z_hat: Option<&Vector>,
) -> Result<Vector> {
    check_dim(x_hat, model.n(), "state")?;
    match (model.m(), u_hat) {
        (0, None) => {}
        (0, Some(u)) if u.dim() == 0 => {}
        (0, Some(u)) => {
            return Err(Error::mismatch(
                "control input (model has no B)",
                0,
                u.dim(),
            ))
        }
        (_, None) => return Err(Error::MissingControl),
        (m, Some(u)) => check_dim(u, m, "control input")?,
    }
    if let Some(z) = z_hat {
        check_dim(z, model.n(), "noise")?;
    }
    let next = model.affine_step(
        x_hat.as_slice(),
        u_hat.filter(|u| u.dim() > 0).map(Vector::as_slice),
        z_hat.map(Vector::as_slice),
    );
    check_range(&next)?;
    Ok(Vector::from_finite(next))
}

/// One primal update `x⁺_i = c_i Π_j x_j^{A_ij} Π_k u_k^{B_ik} exp(ẑ_i)`.
pub fn step(
    model: &LogLinearModel,
    x: &Vector,
    u: Option<&Vector>,
    z_hat: Option<&Vector>,
) -> Result<Vector> {
    let x_hat = Vector::from_finite(ln_vector(&positive_vector(x.as_slice(), "state")?));
    let u_hat = u
        .map(|u| {
            positive_vector(u.as_slice(), "control input")
                .map(|u| Vector::from_finite(ln_vector(&u)))
        })
        .transpose()?;
    let next = step_log(model, &x_hat, u_hat.as_ref(), z_hat)?;
    exp_vector(next.as_slice())
}

/// Rolls the model forward from `x1` for a trajectory of `steps` states.
///
/// `controls`, when the model has a control matrix, must hold `steps - 1`
/// inputs. With a [`NoiseSpec`] the noise is drawn by [`sample_noise`], so a
/// fixed seed reproduces the trajectory bit for bit.
pub fn simulate(
    model: &LogLinearModel,
    x1: &Vector,
    controls: Option<&ControlSequence>,
    noise: Option<&NoiseSpec>,
    steps: usize,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidValue(
            "trajectory length must be at least 1".into(),
        ));
    }
    check_dim(x1, model.n(), "initial state")?;
    let x1 = positive_vector(x1.as_slice(), "initial state")?;
    if let Some(u) = controls {
        if u.m() != model.m() {
            return Err(Error::mismatch("control dimension", model.m(), u.m()));
        }
        if u.len() != steps - 1 {
            return Err(Error::mismatch(
                "control sequence length",
                steps - 1,
                u.len(),
            ));
        }
    } else if model.m() > 0 && steps > 1 {
        return Err(Error::MissingControl);
    }
    let noise = noise.map(|spec| sample_noise(spec, model.n(), steps - 1));

    let mut states = Vec::with_capacity(steps);
    states.push(x1);
    for t in 1..steps {
        let u = controls.map(|u| &u.inputs()[t - 1]);
        let z = noise.as_ref().map(|z| &z[t - 1]);
        let next = step(model, &states[t - 1], u, z)?;
        states.push(next);
    }
    Ok(Trajectory::from_validated(model.n(), states))
}

/// Fixed point `x* = exp((I − A)⁻¹ ĉ)` of an autonomous model.
pub fn fixed_point(model: &LogLinearModel) -> Result<Vector> {
    if model.m() > 0 {
        return Err(Error::mismatch(
            "fixed point needs an autonomous model; control dimension",
            0,
            model.m(),
        ));
    }
    let n = model.n();
    let a = model.a();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            data.push(delta - a.get(i, j));
        }
    }
    let i_minus_a = Matrix::new(n, n, data)?;
    let x_hat = solve_linear(&i_minus_a, model.log_offset())?;
    check_range(x_hat.as_slice())?;
    exp_vector(x_hat.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: &[&[f64]], c: &[f64]) -> LogLinearModel {
        LogLinearModel::new(
            Matrix::from_rows(a).unwrap(),
            Vector::from_slice(c).unwrap(),
            None,
        )
        .unwrap()
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_slice(x).unwrap()
    }

    #[test]
    fn zero_dynamics_is_constant() {
        let m = model(&[&[0.0, 0.0], &[0.0, 0.0]], &[3.0, 5.0]);
        let next = step(&m, &v(&[0.7, 123.0]), None, None).unwrap();
        assert!((next[0] - 3.0).abs() < 1e-14 && (next[1] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn identity_dynamics() {
        let m = model(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0]);
        let next = step(&m, &v(&[2.0, 7.0]), None, None).unwrap();
        assert!((next[0] - 2.0).abs() < 1e-14 && (next[1] - 7.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_square_root() {
        let m = model(&[&[0.5]], &[2.0]);
        let next = step(&m, &v(&[16.0]), None, None).unwrap();
        assert!((next[0] - 8.0).abs() < 1e-13);
    }

    #[test]
    fn step_errors() {
        let m = model(&[&[0.5]], &[2.0]);
        assert!(matches!(
            step(&m, &v(&[1.0, 2.0]), None, None),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            step(&m, &v(&[-1.0]), None, None),
            Err(Error::NonPositiveEntry { .. })
        ));
        assert!(matches!(
            step(&m, &v(&[1.0]), Some(&v(&[1.0])), None),
            Err(Error::DimensionMismatch { .. })
        ));

        let controlled = LogLinearModel::new(
            Matrix::from_rows(&[[0.5]]).unwrap(),
            v(&[2.0]),
            Some(Matrix::from_rows(&[[1.0]]).unwrap()),
        )
        .unwrap();
        assert!(matches!(
            step(&controlled, &v(&[1.0]), None, None),
            Err(Error::MissingControl)
        ));

        let exploding = model(&[&[1.0]], &[f64::exp(400.0)]);
        assert!(matches!(
            step(&exploding, &v(&[f64::exp(400.0)]), None, None),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn rollout_lengths() {
        let m = model(&[&[0.0]], &[3.0]);
        let one = simulate(&m, &v(&[9.0]), None, None, 1).unwrap();
        assert_eq!(one.len(), 1);
        let traj = simulate(
            &m,
            &v(&[9.0]),
            None,
            Some(&NoiseSpec::new(0.0, 1).unwrap()),
            4,
        )
        .unwrap();
        assert_eq!(traj.states()[0][0], 9.0);
        assert!(traj.states()[1..]
            .iter()
            .all(|s| (s[0] - 3.0).abs() < 1e-14));
        assert!(simulate(&m, &v(&[9.0]), None, None, 0).is_err());
    }

    #[test]
    fn scalar_rollout() {
        let m = model(&[&[0.5]], &[2.0]);
        let traj = simulate(&m, &v(&[16.0]), None, None, 4).unwrap();
        // 16, 2·16^½, 2·8^½, 2·(2·8^½)^½
        let expected = [16.0, 8.0, 5.656_854_249_492_381, 4.756_828_460_010_884];
        for (s, e) in traj.states().iter().zip(expected) {
            assert!((s[0] - e).abs() < 1e-12, "{} vs {e}", s[0]);
        }
    }

    #[test]
    fn fixed_points() {
        let m = model(&[&[0.0, 0.0], &[0.0, 0.0]], &[3.0, 5.0]);
        let x = fixed_point(&m).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14 && (x[1] - 5.0).abs() < 1e-14);

        let m = model(&[&[0.5]], &[2.0]);
        let x = fixed_point(&m).unwrap();
        assert!((x[0] - 4.0).abs() < 1e-13);

        let m = model(&[&[1.0, 0.0], &[0.0, 1.0]], &[3.0, 5.0]);
        assert!(matches!(fixed_point(&m), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn noise_determinism_and_zero_sigma() {
        let zero = sample_noise(&NoiseSpec::new(0.0, 9).unwrap(), 3, 5);
        assert!(zero.iter().all(|z| z.as_slice() == [0.0; 3]));

        let spec = NoiseSpec::new(0.3, 42).unwrap();
        assert_eq!(sample_noise(&spec, 2, 10), sample_noise(&spec, 2, 10));
        let other = NoiseSpec::new(0.3, 43).unwrap();
        assert_ne!(sample_noise(&spec, 2, 10), sample_noise(&other, 2, 10));
        assert!(NoiseSpec::new(-1.0, 0).is_err());
        assert!(NoiseSpec::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn noise_moments() {
        let spec = NoiseSpec::new(1.0, 2024).unwrap();
        let draws: Vec<f64> = sample_noise(&spec, 1, 100_000)
            .iter()
            .map(|z| z[0])
            .collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert!((0.99..=1.01).contains(&var.sqrt()), "std {}", var.sqrt());
    }
}
