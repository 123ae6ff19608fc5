mod common;

use common::*;
use llds::io::{ModelFile, SeriesTable};
use llds::{
    exp_transform, fixed_point, least_squares, log_transform, simulate, solve_linear, step,
    ControlSequence, LogLinearModel, Matrix, NoiseSpec, Trajectory, Vector,
};
use proptest::prelude::*;

fn positive_rows(n: usize, len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(1e-6f64..1e6, n), len)
}

fn entries(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn log_exp_round_trip(rows in (1usize..4, 1usize..10).prop_flat_map(|(n, t)| positive_rows(n, t))) {
        let x = Trajectory::new(rows).unwrap();
        let back = exp_transform(&log_transform(&x)).unwrap();
        for (a, b) in back.states().iter().zip(x.states()) {
            for (p, q) in a.iter().zip(b.iter()) {
                prop_assert!(((p - q) / q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn constructors_reject_non_positive(
        mut rows in positive_rows(3, 4),
        t in 0usize..4,
        i in 0usize..3,
        bad in prop_oneof![Just(0.0), -1e6f64..0.0, Just(-0.0)],
    ) {
        rows[t][i] = bad;
        prop_assert!(Trajectory::new(rows.clone()).is_err());
        prop_assert!(ControlSequence::new(3, rows).is_err());
        let mut c = vec![1.0, 2.0, 3.0];
        c[i] = bad;
        prop_assert!(LogLinearModel::new(Matrix::identity(3), Vector::new(c).unwrap(), None).is_err());
    }

    #[test]
    fn solve_linear_residual(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = rng(seed);
        let mut m = random_matrix(&mut rng, n, n).as_slice().to_vec();
        for i in 0..n {
            m[i * n + i] += if m[i * n + i] >= 0.0 { n as f64 } else { -(n as f64) };
        }
        let m = Matrix::new(n, n, m).unwrap();
        let b = Vector::new(random_matrix(&mut rng, n, 1).as_slice().iter().map(|x| x * 100.0).collect()).unwrap();
        let x = solve_linear(&m, &b).unwrap();
        let mx = m.mul_vec(x.as_slice());
        prop_assert!(max_abs_diff(&mx, b.as_slice()) <= 1e-10 * (1.0 + b.norm_inf()));
    }

    #[test]
    fn least_squares_orthogonality(seed in any::<u64>(), p in 4usize..12, q in 1usize..4, r in 1usize..3) {
        let mut rng = rng(seed);
        let d = random_matrix(&mut rng, p, q);
        let y = random_matrix(&mut rng, p, r);
        let w = least_squares(&d, &y).unwrap();
        let resid = d.matmul(&w).as_slice().iter().zip(y.as_slice()).map(|(a, b)| a - b).collect::<Vec<_>>();
        let resid = Matrix::new(p, r, resid).unwrap();
        let normal = d.transpose().matmul(&resid);
        let dty = d.transpose().matmul(&y);
        prop_assert!(normal.max_abs() <= 1e-8 * dty.max_abs().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn least_squares_exact_fit(seed in any::<u64>(), p in 3usize..10, q in 1usize..3) {
        let mut rng = rng(seed);
        let d = random_matrix(&mut rng, p, q);
        let w0 = random_matrix(&mut rng, q, 2);
        let y = d.matmul(&w0);
        let w = least_squares(&d, &y).unwrap();
        let fit = d.matmul(&w);
        let resid: f64 = fit.as_slice().iter().zip(y.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = y.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(resid <= 1e-10 * norm);
    }

    #[test]
    fn step_is_affine_in_log_space(
        seed in any::<u64>(),
        n in 1usize..4,
        m in 0usize..3,
        a in entries(9, -1.5, 1.5),
        b in entries(6, -1.5, 1.5),
        z in entries(3, -0.5, 0.5),
    ) {
        let mut rng = rng(seed);
        let a = Matrix::new(n, n, a[..n * n].to_vec()).unwrap();
        let b = (m > 0).then(|| Matrix::new(n, m, b[..n * m].to_vec()).unwrap());
        let model = LogLinearModel::new(a, positive_vector(&mut rng, n, 2.0), b).unwrap();
        let x = positive_vector(&mut rng, n, 3.0);
        let u = (m > 0).then(|| positive_vector(&mut rng, m, 3.0));
        let z = Vector::from_slice(&z[..n]).unwrap();
        let next = step(&model, &x, u.as_ref(), Some(&z)).unwrap();
        for i in 0..n {
            let mut expected = model.log_offset()[i] + z[i];
            for j in 0..n {
                expected += model.a().get(i, j) * x[j].ln();
            }
            if let (Some(b), Some(u)) = (model.b(), &u) {
                for k in 0..m {
                    expected += b.get(i, k) * u[k].ln();
                }
            }
            prop_assert!(next[i] > 0.0);
            prop_assert!((next[i].ln() - expected).abs() <= 1e-10);
        }
    }

    #[test]
    fn seeded_simulation_is_reproducible(seed in any::<u64>(), sigma in 0.0f64..0.5) {
        let mut rng = rng(seed);
        let model = stable_model(&mut rng, 2);
        let x1 = positive_vector(&mut rng, 2, 1.0);
        let noise = NoiseSpec::new(sigma, seed).unwrap();
        let a = simulate(&model, &x1, None, Some(&noise), 50).unwrap();
        let b = simulate(&model, &x1, None, Some(&noise), 50).unwrap();
        let identical = a
            .states()
            .iter()
            .zip(b.states())
            .all(|(p, q)| p.iter().zip(q.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(identical);
        prop_assert!(a.states().iter().all(|s| s.iter().all(|v| *v > 0.0)));
    }

    #[test]
    fn fixed_point_is_invariant(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = rng(seed);
        let model = stable_model(&mut rng, n);
        let x_star = fixed_point(&model).unwrap();
        let next = step(&model, &x_star, None, None).unwrap();
        for i in 0..n {
            prop_assert!(((next[i] - x_star[i]) / x_star[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn series_csv_round_trip(rows in (1usize..4, 1usize..8).prop_flat_map(|(n, t)| positive_rows(n, t)), t0 in -50i64..50) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let x = Trajectory::new(rows).unwrap();
        llds::io::write_series(&path, &SeriesTable::from_trajectory(t0, None, &x).unwrap()).unwrap();
        let table = llds::io::read_table(&path, true).unwrap();
        prop_assert_eq!(table.t0, t0);
        prop_assert_eq!(table.to_trajectory().unwrap(), x);
    }

    #[test]
    fn model_file_round_trip(seed in any::<u64>(), n in 1usize..4, m in 0usize..3, sigma in prop::option::of(0.0f64..2.0)) {
        let mut rng = rng(seed);
        let b = (m > 0).then(|| random_matrix(&mut rng, n, m));
        let model = LogLinearModel::new(random_matrix(&mut rng, n, n), positive_vector(&mut rng, n, 5.0), b).unwrap();
        let file = ModelFile { model, sigma_hat: sigma };
        prop_assert_eq!(ModelFile::parse(&file.render(), "mem").unwrap(), file);
    }
}
