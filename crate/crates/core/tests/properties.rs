//! Property-based checks of the library invariants.

use dualcal::chain::{predict_b, predict_b_composed, residual, CalibrationState, DualArmSystem, MeasurementSample};
use dualcal::evaluation::{circumscribed_ball, min_enclosing_ball, ClosedLoopError};
use dualcal::formats::{default_system, from_json, to_json, DatasetFile, SampleFile, SystemFile};
use dualcal::kinematics::{forward_kinematics, perturb_model, RobotModel};
use dualcal::liegroup::{exp_se3, left_jacobian, log_se3, joint_jacobian, Pose, Twist};
use dualcal::numerics::{solve_damped_normal, svd3, sym_eig, DenseMatrix, Mat3, SymMatrix, Vec3};
use dualcal::sdp::{lift, sample_operators};
use dualcal::simulation::{config_distance, sample_configurations, ValidityRules};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec3(r: f64) -> BoxedStrategy<Vec3<f64>> {
    if r == 0.0 {
        Just(Vec3::zeros()).boxed()
    } else {
        prop::array::uniform3(-r..r).prop_map(Vec3).boxed()
    }
}

/// Twists with rotation angle strictly below `max_angle`.
fn twist(max_angle: f64, max_trans: f64) -> impl Strategy<Value = Twist<f64>> {
    (vec3(1.0), 0.0..max_angle, vec3(max_trans)).prop_map(|(w, a, r)| {
        let n = w.norm();
        let w = if n > 1e-9 { w.scale(a / n) } else { Vec3::zeros() };
        Twist::new(w, r)
    })
}

fn pose() -> impl Strategy<Value = Pose<f64>> {
    twist(3.0, 1.0).prop_map(|t| exp_se3(&t))
}

fn joints(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.1..3.1f64, n)
}

fn system() -> DualArmSystem<f64> {
    default_system().unwrap()
}

fn rot_dist(a: &Pose<f64>, b: &Pose<f64>) -> f64 {
    (a.inverse() * *b).rotation_angle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvectors_are_orthonormal(n in 1usize..40, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = SymMatrix::from_row_major(n, a).unwrap();
        let e = sym_eig(&s).unwrap();
        let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
        let dev = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (vtv.row(i)[j] - if i == j { 1.0 } else { 0.0 }).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dev < 1e-12, "{dev}");
    }

    #[test]
    fn svd3_factors_are_orthogonal_with_nonnegative_values(m in prop::array::uniform3(prop::array::uniform3(-2.0..2.0f64))) {
        let m = Mat3(m);
        let s = svd3(&m);
        let d = s.u.det() * s.v.det();
        prop_assert!((d.abs() - 1.0).abs() < 1e-12, "{d}");
        prop_assert!(s.sigma.0.iter().all(|&x| x >= 0.0));
        let rec = s.u * Mat3::diag(s.sigma.0[0], s.sigma.0[1], s.sigma.0[2]) * s.v.transpose();
        prop_assert!((rec - m).frobenius() < 1e-10);
    }

    #[test]
    fn damped_solve_is_exact_on_orthogonal_matrices(t in twist(3.0, 0.0), e in prop::array::uniform3(-1.0..1.0f64)) {
        let r = exp_se3(&t).r;
        let j = DenseMatrix::from_fn(3, 3, |i, k| r.0[i][k]);
        let x = solve_damped_normal(&j, &e, 0.0).unwrap();
        let back = j.matvec(&x).unwrap();
        for k in 0..3 {
            prop_assert!((back[k] - e[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn exp_log_roundtrip(xi in twist(std::f64::consts::PI - 0.01, 2.0)) {
        let back = log_se3(&exp_se3(&xi)).unwrap();
        prop_assert!((back.to_vec6() - xi.to_vec6()).max_abs() < 1e-9);
    }

    #[test]
    fn jacobians_match_central_differences(xi in twist(3.0, 1.0), d in twist(1.0, 1.0), q in -3.0..3.0f64) {
        let h = 1e-6;
        let fd = |f: &dyn Fn(&Twist<f64>) -> Pose<f64>, base: &Twist<f64>| {
            let plus = f(&(*base + d.scale(h)));
            let minus = f(&(*base + d.scale(-h)));
            let center = f(base).inverse();
            let lp = log_se3(&(plus * center)).unwrap().to_vec6();
            let lm = log_se3(&(minus * center)).unwrap().to_vec6();
            (lp - lm).scale(0.5 / h)
        };
        let expected = fd(&|t| exp_se3(t), &xi);
        let got = (left_jacobian(&xi) * d).to_vec6();
        prop_assert!((got - expected).max_abs() <= 1e-5 * (1.0 + expected.max_abs()));
        let expected = fd(&|t| exp_se3(&t.scale(q)), &xi);
        let got = (joint_jacobian(&xi, q) * d).to_vec6();
        prop_assert!((got - expected).max_abs() <= 1e-5 * (1.0 + expected.max_abs()));
    }

    #[test]
    fn forward_kinematics_composes_over_sub_chains(q in joints(6), split in 1usize..6) {
        let arm = system().sensor_arm;
        let head = RobotModel::new("head", arm.joint_twists[..split].to_vec(), Twist::zero()).unwrap();
        let tail = RobotModel::new("tail", arm.joint_twists[split..].to_vec(), arm.zero_offset).unwrap();
        let whole = forward_kinematics(&arm, &q).unwrap();
        let parts = forward_kinematics(&head, &q[..split]).unwrap() * forward_kinematics(&tail, &q[split..]).unwrap();
        prop_assert!(rot_dist(&whole, &parts) < 1e-12);
        prop_assert!((whole.t - parts.t).norm() < 1e-12);
    }

    #[test]
    fn small_kinematic_perturbations_move_the_flange_proportionally(
        q in joints(6),
        deltas in prop::collection::vec(twist(1.0, 1.0), 6),
        eps in 1e-6..1e-3f64,
    ) {
        let arm = system().tool_arm;
        let scaled: Vec<Twist<f64>> = deltas.iter().map(|d| {
            let n = d.norm();
            if n > 0.0 { d.scale(eps / n) } else { *d }
        }).collect();
        let p = perturb_model(&arm, &scaled).unwrap();
        let a = forward_kinematics(&arm, &q).unwrap();
        let b = forward_kinematics(&p, &q).unwrap();
        let dev = log_se3(&(a.inverse() * b)).unwrap().norm();
        prop_assert!(dev < 10.0 * eps * 6.0, "{dev} vs {eps}");
    }

    #[test]
    fn predicted_measurement_matches_frame_composition(qa in joints(6), qc in joints(6), x in pose(), y in pose(), z in pose()) {
        let base = system();
        let sys = DualArmSystem::new(base.sensor_arm, base.tool_arm, x, y, z).unwrap();
        let sample = MeasurementSample::new(qa, qc, Pose::identity());
        let st = CalibrationState::from_system(&sys).unwrap();
        let a = predict_b(&st, &sample).unwrap();
        let b = predict_b_composed(&sys, &sample).unwrap();
        prop_assert!(rot_dist(&a, &b) < 1e-12);
        prop_assert!((a.t - b.t).norm() < 1e-12);
    }

    #[test]
    fn noise_free_residual_vanishes(qa in joints(6), qc in joints(6), x in pose(), y in pose(), z in pose()) {
        let base = system();
        let sys = DualArmSystem::new(base.sensor_arm, base.tool_arm, x, y, z).unwrap();
        let mut sample = MeasurementSample::new(qa, qc, Pose::identity());
        sample.b = predict_b_composed(&sys, &sample).unwrap();
        let st = CalibrationState::from_system(&sys).unwrap();
        prop_assert!(residual(&st, &sample).unwrap().norm() < 1e-11);
    }

    #[test]
    fn lifted_operators_reproduce_chain_residuals(a in pose(), b in pose(), c in pose(), x in pose(), y in pose(), z in pose()) {
        let w = lift(&x, &y, &z);
        let ops = sample_operators(&a, &b, &c);
        let f = a.r * x.r * b.r - y.r * c.r * z.r;
        let g = a.r * x.r * b.t + a.r * x.t + a.t - y.r * c.r * z.t - y.r * c.t - y.t;
        let dot = |row: &[f64]| row.iter().zip(&w).map(|(p, q)| p * q).sum::<f64>();
        for (k, row) in ops.omega_f.iter().enumerate() {
            // Column-major vectorization.
            prop_assert!((dot(row) - f.0[k % 3][k / 3]).abs() < 1e-10);
        }
        for (i, row) in ops.omega_g.iter().enumerate() {
            prop_assert!((dot(row) - g.0[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_configurations_obey_the_validity_rules(m in 1usize..60, seed in any::<u64>()) {
        let rules = ValidityRules::default();
        let c = sample_configurations(m, 6, &mut ChaCha8Rng::seed_from_u64(seed), &rules).unwrap();
        prop_assert_eq!(c.len(), m);
        prop_assert!(c.iter().all(|(qa, qc)| rules.joints_ok(qa) && rules.joints_ok(qc)));
        prop_assert!(c.windows(2).all(|w| config_distance(&w[0], &w[1]) >= rules.d_min));
    }

    #[test]
    fn rotation_error_is_invariant_under_conjugation(e in pose(), q in pose()) {
        let a = ClosedLoopError::from_pose(e).e_r;
        let b = ClosedLoopError::from_pose(Pose::new(q.r * e.r * q.r.transpose(), e.t)).e_r;
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn minimum_enclosing_ball_is_enclosing_and_optimal(pts in prop::collection::vec(vec3(1.0), 1..9)) {
        let ball = min_enclosing_ball(&pts).unwrap();
        prop_assert!(pts.iter().all(|&p| (p - ball.center).norm() <= ball.radius * (1.0 + 1e-12)));
        // No circumscribed ball of a support subset (size ≤ 4) that encloses
        // every point is smaller.
        let n = pts.len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) {
            if mask.count_ones() > 4 { continue; }
            let sub: Vec<_> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pts[i]).collect();
            if let Some(b) = circumscribed_ball(&sub) {
                if pts.iter().all(|&p| (p - b.center).norm() <= b.radius * (1.0 + 1e-12) + 1e-15) {
                    best = best.min(b.radius);
                }
            }
        }
        prop_assert!((ball.radius - best).abs() <= 1e-12 * (1.0 + best), "{} vs {best}", ball.radius);
    }

    #[test]
    fn dataset_files_roundtrip(seed in any::<u64>(), m in 1usize..10) {
        let sys = system();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let configs = sample_configurations(m, 6, &mut rng, &ValidityRules::default()).unwrap();
        let samples: Vec<SampleFile> = configs.into_iter().map(|(qa, qc)| {
            let mut s = MeasurementSample::new(qa, qc, Pose::identity());
            s.b = predict_b_composed(&sys, &s).unwrap();
            SampleFile::from_sample(&s)
        }).collect();
        let file = DatasetFile {
            nominal_system: SystemFile::from_system(&sys),
            gt_system: Some(SystemFile::from_system(&sys)),
            samples,
            seed,
            kin_level: "M".into(),
            noise_level: "none".into(),
        };
        let back: DatasetFile = from_json(&to_json(&file), "roundtrip").unwrap();
        prop_assert_eq!(back, file);
    }
}
