//! Damped Gauss–Newton refinement of the full calibration state.
//!
//! Each iteration linearizes the stacked residual `e(ξ)` and solves
//! `(JᵀJ + λI) d = Jᵀe`. Since `e(ξ − d) ≈ e − J d`, the applied increment is
//! `δξ = −d`, and the state is updated either additively (`ξ ← ξ + δξ`) or
//! multiplicatively on the group.

use crate::chain::{stack, stack_residuals, CalibrationState, MeasurementSample};
use crate::error::{Error, Result};
use crate::liegroup::{exp_se3, left_jacobian, log_se3, Twist};
use crate::numerics::solve_damped_normal;
use crate::scalar::Real;

/// How an increment is applied to each twist block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// `ξ ← ξ + δξ`, consistent with the additive derivation of the Jacobian.
    #[default]
    Additive,
    /// `exp(ξ̂_new) = exp(ξ̂)·exp((𝒥(−ξ)δξ)^)`. The right-Jacobian transport
    /// makes this agree with the additive update to second order.
    Multiplicative,
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Damping λ ≥ 0 added to the normal equations.
    pub damping: T,
    /// Stop once `‖δξ‖_∞ ≤ tol_inf`.
    pub tol_inf: T,
    /// Iteration cap.
    pub max_iters: usize,
    pub update_mode: UpdateMode,
    /// Levenberg–Marquardt style scheduling: a step that increases `‖e‖` is
    /// rejected and λ multiplied by 10; an accepted step divides λ by 10.
    /// Off by default (fixed λ, no step rejection).
    pub adaptive_damping: bool,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            damping: T::lit(1e-3),
            tol_inf: T::lit(1e-3),
            max_iters: 100,
            update_mode: UpdateMode::Additive,
            adaptive_damping: false,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    /// Checks `λ ≥ 0`, `tol_inf > 0` and `max_iters ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.damping >= T::zero()) || !self.damping.is_finite() {
            return Err(Error::Invalid(format!("damping must be a finite value ≥ 0, got {}", self.damping)));
        }
        if !(self.tol_inf > T::zero()) {
            return Err(Error::Invalid(format!("tol_inf must be > 0, got {}", self.tol_inf)));
        }
        if self.max_iters == 0 {
            return Err(Error::Invalid("max_iters must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry<T> {
    /// `‖e‖` at the state the step was linearized at.
    pub residual_norm: T,
    /// `‖δξ‖_∞` of the computed increment.
    pub step_inf: T,
    /// λ used for this step.
    pub damping: T,
}

/// History of a [`solve`] run; `entries.len() == iterations`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace<T> {
    pub entries: Vec<TraceEntry<T>>,
    pub converged: bool,
    pub iterations: usize,
    /// `‖e‖` at the initial state.
    pub initial_residual_norm: T,
    /// `‖e‖` at the returned state.
    pub final_residual_norm: T,
}

/// Result of one Gauss–Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    /// Updated state.
    pub state: CalibrationState<T>,
    /// Applied increment `δξ` in parameter order.
    pub delta: Vec<T>,
    /// Stacked residual at the input state.
    pub residual: Vec<T>,
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Applies an increment to a state under the given update mode.
pub fn apply_increment<T: Real>(state: &CalibrationState<T>, delta: &[T], mode: UpdateMode) -> Result<CalibrationState<T>> {
    if delta.len() != state.dim() {
        return Err(Error::Dimension {
            context: "increment length",
            expected: state.dim(),
            actual: delta.len(),
        });
    }
    let mut next = state.clone();
    for k in 0..state.num_blocks() {
        let d = Twist::from_array(std::array::from_fn(|i| delta[6 * k + i]));
        if d == Twist::zero() {
            continue;
        }
        let xi = *state.block(k);
        *next.block_mut(k) = match mode {
            UpdateMode::Additive => xi + d,
            UpdateMode::Multiplicative => log_se3(&(exp_se3(&xi) * exp_se3(&(left_jacobian(&-xi) * d))))?,
        };
    }
    Ok(next)
}

/// One damped Gauss–Newton step.
pub fn step<T: Real>(state: &CalibrationState<T>, samples: &[MeasurementSample<T>], config: &SolverConfig<T>) -> Result<StepOutcome<T>> {
    config.validate()?;
    step_with_damping(state, samples, config.damping, config.update_mode)
}

fn step_with_damping<T: Real>(state: &CalibrationState<T>, samples: &[MeasurementSample<T>], damping: T, mode: UpdateMode) -> Result<StepOutcome<T>> {
    let (e, j) = stack(state, samples)?;
    let d = solve_damped_normal(&j, &e, damping)?;
    let delta: Vec<T> = d.into_iter().map(|x| -x).collect();
    let next = apply_increment(state, &delta, mode)?;
    Ok(StepOutcome { state: next, delta, residual: e })
}

/// Iterates [`step`] until `‖δξ‖_∞ ≤ tol_inf` or `max_iters` is reached.
/// Step failures are reported as [`Error::Step`] with the 1-based iteration.
pub fn solve<T: Real>(initial: &CalibrationState<T>, samples: &[MeasurementSample<T>], config: &SolverConfig<T>) -> Result<(CalibrationState<T>, SolveTrace<T>)> {
    config.validate()?;
    if !initial.is_finite() {
        return Err(Error::Invalid("initial state must be finite".into()));
    }
    let wrap = |iteration: usize| move |e: Error| Error::Step { iteration, source: Box::new(e) };
    let mut state = initial.clone();
    let mut damping = config.damping;
    let mut entries = Vec::new();
    let mut converged = false;
    let mut initial_norm = T::zero();
    for it in 1..=config.max_iters {
        let out = step_with_damping(&state, samples, damping, config.update_mode).map_err(wrap(it))?;
        let e_norm = norm(&out.residual);
        if it == 1 {
            initial_norm = e_norm;
        }
        let step_inf = inf_norm(&out.delta);
        entries.push(TraceEntry {
            residual_norm: e_norm,
            step_inf,
            damping,
        });
        log::debug!("iteration {it}: |e| = {e_norm:e}, |dxi|_inf = {step_inf:e}, lambda = {damping:e}");
        if config.adaptive_damping {
            let trial = stack_residuals(&out.state, samples).map(|r| norm(&r));
            match trial {
                Ok(n) if n <= e_norm => {
                    state = out.state;
                    damping /= T::lit(10.0);
                }
                _ => {
                    damping = (damping * T::lit(10.0)).max(T::lit(1e-12));
                    continue;
                }
            }
        } else {
            state = out.state;
        }
        if step_inf <= config.tol_inf {
            converged = true;
            break;
        }
    }
    let final_norm = norm(&stack_residuals(&state, samples).map_err(wrap(entries.len() + 1))?);
    let iterations = entries.len();
    log::info!("solver finished: converged = {converged}, iterations = {iterations}, |e| {initial_norm:e} -> {final_norm:e}");
    Ok((
        state,
        SolveTrace {
            entries,
            converged,
            iterations,
            initial_residual_norm: initial_norm,
            final_residual_norm: final_norm,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{predict_b_composed, DualArmSystem};
    use crate::kinematics::perturb_model;
    use crate::liegroup::Pose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system() -> DualArmSystem<f64> {
        crate::formats::default_system().unwrap()
    }

    fn samples(sys: &DualArmSystem<f64>, m: usize, seed: u64) -> Vec<MeasurementSample<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| {
                let q = |rng: &mut ChaCha8Rng| (0..6).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<f64>>();
                let mut s = MeasurementSample::new(q(&mut rng), q(&mut rng), Pose::identity());
                s.b = predict_b_composed(sys, &s).unwrap();
                s
            })
            .collect()
    }

    fn tight() -> SolverConfig<f64> {
        SolverConfig {
            tol_inf: 1e-12,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn default_config_values() {
        let c = SolverConfig::<f64>::default();
        assert_eq!((c.damping, c.tol_inf, c.max_iters, c.update_mode), (1e-3, 1e-3, 100, UpdateMode::Additive));
        assert!(!c.adaptive_damping);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let st = CalibrationState::from_system(&system()).unwrap();
        let s = samples(&system(), 3, 0);
        for c in [
            SolverConfig { tol_inf: 0.0, ..tight() },
            SolverConfig { max_iters: 0, ..tight() },
            SolverConfig { damping: -1.0, ..tight() },
        ] {
            assert!(matches!(solve(&st, &s, &c), Err(Error::Invalid(_))));
        }
    }

    #[test]
    fn zero_residual_gives_zero_step_and_unchanged_state() {
        // A chain of zero twists maps every configuration to the identity
        // exactly, so identity measurements give a residual of exactly zero.
        let arm = crate::kinematics::RobotModel::new("zero", vec![Twist::zero(); 3], Twist::zero()).unwrap();
        let st = CalibrationState::from_parts(&arm, &arm, &Pose::identity(), &Pose::identity(), &Pose::identity()).unwrap();
        let s: Vec<_> = (0..10)
            .map(|i| MeasurementSample::new(vec![0.3 * i as f64, -1.0, 2.0], vec![1.0, 0.5, -0.2 * i as f64], Pose::identity()))
            .collect();
        for mode in [UpdateMode::Additive, UpdateMode::Multiplicative] {
            let out = step(&st, &s, &SolverConfig { update_mode: mode, ..tight() }).unwrap();
            assert!(out.residual.iter().all(|&x| x == 0.0));
            assert!(out.delta.iter().all(|&x| x == 0.0));
            assert_eq!(out.state, st);
        }
    }

    #[test]
    fn consistent_data_gives_negligible_step() {
        let sys = system();
        let st = CalibrationState::from_system(&sys).unwrap();
        let s = samples(&sys, 20, 1);
        let out = step(&st, &s, &tight()).unwrap();
        assert!(inf_norm(&out.delta) < 1e-12);
    }

    #[test]
    fn coordinate_perturbation_is_reduced_a_hundredfold_in_one_step() {
        let sys = system();
        let s = samples(&sys, 80, 2);
        let mut st = CalibrationState::from_system(&sys).unwrap();
        st.xi_y = st.xi_y + Twist::from_f64([1e-4, -1e-4, 1e-4, 1e-4, 1e-4, -1e-4]);
        let e0 = norm(&stack_residuals(&st, &s).unwrap());
        let out = step(&st, &s, &SolverConfig::default()).unwrap();
        let e1 = norm(&stack_residuals(&out.state, &s).unwrap());
        assert!(e1 * 100.0 <= e0, "{e0:e} -> {e1:e}");
    }

    #[test]
    fn additive_and_multiplicative_agree_to_second_order() {
        let sys = system();
        let s = samples(&sys, 40, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for scale in [1e-2, 1e-3, 1e-4] {
            let truth = CalibrationState::from_system(&sys).unwrap();
            let p: Vec<f64> = truth.params().iter().map(|&x| x + rng.random_range(-scale..scale)).collect();
            let st = truth.with_params(&p).unwrap();
            let add = step(&st, &s, &tight()).unwrap();
            let mul = step(
                &st,
                &s,
                &SolverConfig {
                    update_mode: UpdateMode::Multiplicative,
                    ..tight()
                },
            )
            .unwrap();
            assert_eq!(add.delta, mul.delta);
            for k in 0..st.num_blocks() {
                let d = Twist::from_array(std::array::from_fn(|i| add.delta[6 * k + i]));
                let diff = (*add.state.block(k) - *mul.state.block(k)).norm();
                assert!(diff < 10.0 * d.norm() * d.norm() + 1e-14, "block {k}: diff {diff:e}, |d| {:e}", d.norm());
            }
        }
    }

    #[test]
    fn multiplicative_updates_stay_on_the_group() {
        let sys = system();
        let s = samples(&sys, 30, 5);
        let truth = CalibrationState::from_system(&sys).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p: Vec<f64> = truth.params().iter().map(|&x| x + rng.random_range(-1e-2..1e-2)).collect();
        let st = truth.with_params(&p).unwrap();
        for mode in [UpdateMode::Additive, UpdateMode::Multiplicative] {
            let out = step(&st, &s, &SolverConfig { update_mode: mode, ..tight() }).unwrap();
            for k in 0..out.state.num_blocks() {
                assert!(exp_se3(out.state.block(k)).is_valid(1e-10));
            }
        }
    }

    #[test]
    fn ground_truth_start_converges_immediately() {
        let sys = system();
        let s = samples(&sys, 30, 7);
        let st = CalibrationState::from_system(&sys).unwrap();
        let (fin, trace) = solve(&st, &s, &SolverConfig::default()).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations, 1);
        assert_eq!(trace.entries.len(), trace.iterations);
        assert!(trace.entries[0].step_inf < 1e-10);
        assert!((fin.xi_y - st.xi_y).norm() < 1e-10);
    }

    #[test]
    fn recovers_kinematic_and_coordinate_errors_noise_free() {
        let sys = system();
        let train = samples(&sys, 80, 8);
        let test = samples(&sys, 40, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut rand_twists = |s: f64| -> Vec<Twist<f64>> { (0..6).map(|_| Twist::from_array(std::array::from_fn(|_| rng.random_range(-s..s)))).collect() };
        // Start from a perturbed (nominal) model and perturbed coordinates.
        let nominal_a = perturb_model(&sys.sensor_arm, &rand_twists(5e-3)).unwrap();
        let nominal_c = perturb_model(&sys.tool_arm, &rand_twists(5e-3)).unwrap();
        let d = rand_twists(2e-2);
        let init = CalibrationState::from_parts(
            &nominal_a,
            &nominal_c,
            &(sys.x * exp_se3(&d[0])),
            &(sys.y * exp_se3(&d[1])),
            &(sys.z * exp_se3(&d[2])),
        )
        .unwrap();
        let (fin, trace) = solve(&init, &train, &tight()).unwrap();
        assert!(trace.final_residual_norm < 1e-10, "{:e}", trace.final_residual_norm);
        assert!(trace.final_residual_norm <= trace.initial_residual_norm);
        let held_out = norm(&stack_residuals(&fin, &test).unwrap());
        assert!(held_out < 1e-9, "{held_out:e}");
    }

    #[test]
    fn identical_inputs_give_bitwise_identical_traces() {
        let sys = system();
        let s = samples(&sys, 30, 11);
        let truth = CalibrationState::from_system(&sys).unwrap();
        let p: Vec<f64> = truth.params().iter().enumerate().map(|(i, &x)| x + 1e-3 * ((i as f64).sin())).collect();
        let st = truth.with_params(&p).unwrap();
        let a = solve(&st, &s, &tight()).unwrap();
        let b = solve(&st, &s, &tight()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_errors_carry_the_iteration_index() {
        let sys = system();
        let mut s = samples(&sys, 10, 12);
        // A measurement rotated by π about x relative to the prediction.
        s[4].b = s[4].b * exp_se3(&Twist::from_f64([std::f64::consts::PI, 0., 0., 0., 0., 0.]));
        let st = CalibrationState::from_system(&sys).unwrap();
        match solve(&st, &s, &tight()) {
            Err(Error::Step { iteration: 1, source }) => assert!(matches!(*source, Error::InitTooFar { sample: 4 })),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undamped_rank_deficient_system_is_an_error() {
        let sys = system();
        let s = samples(&sys, 30, 13);
        let st = CalibrationState::from_system(&sys).unwrap();
        // The gauge directions make JᵀJ singular, so λ = 0 must fail.
        let c = SolverConfig { damping: 0.0, ..tight() };
        assert!(matches!(step(&st, &s, &c), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn adaptive_damping_also_converges() {
        let sys = system();
        let s = samples(&sys, 60, 14);
        let truth = CalibrationState::from_system(&sys).unwrap();
        let p: Vec<f64> = truth.params().iter().enumerate().map(|(i, &x)| x + 5e-3 * ((i as f64 * 1.7).cos())).collect();
        let st = truth.with_params(&p).unwrap();
        let c = SolverConfig {
            adaptive_damping: true,
            tol_inf: 1e-11,
            ..SolverConfig::default()
        };
        let (_, trace) = solve(&st, &s, &c).unwrap();
        assert!(trace.converged);
        assert!(trace.final_residual_norm < 1e-9);
    }

    #[test]
    fn single_precision_solve_reduces_residual() {
        let sys = system();
        let s64 = samples(&sys, 40, 15);
        let s32: Vec<MeasurementSample<f32>> = s64
            .iter()
            .map(|s| {
                let m = s.b.to_matrix();
                MeasurementSample::new(
                    s.q_a.iter().map(|&x| x as f32).collect(),
                    s.q_c.iter().map(|&x| x as f32).collect(),
                    Pose::from_matrix_unchecked(&std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] as f32))),
                )
            })
            .collect();
        let truth = CalibrationState::from_system(&sys).unwrap();
        let p: Vec<f32> = truth.params().iter().enumerate().map(|(i, &x)| (x + 2e-3 * ((i as f64).cos())) as f32).collect();
        let st = CalibrationState::<f32> {
            xi_x: Twist::zero(),
            xi_y: Twist::zero(),
            xi_z: Twist::zero(),
            joints_a: vec![Twist::zero(); 6],
            joints_c: vec![Twist::zero(); 6],
            zero_offsets: (
                Twist::from_f64(truth.zero_offsets.0.to_f64()),
                Twist::from_f64(truth.zero_offsets.1.to_f64()),
            ),
        }
        .with_params(&p)
        .unwrap();
        let c = SolverConfig {
            tol_inf: 1e-5f32,
            max_iters: 10,
            ..SolverConfig::default()
        };
        let (_, trace) = solve(&st, &s32, &c).unwrap();
        assert!(trace.final_residual_norm < 1e-2 * trace.initial_residual_norm, "{trace:?}");
    }
}
