//! The closed-loop dual-arm error model `A X B = Y C Z`.
//!
//! The measurable transform is isolated as
//!
//! ```text
//! B' = exp(−ξ̂x) exp(−ξ̂ˢᵗa) exp(−ξ̂ⁿa qⁿa)···exp(−ξ̂¹a q¹a) exp(ξ̂y)
//!      exp(ξ̂¹c q¹c)···exp(ξ̂ⁿc qⁿc) exp(ξ̂ˢᵗc) exp(ξ̂z)
//! ```
//!
//! and compared against a measured `B*` through `e = log(B' B*⁻¹)^∨`.
//! The parameter vector is ordered `[ξx, ξy, ξz, ξa¹..ξaⁿ, ξc¹..ξcⁿ]`
//! (dimension `12n + 18`).

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, RobotModel};
use crate::liegroup::{adjoint, exp_se3, joint_jacobian, left_jacobian, log_se3, Pose, Twist};
use crate::numerics::{numeric_rank, svd_jacobi, DenseMatrix, Mat6};
use crate::scalar::Real;

/// Default excitation threshold: joints with `|q| < Q_MIN_DEFAULT` are flagged.
pub const Q_MIN_DEFAULT: f64 = 0.15;

/// Relative singular-value threshold defining numeric rank.
pub const RANK_RTOL: f64 = 1e-8;

/// Dimension of the parameter directions that leave every prediction
/// unchanged: for each arm, conjugating all joint twists by a common rigid
/// transform `G` can be compensated exactly by the coordinate transforms
/// (`Y ↦ Y G⁻¹`, `Z ↦ exp(−ξ̂ˢᵗc) G exp(ξ̂ˢᵗc) Z` on the tool side, and the
/// mirror substitution through `X` and `Y` on the sensor side).
pub const GAUGE_DIM: usize = 12;

/// Which arm of the dual-arm system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    /// The arm carrying the sensor; its flange pose is `A`.
    Sensor,
    /// The arm carrying the tool; its flange pose is `C`.
    Tool,
}

/// Two arms plus the static transforms `X` (sensor flange → sensor),
/// `Y` (sensor-arm base → tool-arm base) and `Z` (tool flange → tool).
#[derive(Debug, Clone, PartialEq)]
pub struct DualArmSystem<T> {
    pub sensor_arm: RobotModel<T>,
    pub tool_arm: RobotModel<T>,
    pub x: Pose<T>,
    pub y: Pose<T>,
    pub z: Pose<T>,
}

impl<T: Real> DualArmSystem<T> {
    /// Validates equal joint counts and proper rigid transforms.
    pub fn new(sensor_arm: RobotModel<T>, tool_arm: RobotModel<T>, x: Pose<T>, y: Pose<T>, z: Pose<T>) -> Result<Self> {
        if sensor_arm.n() != tool_arm.n() {
            return Err(Error::Dimension {
                context: "both arms must have the same joint count",
                expected: sensor_arm.n(),
                actual: tool_arm.n(),
            });
        }
        let tol = T::lit(1e-9);
        for (name, p) in [("X", &x), ("Y", &y), ("Z", &z)] {
            if !p.is_valid(tol) {
                return Err(Error::Invalid(format!("{name} is not a proper rigid transform")));
            }
        }
        Ok(Self {
            sensor_arm,
            tool_arm,
            x,
            y,
            z,
        })
    }

    pub fn n(&self) -> usize {
        self.sensor_arm.n()
    }

    pub fn arm(&self, arm: Arm) -> &RobotModel<T> {
        match arm {
            Arm::Sensor => &self.sensor_arm,
            Arm::Tool => &self.tool_arm,
        }
    }
}

/// One closed-loop observation: joint readings of both arms and the measured
/// tool pose in the sensor frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSample<T> {
    pub q_a: Vec<T>,
    pub q_c: Vec<T>,
    pub b: Pose<T>,
}

impl<T: Real> MeasurementSample<T> {
    pub fn new(q_a: Vec<T>, q_c: Vec<T>, b: Pose<T>) -> Self {
        Self { q_a, q_c, b }
    }

    pub fn q(&self, arm: Arm) -> &[T] {
        match arm {
            Arm::Sensor => &self.q_a,
            Arm::Tool => &self.q_c,
        }
    }
}

/// Full parameter set optimized by the unified calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationState<T> {
    pub xi_x: Twist<T>,
    pub xi_y: Twist<T>,
    pub xi_z: Twist<T>,
    pub joints_a: Vec<Twist<T>>,
    pub joints_c: Vec<Twist<T>>,
    /// Zero-offset twists (sensor arm, tool arm); fixed.
    pub zero_offsets: (Twist<T>, Twist<T>),
}

impl<T: Real> CalibrationState<T> {
    /// State from arm models and coordinate transforms.
    pub fn from_parts(sensor_arm: &RobotModel<T>, tool_arm: &RobotModel<T>, x: &Pose<T>, y: &Pose<T>, z: &Pose<T>) -> Result<Self> {
        if sensor_arm.n() != tool_arm.n() {
            return Err(Error::Dimension {
                context: "both arms must have the same joint count",
                expected: sensor_arm.n(),
                actual: tool_arm.n(),
            });
        }
        Ok(Self {
            xi_x: log_se3(x)?,
            xi_y: log_se3(y)?,
            xi_z: log_se3(z)?,
            joints_a: sensor_arm.joint_twists.clone(),
            joints_c: tool_arm.joint_twists.clone(),
            zero_offsets: (sensor_arm.zero_offset, tool_arm.zero_offset),
        })
    }

    pub fn from_system(sys: &DualArmSystem<T>) -> Result<Self> {
        Self::from_parts(&sys.sensor_arm, &sys.tool_arm, &sys.x, &sys.y, &sys.z)
    }

    /// Joint count per arm.
    pub fn n(&self) -> usize {
        self.joints_a.len()
    }

    /// Number of twist blocks, `2n + 3`.
    pub fn num_blocks(&self) -> usize {
        3 + 2 * self.n()
    }

    /// Parameter dimension `12n + 18`.
    pub fn dim(&self) -> usize {
        6 * self.num_blocks()
    }

    /// Twist block `k` in parameter order.
    pub fn block(&self, k: usize) -> &Twist<T> {
        let n = self.n();
        match k {
            0 => &self.xi_x,
            1 => &self.xi_y,
            2 => &self.xi_z,
            k if k < 3 + n => &self.joints_a[k - 3],
            k => &self.joints_c[k - 3 - n],
        }
    }

    pub fn block_mut(&mut self, k: usize) -> &mut Twist<T> {
        let n = self.n();
        match k {
            0 => &mut self.xi_x,
            1 => &mut self.xi_y,
            2 => &mut self.xi_z,
            k if k < 3 + n => &mut self.joints_a[k - 3],
            k => &mut self.joints_c[k - 3 - n],
        }
    }

    /// Flattened parameter vector.
    pub fn params(&self) -> Vec<T> {
        (0..self.num_blocks()).flat_map(|k| self.block(k).to_array()).collect()
    }

    /// Copy of this state with the parameter vector replaced.
    pub fn with_params(&self, p: &[T]) -> Result<Self> {
        if p.len() != self.dim() {
            return Err(Error::Dimension {
                context: "parameter vector length",
                expected: self.dim(),
                actual: p.len(),
            });
        }
        let mut s = self.clone();
        for k in 0..self.num_blocks() {
            *s.block_mut(k) = Twist::from_array(std::array::from_fn(|i| p[6 * k + i]));
        }
        Ok(s)
    }

    pub fn x(&self) -> Pose<T> {
        exp_se3(&self.xi_x)
    }

    pub fn y(&self) -> Pose<T> {
        exp_se3(&self.xi_y)
    }

    pub fn z(&self) -> Pose<T> {
        exp_se3(&self.xi_z)
    }

    /// Sensor-arm model implied by the current joint twists.
    pub fn sensor_arm(&self, name: &str) -> RobotModel<T> {
        RobotModel {
            name: name.to_string(),
            joint_twists: self.joints_a.clone(),
            zero_offset: self.zero_offsets.0,
        }
    }

    /// Tool-arm model implied by the current joint twists.
    pub fn tool_arm(&self, name: &str) -> RobotModel<T> {
        RobotModel {
            name: name.to_string(),
            joint_twists: self.joints_c.clone(),
            zero_offset: self.zero_offsets.1,
        }
    }

    pub fn is_finite(&self) -> bool {
        (0..self.num_blocks()).all(|k| self.block(k).is_finite())
    }

    fn check_sample(&self, s: &MeasurementSample<T>) -> Result<()> {
        for q in [&s.q_a, &s.q_c] {
            if q.len() != self.n() {
                return Err(Error::Dimension {
                    context: "sample joint configuration length",
                    expected: self.n(),
                    actual: q.len(),
                });
            }
        }
        Ok(())
    }
}

/// Per-sample Jacobian blocks (each 6×6) of the residual with respect to the
/// parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleJacobian<T> {
    pub j_x: Mat6<T>,
    pub j_y: Mat6<T>,
    pub j_z: Mat6<T>,
    pub j_a: Vec<Mat6<T>>,
    pub j_c: Vec<Mat6<T>>,
}

impl<T: Real> SampleJacobian<T> {
    /// Block `k` in parameter order.
    pub fn block(&self, k: usize) -> &Mat6<T> {
        let n = self.j_a.len();
        match k {
            0 => &self.j_x,
            1 => &self.j_y,
            2 => &self.j_z,
            k if k < 3 + n => &self.j_a[k - 3],
            k => &self.j_c[k - 3 - n],
        }
    }

    /// Assembled `6 × (12n + 18)` matrix.
    pub fn assemble(&self) -> DenseMatrix<T> {
        let blocks = 3 + 2 * self.j_a.len();
        let mut m = DenseMatrix::zeros(6, 6 * blocks);
        self.write_rows(&mut m, 0);
        m
    }

    fn write_rows(&self, m: &mut DenseMatrix<T>, r0: usize) {
        let blocks = 3 + 2 * self.j_a.len();
        for k in 0..blocks {
            let b = self.block(k);
            for i in 0..6 {
                for j in 0..6 {
                    m[(r0 + i, 6 * k + j)] = b.0[i][j];
                }
            }
        }
    }
}

/// Predicted `B'` for a sample under the given state.
pub fn predict_b<T: Real>(state: &CalibrationState<T>, sample: &MeasurementSample<T>) -> Result<Pose<T>> {
    state.check_sample(sample)?;
    let mut p = exp_se3(&-state.xi_x) * exp_se3(&-state.zero_offsets.0);
    for (xi, &q) in state.joints_a.iter().zip(&sample.q_a).rev() {
        p = p * exp_se3(&xi.scale(-q));
    }
    p = p * exp_se3(&state.xi_y);
    for (xi, &q) in state.joints_c.iter().zip(&sample.q_c) {
        p = p * exp_se3(&xi.scale(q));
    }
    Ok(p * exp_se3(&state.zero_offsets.1) * exp_se3(&state.xi_z))
}

/// `X⁻¹ A⁻¹ Y C Z` assembled from per-arm forward kinematics; algebraically
/// identical to [`predict_b`].
pub fn predict_b_composed<T: Real>(sys: &DualArmSystem<T>, sample: &MeasurementSample<T>) -> Result<Pose<T>> {
    let a = forward_kinematics(&sys.sensor_arm, &sample.q_a)?;
    let c = forward_kinematics(&sys.tool_arm, &sample.q_c)?;
    Ok(sys.x.inverse() * a.inverse() * sys.y * c * sys.z)
}

fn residual_from_prediction<T: Real>(b_pred: &Pose<T>, sample: &MeasurementSample<T>, index: usize) -> Result<Twist<T>> {
    log_se3(&(*b_pred * sample.b.inverse())).map_err(|e| match e {
        Error::NearPi { .. } => Error::InitTooFar { sample: index },
        other => other,
    })
}

/// Residual `e = log(B' B*⁻¹)^∨` using the exact logarithm.
pub fn residual<T: Real>(state: &CalibrationState<T>, sample: &MeasurementSample<T>) -> Result<Twist<T>> {
    residual_from_prediction(&predict_b(state, sample)?, sample, 0)
}

/// Prediction `B'` together with the analytical Jacobian, assembled in one
/// pass over the chain by accumulating the prefix product that transports
/// each factor's derivative.
pub fn linearize<T: Real>(state: &CalibrationState<T>, sample: &MeasurementSample<T>) -> Result<(Pose<T>, SampleJacobian<T>)> {
    state.check_sample(sample)?;
    let n = state.n();
    let j_x = -left_jacobian(&-state.xi_x);
    let mut p = exp_se3(&-state.xi_x) * exp_se3(&-state.zero_offsets.0);
    let mut j_a = vec![Mat6::zeros(); n];
    for k in (0..n).rev() {
        let xi = state.joints_a[k];
        let q = sample.q_a[k];
        j_a[k] = -(adjoint(&p) * joint_jacobian(&-xi, q));
        p = p * exp_se3(&xi.scale(-q));
    }
    let j_y = adjoint(&p) * left_jacobian(&state.xi_y);
    p = p * exp_se3(&state.xi_y);
    let mut j_c = Vec::with_capacity(n);
    for (xi, &q) in state.joints_c.iter().zip(&sample.q_c) {
        j_c.push(adjoint(&p) * joint_jacobian(xi, q));
        p = p * exp_se3(&xi.scale(q));
    }
    p = p * exp_se3(&state.zero_offsets.1);
    let j_z = adjoint(&p) * left_jacobian(&state.xi_z);
    p = p * exp_se3(&state.xi_z);
    Ok((p, SampleJacobian { j_x, j_y, j_z, j_a, j_c }))
}

/// Analytical per-sample Jacobian.
pub fn sample_jacobian<T: Real>(state: &CalibrationState<T>, sample: &MeasurementSample<T>) -> Result<SampleJacobian<T>> {
    Ok(linearize(state, sample)?.1)
}

/// Stacks residuals (6m) and Jacobians (6m × (12n + 18)) in sample order.
pub fn stack<T: Real>(state: &CalibrationState<T>, samples: &[MeasurementSample<T>]) -> Result<(Vec<T>, DenseMatrix<T>)> {
    if samples.is_empty() {
        return Err(Error::Invalid("at least one sample is required".into()));
    }
    let mut e = Vec::with_capacity(6 * samples.len());
    let mut j = DenseMatrix::zeros(6 * samples.len(), state.dim());
    for (i, s) in samples.iter().enumerate() {
        let (b_pred, sj) = linearize(state, s)?;
        e.extend(residual_from_prediction(&b_pred, s, i)?.to_array());
        sj.write_rows(&mut j, 6 * i);
    }
    Ok((e, j))
}

/// Stacked residual vector only.
pub fn stack_residuals<T: Real>(state: &CalibrationState<T>, samples: &[MeasurementSample<T>]) -> Result<Vec<T>> {
    let mut e = Vec::with_capacity(6 * samples.len());
    for (i, s) in samples.iter().enumerate() {
        e.extend(residual_from_prediction(&predict_b(state, s)?, s, i)?.to_array());
    }
    Ok(e)
}

/// A joint reading too close to zero for the excitation rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationViolation {
    pub sample: usize,
    pub arm: Arm,
    pub joint: usize,
    pub q: f64,
}

/// Rank and conditioning diagnostics of a stacked Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityReport {
    /// Singular values of `J`, descending.
    pub singular_values: Vec<f64>,
    /// Number of singular values above `σ_max · RANK_RTOL`.
    pub rank: usize,
    /// Parameter dimension `12n + 18`.
    pub dim: usize,
    /// `σ_max / σ_min` over all singular values (infinite when rank deficient).
    pub condition_number: f64,
    /// `σ_max / σ_r` over the numerically nonzero singular values.
    pub condition_number_in_range: f64,
    /// Joint readings with `|q| < q_min`.
    pub violations: Vec<ExcitationViolation>,
    /// `rank == dim`.
    pub well_posed: bool,
    /// Dimension of the structural gauge null space ([`GAUGE_DIM`]).
    pub gauge_dim: usize,
    /// `rank == dim − gauge_dim`: every direction except the gauge is identifiable.
    pub well_posed_modulo_gauge: bool,
}

/// Computes singular values (one-sided Jacobi, so small values are not lost
/// to squaring), the numeric rank, conditioning and excitation violations.
/// Never fails: a decomposition failure yields an empty spectrum and rank 0.
pub fn identifiability_report<T: Real>(j: &DenseMatrix<T>, samples: &[MeasurementSample<T>], q_min: T) -> IdentifiabilityReport {
    let dim = j.cols();
    let jt;
    let tall = if j.rows() >= j.cols() {
        j
    } else {
        jt = j.transpose();
        &jt
    };
    let mut sv: Vec<f64> = svd_jacobi(tall)
        .map(|s| s.sigma.iter().map(|x| x.to_f64_lossy()).collect())
        .unwrap_or_default();
    // A wide J has at most `rows` nonzero singular values; pad with zeros so
    // the spectrum always has `dim` entries.
    sv.resize(dim, 0.0);
    let rank = if sv.len() == dim { numeric_rank(&sv, RANK_RTOL) } else { 0 };
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let condition_number_in_range = if rank > 0 { smax / sv[rank - 1] } else { f64::INFINITY };
    let mut violations = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        for arm in [Arm::Sensor, Arm::Tool] {
            for (k, &q) in s.q(arm).iter().enumerate() {
                if q.abs() < q_min {
                    violations.push(ExcitationViolation {
                        sample: i,
                        arm,
                        joint: k,
                        q: q.to_f64_lossy(),
                    });
                }
            }
        }
    }
    IdentifiabilityReport {
        singular_values: sv,
        rank,
        dim,
        condition_number,
        condition_number_in_range,
        violations,
        well_posed: rank == dim,
        gauge_dim: GAUGE_DIM,
        well_posed_modulo_gauge: rank + GAUGE_DIM == dim,
    }
}
