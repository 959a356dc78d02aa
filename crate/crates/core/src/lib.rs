//! Joint calibration of the coordinate transformations and kinematic
//! parameters of a vision-based dual-arm robot system.
//!
//! The system is the closed chain `A(q_a) X B = Y C(q_c) Z`, where `A` and `C`
//! are product-of-exponentials forward kinematics of the sensor-side and
//! tool-side arms, `B` is the measured tool pose in the sensor frame and
//! `X`, `Y`, `Z` are the unknown static transforms. The crate provides:
//!
//! * [`liegroup`] — SE(3) exponential/logarithm, adjoints and the closed-form
//!   twist Jacobians;
//! * [`kinematics`] — forward kinematics and kinematic perturbation;
//! * [`chain`] — the calibration state, residuals, the analytic stacked
//!   Jacobian and identifiability diagnostics;
//! * [`solver`] — damped Gauss–Newton refinement of all parameters;
//! * [`sdp`] — certifiable coordinate initialization via a semidefinite
//!   relaxation (f64 only);
//! * [`simulation`] — synthetic data with leveled perturbations (f64 only);
//! * [`evaluation`] — closed-loop error statistics and the sphere/minimum
//!   enclosing ball consistency score;
//! * [`formats`] — JSON file representations.
//!
//! The geometric core is generic over the [`Real`] scalar (`f32` or `f64`);
//! the `*64` / `*32` aliases below name the common instantiations.
//! Internally all rotations are radians and all lengths meters.

// Index loops mirror the matrix formulas they implement, and negated float
// comparisons (`!(x > 0.0)`) deliberately treat NaN as failing the check.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;
pub mod scalar;
pub mod liegroup;
pub mod kinematics;
pub mod chain;
pub mod formats;
pub mod sdp;
pub mod solver;
pub mod simulation;
pub mod evaluation;

pub use chain::{CalibrationState, DualArmSystem, IdentifiabilityReport, MeasurementSample};
pub use error::{Error, Result};
pub use evaluation::{EvalMode, EvalReport};
pub use kinematics::RobotModel;
pub use liegroup::{Pose, Twist};
pub use scalar::Real;
pub use simulation::{Level, SyntheticDataset};
pub use solver::{SolverConfig, UpdateMode};

/// Double-precision twist.
pub type Twist64 = Twist<f64>;
/// Single-precision twist.
pub type Twist32 = Twist<f32>;
/// Double-precision pose.
pub type Pose64 = Pose<f64>;
/// Single-precision pose.
pub type Pose32 = Pose<f32>;
/// Double-precision arm model.
pub type RobotModel64 = RobotModel<f64>;
/// Single-precision arm model.
pub type RobotModel32 = RobotModel<f32>;
/// Double-precision dual-arm system.
pub type DualArmSystem64 = DualArmSystem<f64>;
/// Single-precision dual-arm system.
pub type DualArmSystem32 = DualArmSystem<f32>;
/// Double-precision calibration state.
pub type CalibrationState64 = CalibrationState<f64>;
/// Single-precision calibration state.
pub type CalibrationState32 = CalibrationState<f32>;
/// Double-precision measurement.
pub type MeasurementSample64 = MeasurementSample<f64>;
/// Single-precision measurement.
pub type MeasurementSample32 = MeasurementSample<f32>;
