//! JSON file formats. Poses are 4×4 row-major homogeneous matrices with
//! translations in meters; twists are `[ωx, ωy, ωz, ρx, ρy, ρz]`.
//!
//! All file types round-trip exactly through `serde_json`.

// Field names mirror the documented JSON keys (`X`, `B`, `e_R_deg`, ...).
#![allow(non_snake_case)]

use serde::{Deserialize, Serialize};

use crate::chain::{Arm, CalibrationState, DualArmSystem, IdentifiabilityReport, MeasurementSample};
use crate::sdp::InitResult;
use crate::evaluation::PostureCloud;
use crate::simulation::BallClouds;
use crate::solver::SolveTrace;
use crate::numerics::Vec3;
use crate::error::{Error, Result};
use crate::kinematics::RobotModel;
use crate::liegroup::{Mat4, Pose, Twist};

/// Tolerance on `‖RᵀR − I‖_F` accepted when reading poses from files.
pub const POSE_READ_TOL: f64 = 1e-6;

const DEFAULT_SYSTEM_JSON: &str = include_str!("../assets/default_system.json");

/// Robot model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModelFile {
    pub name: String,
    pub n: usize,
    pub joint_twists: Vec<[f64; 6]>,
    pub zero_offset: [f64; 6],
}

impl RobotModelFile {
    pub fn from_model(m: &RobotModel<f64>) -> Self {
        Self {
            name: m.name.clone(),
            n: m.n(),
            joint_twists: m.joint_twists.iter().map(Twist::to_f64).collect(),
            zero_offset: m.zero_offset.to_f64(),
        }
    }

    pub fn to_model(&self) -> Result<RobotModel<f64>> {
        if self.n != self.joint_twists.len() {
            return Err(Error::Invalid(format!(
                "robot model '{}': field `n` = {} but `joint_twists` has {} entries",
                self.name,
                self.n,
                self.joint_twists.len()
            )));
        }
        RobotModel::new(
            self.name.clone(),
            self.joint_twists.iter().map(|t| Twist::from_f64(*t)).collect(),
            Twist::from_f64(self.zero_offset),
        )
        .map_err(|e| Error::Invalid(format!("robot model '{}': {e}", self.name)))
    }
}

/// Dual-arm system file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub sensor_arm: RobotModelFile,
    pub tool_arm: RobotModelFile,
    pub X: Mat4<f64>,
    pub Y: Mat4<f64>,
    pub Z: Mat4<f64>,
}

impl SystemFile {
    pub fn from_system(s: &DualArmSystem<f64>) -> Self {
        Self {
            sensor_arm: RobotModelFile::from_model(&s.sensor_arm),
            tool_arm: RobotModelFile::from_model(&s.tool_arm),
            X: s.x.to_matrix(),
            Y: s.y.to_matrix(),
            Z: s.z.to_matrix(),
        }
    }

    pub fn to_system(&self) -> Result<DualArmSystem<f64>> {
        DualArmSystem::new(
            self.sensor_arm.to_model()?,
            self.tool_arm.to_model()?,
            read_pose(&self.X, "X")?,
            read_pose(&self.Y, "Y")?,
            read_pose(&self.Z, "Z")?,
        )
    }
}

/// Reads a pose field, naming it in the error message.
pub fn read_pose(m: &Mat4<f64>, field: &str) -> Result<Pose<f64>> {
    Pose::from_matrix(m, POSE_READ_TOL).map_err(|e| Error::Invalid(format!("field `{field}`: {e}")))
}

/// One measurement in a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub q_a: Vec<f64>,
    pub q_c: Vec<f64>,
    pub B: Mat4<f64>,
}

impl SampleFile {
    pub fn from_sample(s: &MeasurementSample<f64>) -> Self {
        Self {
            q_a: s.q_a.clone(),
            q_c: s.q_c.clone(),
            B: s.b.to_matrix(),
        }
    }

    pub fn to_sample(&self, index: usize) -> Result<MeasurementSample<f64>> {
        Ok(MeasurementSample::new(
            self.q_a.clone(),
            self.q_c.clone(),
            read_pose(&self.B, &format!("samples[{index}].B"))?,
        ))
    }
}

/// Dataset file; `gt_system` is `null` in blind exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub nominal_system: SystemFile,
    pub gt_system: Option<SystemFile>,
    pub samples: Vec<SampleFile>,
    pub seed: u64,
    pub kin_level: String,
    pub noise_level: String,
}

impl DatasetFile {
    /// Parsed samples, validated against the nominal system's joint count.
    pub fn samples(&self) -> Result<Vec<MeasurementSample<f64>>> {
        let n = self.nominal_system.sensor_arm.n;
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.q_a.len() != n || s.q_c.len() != n {
                    return Err(Error::Invalid(format!("samples[{i}]: joint vectors must have length {n}")));
                }
                s.to_sample(i)
            })
            .collect()
    }
}

/// SDP initialization output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitFile {
    pub X: Mat4<f64>,
    pub Y: Mat4<f64>,
    pub Z: Mat4<f64>,
    pub eta: f64,
    pub gap: f64,
    pub p_sdp: f64,
    pub rank_ratio: f64,
    pub iterations: usize,
    pub converged: bool,
    pub primal_res: f64,
    pub dual_res: f64,
}

/// One solver iteration in a calibration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntryFile {
    pub residual_norm: f64,
    pub step_inf: f64,
    pub damping: f64,
}

/// Unified calibration output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub X: Mat4<f64>,
    pub Y: Mat4<f64>,
    pub Z: Mat4<f64>,
    pub sensor_arm: RobotModelFile,
    pub tool_arm: RobotModelFile,
    pub init: InitFile,
    pub converged: bool,
    pub iterations: usize,
    pub initial_residual_norm: f64,
    pub final_residual_norm: f64,
    pub trace: Vec<TraceEntryFile>,
}

/// Per-sample closed-loop error, in degrees and millimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleErrorFile {
    pub e_R_deg: f64,
    pub e_t_mm: f64,
}

/// Summary statistics of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReportFile {
    pub mode: String,
    pub per_sample: Vec<SampleErrorFile>,
    pub e_R_deg: StatsFile,
    pub e_t_mm: StatsFile,
}

/// Identifiability report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityFile {
    pub dim: usize,
    pub rank: usize,
    pub gauge_dim: usize,
    pub well_posed: bool,
    pub well_posed_modulo_gauge: bool,
    /// `null` when the Jacobian is rank deficient (infinite).
    pub condition_number: Option<f64>,
    /// `null` when the Jacobian is zero.
    pub condition_number_in_range: Option<f64>,
    pub singular_values: Vec<f64>,
    pub violations: Vec<ViolationFile>,
}

/// One excitation violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationFile {
    pub sample: usize,
    pub arm: String,
    pub joint: usize,
    pub q: f64,
}

/// Point clouds of the cooperative-measuring scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallCloudsFile {
    /// Nominal ball radius, meters.
    pub ball_radius: f64,
    pub postures: Vec<BallPostureFile>,
}

/// Joint readings and sensor-frame points (meters) for one posture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPostureFile {
    pub q_a: Vec<f64>,
    pub q_c: Vec<f64>,
    pub points: Vec<[f64; 3]>,
}

/// Cooperative-measuring report (millimeters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallReportFile {
    pub mode: String,
    pub centers_mm: Vec<[f64; 3]>,
    pub radii_mm: Vec<f64>,
    pub rms_mm: Vec<f64>,
    pub meb_center_mm: [f64; 3],
    pub r_meb_mm: f64,
}

impl InitFile {
    pub fn from_result(r: &InitResult) -> Self {
        Self {
            X: r.extraction.x.to_matrix(),
            Y: r.extraction.y.to_matrix(),
            Z: r.extraction.z.to_matrix(),
            eta: r.certificate.eta,
            gap: r.certificate.gap,
            p_sdp: r.solution.p_sdp,
            rank_ratio: r.extraction.rank_ratio,
            iterations: r.solution.iterations,
            converged: r.solution.converged,
            primal_res: r.solution.primal_res,
            dual_res: r.solution.dual_res,
        }
    }

    /// The initial `(X, Y, Z)`.
    pub fn poses(&self) -> Result<(Pose<f64>, Pose<f64>, Pose<f64>)> {
        Ok((read_pose(&self.X, "X")?, read_pose(&self.Y, "Y")?, read_pose(&self.Z, "Z")?))
    }
}

impl CalibrationFile {
    /// Bundles a refined state, its solver trace and the initialization used.
    pub fn new(state: &CalibrationState<f64>, trace: &SolveTrace<f64>, init: InitFile, names: (&str, &str)) -> Self {
        Self {
            X: state.x().to_matrix(),
            Y: state.y().to_matrix(),
            Z: state.z().to_matrix(),
            sensor_arm: RobotModelFile::from_model(&state.sensor_arm(names.0)),
            tool_arm: RobotModelFile::from_model(&state.tool_arm(names.1)),
            init,
            converged: trace.converged,
            iterations: trace.iterations,
            initial_residual_norm: trace.initial_residual_norm,
            final_residual_norm: trace.final_residual_norm,
            trace: trace
                .entries
                .iter()
                .map(|e| TraceEntryFile {
                    residual_norm: e.residual_norm,
                    step_inf: e.step_inf,
                    damping: e.damping,
                })
                .collect(),
        }
    }

    /// The calibrated system (calibrated arms and coordinates).
    pub fn to_system(&self) -> Result<DualArmSystem<f64>> {
        DualArmSystem::new(
            self.sensor_arm.to_model()?,
            self.tool_arm.to_model()?,
            read_pose(&self.X, "X")?,
            read_pose(&self.Y, "Y")?,
            read_pose(&self.Z, "Z")?,
        )
    }
}

impl IdentifiabilityFile {
    pub fn from_report(r: &IdentifiabilityReport) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            dim: r.dim,
            rank: r.rank,
            gauge_dim: r.gauge_dim,
            well_posed: r.well_posed,
            well_posed_modulo_gauge: r.well_posed_modulo_gauge,
            condition_number: finite(r.condition_number),
            condition_number_in_range: finite(r.condition_number_in_range),
            singular_values: r.singular_values.clone(),
            violations: r
                .violations
                .iter()
                .map(|v| ViolationFile {
                    sample: v.sample,
                    arm: match v.arm {
                        Arm::Sensor => "sensor".into(),
                        Arm::Tool => "tool".into(),
                    },
                    joint: v.joint,
                    q: v.q,
                })
                .collect(),
        }
    }
}

impl BallCloudsFile {
    pub fn from_clouds(c: &BallClouds) -> Self {
        Self {
            ball_radius: c.radius,
            postures: c
                .postures
                .iter()
                .map(|p| BallPostureFile {
                    q_a: p.q_a.clone(),
                    q_c: p.q_c.clone(),
                    points: p.points.iter().map(|v| v.0).collect(),
                })
                .collect(),
        }
    }

    /// Joint readings and points per posture.
    pub fn postures(&self) -> Vec<PostureCloud> {
        self.postures
            .iter()
            .map(|p| (p.q_a.clone(), p.q_c.clone(), p.points.iter().map(|&v| Vec3(v)).collect()))
            .collect()
    }
}

/// Parses JSON into `T`, reporting the offending location on failure.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("{what}: {e}")))
}

/// Serializes `T` as pretty JSON.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("file types serialize infallibly")
}

/// The bundled default dual-arm system: two identical 6-joint arms with
/// UR5-like nominal geometry (toolkit defaults, not measured data).
pub fn default_system() -> Result<DualArmSystem<f64>> {
    default_system_file()?.to_system()
}

/// The bundled default system as a file value.
pub fn default_system_file() -> Result<SystemFile> {
    from_json(DEFAULT_SYSTEM_JSON, "bundled default system")
}
