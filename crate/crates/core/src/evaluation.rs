//! Evaluation metrics: closed-loop deviation statistics and the
//! cooperative-measuring score (sphere fits plus minimum enclosing ball).
//!
//! Quantities are radians and meters internally; degrees and millimeters
//! appear only in the file representations.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{DualArmSystem, MeasurementSample};
use crate::error::{Error, Result};
use crate::formats::{BallReportFile, EvalReportFile, SampleErrorFile, StatsFile};
use crate::kinematics::{forward_kinematics, RobotModel};
use crate::liegroup::{rotation_angle, Pose};
use crate::numerics::{numeric_rank, singular_values, Cholesky, DenseMatrix, SymMatrix, Vec3, RANK_RTOL};
use crate::scalar::Real;

/// Which kinematics produce `A_i` and `C_i` during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Nominal arm kinematics with the estimated coordinates.
    CoordinateOnly,
    /// Calibrated arm kinematics with the estimated coordinates.
    Joint,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::CoordinateOnly => "coordinate_only",
            EvalMode::Joint => "joint",
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coordinate_only" => Ok(EvalMode::CoordinateOnly),
            "joint" => Ok(EvalMode::Joint),
            other => Err(Error::Invalid(format!("unknown evaluation mode '{other}' (expected coordinate_only or joint)"))),
        }
    }
}

/// Closed-loop consistency error `E = (A X B)⁻¹ Y C Z` of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopError<T> {
    pub e: Pose<T>,
    /// Rotation deviation, radians in `[0, π]`.
    pub e_r: T,
    /// Translation deviation, meters.
    pub e_t: T,
}

impl<T: Real> ClosedLoopError<T> {
    pub fn from_pose(e: Pose<T>) -> Self {
        Self {
            e_r: rotation_angle(&e.r),
            e_t: e.t.norm(),
            e,
        }
    }
}

/// Closed-loop error of one sample given the estimated coordinates and the
/// arm models used to compute `A` and `C`.
pub fn closed_loop<T: Real>(
    sample: &MeasurementSample<T>,
    x: &Pose<T>,
    y: &Pose<T>,
    z: &Pose<T>,
    sensor_arm: &RobotModel<T>,
    tool_arm: &RobotModel<T>,
) -> Result<ClosedLoopError<T>> {
    let a = forward_kinematics(sensor_arm, &sample.q_a)?;
    let c = forward_kinematics(tool_arm, &sample.q_c)?;
    let e = (a * *x * sample.b).inverse() * *y * c * *z;
    Ok(ClosedLoopError::from_pose(e))
}

/// Picks the arm models for `mode`: the nominal system's arms for
/// [`EvalMode::CoordinateOnly`], the calibrated system's arms otherwise. The
/// coordinates always come from `calibrated`.
pub fn arms_for_mode<'a, T>(calibrated: &'a DualArmSystem<T>, nominal: &'a DualArmSystem<T>, mode: EvalMode) -> (&'a RobotModel<T>, &'a RobotModel<T>) {
    match mode {
        EvalMode::CoordinateOnly => (&nominal.sensor_arm, &nominal.tool_arm),
        EvalMode::Joint => (&calibrated.sensor_arm, &calibrated.tool_arm),
    }
}

/// Summary statistics of a sample (quartiles by linear interpolation
/// between order statistics; standard deviation with `n − 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("statistics of an empty sample".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("statistics of non-finite values".into()));
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let std = if s.len() > 1 {
            (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let quantile = |p: f64| {
            let h = p * (n - 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(s.len() - 1);
            s[lo] + (h - lo as f64) * (s[hi] - s[lo])
        };
        Ok(Self {
            mean,
            std,
            median: quantile(0.5),
            q1: quantile(0.25),
            q3: quantile(0.75),
            min: s[0],
            max: s[s.len() - 1],
        })
    }

    /// The same statistics with every value multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            mean: self.mean * k,
            std: self.std * k,
            median: self.median * k,
            q1: self.q1 * k,
            q3: self.q3 * k,
            min: self.min * k,
            max: self.max * k,
        }
    }

    pub fn to_file(&self) -> StatsFile {
        StatsFile {
            mean: self.mean,
            std: self.std,
            median: self.median,
            q1: self.q1,
            q3: self.q3,
            min: self.min,
            max: self.max,
        }
    }
}

/// Closed-loop errors of a sample set with their statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub errors: Vec<ClosedLoopError<f64>>,
    /// Radians.
    pub e_r: Stats,
    /// Meters.
    pub e_t: Stats,
}

impl EvalReport {
    /// Builds a report, computing the statistics from the per-sample list.
    pub fn new(mode: EvalMode, errors: Vec<ClosedLoopError<f64>>) -> Result<Self> {
        let e_r = Stats::of(&errors.iter().map(|e| e.e_r).collect::<Vec<_>>())?;
        let e_t = Stats::of(&errors.iter().map(|e| e.e_t).collect::<Vec<_>>())?;
        Ok(Self { mode, errors, e_r, e_t })
    }

    /// File representation in degrees and millimeters.
    pub fn to_file(&self) -> EvalReportFile {
        EvalReportFile {
            mode: self.mode.to_string(),
            per_sample: self
                .errors
                .iter()
                .map(|e| SampleErrorFile {
                    e_R_deg: e.e_r.to_degrees(),
                    e_t_mm: e.e_t * 1e3,
                })
                .collect(),
            e_R_deg: self.e_r.scaled(180.0 / std::f64::consts::PI).to_file(),
            e_t_mm: self.e_t.scaled(1e3).to_file(),
        }
    }

    /// Box-plot quantiles as CSV (degrees and millimeters).
    pub fn to_csv(&self) -> String {
        let r = self.e_r.scaled(180.0 / std::f64::consts::PI);
        let t = self.e_t.scaled(1e3);
        let mut out = String::from("metric,mean,std,min,q1,median,q3,max\n");
        for (name, s) in [("e_R_deg", r), ("e_t_mm", t)] {
            out.push_str(&format!("{name},{},{},{},{},{},{},{}\n", s.mean, s.std, s.min, s.q1, s.median, s.q3, s.max));
        }
        out
    }
}

/// Evaluates every sample; the coordinates come from `calibrated`, the arm
/// models are selected by `mode` (see [`arms_for_mode`]).
pub fn evaluate(samples: &[MeasurementSample<f64>], calibrated: &DualArmSystem<f64>, nominal: &DualArmSystem<f64>, mode: EvalMode) -> Result<EvalReport> {
    let (sa, ta) = arms_for_mode(calibrated, nominal, mode);
    let errors = samples
        .iter()
        .map(|s| closed_loop(s, &calibrated.x, &calibrated.y, &calibrated.z, sa, ta))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::new(mode, errors)
}

/// A fitted sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFit {
    pub center: Vec3<f64>,
    pub radius: f64,
    /// Root-mean-square radial residual, meters.
    pub rms: f64,
    /// Geometric refinement steps taken.
    pub iterations: usize,
}

/// Maximum geometric refinement steps of [`sphere_fit`].
pub const SPHERE_GN_STEPS: usize = 20;

/// Fits a sphere: algebraic least squares on `‖p‖² = 2cᵀp + k`
/// (with `k = r² − ‖c‖²`, solved in centered coordinates) followed by up to
/// [`SPHERE_GN_STEPS`] Gauss–Newton steps on the geometric residuals
/// `‖pᵢ − c‖ − r`.
pub fn sphere_fit(points: &[Vec3<f64>]) -> Result<SphereFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateSphere { rank: points.len() });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Invalid("sphere fit of non-finite points".into()));
    }
    let m = points.len() as f64;
    let mean = points.iter().fold(Vec3::zeros(), |a, &p| a + p).scale(1.0 / m);
    let scale = points.iter().map(|&p| (p - mean).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateSphere { rank: 1 });
    }
    // Centered, scaled coordinates keep the algebraic system well conditioned.
    let local: Vec<Vec3<f64>> = points.iter().map(|&p| (p - mean).scale(1.0 / scale)).collect();
    let design = DenseMatrix::from_fn(local.len(), 4, |i, j| if j < 3 { 2.0 * local[i].0[j] } else { 1.0 });
    let rank = numeric_rank(&singular_values(&design)?, RANK_RTOL);
    if rank < 4 {
        return Err(Error::DegenerateSphere { rank });
    }
    let rhs: Vec<f64> = local.iter().map(|p| p.norm_squared()).collect();
    let sol = Cholesky::factor(&design.gram())
        .ok_or(Error::DegenerateSphere { rank })?
        .solve(&design.tr_matvec(&rhs)?);
    let mut c = Vec3::new(sol[0], sol[1], sol[2]);
    let r2 = sol[3] + c.norm_squared();
    if !(r2 > 0.0) {
        return Err(Error::DegenerateSphere { rank });
    }
    let mut r = r2.sqrt();
    let mut iterations = 0;
    for _ in 0..SPHERE_GN_STEPS {
        let mut jtj = SymMatrix::zeros(4);
        let mut jte = [0.0; 4];
        for &p in &local {
            let d = p - c;
            let nd = d.norm();
            if nd == 0.0 {
                continue;
            }
            let row = [-d.0[0] / nd, -d.0[1] / nd, -d.0[2] / nd, -1.0];
            let res = nd - r;
            for a in 0..4 {
                jte[a] += row[a] * res;
                for b in a..4 {
                    jtj.add_sym(a, b, row[a] * row[b]);
                }
            }
        }
        let Some(ch) = Cholesky::factor(&jtj) else { break };
        let step = ch.solve(&jte);
        c = c - Vec3::new(step[0], step[1], step[2]);
        r -= step[3];
        iterations += 1;
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) <= 1e-15 {
            break;
        }
    }
    let rms = (local.iter().map(|&p| ((p - c).norm() - r).powi(2)).sum::<f64>() / m).sqrt() * scale;
    Ok(SphereFit {
        center: mean + c.scale(scale),
        radius: r.abs() * scale,
        rms,
        iterations,
    })
}

/// A ball `{p : ‖p − center‖ ≤ radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Vec3<f64>,
    pub radius: f64,
}

impl Ball {
    fn contains(&self, p: Vec3<f64>, tol: f64) -> bool {
        (p - self.center).norm() <= self.radius + tol
    }
}

/// Smallest ball with all given points (at most four) on its boundary, or
/// `None` when the points are affinely dependent.
pub fn circumscribed_ball(support: &[Vec3<f64>]) -> Option<Ball> {
    match support.len() {
        0 => None,
        1 => Some(Ball {
            center: support[0],
            radius: 0.0,
        }),
        2 => {
            let c = (support[0] + support[1]).scale(0.5);
            Some(Ball {
                center: c,
                radius: (support[0] - c).norm(),
            })
        }
        3 => {
            // Center o = p0 + s·a + t·b in the plane of the triangle.
            let (p0, a, b) = (support[0], support[1] - support[0], support[2] - support[0]);
            let (aa, bb, ab) = (a.dot(a), b.dot(b), a.dot(b));
            let det = aa * bb - ab * ab;
            if det.abs() <= 1e-14 * aa * bb {
                return None;
            }
            let s = 0.5 * bb * (aa - ab) / det;
            let t = 0.5 * aa * (bb - ab) / det;
            let c = p0 + a.scale(s) + b.scale(t);
            Some(Ball {
                center: c,
                radius: (support[0] - c).norm(),
            })
        }
        4 => {
            // 2 (p_k − p0)ᵀ o' = ‖p_k − p0‖², o = p0 + o'.
            let p0 = support[0];
            let d: Vec<Vec3<f64>> = support[1..].iter().map(|&p| p - p0).collect();
            let m = crate::numerics::Mat3::from_cols(d[0], d[1], d[2]).transpose();
            let det = m.det();
            let vol_scale = d[0].norm() * d[1].norm() * d[2].norm();
            if det.abs() <= 1e-12 * vol_scale {
                return None;
            }
            let rhs = Vec3::new(d[0].norm_squared(), d[1].norm_squared(), d[2].norm_squared()).scale(0.5);
            // Cramer's rule.
            let solve_col = |k: usize| {
                let mut cols = [m.col(0), m.col(1), m.col(2)];
                cols[k] = rhs;
                crate::numerics::Mat3::from_cols(cols[0], cols[1], cols[2]).det() / det
            };
            let c = p0 + Vec3::new(solve_col(0), solve_col(1), solve_col(2));
            let radius = support.iter().map(|&p| (p - c).norm()).fold(0.0, f64::max);
            Some(Ball { center: c, radius })
        }
        _ => None,
    }
}

/// Smallest ball enclosing the support points, used when the support set is
/// (numerically) affinely dependent: the best ball over its subsets.
fn support_ball(support: &[Vec3<f64>]) -> Ball {
    if let Some(b) = circumscribed_ball(support) {
        return b;
    }
    let k = support.len();
    let mut best: Option<Ball> = None;
    for mask in 1..(1u32 << k) - 1 {
        let sub: Vec<Vec3<f64>> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| support[i]).collect();
        if let Some(b) = circumscribed_ball(&sub) {
            let covers = support.iter().all(|&p| b.contains(p, 1e-12 * (1.0 + b.radius)));
            if covers && best.is_none_or(|o| b.radius < o.radius) {
                best = Some(b);
            }
        }
    }
    best.unwrap_or(Ball {
        center: support[0],
        radius: 0.0,
    })
}

fn welzl(points: &mut [Vec3<f64>], n: usize, support: &mut Vec<Vec3<f64>>, tol: f64) -> Ball {
    let mut ball = if support.is_empty() {
        Ball {
            center: points[0],
            radius: 0.0,
        }
    } else {
        support_ball(support)
    };
    if support.len() == 4 {
        return ball;
    }
    for i in 0..n {
        if support.is_empty() && i == 0 {
            continue;
        }
        if !ball.contains(points[i], tol) {
            let p = points[i];
            support.push(p);
            ball = welzl(points, i, support, tol);
            support.pop();
            // Move to front.
            points[..=i].rotate_right(1);
        }
    }
    ball
}

/// Exact minimum enclosing ball by Welzl's randomized incremental algorithm
/// (move-to-front variant, deterministic shuffle). The returned radius is
/// `max_i ‖pᵢ − center‖`.
pub fn min_enclosing_ball(points: &[Vec3<f64>]) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::Invalid("minimum enclosing ball of no points".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Invalid("minimum enclosing ball of non-finite points".into()));
    }
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x006d_6562));
    let extent = pts.iter().map(|&p| (p - pts[0]).norm()).fold(0.0, f64::max);
    let tol = 1e-13 * extent;
    let ball = welzl(&mut pts, points.len(), &mut Vec::with_capacity(4), tol);
    let radius = points.iter().map(|&p| (p - ball.center).norm()).fold(0.0, f64::max);
    Ok(Ball { center: ball.center, radius })
}

/// Result of the cooperative-measuring consistency check.
#[derive(Debug, Clone, PartialEq)]
pub struct BallConsistency {
    pub mode: EvalMode,
    /// Fitted ball per posture, in the tool-flange frame.
    pub fits: Vec<SphereFit>,
    /// Minimum enclosing ball of the fitted centers.
    pub meb: Ball,
}

impl BallConsistency {
    /// Radius of the minimum enclosing ball of the centers, meters.
    pub fn r_meb(&self) -> f64 {
        self.meb.radius
    }

    pub fn to_file(&self) -> BallReportFile {
        let mm = |v: Vec3<f64>| [v.0[0] * 1e3, v.0[1] * 1e3, v.0[2] * 1e3];
        BallReportFile {
            mode: self.mode.to_string(),
            centers_mm: self.fits.iter().map(|f| mm(f.center)).collect(),
            radii_mm: self.fits.iter().map(|f| f.radius * 1e3).collect(),
            rms_mm: self.fits.iter().map(|f| f.rms * 1e3).collect(),
            meb_center_mm: mm(self.meb.center),
            r_meb_mm: self.meb.radius * 1e3,
        }
    }
}

/// Joint readings `(q_a, q_c)` and sensor-frame points of one posture.
pub type PostureCloud = (Vec<f64>, Vec<f64>, Vec<Vec3<f64>>);

/// Maps every sensor-frame point into the tool-flange frame,
/// `p' = C⁻¹ Y⁻¹ A X p`, fits a sphere per posture and returns the minimum
/// enclosing ball of the fitted centers. `postures[i]` holds the joint
/// readings `(q_a, q_c)` and the points of posture `i`.
pub fn ball_consistency(
    postures: &[PostureCloud],
    x: &Pose<f64>,
    y: &Pose<f64>,
    sensor_arm: &RobotModel<f64>,
    tool_arm: &RobotModel<f64>,
    mode: EvalMode,
) -> Result<BallConsistency> {
    if postures.is_empty() {
        return Err(Error::Invalid("ball consistency needs at least one posture".into()));
    }
    let fits = postures
        .iter()
        .enumerate()
        .map(|(index, (qa, qc, pts))| {
            let wrap = |e: Error| Error::Posture { index, source: Box::new(e) };
            let a = forward_kinematics(sensor_arm, qa).map_err(wrap)?;
            let c = forward_kinematics(tool_arm, qc).map_err(wrap)?;
            let to_tool = c.inverse() * y.inverse() * a * *x;
            let mapped: Vec<Vec3<f64>> = pts.iter().map(|&p| to_tool.transform_point(p)).collect();
            sphere_fit(&mapped).map_err(wrap)
        })
        .collect::<Result<Vec<_>>>()?;
    let centers: Vec<Vec3<f64>> = fits.iter().map(|f| f.center).collect();
    let meb = min_enclosing_ball(&centers)?;
    Ok(BallConsistency { mode, fits, meb })
}
