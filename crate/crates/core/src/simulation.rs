//! Synthetic dual-arm data: valid configuration sampling, leveled kinematic
//! perturbation, leveled measurement noise and ground-truth bookkeeping.
//!
//! All randomness flows from one seeded [`ChaCha8Rng`] stream in a fixed
//! order (kinematic perturbation, then configurations, then noise), so a
//! dataset is reproduced exactly from its seed and configuration.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chain::{predict_b_composed, DualArmSystem, MeasurementSample, Q_MIN_DEFAULT};
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, perturb_model, RobotModel};
use crate::liegroup::{exp_se3, Pose, Twist};
use crate::numerics::Vec3;

const LEVELS_JSON: &str = include_str!("../assets/levels.json");

/// `E‖N(0, σ²I₃)‖ = σ·√(8/π)`.
pub fn chi3_mean_factor() -> f64 {
    (8.0 / std::f64::consts::PI).sqrt()
}

/// Severity levels, ordered from low to quite high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    /// No perturbation at all.
    #[serde(rename = "none")]
    None,
    L,
    ML,
    M,
    MH,
    H,
    QH,
}

impl Level {
    /// The six graded levels (excluding [`Level::None`]).
    pub const GRADED: [Level; 6] = [Level::L, Level::ML, Level::M, Level::MH, Level::H, Level::QH];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::None => "none",
            Level::L => "L",
            Level::ML => "ML",
            Level::M => "M",
            Level::MH => "MH",
            Level::H => "H",
            Level::QH => "QH",
        }
    }

    /// Reference mean end-effector pose deviation `(degrees, millimeters)`
    /// that the kinematic level is meant to induce.
    pub fn kinematic_target(self) -> (f64, f64) {
        match self {
            Level::None => (0.0, 0.0),
            Level::L => (0.054, 0.417),
            Level::ML => (0.103, 1.083),
            Level::M => (0.264, 1.818),
            Level::MH => (0.427, 2.861),
            Level::H => (0.692, 5.567),
            Level::QH => (1.423, 8.297),
        }
    }

    /// Reference mean measurement-noise magnitude `(degrees, millimeters)`.
    pub fn noise_target(self) -> (f64, f64) {
        match self {
            Level::None => (0.0, 0.0),
            Level::L => (0.032, 0.080),
            Level::ML => (0.080, 0.160),
            Level::M => (0.128, 0.479),
            Level::MH => (0.160, 0.798),
            Level::H => (0.239, 1.277),
            Level::QH => (0.319, 1.596),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Level::None),
            "L" => Ok(Level::L),
            "ML" => Ok(Level::ML),
            "M" => Ok(Level::M),
            "MH" => Ok(Level::MH),
            "H" => Ok(Level::H),
            "QH" => Ok(Level::QH),
            other => Err(Error::Invalid(format!("unknown level '{other}' (expected none, L, ML, M, MH, H or QH)"))),
        }
    }
}

/// Isotropic Gaussian measurement noise on the twist of `ΔB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub tag: Level,
    /// Per-axis standard deviation of the rotation part, radians.
    pub rot_sigma: f64,
    /// Per-axis standard deviation of the translation part, meters.
    pub trans_sigma: f64,
}

impl NoiseLevel {
    /// Sigmas solved analytically so that the mean noise magnitude equals
    /// the level's reference mean.
    pub fn from_level(tag: Level) -> Self {
        let (deg, mm) = tag.noise_target();
        let k = chi3_mean_factor();
        Self {
            tag,
            rot_sigma: deg.to_radians() / k,
            trans_sigma: mm * 1e-3 / k,
        }
    }

    /// Draws one noise twist `[δω; δρ]`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Twist<f64> {
        let mut g = || -> f64 { rng.sample(StandardNormal) };
        let w = Vec3::new(g(), g(), g()).scale(self.rot_sigma);
        let r = Vec3::new(g(), g(), g()).scale(self.trans_sigma);
        Twist::new(w, r)
    }
}

/// Per-joint kinematic twist perturbation scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinLevel {
    pub tag: Level,
    /// Per-axis standard deviation of each joint twist's rotation part.
    pub twist_sigma_rot: f64,
    /// Per-axis standard deviation of each joint twist's translation part.
    pub twist_sigma_trans: f64,
}

/// Frozen tuning results for the kinematic levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelsFile {
    /// How the values were produced.
    pub procedure: String,
    pub kinematic: Vec<KinLevel>,
}

impl KinLevel {
    /// The frozen, tuned scales for `tag` (zero for [`Level::None`]).
    pub fn from_level(tag: Level) -> Result<Self> {
        if tag == Level::None {
            return Ok(Self {
                tag,
                twist_sigma_rot: 0.0,
                twist_sigma_trans: 0.0,
            });
        }
        let file: LevelsFile = crate::formats::from_json(LEVELS_JSON, "bundled level table")?;
        file.kinematic
            .into_iter()
            .find(|k| k.tag == tag)
            .ok_or_else(|| Error::Invalid(format!("level table has no entry for {tag}")))
    }

    /// Draws one increment per joint of an `n`-joint arm.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Twist<f64>> {
        (0..n)
            .map(|_| {
                let mut g = || -> f64 { rng.sample(StandardNormal) };
                let w = Vec3::new(g(), g(), g()).scale(self.twist_sigma_rot);
                let r = Vec3::new(g(), g(), g()).scale(self.twist_sigma_trans);
                Twist::new(w, r)
            })
            .collect()
    }
}

/// Rejection-sampling rules for valid configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityRules {
    /// Every joint must satisfy `|q| ≥ q_min` (radians).
    pub q_min: f64,
    /// Consecutive samples must differ by at least this much in the joint-space
    /// ∞-norm over both arms (radians).
    pub d_min: f64,
    /// Joints are drawn uniformly from `[−q_max, q_max]`.
    pub q_max: f64,
    /// Draw budget per requested sample.
    pub draws_per_sample: usize,
}

impl Default for ValidityRules {
    fn default() -> Self {
        Self {
            q_min: Q_MIN_DEFAULT,
            d_min: 0.3,
            q_max: std::f64::consts::PI,
            draws_per_sample: 1000,
        }
    }
}

impl ValidityRules {
    /// Whether a single configuration satisfies the per-joint rule.
    pub fn joints_ok(&self, q: &[f64]) -> bool {
        q.iter().all(|v| v.abs() >= self.q_min && v.abs() <= self.q_max)
    }
}

/// Joint-space ∞-norm distance between two configuration pairs.
pub fn config_distance(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .chain(a.1.iter().zip(&b.1))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Draws `m` valid configuration pairs `(q_a, q_c)` for arms with `n` joints.
pub fn sample_configurations<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R, rules: &ValidityRules) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    if m == 0 || n == 0 {
        return Err(Error::Invalid("need at least one sample and one joint".into()));
    }
    if !(rules.q_min >= 0.0 && rules.q_max > 0.0 && rules.d_min >= 0.0) {
        return Err(Error::Invalid("validity thresholds must be non-negative".into()));
    }
    let cap = rules.draws_per_sample.saturating_mul(m);
    let mut out: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(m);
    let mut draws = 0;
    while out.len() < m {
        if draws >= cap {
            return Err(Error::InfeasibleRules { draws });
        }
        draws += 1;
        let mut q = || (0..n).map(|_| rng.random_range(-rules.q_max..=rules.q_max)).collect::<Vec<f64>>();
        let cand = (q(), q());
        if !rules.joints_ok(&cand.0) || !rules.joints_ok(&cand.1) {
            continue;
        }
        if let Some(prev) = out.last() {
            if config_distance(prev, &cand) < rules.d_min {
                continue;
            }
        }
        out.push(cand);
    }
    Ok(out)
}

/// Mean ± standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

/// End-effector deviation between nominal and perturbed kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    /// Rotation deviation, degrees.
    pub rot_deg: MeanStd,
    /// Translation deviation, millimeters.
    pub trans_mm: MeanStd,
    /// Number of (arm, configuration) evaluations pooled.
    pub count: usize,
}

/// Rotation angle (radians) and translation distance (meters) between poses.
pub fn pose_deviation(a: &Pose<f64>, b: &Pose<f64>) -> (f64, f64) {
    let rel = a.inverse() * *b;
    (rel.rotation_angle(), (a.t - b.t).norm())
}

/// Deviation of perturbed against nominal flange poses, pooled over both
/// arms, at the given configurations.
pub fn deviation_report(
    nominal: (&RobotModel<f64>, &RobotModel<f64>),
    perturbed: (&RobotModel<f64>, &RobotModel<f64>),
    configs: &[(Vec<f64>, Vec<f64>)],
) -> Result<DeviationReport> {
    let mut rot = Vec::with_capacity(2 * configs.len());
    let mut trans = Vec::with_capacity(2 * configs.len());
    for (qa, qc) in configs {
        for (nom, per, q) in [(nominal.0, perturbed.0, qa), (nominal.1, perturbed.1, qc)] {
            let (r, t) = pose_deviation(&forward_kinematics(nom, q)?, &forward_kinematics(per, q)?);
            rot.push(r.to_degrees());
            trans.push(t * 1e3);
        }
    }
    Ok(DeviationReport {
        rot_deg: MeanStd::of(&rot),
        trans_mm: MeanStd::of(&trans),
        count: rot.len(),
    })
}

/// Uniform random configurations in `[−π, π]` without validity rules (used
/// for deviation reports).
pub fn uniform_configurations<R: Rng + ?Sized>(count: usize, n: usize, rng: &mut R) -> Vec<(Vec<f64>, Vec<f64>)> {
    let pi = std::f64::consts::PI;
    (0..count)
        .map(|_| {
            let mut q = || (0..n).map(|_| rng.random_range(-pi..pi)).collect::<Vec<f64>>();
            (q(), q())
        })
        .collect()
}

/// Number of configurations in the deviation report of [`perturb_level`].
pub const REPORT_CONFIGS: usize = 500;

/// Perturbed arms plus the induced end-effector deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedArms {
    pub sensor_arm: RobotModel<f64>,
    pub tool_arm: RobotModel<f64>,
    /// The increments applied to the sensor-arm and tool-arm joint twists.
    pub sensor_deltas: Vec<Twist<f64>>,
    pub tool_deltas: Vec<Twist<f64>>,
    pub report: DeviationReport,
}

/// Perturbs every joint twist of both arms by `exp(ξ̂)·exp(Δξ̂)` with
/// Gaussian `Δξ` at the given level and reports the induced deviation over
/// [`REPORT_CONFIGS`] random configurations.
pub fn perturb_level<R: Rng + ?Sized>(sensor_arm: &RobotModel<f64>, tool_arm: &RobotModel<f64>, level: &KinLevel, rng: &mut R) -> Result<PerturbedArms> {
    let sensor_deltas = level.draw(sensor_arm.n(), rng);
    let tool_deltas = level.draw(tool_arm.n(), rng);
    let pa = perturb_model(sensor_arm, &sensor_deltas)?;
    let pc = perturb_model(tool_arm, &tool_deltas)?;
    let configs = uniform_configurations(REPORT_CONFIGS, sensor_arm.n(), rng);
    let report = deviation_report((sensor_arm, tool_arm), (&pa, &pc), &configs)?;
    Ok(PerturbedArms {
        sensor_arm: pa,
        tool_arm: pc,
        sensor_deltas,
        tool_deltas,
        report,
    })
}

/// Expected deviation of a kinematic level, estimated by Monte Carlo over
/// `draws` independent perturbations, each evaluated at `configs` random
/// configurations. Uses common random numbers for a fixed seed, so the result
/// is a deterministic, monotone function of the sigmas.
pub fn expected_deviation(
    sensor_arm: &RobotModel<f64>,
    tool_arm: &RobotModel<f64>,
    level: &KinLevel,
    draws: usize,
    configs: usize,
    seed: u64,
) -> Result<DeviationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rot = Vec::with_capacity(2 * draws * configs);
    let mut trans = Vec::with_capacity(2 * draws * configs);
    for _ in 0..draws {
        let pa = perturb_model(sensor_arm, &level.draw(sensor_arm.n(), &mut rng))?;
        let pc = perturb_model(tool_arm, &level.draw(tool_arm.n(), &mut rng))?;
        for (qa, qc) in uniform_configurations(configs, sensor_arm.n(), &mut rng) {
            for (nom, per, q) in [(sensor_arm, &pa, &qa), (tool_arm, &pc, &qc)] {
                let (r, t) = pose_deviation(&forward_kinematics(nom, q)?, &forward_kinematics(per, q)?);
                rot.push(r.to_degrees());
                trans.push(t * 1e3);
            }
        }
    }
    Ok(DeviationReport {
        rot_deg: MeanStd::of(&rot),
        trans_mm: MeanStd::of(&trans),
        count: rot.len(),
    })
}

/// Outcome of tuning one kinematic level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedLevel {
    pub level: KinLevel,
    pub achieved: DeviationReport,
    /// Whether both reference means are matched exactly. False when the
    /// rotation scale alone already induces more translation deviation than
    /// targeted; the translation scale is then zero and the rotation scale is
    /// balanced so that the relative errors of both means are equal and
    /// opposite.
    pub exact: bool,
}

impl TunedLevel {
    /// Largest relative error of the achieved means against the targets.
    pub fn max_relative_error(&self) -> f64 {
        let (deg, mm) = self.level.tag.kinematic_target();
        (self.achieved.rot_deg.mean / deg - 1.0).abs().max((self.achieved.trans_mm.mean / mm - 1.0).abs())
    }
}

/// Smallest `x ≥ 0` with `f(x) ≥ target` for a nondecreasing `f`.
fn bisect_increasing(f: &dyn Fn(f64) -> Result<f64>, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1e-4);
    while f(hi)? < target {
        hi *= 2.0;
        if hi > 1.0 {
            return Err(Error::Invalid("tuning target unreachable below unit sigma".into()));
        }
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tunes the twist scales of a level by bisection so that the expected mean
/// deviation matches the level's reference means. The rotation scale is
/// fixed first (the end-effector rotation does not depend on the
/// translation parts of the joint twists), then the translation scale. When
/// the translation target lies below the floor induced by the rotation scale,
/// see [`TunedLevel::exact`].
pub fn tune_kin_level(sensor_arm: &RobotModel<f64>, tool_arm: &RobotModel<f64>, tag: Level, draws: usize, configs: usize, seed: u64) -> Result<TunedLevel> {
    let (deg, mm) = tag.kinematic_target();
    let eval = |r: f64, t: f64| {
        expected_deviation(
            sensor_arm,
            tool_arm,
            &KinLevel {
                tag,
                twist_sigma_rot: r,
                twist_sigma_trans: t,
            },
            draws,
            configs,
            seed,
        )
    };
    let sr = bisect_increasing(&|r| Ok(eval(r, 0.0)?.rot_deg.mean), deg)?;
    let base = eval(sr, 0.0)?;
    let (sr, st, exact) = if base.trans_mm.mean < mm {
        (sr, bisect_increasing(&|t| Ok(eval(sr, t)?.trans_mm.mean), mm)?, true)
    } else {
        // Both means grow with the rotation scale; balance the relative
        // errors: rot/deg − 1 = 1 − trans/mm.
        let sb = bisect_increasing(
            &|r| {
                let d = eval(r, 0.0)?;
                Ok(d.rot_deg.mean / deg + d.trans_mm.mean / mm)
            },
            2.0,
        )?;
        (sb, 0.0, false)
    };
    Ok(TunedLevel {
        level: KinLevel {
            tag,
            twist_sigma_rot: sr,
            twist_sigma_trans: st,
        },
        achieved: eval(sr, st)?,
        exact,
    })
}

/// Noisy measurements synthesized from ground-truth kinematics.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub samples: Vec<MeasurementSample<f64>>,
    /// Noise-free `B` of every sample.
    pub gt_b: Vec<Pose<f64>>,
}

/// `B_i = gtB_i · exp(δ̂_i)` with `gtB_i` predicted by the ground-truth system.
pub fn synthesize<R: Rng + ?Sized>(system_gt: &DualArmSystem<f64>, configs: &[(Vec<f64>, Vec<f64>)], noise: &NoiseLevel, rng: &mut R) -> Result<Measurements> {
    let mut samples = Vec::with_capacity(configs.len());
    let mut gt_b = Vec::with_capacity(configs.len());
    for (qa, qc) in configs {
        let mut s = MeasurementSample::new(qa.clone(), qc.clone(), Pose::identity());
        let b = predict_b_composed(system_gt, &s)?;
        s.b = if noise.rot_sigma == 0.0 && noise.trans_sigma == 0.0 {
            b
        } else {
            b * exp_se3(&noise.draw(rng))
        };
        gt_b.push(b);
        samples.push(s);
    }
    Ok(Measurements { samples, gt_b })
}

/// What to generate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateConfig {
    /// Calibration samples.
    pub m: usize,
    /// Additional held-out samples (same ground truth, same noise level).
    pub m_test: usize,
    pub kin_level: Level,
    pub noise_level: Level,
    pub rules: ValidityRules,
    pub seed: u64,
}

impl GenerateConfig {
    pub fn new(m: usize, kin_level: Level, noise_level: Level, seed: u64) -> Self {
        Self {
            m,
            m_test: 0,
            kin_level,
            noise_level,
            rules: ValidityRules::default(),
            seed,
        }
    }
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    /// Nominal arm kinematics; `X`, `Y`, `Z` are identity placeholders
    /// because the coordinates are unknown to a calibrator.
    pub system_nominal: DualArmSystem<f64>,
    /// Perturbed kinematics and the true `X`, `Y`, `Z`.
    pub system_gt: DualArmSystem<f64>,
    pub samples: Vec<MeasurementSample<f64>>,
    pub gt_b: Vec<Pose<f64>>,
    pub test_samples: Vec<MeasurementSample<f64>>,
    pub test_gt_b: Vec<Pose<f64>>,
    pub kin_report: DeviationReport,
    pub seed: u64,
    pub kin_level: Level,
    pub noise_level: Level,
}

/// Generates a dataset from a reference system whose arms are the nominal
/// kinematics and whose `X`, `Y`, `Z` are the ground-truth coordinates.
pub fn generate_dataset(reference: &DualArmSystem<f64>, config: &GenerateConfig) -> Result<SyntheticDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let kin = KinLevel::from_level(config.kin_level)?;
    let noise = NoiseLevel::from_level(config.noise_level);
    let perturbed = perturb_level(&reference.sensor_arm, &reference.tool_arm, &kin, &mut rng)?;
    let system_gt = DualArmSystem::new(perturbed.sensor_arm, perturbed.tool_arm, reference.x, reference.y, reference.z)?;
    let n = reference.n();
    let configs = sample_configurations(config.m + config.m_test, n, &mut rng, &config.rules)?;
    let mut meas = synthesize(&system_gt, &configs, &noise, &mut rng)?;
    let test_samples = meas.samples.split_off(config.m);
    let test_gt_b = meas.gt_b.split_off(config.m);
    let system_nominal = DualArmSystem::new(
        reference.sensor_arm.clone(),
        reference.tool_arm.clone(),
        Pose::identity(),
        Pose::identity(),
        Pose::identity(),
    )?;
    Ok(SyntheticDataset {
        system_nominal,
        system_gt,
        samples: meas.samples,
        gt_b: meas.gt_b,
        test_samples,
        test_gt_b,
        kin_report: perturbed.report,
        seed: config.seed,
        kin_level: config.kin_level,
        noise_level: config.noise_level,
    })
}

/// Point clouds of a ball rigidly attached to the tool flange, observed by
/// the sensor at each posture.
#[derive(Debug, Clone, PartialEq)]
pub struct BallClouds {
    /// Ball center in the tool-flange frame, meters.
    pub center_tool: Vec3<f64>,
    pub radius: f64,
    pub postures: Vec<BallPosture>,
}

/// One posture of the cooperative-measuring scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPosture {
    pub q_a: Vec<f64>,
    pub q_c: Vec<f64>,
    /// Surface points in the sensor frame, meters.
    pub points: Vec<Vec3<f64>>,
}

/// Samples `points` surface points of the ball per posture (uniform
/// directions, optional isotropic noise of `point_sigma` meters) and maps
/// them into the sensor frame with the ground-truth system:
/// `p_sensor = (A X)⁻¹ · Y C · p_tool`.
pub fn ball_clouds<R: Rng + ?Sized>(
    system_gt: &DualArmSystem<f64>,
    configs: &[(Vec<f64>, Vec<f64>)],
    center_tool: Vec3<f64>,
    radius: f64,
    points: usize,
    point_sigma: f64,
    rng: &mut R,
) -> Result<BallClouds> {
    let mut postures = Vec::with_capacity(configs.len());
    for (qa, qc) in configs {
        let a = forward_kinematics(&system_gt.sensor_arm, qa)?;
        let c = forward_kinematics(&system_gt.tool_arm, qc)?;
        let tool_to_sensor = (a * system_gt.x).inverse() * system_gt.y * c;
        let pts = (0..points)
            .map(|_| {
                let mut g = || -> f64 { rng.sample(StandardNormal) };
                let d = Vec3::new(g(), g(), g());
                let dir = d.scale(1.0 / d.norm().max(1e-300));
                let mut p = center_tool + dir.scale(radius);
                if point_sigma > 0.0 {
                    p = p + Vec3::new(g(), g(), g()).scale(point_sigma);
                }
                tool_to_sensor.transform_point(p)
            })
            .collect();
        postures.push(BallPosture {
            q_a: qa.clone(),
            q_c: qc.clone(),
            points: pts,
        });
    }
    Ok(BallClouds {
        center_tool,
        radius,
        postures,
    })
}
