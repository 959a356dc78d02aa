//! Command-line pipelines of the `dualcal` toolkit.
//!
//! Every subcommand reads and writes the JSON formats documented in
//! `docs/formats.md`. Exit codes: 0 on success, 2 on invalid usage or input,
//! 3 on a numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dualcal::chain::{stack, CalibrationState, DualArmSystem, Q_MIN_DEFAULT};
use dualcal::evaluation::{ball_consistency, evaluate, EvalMode};
use dualcal::formats::{
    default_system_file, from_json, to_json, BallCloudsFile, CalibrationFile, DatasetFile, IdentifiabilityFile, InitFile, SampleFile, SystemFile,
};
use dualcal::numerics::Vec3;
use dualcal::sdp::{initialize, AdmmConfig, InitConfig};
use dualcal::simulation::{ball_clouds, generate_dataset, sample_configurations, GenerateConfig, Level, ValidityRules};
use dualcal::solver::{solve, SolverConfig, UpdateMode};

/// Exit code for invalid usage or input.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

/// Nominal radius of the calibration ball, meters.
pub const BALL_RADIUS: f64 = 0.0254114;
/// Ball center in the tool-flange frame used for synthetic clouds, meters.
pub const BALL_CENTER_TOOL: [f64; 3] = [0.0, 0.03, 0.12];

#[derive(Debug, Parser)]
#[command(name = "dualcal", version, about = "Joint coordinate and kinematic calibration of dual-arm robots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (and optionally a held-out set and ball clouds).
    Generate(GenerateArgs),
    /// Certifiable coordinate initialization of X, Y, Z.
    Init(InitArgs),
    /// Unified refinement of coordinates and joint twists.
    Calibrate(CalibrateArgs),
    /// Closed-loop error statistics of a calibration on a dataset.
    Evaluate(EvaluateArgs),
    /// Rank and excitation diagnostics of a dataset.
    Identifiability(IdentifiabilityArgs),
    /// Cooperative-measuring consistency (sphere fits and minimum enclosing ball).
    BallEval(BallEvalArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// System file whose arms are the nominal kinematics and whose X, Y, Z are
    /// the ground truth (default: bundled UR5-like system).
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Number of calibration samples.
    #[arg(long)]
    pub samples: usize,
    /// Number of held-out samples written to `--test-out`.
    #[arg(long, default_value_t = 0)]
    pub test_samples: usize,
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    /// Kinematic perturbation level: none, L, ML, M, MH, H, QH.
    #[arg(long)]
    pub kin_level: Level,
    /// Measurement noise level: none, L, ML, M, MH, H, QH.
    #[arg(long)]
    pub noise_level: Level,
    #[arg(long)]
    pub seed: u64,
    /// Omit the ground-truth system from the written datasets.
    #[arg(long)]
    pub blind: bool,
    /// Minimum |q| of every joint (rad).
    #[arg(long, default_value_t = Q_MIN_DEFAULT)]
    pub q_min: f64,
    /// Minimum joint-space distance between consecutive samples (rad).
    #[arg(long, default_value_t = 0.3)]
    pub d_min: f64,
    /// Also write ball point clouds observed with the ground-truth system.
    #[arg(long)]
    pub ball_out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub ball_postures: usize,
    #[arg(long, default_value_t = 200)]
    pub ball_points: usize,
    /// Isotropic point noise of the ball clouds (m).
    #[arg(long, default_value_t = 0.0)]
    pub ball_noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AdmmArgs {
    /// Translation weight α of the coordinate objective.
    #[arg(long, default_value_t = dualcal::sdp::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// ADMM stopping tolerance.
    #[arg(long, default_value_t = AdmmConfig::default().tol)]
    pub admm_tol: f64,
    #[arg(long, default_value_t = AdmmConfig::default().max_iters)]
    pub admm_max_iters: usize,
}

impl AdmmArgs {
    fn config(&self) -> InitConfig {
        InitConfig {
            alpha: self.alpha,
            admm: AdmmConfig {
                tol: self.admm_tol,
                max_iters: self.admm_max_iters,
                ..AdmmConfig::default()
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub admm: AdmmArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateArg {
    Additive,
    Multiplicative,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Initialization file; when omitted the SDP initialization runs first.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Stop once ‖δξ‖∞ ≤ tol.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Damping λ of the normal equations.
    #[arg(long, default_value_t = 1e-3)]
    pub damping: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = UpdateArg::Additive)]
    pub update: UpdateArg,
    /// Reject residual-increasing steps and adapt λ.
    #[arg(long)]
    pub adaptive_damping: bool,
    #[command(flatten)]
    pub admm: AdmmArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    CoordinateOnly,
    Joint,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::CoordinateOnly => EvalMode::CoordinateOnly,
            ModeArg::Joint => EvalMode::Joint,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset to evaluate on (typically a held-out set).
    #[arg(long)]
    pub data: PathBuf,
    /// Calibration file (coordinates and calibrated arms).
    #[arg(long, conflicts_with = "init", required_unless_present = "init")]
    pub calib: Option<PathBuf>,
    /// Initialization file (coordinates only; implies nominal kinematics).
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Joint)]
    pub mode: ModeArg,
    /// Compute A and C with the dataset's nominal kinematics (coordinate_only mode).
    #[arg(long)]
    pub nominal_kinematics: bool,
    /// Also write box-plot quantiles as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IdentifiabilityArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Linearize at this calibration (default: ground truth if present,
    /// otherwise the nominal system).
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Excitation threshold on |q| (rad).
    #[arg(long, default_value_t = Q_MIN_DEFAULT)]
    pub q_min: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BallEvalArgs {
    #[arg(long)]
    pub clouds: PathBuf,
    #[arg(long)]
    pub calib: PathBuf,
    /// Use nominal kinematics (from `--system`) instead of the calibrated arms.
    #[arg(long)]
    pub nominal_kinematics: bool,
    /// System file providing nominal arms (default: bundled system).
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Error tagged with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

fn classify(error: anyhow::Error) -> Failure {
    let numerical = error
        .chain()
        .find_map(|e| e.downcast_ref::<dualcal::Error>())
        .is_some_and(|e| !e.is_input_error());
    Failure {
        code: if numerical { EXIT_NUMERICAL } else { EXIT_INPUT },
        error,
    }
}

/// Parses `argv` and runs the selected subcommand, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

/// Runs a parsed command.
pub fn execute(command: &Command) -> Result<(), Failure> {
    let r = match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Init(a) => cmd_init(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Identifiability(a) => cmd_identifiability(a),
        Command::BallEval(a) => cmd_ball_eval(a),
    };
    r.map_err(classify)
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(from_json(&text, &path.display().to_string())?)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write_text(path, &(to_json(value) + "\n"))
}

/// Fails early when an input is missing or an output directory does not exist.
fn check_paths(inputs: &[&Path], outputs: &[&Path]) -> anyhow::Result<()> {
    for p in inputs {
        if !p.is_file() {
            bail!("input file {} does not exist", p.display());
        }
    }
    for p in outputs {
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    }
    Ok(())
}

fn load_system(path: Option<&Path>) -> anyhow::Result<DualArmSystem<f64>> {
    let file: SystemFile = match path {
        Some(p) => read_json(p)?,
        None => default_system_file()?,
    };
    Ok(file.to_system()?)
}

fn cmd_generate(a: &GenerateArgs) -> anyhow::Result<()> {
    let mut outputs = vec![a.out.as_path()];
    outputs.extend(a.test_out.as_deref());
    outputs.extend(a.ball_out.as_deref());
    let inputs: Vec<&Path> = a.system.as_deref().into_iter().collect();
    check_paths(&inputs, &outputs)?;
    if a.test_samples > 0 && a.test_out.is_none() {
        bail!("--test-samples requires --test-out");
    }
    if a.test_out.is_some() && a.test_samples == 0 {
        bail!("--test-out requires --test-samples > 0");
    }
    let reference = load_system(a.system.as_deref())?;
    let config = GenerateConfig {
        m: a.samples,
        m_test: a.test_samples,
        kin_level: a.kin_level,
        noise_level: a.noise_level,
        rules: ValidityRules {
            q_min: a.q_min,
            d_min: a.d_min,
            ..ValidityRules::default()
        },
        seed: a.seed,
    };
    let data = generate_dataset(&reference, &config)?;
    log::info!(
        "kinematic deviation: rotation {:.4} ± {:.4} deg, translation {:.4} ± {:.4} mm",
        data.kin_report.rot_deg.mean,
        data.kin_report.rot_deg.std,
        data.kin_report.trans_mm.mean,
        data.kin_report.trans_mm.std
    );
    let dataset = |samples: &[dualcal::MeasurementSample<f64>]| DatasetFile {
        nominal_system: SystemFile::from_system(&data.system_nominal),
        gt_system: (!a.blind).then(|| SystemFile::from_system(&data.system_gt)),
        samples: samples.iter().map(SampleFile::from_sample).collect(),
        seed: a.seed,
        kin_level: a.kin_level.to_string(),
        noise_level: a.noise_level.to_string(),
    };
    write_json(&a.out, &dataset(&data.samples))?;
    if let Some(p) = &a.test_out {
        write_json(p, &dataset(&data.test_samples))?;
    }
    if let Some(p) = &a.ball_out {
        // Independent stream so that ball clouds never alter the datasets.
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0xba11_c10d);
        let configs = sample_configurations(a.ball_postures, data.system_gt.n(), &mut rng, &config.rules)?;
        let clouds = ball_clouds(&data.system_gt, &configs, Vec3(BALL_CENTER_TOOL), BALL_RADIUS, a.ball_points, a.ball_noise, &mut rng)?;
        write_json(p, &BallCloudsFile::from_clouds(&clouds))?;
    }
    Ok(())
}

fn run_init(dataset: &DatasetFile, admm: &AdmmArgs) -> anyhow::Result<InitFile> {
    let nominal = dataset.nominal_system.to_system()?;
    let samples = dataset.samples()?;
    let r = initialize(&nominal, &samples, &admm.config())?;
    if !r.solution.converged {
        log::warn!(
            "SDP solver stopped after {} iterations without reaching tolerance (primal {:.2e}, dual {:.2e})",
            r.solution.iterations,
            r.solution.primal_res,
            r.solution.dual_res
        );
    }
    log::info!("initialization certificate eta = {:.3e}, rank ratio = {:.3e}", r.certificate.eta, r.extraction.rank_ratio);
    Ok(InitFile::from_result(&r))
}

fn cmd_init(a: &InitArgs) -> anyhow::Result<()> {
    check_paths(&[&a.data], &[&a.out])?;
    let dataset: DatasetFile = read_json(&a.data)?;
    write_json(&a.out, &run_init(&dataset, &a.admm)?)
}

fn cmd_calibrate(a: &CalibrateArgs) -> anyhow::Result<()> {
    let mut inputs = vec![a.data.as_path()];
    inputs.extend(a.init.as_deref());
    check_paths(&inputs, &[&a.out])?;
    let config = SolverConfig {
        damping: a.damping,
        tol_inf: a.tol,
        max_iters: a.max_iters,
        update_mode: match a.update {
            UpdateArg::Additive => UpdateMode::Additive,
            UpdateArg::Multiplicative => UpdateMode::Multiplicative,
        },
        adaptive_damping: a.adaptive_damping,
    };
    config.validate()?;
    let dataset: DatasetFile = read_json(&a.data)?;
    let init = match &a.init {
        Some(p) => read_json::<InitFile>(p)?,
        None => run_init(&dataset, &a.admm)?,
    };
    let nominal = dataset.nominal_system.to_system()?;
    let samples = dataset.samples()?;
    let (x, y, z) = init.poses()?;
    let start = CalibrationState::from_parts(&nominal.sensor_arm, &nominal.tool_arm, &x, &y, &z)?;
    let (state, trace) = solve(&start, &samples, &config)?;
    if !trace.converged {
        log::warn!("calibration stopped after {} iterations without reaching tolerance", trace.iterations);
    }
    log::info!(
        "calibration: residual {:.3e} -> {:.3e} in {} iterations",
        trace.initial_residual_norm,
        trace.final_residual_norm,
        trace.iterations
    );
    let file = CalibrationFile::new(&state, &trace, init, (&nominal.sensor_arm.name, &nominal.tool_arm.name));
    write_json(&a.out, &file)
}

fn cmd_evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    let mut inputs = vec![a.data.as_path()];
    inputs.extend(a.calib.as_deref());
    inputs.extend(a.init.as_deref());
    let mut outputs = vec![a.out.as_path()];
    outputs.extend(a.csv.as_deref());
    check_paths(&inputs, &outputs)?;
    // An initialization carries no kinematics, so it is always evaluated
    // with the nominal arms.
    let mode = if a.nominal_kinematics || a.init.is_some() { EvalMode::CoordinateOnly } else { a.mode.into() };
    let dataset: DatasetFile = read_json(&a.data)?;
    let nominal = dataset.nominal_system.to_system()?;
    let calibrated = match (&a.calib, &a.init) {
        (Some(p), _) => read_json::<CalibrationFile>(p)?.to_system()?,
        (None, Some(p)) => {
            let (x, y, z) = read_json::<InitFile>(p)?.poses()?;
            DualArmSystem::new(nominal.sensor_arm.clone(), nominal.tool_arm.clone(), x, y, z)?
        }
        (None, None) => bail!("one of --calib or --init is required"),
    };
    let report = evaluate(&dataset.samples()?, &calibrated, &nominal, mode)?;
    log::info!(
        "{mode}: mean e_R = {:.4e} deg, mean e_t = {:.4e} mm",
        report.e_r.mean.to_degrees(),
        report.e_t.mean * 1e3
    );
    write_json(&a.out, &report.to_file())?;
    if let Some(p) = &a.csv {
        write_text(p, &report.to_csv())?;
    }
    Ok(())
}

fn cmd_identifiability(a: &IdentifiabilityArgs) -> anyhow::Result<()> {
    let mut inputs = vec![a.data.as_path()];
    inputs.extend(a.calib.as_deref());
    check_paths(&inputs, &[&a.out])?;
    let dataset: DatasetFile = read_json(&a.data)?;
    let system = match (&a.calib, &dataset.gt_system) {
        (Some(p), _) => read_json::<CalibrationFile>(p)?.to_system()?,
        (None, Some(gt)) => gt.to_system()?,
        (None, None) => dataset.nominal_system.to_system()?,
    };
    let samples = dataset.samples()?;
    let state = CalibrationState::from_system(&system)?;
    let (_, j) = stack(&state, &samples)?;
    let report = dualcal::chain::identifiability_report(&j, &samples, a.q_min);
    log::info!(
        "numeric rank {} of {} (gauge {}), {} excitation violations",
        report.rank,
        report.dim,
        report.gauge_dim,
        report.violations.len()
    );
    write_json(&a.out, &IdentifiabilityFile::from_report(&report))
}

fn cmd_ball_eval(a: &BallEvalArgs) -> anyhow::Result<()> {
    let mut inputs = vec![a.clouds.as_path(), a.calib.as_path()];
    inputs.extend(a.system.as_deref());
    check_paths(&inputs, &[&a.out])?;
    let clouds: BallCloudsFile = read_json(&a.clouds)?;
    let calibrated = read_json::<CalibrationFile>(&a.calib)?.to_system()?;
    let (mode, sensor_arm, tool_arm) = if a.nominal_kinematics {
        let nominal = load_system(a.system.as_deref())?;
        (EvalMode::CoordinateOnly, nominal.sensor_arm, nominal.tool_arm)
    } else {
        (EvalMode::Joint, calibrated.sensor_arm.clone(), calibrated.tool_arm.clone())
    };
    let result = ball_consistency(&clouds.postures(), &calibrated.x, &calibrated.y, &sensor_arm, &tool_arm, mode)?;
    log::info!("{mode}: r_MEB = {:.4} mm", result.r_meb() * 1e3);
    write_json(&a.out, &result.to_file())
}
