//! Certifiable coordinate-only initialization of `X`, `Y`, `Z`.
//!
//! The coordinate problem is lifted to a quadratically constrained quadratic
//! program over `w ∈ R¹³³` ([`layout`]), relaxed to a semidefinite program
//! over `W ⪰ 0` ([`problem`]), solved by ADMM ([`admm`]), and rounded back to
//! a feasible triple whose sub-optimality is certified by η ([`extract`]).
//! This stage runs in `f64` only.

pub mod admm;
pub mod extract;
pub mod layout;
pub mod problem;
pub mod psd;

pub use admm::{solve_sdp, AdmmConfig, SdpSolution};
pub use extract::{certificate, certify, extract, extract_rank_one, Certificate, Extraction, ETA_FLOOR_REL};
pub use layout::{lift, LiftedLayout};
pub use problem::{
    build_constraints, build_factor, build_objective, sample_operators, ConstraintFamily, PoseTriple, QuadConstraint, SdpProblem, SparseSym, DEFAULT_ALPHA,
    NUM_CONSTRAINTS,
};

use crate::chain::{DualArmSystem, MeasurementSample};
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, RobotModel};

/// Settings of the full initialization pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    /// Translation weight α in `‖f‖² + α²‖g‖²`.
    pub alpha: f64,
    pub admm: AdmmConfig,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            admm: AdmmConfig::default(),
        }
    }
}

/// Everything produced by [`initialize`].
#[derive(Debug, Clone, PartialEq)]
pub struct InitResult {
    pub solution: SdpSolution,
    pub extraction: Extraction,
    pub certificate: Certificate,
}

/// Pairs each measurement with the forward kinematics of the given arm models.
pub fn pose_triples(sensor_arm: &RobotModel<f64>, tool_arm: &RobotModel<f64>, samples: &[MeasurementSample<f64>]) -> Result<Vec<PoseTriple>> {
    samples
        .iter()
        .map(|s| {
            Ok(PoseTriple {
                a: forward_kinematics(sensor_arm, &s.q_a)?,
                b: s.b,
                c: forward_kinematics(tool_arm, &s.q_c)?,
            })
        })
        .collect()
}

/// Builds, solves, extracts and certifies the relaxation for the given
/// correspondences.
pub fn initialize_from_triples(triples: &[PoseTriple], config: &InitConfig) -> Result<InitResult> {
    if triples.is_empty() {
        return Err(Error::Invalid("initialization needs at least one sample".into()));
    }
    let problem = SdpProblem::new(triples, config.alpha);
    let solution = solve_sdp(&problem, &config.admm)?;
    let extraction = extract(&solution.w)?;
    let certificate = certify(&extraction.w_star, &problem, solution.p_sdp);
    log::info!(
        "initialization: eta = {:.3e}, gap = {:.3e}, rank ratio = {:.3e}",
        certificate.eta,
        certificate.gap,
        extraction.rank_ratio
    );
    Ok(InitResult {
        solution,
        extraction,
        certificate,
    })
}

/// Coordinate initialization using the (nominal) kinematics of `system`;
/// the system's own `X`, `Y`, `Z` are ignored.
pub fn initialize(system: &DualArmSystem<f64>, samples: &[MeasurementSample<f64>], config: &InitConfig) -> Result<InitResult> {
    let triples = pose_triples(&system.sensor_arm, &system.tool_arm, samples)?;
    initialize_from_triples(&triples, config)
}
