//! Rank-one extraction of a coordinate triple from the SDP solution and the
//! sub-optimality certificate.

use crate::error::{Error, Result};
use crate::liegroup::Pose;
use crate::numerics::{project_to_so3, sym_eig, Mat3, SymMatrix, Vec3};
use crate::sdp::layout::{lift, LiftedBlocks, LiftedLayout as L};
use crate::sdp::problem::SdpProblem;

/// Relative floor on `p_sdp` in the denominator of η (times `tr Q`).
pub const ETA_FLOOR_REL: f64 = 1e-12;

/// Triple recovered from a (near) rank-one `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Re-lift of the projected triple; feasible for the lifted problem.
    pub w_star: Vec<f64>,
    pub x: Pose<f64>,
    pub y: Pose<f64>,
    pub z: Pose<f64>,
    /// `λ₂ / λ₁` of `W` (clamped to `[0, 1]`).
    pub rank_ratio: f64,
    /// Leading eigenvalue of `W`.
    pub lambda1: f64,
}

/// Extracts from `W` via its leading eigenpair.
pub fn extract(w: &SymMatrix<f64>) -> Result<Extraction> {
    let e = sym_eig(w)?;
    let v1 = e.vector(0);
    let lambda2 = e.values.get(1).copied().unwrap_or(0.0);
    extract_rank_one(e.values[0], &v1, lambda2)
}

/// Extraction from an explicit leading eigenpair (`v1` of either sign).
pub fn extract_rank_one(lambda1: f64, v1: &[f64], lambda2: f64) -> Result<Extraction> {
    if !(lambda1 > 0.0) || v1.len() != L::DIM {
        return Err(Error::DegenerateSolution { lambda: lambda1 });
    }
    let root = lambda1.sqrt();
    let mut wbar: Vec<f64> = v1.iter().map(|&x| root * x).collect();
    let h = wbar[L::HOMOG];
    if h.abs() <= 1e-12 * root {
        return Err(Error::DegenerateSolution { lambda: lambda1 });
    }
    // Sign fix (w[132] > 0) and rescaling to w[132] = 1 in one step.
    wbar.iter_mut().for_each(|x| *x /= h);
    let raw = LiftedBlocks::read(&wbar);
    let rx = project_to_so3(&raw.rx);
    let ry = project_to_so3(&raw.ry);
    // K_pq ≈ (Rzᵀ)_pq·Ry and V_j ≈ tz_j·Ry, so tr(Ryᵀ·block)/3 reads the scalar.
    let rzt = Mat3(std::array::from_fn(|p| {
        std::array::from_fn(|q| (ry.transpose() * LiftedBlocks::k_block(&wbar, p, q)).trace() / 3.0)
    }));
    let rz = project_to_so3(&rzt.transpose());
    let tz = Vec3(std::array::from_fn(|j| (ry.transpose() * LiftedBlocks::v_block(&wbar, j)).trace() / 3.0));
    let x = Pose::new(rx, raw.tx);
    let y = Pose::new(ry, raw.ty);
    let z = Pose::new(rz, tz);
    let rank_ratio = (lambda2 / lambda1).clamp(0.0, 1.0);
    Ok(Extraction {
        w_star: lift(&x, &y, &z),
        x,
        y,
        z,
        rank_ratio,
        lambda1,
    })
}

/// Sub-optimality certificate of a feasible candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// `(w*ᵀQw* − p_sdp) / max(p_sdp, ETA_FLOOR_REL·tr Q)`.
    pub eta: f64,
    /// Absolute gap `w*ᵀQw* − p_sdp`.
    pub gap: f64,
    /// Candidate cost `w*ᵀQw*`.
    pub candidate_cost: f64,
}

/// Computes η for a feasible (re-lifted) candidate against the SDP bound.
pub fn certify(w_star: &[f64], problem: &SdpProblem, p_sdp: f64) -> Certificate {
    certificate(problem.objective(w_star), p_sdp, problem.trace_q())
}

/// η from a candidate cost, the SDP bound and `tr Q`.
pub fn certificate(candidate_cost: f64, p_sdp: f64, trace_q: f64) -> Certificate {
    let gap = candidate_cost - p_sdp;
    let floor = ETA_FLOOR_REL * trace_q;
    Certificate {
        eta: gap / p_sdp.max(floor),
        gap,
        candidate_cost,
    }
}
