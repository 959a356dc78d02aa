//! Operator-splitting (ADMM) solver for the standard-form SDP
//!
//! ```text
//! minimize ⟨Q, W⟩  subject to  ⟨H_j, W⟩ = ρ_j,  W ⪰ 0.
//! ```
//!
//! The iterate is split into an affine copy `X` and a conic copy `Z`:
//! `X ← P_aff(Z − U − Q/σ)`, `Z ← Π_PSD(X̂ + U)`, `U ← U + X̂ − Z` with the
//! over-relaxed `X̂ = αX + (1 − α)Z`. The affine projection uses a
//! precomputed pseudo-inverse of the constraint Gram matrix (the Frobenius
//! least-norm correction, equivalent to working in scaled-svec coordinates);
//! the PSD projection clamps eigenvalues ([`crate::sdp::psd`]). `Q` is
//! normalized to unit Frobenius norm internally.
//!
//! The sweep `(Z, U) ↦ (Z⁺, U⁺)` is a fixed-point map; it is accelerated by
//! safeguarded type-II Anderson extrapolation (an extrapolated point is kept
//! only if it reduces the fixed-point residual, otherwise the plain step is
//! taken and the history is cleared). The penalty σ is rebalanced every
//! `adapt_every` sweeps when one residual dominates the other tenfold.

use crate::error::{Error, Result};
use crate::numerics::{sym_eig_tridiagonal, SymMatrix};
use crate::sdp::problem::SdpProblem;
use crate::sdp::psd::project_psd;

/// ADMM settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    /// Stop when both residuals are below `tol·(1 + ‖Q̃‖_F)` (`Q̃ = Q/‖Q‖_F`).
    pub tol: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Initial penalty σ.
    pub sigma: f64,
    /// Residual-balancing period for σ (0 disables adaptation).
    pub adapt_every: usize,
    /// Over-relaxation factor in `(0, 2)`; 1 is plain ADMM.
    pub relaxation: f64,
    /// Anderson-acceleration memory (0 disables acceleration).
    pub anderson_memory: usize,
    /// An accelerated point is kept only if its fixed-point residual is at
    /// most this factor times the residual of the point it replaces.
    pub anderson_safeguard: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 50_000,
            sigma: 1.0,
            adapt_every: 50,
            relaxation: 1.0,
            anderson_memory: 10,
            anderson_safeguard: 1.0,
        }
    }
}

/// Output of [`solve_sdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Positive semidefinite solution `W` (the conic iterate).
    pub w: SymMatrix<f64>,
    /// `tr(Q W)` in the units of the input `Q` (see [`SdpProblem::objective_lifted`]).
    pub p_sdp: f64,
    /// Final `‖X − Z‖_F`.
    pub primal_res: f64,
    /// Final `σ‖Z_k − Z_{k−1}‖_F` (normalized objective scale).
    pub dual_res: f64,
    pub iterations: usize,
    /// Whether both residuals met the tolerance before the cap.
    pub converged: bool,
    /// Largest `|⟨H_j, W⟩ − ρ_j|`.
    pub max_violation: f64,
    /// The absolute convergence threshold used, `tol·(1 + ‖Q̃‖_F)`.
    pub threshold: f64,
}

/// Pseudo-inverse of the constraint Gram matrix `G_ij = ⟨H_i, H_j⟩`.
fn gram_pinv(problem: &SdpProblem) -> Result<Vec<f64>> {
    let m = problem.constraints.len();
    let g = SymMatrix::from_upper_fn(m, |i, j| problem.constraints[i].h.inner(&problem.constraints[j].h));
    let e = sym_eig_tridiagonal(&g)?;
    let cut = e.values[0] * 1e-12;
    let mut pinv = vec![0.0; m * m];
    for (k, &lam) in e.values.iter().enumerate() {
        if lam <= cut {
            continue;
        }
        let v = e.vector(k);
        for i in 0..m {
            let vi = v[i] / lam;
            for j in 0..m {
                pinv[i * m + j] += vi * v[j];
            }
        }
    }
    Ok(pinv)
}

fn frob_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Precomputed data of one ADMM run.
struct Splitting<'a> {
    problem: &'a SdpProblem,
    n: usize,
    qn: Vec<f64>,
    rho: Vec<f64>,
    pinv: Vec<f64>,
    relaxation: f64,
}

/// Result of one application of the ADMM map.
struct MapOutput {
    z: Vec<f64>,
    u: Vec<f64>,
    primal: f64,
    dual: f64,
}

impl Splitting<'_> {
    /// One ADMM sweep from `(Z, U)` at penalty σ.
    fn apply(&self, z_in: &[f64], u_in: &[f64], sigma: f64, x: &mut [f64], r: &mut [f64], y: &mut [f64]) -> Result<MapOutput> {
        let nn = self.n * self.n;
        let m = self.rho.len();
        // X = P_aff(Z − U − Q/σ).
        let inv_sigma = 1.0 / sigma;
        for k in 0..nn {
            x[k] = z_in[k] - u_in[k] - self.qn[k] * inv_sigma;
        }
        for (j, c) in self.problem.constraints.iter().enumerate() {
            r[j] = c.h.inner_dense(x) - self.rho[j];
        }
        for i in 0..m {
            y[i] = self.pinv[i * m..(i + 1) * m].iter().zip(r.iter()).map(|(a, b)| a * b).sum();
        }
        for (j, c) in self.problem.constraints.iter().enumerate() {
            c.h.add_scaled_to(-y[j], x);
        }
        // Over-relaxed X̂ = αX + (1 − α)Z, then Z = Π_PSD(X̂ + U), U += X̂ − Z.
        let a = self.relaxation;
        let mut z = vec![0.0; nn];
        let mut u = u_in.to_vec();
        for k in 0..nn {
            let xh = a * x[k] + (1.0 - a) * z_in[k];
            z[k] = xh + u_in[k];
            u[k] = xh;
        }
        project_psd(&mut z, self.n)?;
        for k in 0..nn {
            u[k] += u_in[k] - z[k];
        }
        let primal = frob_diff(x, &z);
        let dual = sigma * frob_diff(&z, z_in);
        Ok(MapOutput { z, u, primal, dual })
    }
}

/// Type-II Anderson acceleration of a fixed-point map on a stacked state.
struct Anderson {
    memory: usize,
    /// Differences of consecutive iterates and of their fixed-point residuals.
    dx: std::collections::VecDeque<Vec<f64>>,
    df: std::collections::VecDeque<Vec<f64>>,
    /// Gram matrix `ΔFᵀΔF` of the stored residual differences.
    gram: std::collections::VecDeque<std::collections::VecDeque<f64>>,
    last: Option<(Vec<f64>, Vec<f64>)>,
}

impl Anderson {
    fn new(memory: usize) -> Self {
        Self {
            memory,
            dx: Default::default(),
            df: Default::default(),
            gram: Default::default(),
            last: None,
        }
    }

    fn reset(&mut self) {
        self.dx.clear();
        self.df.clear();
        self.gram.clear();
        self.last = None;
    }

    /// Records the iterate `x` with residual `f = T(x) − x` and proposes the
    /// next iterate, or `None` while the history is empty or ill-conditioned.
    fn propose(&mut self, x: Vec<f64>, f: Vec<f64>) -> Option<Vec<f64>> {
        if let Some((mut px, mut pf)) = self.last.take() {
            if self.dx.len() == self.memory {
                self.dx.pop_front();
                self.df.pop_front();
                self.gram.pop_front();
                self.gram.iter_mut().for_each(|row| {
                    row.pop_front();
                });
            }
            // Reuse the previous buffers for the differences.
            px.iter_mut().zip(&x).for_each(|(p, a)| *p = a - *p);
            pf.iter_mut().zip(&f).for_each(|(p, a)| *p = a - *p);
            let (dx, df) = (px, pf);
            let mut row: std::collections::VecDeque<f64> = self.df.iter().map(|d| dot(d, &df)).collect();
            for (r, &v) in self.gram.iter_mut().zip(&row) {
                r.push_back(v);
            }
            row.push_back(dot(&df, &df));
            self.gram.push_back(row);
            self.dx.push_back(dx);
            self.df.push_back(df);
        }
        let k = self.df.len();
        let proposal = if k == 0 {
            None
        } else {
            // γ = argmin ‖f − ΔF γ‖ via regularized normal equations.
            let mut g: Vec<f64> = self.gram.iter().flat_map(|r| r.iter().copied()).collect();
            let rhs: Vec<f64> = self.df.iter().map(|d| dot(d, &f)).collect();
            let scale = (0..k).map(|i| g[i * k + i]).fold(0.0, f64::max);
            if scale > 0.0 {
                for i in 0..k {
                    g[i * k + i] += 1e-10 * scale;
                }
                solve_small(g, rhs, k).and_then(|gamma| {
                    let mut next: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + b).collect();
                    for (j, &gj) in gamma.iter().enumerate() {
                        for ((v, a), b) in next.iter_mut().zip(&self.dx[j]).zip(&self.df[j]) {
                            *v -= gj * (a + b);
                        }
                    }
                    next.iter().all(|v| v.is_finite()).then_some(next)
                })
            } else {
                None
            }
        };
        self.last = Some((x, f));
        proposal
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_small(mut a: Vec<f64>, mut b: Vec<f64>, k: usize) -> Option<Vec<f64>> {
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i * k + c].abs().total_cmp(&a[j * k + c].abs()))?;
        if a[p * k + c] == 0.0 {
            return None;
        }
        if p != c {
            for j in 0..k {
                a.swap(p * k + j, c * k + j);
            }
            b.swap(p, c);
        }
        for i in c + 1..k {
            let f = a[i * k + c] / a[c * k + c];
            for j in c..k {
                a[i * k + j] -= f * a[c * k + j];
            }
            b[i] -= f * b[c];
        }
    }
    for c in (0..k).rev() {
        let s: f64 = (c + 1..k).map(|j| a[c * k + j] * b[j]).sum();
        b[c] = (b[c] - s) / a[c * k + c];
    }
    b.iter().all(|v| v.is_finite()).then_some(b)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the SDP relaxation. Hitting the iteration cap is not an error: the
/// result carries `converged = false` and the final residuals.
pub fn solve_sdp(problem: &SdpProblem, config: &AdmmConfig) -> Result<SdpSolution> {
    if !(config.tol > 0.0) || config.max_iters == 0 || !(config.sigma > 0.0) || !(config.relaxation > 0.0 && config.relaxation < 2.0) {
        return Err(Error::Invalid("ADMM needs tol > 0, sigma > 0, relaxation in (0, 2) and max_iters ≥ 1".into()));
    }
    let n = problem.q.dim();
    let nn = n * n;
    let m = problem.constraints.len();
    let q_norm = problem.q.frobenius();
    let q_scale = if q_norm > 0.0 { 1.0 / q_norm } else { 1.0 };
    let split = Splitting {
        problem,
        n,
        qn: problem.q.as_slice().iter().map(|&x| x * q_scale).collect(),
        rho: problem.constraints.iter().map(|c| c.rho).collect(),
        pinv: gram_pinv(problem)?,
        relaxation: config.relaxation,
    };
    let threshold = config.tol * (1.0 + q_norm * q_scale);

    let mut sigma = config.sigma;
    let mut x = vec![0.0; nn];
    let mut r = vec![0.0; m];
    let mut y = vec![0.0; m];
    // Current point of the fixed-point iteration and its image under the map.
    let mut z = vec![0.0; nn];
    let mut u = vec![0.0; nn];
    let mut out = split.apply(&z, &u, sigma, &mut x, &mut r, &mut y)?;
    let mut anderson = Anderson::new(config.anderson_memory);
    let mut iterations = 1;
    let mut converged = out.primal <= threshold && out.dual <= threshold;
    let mut accepted = 0usize;
    let mut last_adapt = 0usize;

    while !converged && iterations < config.max_iters {
        // Fixed-point residual ‖T(s) − s‖ of the stacked state s = (Z, U).
        let res_norm = (frob_diff(&out.z, &z).powi(2) + frob_diff(&out.u, &u).powi(2)).sqrt();
        let mut next = None;
        if config.anderson_memory > 0 {
            let state: Vec<f64> = z.iter().chain(&u).copied().collect();
            let f: Vec<f64> = out.z.iter().chain(&out.u).zip(&state).map(|(a, b)| a - b).collect();
            if let Some(cand) = anderson.propose(state, f) {
                let (cz, cu) = cand.split_at(nn);
                let trial = split.apply(cz, cu, sigma, &mut x, &mut r, &mut y)?;
                iterations += 1;
                let trial_res = (frob_diff(&trial.z, cz).powi(2) + frob_diff(&trial.u, cu).powi(2)).sqrt();
                if trial_res <= config.anderson_safeguard * res_norm {
                    next = Some((cz.to_vec(), cu.to_vec(), trial));
                    accepted += 1;
                } else {
                    anderson.reset();
                }
            }
        }
        let (nz, nu, nout) = match next {
            Some(v) => v,
            None => {
                // Plain ADMM step: move to T(s) and evaluate the map there.
                let t = split.apply(&out.z, &out.u, sigma, &mut x, &mut r, &mut y)?;
                iterations += 1;
                (std::mem::take(&mut out.z), std::mem::take(&mut out.u), t)
            }
        };
        z = nz;
        u = nu;
        out = nout;
        if out.primal <= threshold && out.dual <= threshold {
            converged = true;
            break;
        }
        if iterations % 200 < 2 {
            log::trace!("ADMM {iterations}: primal {:.3e}, dual {:.3e}, sigma {sigma:.3e}", out.primal, out.dual);
        }
        if config.adapt_every > 0 && iterations >= last_adapt + config.adapt_every {
            last_adapt = iterations;
            let factor = if out.primal > 10.0 * out.dual {
                2.0
            } else if out.dual > 10.0 * out.primal {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                sigma *= factor;
                u.iter_mut().for_each(|v| *v /= factor);
                anderson.reset();
                out = split.apply(&z, &u, sigma, &mut x, &mut r, &mut y)?;
                iterations += 1;
            }
        }
    }
    let (primal, dual) = (out.primal, out.dual);
    let w = SymMatrix::from_row_major(n, out.z)?;
    let p_sdp = problem.objective_lifted(&w)?;
    let max_violation = problem.max_violation_lifted(&w);
    log::info!(
        "SDP: {iterations} iterations ({accepted} accelerated), converged = {converged}, primal {primal:.2e}, dual {dual:.2e}, p_sdp {p_sdp:.6e}, max violation {max_violation:.2e}"
    );
    Ok(SdpSolution {
        w,
        p_sdp,
        primal_res: primal,
        dual_res: dual,
        iterations,
        converged,
        max_violation,
        threshold,
    })
}
