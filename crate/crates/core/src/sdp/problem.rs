//! Lifted QCQP: quadratic objective `wᵀQw` and the quadratic equality
//! constraints `wᵀH_jw = ρ_j` that carve the lifted manifold out of R¹³³.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::liegroup::Pose;
use crate::numerics::{sym_eig_tridiagonal, SymMatrix};
use crate::sdp::layout::{vec3x3, LiftedLayout as L};

/// Constraint families, in generation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintFamily {
    /// Column orthonormality of `Rx`.
    RxOrth,
    /// Right-handedness `c₁ × c₂ = c₃` of `Rx`.
    RxHand,
    RyOrth,
    RyHand,
    /// Column orthonormality of `K = Rzᵀ ⊗ Ry`.
    KOrth,
    /// `Ryᵀ K_pq` is a multiple of the identity for every 3×3 block of `K`.
    KBlock,
    /// `Ryᵀ V_j` is a multiple of the identity for every 3×3 block of `V = tzᵀ ⊗ Ry`.
    VBlock,
    /// Homogeneous coordinate squared equals one.
    Homog,
}

/// Sparse symmetric matrix stored as upper-triangle triplets `(i, j, h)` with
/// `i ≤ j`; an off-diagonal triplet stands for both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    /// `wᵀ H w`.
    pub fn quad_form(&self, w: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, h)| if i == j { h * w[i] * w[i] } else { 2.0 * h * w[i] * w[j] })
            .sum()
    }

    /// `tr(H W)` for a dense row-major symmetric `W`.
    pub fn inner_dense(&self, w: &[f64]) -> f64 {
        let n = self.dim;
        self.entries
            .iter()
            .map(|&(i, j, h)| if i == j { h * w[i * n + i] } else { 2.0 * h * w[i * n + j] })
            .sum()
    }

    /// `W += s·H` for a dense row-major `W`.
    pub fn add_scaled_to(&self, s: f64, w: &mut [f64]) {
        let n = self.dim;
        for &(i, j, h) in &self.entries {
            w[i * n + j] += s * h;
            if i != j {
                w[j * n + i] += s * h;
            }
        }
    }

    /// `⟨H, G⟩_F` between two sparse matrices.
    pub fn inner(&self, other: &SparseSym) -> f64 {
        let map: BTreeMap<(usize, usize), f64> = other.entries.iter().map(|&(i, j, h)| ((i, j), h)).collect();
        self.entries
            .iter()
            .filter_map(|&(i, j, h)| map.get(&(i, j)).map(|&g| if i == j { h * g } else { 2.0 * h * g }))
            .sum()
    }

    pub fn to_sym(&self) -> SymMatrix<f64> {
        let mut m = SymMatrix::zeros(self.dim);
        for &(i, j, h) in &self.entries {
            m.set(i, j, h);
        }
        m
    }
}

/// Accumulates a quadratic form `Σ c·w_a·w_b` into symmetric triplets.
#[derive(Default)]
struct QuadBuilder {
    terms: BTreeMap<(usize, usize), f64>,
}

impl QuadBuilder {
    /// Adds the bilinear term `c·w_a·w_b`, split evenly over `(a, b)` and `(b, a)`.
    fn bilinear(&mut self, a: usize, b: usize, c: f64) -> &mut Self {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        let v = if i == j { c } else { 0.5 * c };
        *self.terms.entry((i, j)).or_insert(0.0) += v;
        self
    }

    fn finish(&self) -> SparseSym {
        SparseSym {
            dim: L::DIM,
            entries: self.terms.iter().filter(|(_, &v)| v != 0.0).map(|(&(i, j), &v)| (i, j, v)).collect(),
        }
    }
}

/// One quadratic equality `wᵀ H w = ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint {
    pub h: SparseSym,
    pub rho: f64,
    pub family: ConstraintFamily,
}

impl QuadConstraint {
    /// `wᵀHw − ρ`.
    pub fn violation(&self, w: &[f64]) -> f64 {
        self.h.quad_form(w) - self.rho
    }
}

/// Rotation-chain residual matrix `Ω_f` (9×133) and translation-chain
/// residual matrix `Ω_g` (3×133) of one sample, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOperators {
    pub omega_f: Vec<[f64; L::DIM]>,
    pub omega_g: Vec<[f64; L::DIM]>,
}

/// Builds `Ω_f` and `Ω_g` such that `Ω_f·w = vec(Ra Rx Rb − Ry Rc Rz)` and
/// `Ω_g·w = Ra Rx tb + Ra tx + ta − Ry Rc tz − Ry tc − ty` for every lifted
/// triple `w`.
pub fn sample_operators(a: &Pose<f64>, b: &Pose<f64>, c: &Pose<f64>) -> SampleOperators {
    let ra = a.r.0;
    let rb = b.r.0;
    let vec_rc = vec3x3(&c.r);
    let mut omega_f = vec![[0.0; L::DIM]; 9];
    let mut omega_g = vec![[0.0; L::DIM]; 3];
    // (Rbᵀ ⊗ Ra) vec(Rx): entry (i + 3j, k + 3l) = Rb[l][j]·Ra[i][k].
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    omega_f[i + 3 * j][L::rx(k, l)] = rb[l][j] * ra[i][k];
                }
            }
        }
    }
    // −(vec(Rc)ᵀ ⊗ I₉) vec(K): row r picks K[r][s] weighted by vec(Rc)[s].
    for r in 0..9 {
        for s in 0..9 {
            omega_f[r][L::k(r, s)] = -vec_rc[s];
        }
    }
    for i in 0..3 {
        // (tbᵀ ⊗ Ra) vec(Rx) = Ra Rx tb.
        for k in 0..3 {
            for l in 0..3 {
                omega_g[i][L::rx(k, l)] = b.t.0[l] * ra[i][k];
            }
        }
        // −(tcᵀ ⊗ I₃) vec(Ry) = −Ry tc.
        for l in 0..3 {
            omega_g[i][L::ry(i, l)] = -c.t.0[l];
        }
        // Ra tx − ty.
        for k in 0..3 {
            omega_g[i][L::tx(k)] = ra[i][k];
        }
        omega_g[i][L::ty(i)] = -1.0;
        // −(vec(Rc)ᵀ ⊗ I₃) vec(V) = −Ry Rc tz.
        for s in 0..9 {
            omega_g[i][L::v(i, s)] = -vec_rc[s];
        }
        omega_g[i][L::HOMOG] = a.t.0[i];
    }
    SampleOperators { omega_f, omega_g }
}

/// One correspondence `(A_i, B_i, C_i)` for the coordinate-only problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseTriple {
    pub a: Pose<f64>,
    pub b: Pose<f64>,
    pub c: Pose<f64>,
}

/// `Q = Σᵢ Ω_fᵢᵀΩ_fᵢ + α² Ω_gᵢᵀΩ_gᵢ`.
pub fn build_objective(triples: &[PoseTriple], alpha: f64) -> SymMatrix<f64> {
    let n = L::DIM;
    let mut q = vec![0.0; n * n];
    let a2 = alpha * alpha;
    for t in triples {
        let ops = sample_operators(&t.a, &t.b, &t.c);
        let rows = ops.omega_f.iter().map(|r| (r, 1.0)).chain(ops.omega_g.iter().map(|r| (r, a2)));
        for (row, wgt) in rows {
            let nz: Vec<(usize, f64)> = row.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i, v)).collect();
            for &(i, vi) in &nz {
                for &(j, vj) in &nz {
                    q[i * n + j] += wgt * vi * vj;
                }
            }
        }
    }
    SymMatrix::from_row_major(n, q).expect("square by construction")
}

fn rotation_constraints(col: impl Fn(usize, usize) -> usize, orth: ConstraintFamily, hand: ConstraintFamily, out: &mut Vec<QuadConstraint>) {
    for a in 0..3 {
        for b in a..3 {
            let mut q = QuadBuilder::default();
            for i in 0..3 {
                q.bilinear(col(i, a), col(i, b), 1.0);
            }
            out.push(QuadConstraint {
                h: q.finish(),
                rho: if a == b { 1.0 } else { 0.0 },
                family: orth,
            });
        }
    }
    // (c₀ × c₁)_k − c₂[k]·h = 0.
    for k in 0..3 {
        let (u, v) = ((k + 1) % 3, (k + 2) % 3);
        let mut q = QuadBuilder::default();
        q.bilinear(col(u, 0), col(v, 1), 1.0)
            .bilinear(col(v, 0), col(u, 1), -1.0)
            .bilinear(col(k, 2), L::HOMOG, -1.0);
        out.push(QuadConstraint {
            h: q.finish(),
            rho: 0.0,
            family: hand,
        });
    }
}

/// Constraints that `Ryᵀ B` is a multiple of the identity, where `B` is the
/// 3×3 block whose entry `(i, s)` sits at `block(i, s)`: six vanishing
/// off-diagonal entries and two equal-diagonal conditions.
fn scalar_identity_block(block: impl Fn(usize, usize) -> usize, family: ConstraintFamily, out: &mut Vec<QuadConstraint>) {
    // (Ryᵀ B)_{rs} = Σ_i Ry[i][r]·B[i][s].
    let entry = |q: &mut QuadBuilder, r: usize, s: usize, c: f64| {
        for i in 0..3 {
            q.bilinear(L::ry(i, r), block(i, s), c);
        }
    };
    for r in 0..3 {
        for s in 0..3 {
            if r != s {
                let mut q = QuadBuilder::default();
                entry(&mut q, r, s, 1.0);
                out.push(QuadConstraint { h: q.finish(), rho: 0.0, family });
            }
        }
    }
    for r in 0..2 {
        let mut q = QuadBuilder::default();
        entry(&mut q, r, r, 1.0);
        entry(&mut q, r + 1, r + 1, -1.0);
        out.push(QuadConstraint { h: q.finish(), rho: 0.0, family });
    }
}

/// Number of generated constraints.
pub const NUM_CONSTRAINTS: usize = 160;

/// The data-independent constraint set (160 constraints).
pub fn build_constraints() -> Vec<QuadConstraint> {
    use ConstraintFamily::*;
    let mut out = Vec::with_capacity(NUM_CONSTRAINTS);
    rotation_constraints(L::rx, RxOrth, RxHand, &mut out);
    rotation_constraints(L::ry, RyOrth, RyHand, &mut out);
    for a in 0..9 {
        for b in a..9 {
            let mut q = QuadBuilder::default();
            for i in 0..9 {
                q.bilinear(L::k(i, a), L::k(i, b), 1.0);
            }
            out.push(QuadConstraint {
                h: q.finish(),
                rho: if a == b { 1.0 } else { 0.0 },
                family: KOrth,
            });
        }
    }
    for p in 0..3 {
        for q in 0..3 {
            scalar_identity_block(|i, s| L::k(3 * p + i, 3 * q + s), KBlock, &mut out);
        }
    }
    for j in 0..3 {
        scalar_identity_block(|i, s| L::v(i, 3 * j + s), VBlock, &mut out);
    }
    let mut h = QuadBuilder::default();
    h.bilinear(L::HOMOG, L::HOMOG, 1.0);
    out.push(QuadConstraint {
        h: h.finish(),
        rho: 1.0,
        family: Homog,
    });
    out
}

/// Objective plus constraints of the lifted problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub q: SymMatrix<f64>,
    pub constraints: Vec<QuadConstraint>,
    pub alpha: f64,
    /// Sparse rows of the weighted residual operator `A` with `Q = AᵀA`.
    pub factor: Vec<Vec<(usize, f64)>>,
}

/// Sparse, weighted residual rows of all samples (`Q = AᵀA`).
pub fn build_factor(triples: &[PoseTriple], alpha: f64) -> Vec<Vec<(usize, f64)>> {
    let mut rows = Vec::with_capacity(12 * triples.len());
    for t in triples {
        let ops = sample_operators(&t.a, &t.b, &t.c);
        let weighted = ops.omega_f.iter().map(|r| (r, 1.0)).chain(ops.omega_g.iter().map(|r| (r, alpha)));
        for (row, wgt) in weighted {
            rows.push(row.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i, wgt * v)).collect());
        }
    }
    rows
}

/// Default weighting between rotation and translation residuals.
pub const DEFAULT_ALPHA: f64 = 1.0;

impl SdpProblem {
    pub fn new(triples: &[PoseTriple], alpha: f64) -> Self {
        Self {
            q: build_objective(triples, alpha),
            constraints: build_constraints(),
            alpha,
            factor: build_factor(triples, alpha),
        }
    }

    /// `wᵀQw`, evaluated as `‖Aw‖²` so that small costs keep their relative
    /// accuracy instead of drowning in the cancellation of the dense form.
    pub fn objective(&self, w: &[f64]) -> f64 {
        self.factor
            .iter()
            .map(|row| {
                let r: f64 = row.iter().map(|&(i, v)| v * w[i]).sum();
                r * r
            })
            .sum()
    }

    /// `tr(QW)` for a symmetric `W`, evaluated as `Σ_k λ_k ‖A v_k‖²` over the
    /// eigenpairs of `W` (negative round-off eigenvalues are dropped). Every
    /// term is non-negative, so the result is accurate relative to its own
    /// size even when it is many orders below `‖Q‖·‖W‖`.
    pub fn objective_lifted(&self, w: &SymMatrix<f64>) -> Result<f64> {
        let e = sym_eig_tridiagonal(w)?;
        let mut total = 0.0;
        for (k, &lam) in e.values.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            total += lam * self.objective(&e.vector(k));
        }
        Ok(total)
    }

    /// `tr Q`.
    pub fn trace_q(&self) -> f64 {
        self.factor.iter().flatten().map(|&(_, v)| v * v).sum()
    }

    /// Largest `|wᵀH_jw − ρ_j|`.
    pub fn max_violation(&self, w: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.violation(w).abs()).fold(0.0, f64::max)
    }

    /// Largest `|tr(H_j W) − ρ_j|` for a dense row-major `W`.
    pub fn max_violation_lifted(&self, w: &SymMatrix<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.h.inner_dense(w.as_slice()) - c.rho).abs())
            .fold(0.0, f64::max)
    }
}
