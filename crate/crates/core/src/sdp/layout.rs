//! The homogeneous lifted state vector
//!
//! ```text
//! w = [vec(Rx); vec(Ry); vec(Rzᵀ ⊗ Ry); tx; ty; vec(tzᵀ ⊗ Ry); 1] ∈ R¹³³
//! ```
//!
//! with column-stacking `vec` throughout: `vec(M)[i + rows·j] = M[i][j]`.

use std::ops::Range;

use crate::liegroup::Pose;
use crate::numerics::{Mat3, Vec3};

/// Index ranges of the blocks of the lifted vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftedLayout;

impl LiftedLayout {
    /// `vec(Rx)`.
    pub const RX: Range<usize> = 0..9;
    /// `vec(Ry)`.
    pub const RY: Range<usize> = 9..18;
    /// `vec(K)`, `K = Rzᵀ ⊗ Ry` (9×9).
    pub const K: Range<usize> = 18..99;
    /// `tx`.
    pub const TX: Range<usize> = 99..102;
    /// `ty`.
    pub const TY: Range<usize> = 102..105;
    /// `vec(V)`, `V = tzᵀ ⊗ Ry` (3×9).
    pub const V: Range<usize> = 105..132;
    /// Homogeneous coordinate.
    pub const HOMOG: usize = 132;
    /// Total dimension.
    pub const DIM: usize = 133;

    /// All blocks in order, for exhaustiveness checks.
    pub fn blocks() -> [Range<usize>; 7] {
        [Self::RX, Self::RY, Self::K, Self::TX, Self::TY, Self::V, Self::HOMOG..Self::DIM]
    }

    /// Index of `Rx[i][j]`.
    #[inline]
    pub const fn rx(i: usize, j: usize) -> usize {
        i + 3 * j
    }

    /// Index of `Ry[i][j]`.
    #[inline]
    pub const fn ry(i: usize, j: usize) -> usize {
        9 + i + 3 * j
    }

    /// Index of `K[i][j]` (`0 ≤ i, j < 9`).
    #[inline]
    pub const fn k(i: usize, j: usize) -> usize {
        18 + i + 9 * j
    }

    /// Index of `tx[i]`.
    #[inline]
    pub const fn tx(i: usize) -> usize {
        99 + i
    }

    /// Index of `ty[i]`.
    #[inline]
    pub const fn ty(i: usize) -> usize {
        102 + i
    }

    /// Index of `V[i][j]` (`0 ≤ i < 3`, `0 ≤ j < 9`).
    #[inline]
    pub const fn v(i: usize, j: usize) -> usize {
        105 + i + 3 * j
    }
}

/// Column-stacked `vec` of a 3×3 matrix.
pub fn vec3x3(m: &Mat3<f64>) -> [f64; 9] {
    std::array::from_fn(|k| m.0[k % 3][k / 3])
}

/// Lifts a coordinate triple into the 133-dimensional homogeneous vector.
pub fn lift(x: &Pose<f64>, y: &Pose<f64>, z: &Pose<f64>) -> Vec<f64> {
    type L = LiftedLayout;
    let mut w = vec![0.0; L::DIM];
    let rzt = z.r.transpose();
    for i in 0..3 {
        for j in 0..3 {
            w[L::rx(i, j)] = x.r.0[i][j];
            w[L::ry(i, j)] = y.r.0[i][j];
        }
        w[L::tx(i)] = x.t.0[i];
        w[L::ty(i)] = y.t.0[i];
    }
    // K = Rzᵀ ⊗ Ry: block (p, q) is (Rzᵀ)_pq · Ry.
    for p in 0..3 {
        for q in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    w[L::k(3 * p + i, 3 * q + j)] = rzt.0[p][q] * y.r.0[i][j];
                }
            }
        }
    }
    // V = tzᵀ ⊗ Ry: block j is tz[j] · Ry.
    for jb in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                w[L::v(i, 3 * jb + j)] = z.t.0[jb] * y.r.0[i][j];
            }
        }
    }
    w[L::HOMOG] = 1.0;
    w
}

/// Reads the raw (unprojected) blocks of a lifted vector.
#[derive(Debug, Clone, Copy)]
pub struct LiftedBlocks {
    pub rx: Mat3<f64>,
    pub ry: Mat3<f64>,
    pub tx: Vec3<f64>,
    pub ty: Vec3<f64>,
}

impl LiftedBlocks {
    pub fn read(w: &[f64]) -> Self {
        type L = LiftedLayout;
        Self {
            rx: Mat3(std::array::from_fn(|i| std::array::from_fn(|j| w[L::rx(i, j)]))),
            ry: Mat3(std::array::from_fn(|i| std::array::from_fn(|j| w[L::ry(i, j)]))),
            tx: Vec3(std::array::from_fn(|i| w[L::tx(i)])),
            ty: Vec3(std::array::from_fn(|i| w[L::ty(i)])),
        }
    }

    /// Block `(p, q)` of `K` as a 3×3 matrix.
    pub fn k_block(w: &[f64], p: usize, q: usize) -> Mat3<f64> {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| w[LiftedLayout::k(3 * p + i, 3 * q + j)])))
    }

    /// Block `j` of `V` as a 3×3 matrix.
    pub fn v_block(w: &[f64], jb: usize) -> Mat3<f64> {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| w[LiftedLayout::v(i, 3 * jb + j)])))
    }
}
