//! Singular value decomposition of 3×3 matrices and projection onto SO(3).

use crate::numerics::dense::SymMatrix;
use crate::numerics::eig::sym_eig;
use crate::numerics::small::{Mat3, Vec3};
use crate::scalar::Real;

/// `M = U diag(sigma) Vᵀ` with `sigma` nonnegative and descending.
#[derive(Debug, Clone, Copy)]
pub struct Svd3<T> {
    pub u: Mat3<T>,
    pub sigma: Vec3<T>,
    pub v: Mat3<T>,
}

/// SVD of a 3×3 matrix computed from the eigen-decomposition of `MᵀM`.
///
/// Singular values are taken as `‖M vᵢ‖` rather than `√λᵢ`, which keeps small
/// singular values accurate; left vectors are recovered from `M vᵢ` and
/// completed/re-orthonormalized when `M` is rank deficient.
pub fn svd3<T: Real>(m: &Mat3<T>) -> Svd3<T> {
    let mtm = m.transpose() * *m;
    let sym = SymMatrix::from_upper_fn(3, |i, j| mtm.0[i][j]);
    // A 3×3 Jacobi solve always converges well inside the sweep cap; fall back
    // to the identity basis only for non-finite input.
    let vcols: [Vec3<T>; 3] = match sym_eig(&sym) {
        Ok(e) => std::array::from_fn(|k| {
            let c = e.vector(k);
            Vec3([c[0], c[1], c[2]])
        }),
        Err(_) => [Mat3::identity().col(0), Mat3::identity().col(1), Mat3::identity().col(2)],
    };
    let mut pairs: Vec<(T, Vec3<T>, Vec3<T>)> = vcols
        .iter()
        .map(|&v| {
            let mv = *m * v;
            (mv.norm(), mv, v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let scale = pairs[0].0;
    let tiny = T::epsilon() * T::lit(16.0) * scale.max(T::min_positive_value());
    let mut us: Vec<Vec3<T>> = Vec::with_capacity(3);
    for (s, mv, _) in &pairs {
        let mut u = *mv;
        for prev in &us {
            u = u - prev.scale(prev.dot(u));
        }
        let nu = u.norm();
        if *s > tiny && nu > tiny {
            us.push(u.scale(T::one() / nu));
        } else {
            us.push(complete_basis(&us));
        }
    }
    let sigma = Vec3([pairs[0].0, pairs[1].0, pairs[2].0]);
    Svd3 {
        u: Mat3::from_cols(us[0], us[1], us[2]),
        sigma,
        v: Mat3::from_cols(pairs[0].2, pairs[1].2, pairs[2].2),
    }
}

/// Returns a unit vector orthogonal to every vector in `basis` (len ≤ 2).
fn complete_basis<T: Real>(basis: &[Vec3<T>]) -> Vec3<T> {
    match basis.len() {
        0 => Vec3::new(T::one(), T::zero(), T::zero()),
        1 => {
            let a = basis[0];
            // Cross with the axis least aligned with `a`.
            let k = (0..3)
                .min_by(|&i, &j| a[i].abs().partial_cmp(&a[j].abs()).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(0);
            let mut e = Vec3::zeros();
            e[k] = T::one();
            let c = a.cross(e);
            c.scale(T::one() / c.norm())
        }
        _ => {
            let c = basis[0].cross(basis[1]);
            c.scale(T::one() / c.norm())
        }
    }
}

/// Closest rotation in Frobenius norm: `U diag(1, 1, det(UVᵀ)) Vᵀ`.
pub fn project_to_so3<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let s = svd3(m);
    let d = (s.u * s.v.transpose()).det();
    let fix = if d < T::zero() { -T::one() } else { T::one() };
    s.u * Mat3::diag(T::one(), T::one(), fix) * s.v.transpose()
}
