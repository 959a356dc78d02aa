//! Dense linear solves: Cholesky, the damped normal equations, and a
//! one-sided Jacobi SVD used for rank diagnostics.

use crate::error::{Error, Result};
use crate::numerics::dense::{DenseMatrix, SymMatrix};
use crate::scalar::Real;

/// Maximum sweeps of the one-sided Jacobi SVD.
const SVD_MAX_SWEEPS: usize = 80;

/// Relative threshold defining numeric rank: `σ > σ_max · RANK_RTOL`.
pub const RANK_RTOL: f64 = 1e-8;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors a symmetric positive-definite matrix; returns `None` when a
    /// non-positive pivot appears.
    pub fn factor(a: &SymMatrix<T>) -> Option<Self> {
        let n = a.dim();
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(Self { n, l })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Solves the damped normal equations `(JᵀJ + λI) δ = Jᵀe`.
///
/// One step of iterative refinement is applied so that the residual of the
/// normal system is at rounding level even when `JᵀJ` is poorly conditioned.
/// A singular system (possible only at `λ = 0`) is reported as
/// [`Error::RankDeficient`] carrying the numeric rank of `J`.
pub fn solve_damped_normal<T: Real>(j: &DenseMatrix<T>, e: &[T], lambda: T) -> Result<Vec<T>> {
    if j.rows() < j.cols() {
        return Err(Error::Dimension {
            context: "damped normal equations need rows >= cols",
            expected: j.cols(),
            actual: j.rows(),
        });
    }
    if e.len() != j.rows() {
        return Err(Error::Dimension {
            context: "damped normal equations right-hand side",
            expected: j.rows(),
            actual: e.len(),
        });
    }
    if lambda < T::zero() {
        return Err(Error::Invalid("damping must be nonnegative".into()));
    }
    let n = j.cols();
    let mut a = j.gram();
    for i in 0..n {
        a.add_sym(i, i, lambda);
    }
    let rhs = j.tr_matvec(e)?;
    let rank_error = || {
        let sv = singular_values(j).unwrap_or_default();
        Error::RankDeficient {
            rank: numeric_rank(&sv, T::lit(RANK_RTOL)),
            dim: n,
        }
    };
    let chol = Cholesky::factor(&a).ok_or_else(rank_error)?;
    let mut x = chol.solve(&rhs);
    let ax = a.matvec(&x);
    let r: Vec<T> = rhs.iter().zip(&ax).map(|(&b, &v)| b - v).collect();
    let dx = chol.solve(&r);
    for (xi, di) in x.iter_mut().zip(dx) {
        *xi += di;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(rank_error());
    }
    // At λ = 0 a numerically singular Gram matrix can still factor; confirm
    // the rank explicitly so the documented error is raised.
    if lambda == T::zero() {
        let sv = singular_values(j)?;
        let rank = numeric_rank(&sv, T::lit(RANK_RTOL));
        if rank < n {
            return Err(Error::RankDeficient { rank, dim: n });
        }
    }
    Ok(x)
}

/// Thin SVD result of [`svd_jacobi`].
#[derive(Debug, Clone)]
pub struct JacobiSvd<T> {
    /// Singular values, descending.
    pub sigma: Vec<T>,
    /// Right singular vectors as columns, aligned with `sigma`.
    pub v: DenseMatrix<T>,
}

/// One-sided (Hestenes) Jacobi SVD of a tall matrix.
///
/// Works on the columns of `A` directly, so singular values are obtained to
/// high relative accuracy without squaring the condition number; this is what
/// makes a rank threshold of `σ_max · 1e-8` meaningful.
pub fn svd_jacobi<T: Real>(a: &DenseMatrix<T>) -> Result<JacobiSvd<T>> {
    let (m, n) = (a.rows(), a.cols());
    // Column-major working copies.
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            e
        })
        .collect();
    let eps = T::epsilon();
    let mut converged = false;
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut al = T::zero();
                    let mut be = T::zero();
                    let mut ga = T::zero();
                    for i in 0..m {
                        al += cp[i] * cp[i];
                        be += cq[i] * cq[i];
                        ga += cp[i] * cq[i];
                    }
                    (al, be, ga)
                };
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = {
                    let t = T::one() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    if zeta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::EigNoConvergence {
            sweeps: SVD_MAX_SWEEPS,
        });
    }
    let norms: Vec<T> = cols
        .iter()
        .map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    Ok(JacobiSvd {
        sigma: order.iter().map(|&k| norms[k]).collect(),
        v: DenseMatrix::from_fn(n, n, |i, c| v[order[c]][i]),
    })
}

fn rotate_pair<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = c * xv - s * yv;
        *y = s * xv + c * yv;
    }
}

/// Singular values of `a`, descending (see [`svd_jacobi`]).
pub fn singular_values<T: Real>(a: &DenseMatrix<T>) -> Result<Vec<T>> {
    if a.rows() < a.cols() {
        return singular_values(&a.transpose());
    }
    Ok(svd_jacobi(a)?.sigma)
}

/// Number of singular values above `σ_max · rtol`.
pub fn numeric_rank<T: Real>(sigma: &[T], rtol: T) -> usize {
    let smax = sigma.iter().fold(T::zero(), |m, &s| m.max(s));
    if smax == T::zero() {
        return 0;
    }
    sigma.iter().filter(|&&s| s > smax * rtol).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Gauss–Jordan inverse with partial pivoting (independent oracle).
    fn gauss_jordan_inverse(a: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        let n = a.rows();
        let mut m = DenseMatrix::from_fn(n, 2 * n, |i, j| if j < n { a[(i, j)] } else if j - n == i { 1.0 } else { 0.0 });
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| m[(x, c)].abs().partial_cmp(&m[(y, c)].abs()).unwrap()).unwrap();
            for j in 0..2 * n {
                let t = m[(c, j)];
                m[(c, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
            let piv = m[(c, c)];
            for j in 0..2 * n {
                m[(c, j)] /= piv;
            }
            for r in 0..n {
                if r != c {
                    let f = m[(r, c)];
                    for j in 0..2 * n {
                        let v = m[(c, j)];
                        m[(r, j)] -= f * v;
                    }
                }
            }
        }
        m.block(0, n, n, n)
    }

    #[test]
    fn identity_undamped() {
        let j = DenseMatrix::<f64>::identity(2);
        assert_eq!(solve_damped_normal(&j, &[3.0, 4.0], 0.0).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn identity_damped() {
        let j = DenseMatrix::<f64>::identity(2);
        assert_eq!(solve_damped_normal(&j, &[3.0, 4.0], 1.0).unwrap(), vec![1.5, 2.0]);
    }

    #[test]
    fn matches_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let j = DenseMatrix::from_fn(12, 6, |_, _| rng.random_range(-1.0..1.0));
            let e: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda = 1e-3;
            let delta = solve_damped_normal(&j, &e, lambda).unwrap();
            let mut a = j.transpose().matmul(&j).unwrap();
            for i in 0..6 {
                a[(i, i)] += lambda;
            }
            let inv = gauss_jordan_inverse(&a);
            let oracle = inv.matvec(&j.tr_matvec(&e).unwrap()).unwrap();
            for (x, y) in delta.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-9);
            }
            let resid: Vec<f64> = a.matvec(&delta).unwrap().iter().zip(j.tr_matvec(&e).unwrap()).map(|(x, y)| x - y).collect();
            let rn = resid.iter().map(|x| x * x).sum::<f64>().sqrt();
            let bn = j.tr_matvec(&e).unwrap().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(rn < 1e-10 * bn);
        }
    }

    #[test]
    fn orthogonal_square_is_exact() {
        let (c, s) = (0.6, 0.8);
        let j = DenseMatrix::<f64>::from_row_major(2, 2, vec![c, -s, s, c]).unwrap();
        let e = [1.0, 2.0];
        let d = solve_damped_normal(&j, &e, 0.0).unwrap();
        let back = j.matvec(&d).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-15 && (back[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_undamped_reports_rank() {
        let j = DenseMatrix::from_row_major(3, 2, vec![1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        match solve_damped_normal(&j, &[1.0, 1.0, 1.0], 0.0) {
            Err(Error::RankDeficient { rank, dim }) => assert_eq!((rank, dim), (1, 2)),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_svd_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DenseMatrix::<f64>::from_fn(30, 8, |_, _| rng.random_range(-1.0..1.0));
        let s = svd_jacobi(&a).unwrap();
        let e = crate::numerics::eig::sym_eig(&a.gram()).unwrap();
        for (x, l) in s.sigma.iter().zip(&e.values) {
            assert!((x * x - l).abs() < 1e-10);
        }
        // Right singular vectors: A v_k has norm sigma_k.
        for k in 0..8 {
            let av = a.matvec(&s.v.col(k)).unwrap();
            let nn = av.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((nn - s.sigma[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_of_exactly_deficient_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = DenseMatrix::from_fn(40, 5, |_, _| rng.random_range(-1.0..1.0));
        let c = DenseMatrix::from_fn(5, 9, |_, _| rng.random_range(-1.0..1.0));
        let a = b.matmul(&c).unwrap();
        let sv = singular_values(&a).unwrap();
        assert_eq!(numeric_rank(&sv, 1e-8), 5);
    }
}
