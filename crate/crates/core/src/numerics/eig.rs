//! Symmetric eigen-decomposition.
//!
//! [`sym_eig`] is the reference cyclic Jacobi solver. [`sym_eig_tridiagonal`]
//! (Householder reduction followed by implicit QL) produces the same
//! decomposition several times faster and is used by the inner loop of the
//! SDP solver, where one decomposition per iteration dominates the cost.

use crate::error::{Error, Result};
use crate::numerics::dense::{DenseMatrix, SymMatrix};
use crate::scalar::Real;

/// Maximum number of Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Maximum QL iterations per eigenvalue.
const QL_MAX_ITERS: usize = 60;

/// Eigen-decomposition `M = V diag(λ) Vᵀ` with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEig<T> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored as columns, aligned with `values`.
    pub vectors: DenseMatrix<T>,
}

impl<T: Real> SymEig<T> {
    /// Eigenvector `k` as an owned vector.
    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.col(k)
    }

    /// Rebuilds `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix<T> {
        let n = self.values.len();
        let v = &self.vectors;
        SymMatrix::from_upper_fn(n, |i, j| {
            (0..n).map(|k| v[(i, k)] * self.values[k] * v[(j, k)]).sum()
        })
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Fails with [`Error::EigNoConvergence`] if the off-diagonal mass has not
/// vanished after [`JACOBI_MAX_SWEEPS`] sweeps.
pub fn sym_eig<T: Real>(m: &SymMatrix<T>) -> Result<SymEig<T>> {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    // Eigenvectors are accumulated as rows of `vt` so that rotations touch
    // contiguous memory.
    let mut vt = vec![T::zero(); n * n];
    for i in 0..n {
        vt[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    let scale = m.frobenius();
    if scale == T::zero() {
        return Ok(sorted(vec![T::zero(); n], vt, n));
    }
    let target = eps * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<T>()
            .sqrt();
        if off <= target {
            let d = (0..n).map(|i| a[i * n + i]).collect();
            return Ok(sorted(d, vt, n));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Skip entries that are already negligible relative to their
                // diagonal neighbours.
                if apq.abs() <= eps * T::lit(1e-2) * (app.abs() + aqq.abs()).max(scale * eps) {
                    a[p * n + q] = T::zero();
                    a[q * n + p] = T::zero();
                    continue;
                }
                let theta = (aqq - app) / (apq + apq);
                let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
                    T::one() / (theta + theta)
                } else {
                    let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let tau = s / (T::one() + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[r * n + p];
                    let h = a[r * n + q];
                    let gp = g - s * (h + g * tau);
                    let hq = h + s * (g - h * tau);
                    a[r * n + p] = gp;
                    a[p * n + r] = gp;
                    a[r * n + q] = hq;
                    a[q * n + r] = hq;
                }
                let (rp, rq) = rows_pair(&mut vt, n, p, q);
                for (g, h) in rp.iter_mut().zip(rq.iter_mut()) {
                    let (gv, hv) = (*g, *h);
                    *g = gv - s * (hv + gv * tau);
                    *h = hv + s * (gv - hv * tau);
                }
            }
        }
    }
    Err(Error::EigNoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Householder tridiagonalization plus implicit QL eigen-decomposition.
pub fn sym_eig_tridiagonal<T: Real>(m: &SymMatrix<T>) -> Result<SymEig<T>> {
    let n = m.dim();
    let (d, zt) = tridiagonal_ql(m.as_slice(), n)?;
    Ok(sorted(d, zt, n))
}

/// Unsorted eigenpairs: returns eigenvalues and a row-major matrix whose row
/// `k` is the unit eigenvector of eigenvalue `k`.
pub(crate) fn tridiagonal_ql<T: Real>(a: &[T], n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let mut v = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e, n);
    // Switch to eigenvectors-as-rows storage for cache-friendly rotations.
    let mut zt = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            zt[j * n + i] = v[i * n + j];
        }
    }
    tql2(&mut zt, &mut d, &mut e, n)?;
    Ok((d, zt))
}

/// Householder reduction of the row-major symmetric matrix `v` (overwritten
/// with the accumulated orthogonal transform) to tridiagonal form (`d`, `e`).
fn tred2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
                v[idx(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                let f = d[j];
                v[idx(j, i)] = f;
                let mut g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = T::zero();
    }
    v[idx(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit QL iterations on the tridiagonal (`d`, `e`); `zt` holds the
/// transform as rows and is updated in place.
fn tql2<T: Real>(zt: &mut [T], d: &mut [T], e: &mut [T], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITERS {
                    return Err(Error::EigNoConvergence { sweeps: iter });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (e[l] + e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (zi, zi1) = rows_pair(zt, n, i, i + 1);
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let hb = *b;
                        *b = s * *a + c * hb;
                        *a = c * *a - s * hb;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Mutable views of two distinct rows `p < q` of a row-major `n`-column matrix.
fn rows_pair<T>(m: &mut [T], n: usize, p: usize, q: usize) -> (&mut [T], &mut [T]) {
    debug_assert!(p < q);
    let (head, tail) = m.split_at_mut(q * n);
    (&mut head[p * n..(p + 1) * n], &mut tail[..n])
}

/// Sorts eigenpairs descending; `vt` holds eigenvectors as rows.
fn sorted<T: Real>(d: Vec<T>, vt: Vec<T>, n: usize) -> SymEig<T> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, c| vt[order[c] * n + i]);
    SymEig { values, vectors }
}
