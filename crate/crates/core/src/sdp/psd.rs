//! Fast projection of a dense symmetric matrix onto the PSD cone.
//!
//! The matrix is reduced to tridiagonal form by Householder reflections with
//! contiguous row access, the eigenvalues on the smaller side of zero are
//! located by Sturm-sequence bisection, their eigenvectors are obtained by
//! inverse iteration on the tridiagonal matrix (re-orthogonalized within
//! clusters) and mapped back through the stored reflections. Only the `k`
//! eigenpairs actually needed are formed, so the cost is one reduction plus
//! `O(k n²)`.

use crate::error::{Error, Result};

/// Row-pivoted LU factors of a shifted tridiagonal matrix: unit lower
/// bidiagonal multipliers and an upper triangle with two superdiagonals.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    /// Solves the factored system in place.
    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.mult[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * b[i + 2];
            }
            b[i] = s / self.u0[i];
        }
    }
}

/// Householder reduction `A = Q T Qᵀ` with `Q = H₀H₁···H_{n−3}`.
struct Tridiagonal {
    n: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Reflector `k` acts on indices `k+1..n`: `H = I − β v vᵀ`.
    reflectors: Vec<(f64, Vec<f64>)>,
}

impl Tridiagonal {
    fn reduce(a: &mut [f64], n: usize) -> Self {
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut p = vec![0.0; n];
        for k in 0..n.saturating_sub(2) {
            diag[k] = a[k * n + k];
            let m = n - k - 1;
            let x = &a[k * n + k + 1..(k + 1) * n];
            let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if alpha == 0.0 {
                off[k] = 0.0;
                reflectors.push((0.0, vec![0.0; m]));
                continue;
            }
            let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
            let mut v = x.to_vec();
            v[0] += sign * alpha;
            let vtv: f64 = v.iter().map(|t| t * t).sum();
            let beta = 2.0 / vtv;
            off[k] = -sign * alpha;
            // p = β A' v, K = β pᵀv / 2, w = p − K v, A' −= v wᵀ + w vᵀ.
            let o = k + 1;
            for i in 0..m {
                let row = &a[(o + i) * n + o..(o + i + 1) * n];
                p[i] = beta * row.iter().zip(&v).map(|(r, s)| r * s).sum::<f64>();
            }
            let kk = 0.5 * beta * p[..m].iter().zip(&v).map(|(r, s)| r * s).sum::<f64>();
            for i in 0..m {
                p[i] -= kk * v[i];
            }
            for i in 0..m {
                let (vi, wi) = (v[i], p[i]);
                let row = &mut a[(o + i) * n + o..(o + i + 1) * n];
                for ((r, &vj), &wj) in row.iter_mut().zip(&v).zip(&p[..m]) {
                    *r -= vi * wj + wi * vj;
                }
            }
            reflectors.push((beta, v));
        }
        if n >= 2 {
            diag[n - 2] = a[(n - 2) * n + n - 2];
            off[n - 2] = a[(n - 2) * n + n - 1];
        }
        if n >= 1 {
            diag[n - 1] = a[n * n - 1];
        }
        Self { n, diag, off, reflectors }
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    fn count_below(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.n {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < self.n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on `[lo, hi]`.
    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64, pivmin: f64, abstol: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= abstol || mid == lo || mid == hi {
                break;
            }
            if self.count_below(mid, pivmin) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Pivoted LU factorization of `T − λI`; tiny pivots are replaced by
    /// `tiny` (as required by inverse iteration).
    fn shifted_factor(&self, lambda: f64, tiny: f64) -> ShiftedLu {
        let n = self.n;
        let mut f = ShiftedLu {
            u0: vec![0.0; n],
            u1: vec![0.0; n],
            u2: vec![0.0; n],
            mult: vec![0.0; n],
            swapped: vec![false; n],
        };
        let mut a = self.diag[0] - lambda;
        let mut bb = if n > 1 { self.off[0] } else { 0.0 };
        let mut cc = 0.0;
        for i in 0..n - 1 {
            let sub = self.off[i];
            let next_d = self.diag[i + 1] - lambda;
            let next_e = if i + 2 < n { self.off[i + 1] } else { 0.0 };
            if a.abs() >= sub.abs() {
                let l = if a == 0.0 { 0.0 } else { sub / a };
                f.u0[i] = a;
                f.u1[i] = bb;
                f.u2[i] = cc;
                f.mult[i] = l;
                a = next_d - l * bb;
                bb = next_e - l * cc;
            } else {
                let l = a / sub;
                f.u0[i] = sub;
                f.u1[i] = next_d;
                f.u2[i] = next_e;
                f.mult[i] = l;
                f.swapped[i] = true;
                let (na, nb) = (bb - l * next_d, cc - l * next_e);
                a = na;
                bb = nb;
            }
            cc = 0.0;
        }
        f.u0[n - 1] = a;
        for p in &mut f.u0 {
            if p.abs() < tiny {
                *p = if *p < 0.0 { -tiny } else { tiny };
            }
        }
        f
    }

    /// Maps a tridiagonal-basis vector back: `x ← Q x`.
    fn back_transform(&self, x: &mut [f64]) {
        for (k, (beta, v)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let tail = &mut x[k + 1..];
            let s = beta * tail.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            for (t, &vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }

    /// All eigenvalues, ascending, by implicit QL iteration without vectors.
    fn all_eigenvalues(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let mut d = self.diag.clone();
        let mut e = vec![0.0; n];
        e[..n - 1].copy_from_slice(&self.off);
        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > 60 {
                    return None;
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = (g * g + 1.0).sqrt();
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut i = m;
                let mut underflow = false;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = (f * f + g * g).sqrt();
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if underflow {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        d.sort_by(f64::total_cmp);
        Some(d)
    }

    /// Eigenpairs for the eigenvalues with index range `range` (ascending).
    fn eigenpairs(&self, range: std::ops::Range<usize>, lo: f64, hi: f64) -> Vec<(f64, Vec<f64>)> {
        let n = self.n;
        let norm = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * norm * norm);
        let abstol = 2.0 * f64::EPSILON * norm;
        // Bisection is cheapest for a handful of values; QL for many.
        let mut values: Vec<f64> = match (range.len() > 8).then(|| self.all_eigenvalues()).flatten() {
            Some(all) => all[range.clone()].to_vec(),
            None => range.clone().map(|k| self.bisect(k, lo, hi, pivmin, abstol)).collect(),
        };
        // Separate (numerically) coincident eigenvalues so that inverse
        // iteration does not solve identical systems.
        let sep = 10.0 * f64::EPSILON * norm;
        for i in 1..values.len() {
            if values[i] - values[i - 1] < sep {
                values[i] = values[i - 1] + sep;
            }
        }
        let cluster_gap = 1e-3 * norm;
        let tiny = f64::EPSILON * norm;
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;
        for (idx, &lam) in values.iter().enumerate() {
            if idx > 0 && lam - values[idx - 1] > cluster_gap {
                cluster_start = idx;
            }
            // Deterministic, generic starting vector.
            let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (idx as f64 + 1.7)).sin()).collect();
            let lu = self.shifted_factor(lam, tiny);
            for _ in 0..3 {
                lu.solve(&mut x);
                for (_, prev) in &out[cluster_start..idx] {
                    let d: f64 = x.iter().zip(prev).map(|(a, b)| a * b).sum();
                    x.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
                }
                let nx = x.iter().map(|t| t * t).sum::<f64>().sqrt();
                if nx > 0.0 {
                    x.iter_mut().for_each(|t| *t /= nx);
                }
            }
            out.push((lam, x));
        }
        out.into_iter()
            .map(|(lam, mut x)| {
                self.back_transform(&mut x);
                (lam, x)
            })
            .collect()
    }
}

/// Replaces the row-major symmetric `m` (dimension `n`) by its projection
/// onto the positive semidefinite cone.
pub fn project_psd(m: &mut [f64], n: usize) -> Result<()> {
    if m.len() != n * n || n == 0 {
        return Err(Error::Dimension {
            context: "PSD projection input",
            expected: n * n,
            actual: m.len(),
        });
    }
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Invalid("PSD projection of a non-finite matrix".into()));
    }
    let original = m.to_vec();
    let t = Tridiagonal::reduce(m, n);
    let (lo, hi) = t.gershgorin();
    let norm = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * norm * norm);
    let negative = t.count_below(0.0, pivmin);
    let positive = n - negative;
    // Rebuild from the side with fewer eigenpairs.
    let (pairs, from_positive) = if positive <= negative {
        (t.eigenpairs(negative..n, lo, hi), true)
    } else {
        (t.eigenpairs(0..negative, lo, hi), false)
    };
    if from_positive {
        m.iter_mut().for_each(|x| *x = 0.0);
    } else {
        m.copy_from_slice(&original);
    }
    for (lam, v) in &pairs {
        let s = if from_positive {
            lam.max(0.0)
        } else {
            -lam.min(0.0)
        };
        if s == 0.0 {
            continue;
        }
        for i in 0..n {
            let svi = s * v[i];
            let row = &mut m[i * n + i..(i + 1) * n];
            for (x, &vj) in row.iter_mut().zip(&v[i..]) {
                *x += svi * vj;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[i * n + j] = m[j * n + i];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sym_eig, SymMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn oracle(s: &SymMatrix<f64>) -> SymMatrix<f64> {
        let n = s.dim();
        let j = sym_eig(s).unwrap();
        SymMatrix::from_upper_fn(n, |r, c| (0..n).map(|k| j.vectors[(r, k)] * j.values[k].max(0.0) * j.vectors[(c, k)]).sum())
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn matches_jacobi_clamping_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 3, 7, 40, 133] {
            for _ in 0..3 {
                let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = SymMatrix::from_row_major(n, a).unwrap();
                let mut p = s.as_slice().to_vec();
                project_psd(&mut p, n).unwrap();
                assert!(max_diff(&p, oracle(&s).as_slice()) < 1e-11, "n = {n}");
            }
        }
    }

    #[test]
    fn handles_low_rank_and_clustered_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 60;
        // Random orthogonal basis via Jacobi eigenvectors of a random matrix.
        let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let basis = sym_eig(&SymMatrix::from_row_major(n, a).unwrap()).unwrap().vectors;
        for spectrum in [
            (0..n).map(|k| if k == 0 { 20.0 } else { -1e-9 * k as f64 }).collect::<Vec<_>>(),
            (0..n).map(|k| if k < 5 { 1.0 } else { -1.0 }).collect(),
            (0..n).map(|k| if k % 2 == 0 { 1e-12 } else { -3.0 }).collect(),
            vec![0.0; n],
        ] {
            let s = SymMatrix::from_upper_fn(n, |r, c| (0..n).map(|k| basis[(r, k)] * spectrum[k] * basis[(c, k)]).sum());
            let mut p = s.as_slice().to_vec();
            project_psd(&mut p, n).unwrap();
            assert!(max_diff(&p, oracle(&s).as_slice()) < 1e-11);
        }
    }

    #[test]
    fn psd_input_is_unchanged() {
        let v: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let s = SymMatrix::outer(&v);
        let mut p = s.as_slice().to_vec();
        project_psd(&mut p, 10).unwrap();
        assert!(max_diff(&p, s.as_slice()) < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(project_psd(&mut [1.0, 2.0, 3.0], 2).is_err());
        assert!(project_psd(&mut [f64::NAN], 1).is_err());
    }
}
