//! Fixed-size vectors and matrices (3 and 6 dimensional) used by the
//! geometric kernels.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::scalar::Real;

/// Column 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T>(pub [T; 3]);

/// 3×3 matrix stored row-major: `m.0[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

/// Column 6-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec6<T>(pub [T; 6]);

/// 6×6 matrix stored row-major: `m.0[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat6<T>(pub [[T; 6]; 6]);

// ---------------------------------------------------------------- Vec3

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self([x, y, z])
    }

    pub fn zeros() -> Self {
        Self([T::zero(); 3])
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self(v.map(T::lit))
    }

    pub fn to_f64(self) -> [f64; 3] {
        self.0.map(T::to_f64_lossy)
    }

    pub fn dot(self, o: Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(self, o: Self) -> Self {
        let [a, b, c] = self.0;
        let [x, y, z] = o.0;
        Self([b * z - c * y, c * x - a * z, a * y - b * x])
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Self(self.0.map(|x| x * s))
    }

    /// Skew-symmetric matrix `[v]×` such that `[v]× u = v × u`.
    pub fn skew(self) -> Mat3<T> {
        let [x, y, z] = self.0;
        let o = T::zero();
        Mat3([[o, -z, y], [z, o, -x], [-y, x, o]])
    }

    pub fn max_abs(self) -> T {
        self.0.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec3<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|x| -x))
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

// ---------------------------------------------------------------- Mat3

impl<T: Real> Mat3<T> {
    pub fn zeros() -> Self {
        Self([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one(), T::one())
    }

    pub fn diag(a: T, b: T, c: T) -> Self {
        let o = T::zero();
        Self([[a, o, o], [o, b, o], [o, o, c]])
    }

    pub fn from_f64(m: [[f64; 3]; 3]) -> Self {
        Self(m.map(|r| r.map(T::lit)))
    }

    pub fn to_f64(self) -> [[f64; 3]; 3] {
        self.0.map(|r| r.map(T::to_f64_lossy))
    }

    /// Builds a matrix from its three columns.
    pub fn from_cols(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Self([
            [c0[0], c1[0], c2[0]],
            [c0[1], c1[1], c2[1]],
            [c0[2], c1[2], c2[2]],
        ])
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn row(&self, i: usize) -> Vec3<T> {
        Vec3(self.0[i])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> T {
        self.col(0).dot(self.col(1).cross(self.col(2)))
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|r| r.map(|x| x * s)))
    }

    pub fn frobenius(&self) -> T {
        self.0.iter().flatten().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Inverts the vee of a skew-symmetric matrix (antisymmetric part).
    pub fn vee_skew(&self) -> Vec3<T> {
        let m = &self.0;
        let h = T::lit(0.5);
        Vec3([
            (m[2][1] - m[1][2]) * h,
            (m[0][2] - m[2][0]) * h,
            (m[1][0] - m[0][1]) * h,
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] += o.0[i][j];
            }
        }
        r
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] -= o.0[i][j];
            }
        }
        r
    }
}

impl<T: Real> Neg for Mat3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        r
    }
}

impl<T: Real> Mul<Vec3<T>> for Mat3<T> {
    type Output = Vec3<T>;
    fn mul(self, v: Vec3<T>) -> Vec3<T> {
        Vec3([self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v)])
    }
}

impl<T: Real> Mul<T> for Mat3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

// ---------------------------------------------------------------- Vec6

impl<T: Real> Vec6<T> {
    pub fn zeros() -> Self {
        Self([T::zero(); 6])
    }

    pub fn from_parts(top: Vec3<T>, bottom: Vec3<T>) -> Self {
        Self([top[0], top[1], top[2], bottom[0], bottom[1], bottom[2]])
    }

    pub fn top(&self) -> Vec3<T> {
        Vec3([self.0[0], self.0[1], self.0[2]])
    }

    pub fn bottom(&self) -> Vec3<T> {
        Vec3([self.0[3], self.0[4], self.0[5]])
    }

    pub fn dot(&self, o: &Self) -> T {
        (0..6).map(|i| self.0[i] * o.0[i]).sum()
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|x| x * s))
    }
}

impl<T> Index<usize> for Vec6<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec6<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real> Add for Vec6<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..6 {
            r.0[i] += o.0[i];
        }
        r
    }
}

impl<T: Real> Sub for Vec6<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..6 {
            r.0[i] -= o.0[i];
        }
        r
    }
}

impl<T: Real> Neg for Vec6<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

// ---------------------------------------------------------------- Mat6

impl<T: Real> Mat6<T> {
    pub fn zeros() -> Self {
        Self([[T::zero(); 6]; 6])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..6 {
            m.0[i][i] = T::one();
        }
        m
    }

    /// Assembles `[[a, b], [c, d]]` from 3×3 blocks.
    pub fn from_blocks(a: Mat3<T>, b: Mat3<T>, c: Mat3<T>, d: Mat3<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a.0[i][j];
                m.0[i][j + 3] = b.0[i][j];
                m.0[i + 3][j] = c.0[i][j];
                m.0[i + 3][j + 3] = d.0[i][j];
            }
        }
        m
    }

    /// Extracts the 3×3 block at block position (`bi`, `bj`).
    pub fn block(&self, bi: usize, bj: usize) -> Mat3<T> {
        let mut b = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                b.0[i][j] = self.0[3 * bi + i][3 * bj + j];
            }
        }
        b
    }

    pub fn col(&self, j: usize) -> Vec6<T> {
        Vec6(std::array::from_fn(|i| self.0[i][j]))
    }

    pub fn transpose(&self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|r| r.map(|x| x * s)))
    }

    pub fn frobenius(&self) -> T {
        self.0.iter().flatten().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

impl<T: Real> Add for Mat6<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        r += o;
        r
    }
}

impl<T: Real> AddAssign for Mat6<T> {
    fn add_assign(&mut self, o: Self) {
        for i in 0..6 {
            for j in 0..6 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl<T: Real> Sub for Mat6<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-T::one())
    }
}

impl<T: Real> Neg for Mat6<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Mat6<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = Self::zeros();
        for i in 0..6 {
            for k in 0..6 {
                let a = self.0[i][k];
                for j in 0..6 {
                    r.0[i][j] += a * o.0[k][j];
                }
            }
        }
        r
    }
}

impl<T: Real> Mul<Vec6<T>> for Mat6<T> {
    type Output = Vec6<T>;
    fn mul(self, v: Vec6<T>) -> Vec6<T> {
        Vec6(std::array::from_fn(|i| (0..6).map(|j| self.0[i][j] * v.0[j]).sum()))
    }
}
