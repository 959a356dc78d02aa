//! SE(3) / se(3) primitives: twists, poses, hat/vee, exponential and
//! logarithm, adjoint, and the closed-form differential Jacobians of the
//! exponential map.
//!
//! Twists are ordered `[ω; ρ]` (rotation first) everywhere. The adjoint of a
//! pose `(R, t)` is therefore `[[R, 0], [t×R, R]]`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::numerics::{Mat3, Mat6, Vec3, Vec6};
use crate::scalar::Real;

/// Below this rotation angle every trigonometric coefficient is evaluated by
/// its Taylor series (through θ⁶) instead of the closed form.
///
/// The closed forms of the Jacobian coefficients divide by up to θ⁵ and lose
/// roughly `ε/θ²` absolute accuracy in the translational block; at 1e-2 the
/// loss is ~1e-12 while the truncated series error is below 1e-17.
pub const SMALL_ANGLE: f64 = 1e-2;

/// Minimum distance from π required by [`log_se3`].
pub const LOG_PI_MARGIN: f64 = 1e-6;

/// 4×4 homogeneous matrix, row-major.
pub type Mat4<T> = [[T; 4]; 4];

/// Twist coordinates `[ω; ρ]` of an element of se(3).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist<T> {
    /// Angular part (radians per unit of the exponent).
    pub omega: Vec3<T>,
    /// Linear part (meters per unit of the exponent).
    pub rho: Vec3<T>,
}

impl<T: Real> Twist<T> {
    pub fn new(omega: Vec3<T>, rho: Vec3<T>) -> Self {
        Self { omega, rho }
    }

    pub fn zero() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros())
    }

    /// Builds a twist from `[ωx, ωy, ωz, ρx, ρy, ρz]`.
    pub fn from_array(a: [T; 6]) -> Self {
        Self::new(Vec3([a[0], a[1], a[2]]), Vec3([a[3], a[4], a[5]]))
    }

    pub fn from_f64(a: [f64; 6]) -> Self {
        Self::from_array(a.map(T::lit))
    }

    pub fn to_array(&self) -> [T; 6] {
        [self.omega[0], self.omega[1], self.omega[2], self.rho[0], self.rho[1], self.rho[2]]
    }

    pub fn to_f64(&self) -> [f64; 6] {
        self.to_array().map(T::to_f64_lossy)
    }

    pub fn from_vec6(v: Vec6<T>) -> Self {
        Self::from_array(v.0)
    }

    pub fn to_vec6(&self) -> Vec6<T> {
        Vec6(self.to_array())
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.omega.scale(s), self.rho.scale(s))
    }

    pub fn norm(&self) -> T {
        self.to_vec6().norm()
    }

    pub fn max_abs(&self) -> T {
        self.to_vec6().max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite() && self.rho.is_finite()
    }
}

impl<T: Real> Add for Twist<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.omega + o.omega, self.rho + o.rho)
    }
}

impl<T: Real> Sub for Twist<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.omega - o.omega, self.rho - o.rho)
    }
}

impl<T: Real> Neg for Twist<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.omega, -self.rho)
    }
}

impl<T: Real> Mul<Twist<T>> for Mat6<T> {
    type Output = Twist<T>;
    fn mul(self, x: Twist<T>) -> Twist<T> {
        Twist::from_vec6(self * x.to_vec6())
    }
}

/// Rigid transform `x ↦ R x + t` (rotation dimensionless, translation meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    pub r: Mat3<T>,
    pub t: Vec3<T>,
}

impl<T: Real> Default for Pose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Pose<T> {
    pub fn new(r: Mat3<T>, t: Vec3<T>) -> Self {
        Self { r, t }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }

    pub fn inverse(&self) -> Self {
        let rt = self.r.transpose();
        Self::new(rt, -(rt * self.t))
    }

    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.r * p + self.t
    }

    /// Rotation angle in `[0, π]`, computed robustly with `atan2`.
    pub fn rotation_angle(&self) -> T {
        rotation_angle(&self.r)
    }

    pub fn to_matrix(&self) -> Mat4<T> {
        let (r, t) = (&self.r.0, &self.t);
        let (o, l) = (T::zero(), T::one());
        [
            [r[0][0], r[0][1], r[0][2], t[0]],
            [r[1][0], r[1][1], r[1][2], t[1]],
            [r[2][0], r[2][1], r[2][2], t[2]],
            [o, o, o, l],
        ]
    }

    /// Reads a homogeneous matrix without validating the rotation block.
    pub fn from_matrix_unchecked(m: &Mat4<T>) -> Self {
        Self::new(
            Mat3(std::array::from_fn(|i| std::array::from_fn(|j| m[i][j]))),
            Vec3([m[0][3], m[1][3], m[2][3]]),
        )
    }

    /// Reads a homogeneous matrix, requiring an orthonormal right-handed
    /// rotation block (to `tol` in Frobenius norm) and a `[0 0 0 1]` last row.
    pub fn from_matrix(m: &Mat4<T>, tol: T) -> Result<Self> {
        let p = Self::from_matrix_unchecked(m);
        let last = [m[3][0], m[3][1], m[3][2], m[3][3] - T::one()];
        if last.iter().any(|x| x.abs() > tol) {
            return Err(Error::Invalid("pose matrix last row must be [0, 0, 0, 1]".into()));
        }
        if !p.is_valid(tol) {
            return Err(Error::Invalid("pose rotation block is not a proper rotation".into()));
        }
        Ok(p)
    }

    /// `‖RᵀR − I‖_F < tol`, `det R > 0`, all entries finite.
    pub fn is_valid(&self, tol: T) -> bool {
        self.r.is_finite()
            && self.t.is_finite()
            && (self.r.transpose() * self.r - Mat3::identity()).frobenius() < tol
            && self.r.det() > T::zero()
    }

    /// Frobenius distance between homogeneous matrices.
    pub fn distance(&self, o: &Self) -> T {
        let dr = (self.r - o.r).frobenius();
        let dt = (self.t - o.t).norm();
        (dr * dr + dt * dt).sqrt()
    }
}

impl<T: Real> Mul for Pose<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.r * o.r, self.r * o.t + self.t)
    }
}

/// Rotation angle of a rotation matrix in `[0, π]`.
pub fn rotation_angle<T: Real>(r: &Mat3<T>) -> T {
    let s = r.vee_skew().norm();
    let c = (r.trace() - T::one()) * T::lit(0.5);
    s.atan2(c)
}

/// `ξ ↦ ξ̂`, the 4×4 matrix `[[ω×, ρ], [0, 0]]`.
pub fn hat<T: Real>(xi: &Twist<T>) -> Mat4<T> {
    let w = xi.omega.skew().0;
    let o = T::zero();
    [
        [w[0][0], w[0][1], w[0][2], xi.rho[0]],
        [w[1][0], w[1][1], w[1][2], xi.rho[1]],
        [w[2][0], w[2][1], w[2][2], xi.rho[2]],
        [o, o, o, o],
    ]
}

/// Inverse of [`hat`]. Rejects matrices whose last row is nonzero or whose
/// rotation block is not skew-symmetric (tolerance 1e-9).
pub fn vee<T: Real>(m: &Mat4<T>) -> Result<Twist<T>> {
    let tol = T::lit(1e-9);
    if m[3].iter().any(|x| x.abs() > tol) {
        return Err(Error::NotATwist {
            reason: "last row must be zero".into(),
        });
    }
    for i in 0..3 {
        if m[i][i].abs() > tol {
            return Err(Error::NotATwist {
                reason: format!("diagonal entry ({i},{i}) must be zero"),
            });
        }
        for j in (i + 1)..3 {
            if (m[i][j] + m[j][i]).abs() > tol {
                return Err(Error::NotATwist {
                    reason: format!("rotation block not skew-symmetric at ({i},{j})"),
                });
            }
        }
    }
    Ok(Twist::new(
        Vec3([m[2][1], m[0][2], m[1][0]]),
        Vec3([m[0][3], m[1][3], m[2][3]]),
    ))
}

/// `(sinθ/θ, (1−cosθ)/θ², (θ−sinθ)/θ³)`.
fn exp_coefficients<T: Real>(theta: T) -> (T, T, T) {
    if theta < T::lit(SMALL_ANGLE) {
        let t2 = theta * theta;
        let a = horner(t2, &[1.0, -1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0]);
        let b = horner(t2, &[0.5, -1.0 / 24.0, 1.0 / 720.0, -1.0 / 40320.0]);
        let c = horner(t2, &[1.0 / 6.0, -1.0 / 120.0, 1.0 / 5040.0, -1.0 / 362880.0]);
        (a, b, c)
    } else {
        let s = theta.sin();
        let half = (theta * T::lit(0.5)).sin();
        let t2 = theta * theta;
        (s / theta, T::lit(2.0) * half * half / t2, (theta - s) / (t2 * theta))
    }
}

/// Evaluates `Σ coeffs[k] · x^k`.
fn horner<T: Real>(x: T, coeffs: &[f64]) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Exponential map se(3) → SE(3).
pub fn exp_se3<T: Real>(xi: &Twist<T>) -> Pose<T> {
    let theta = xi.omega.norm();
    let (a, b, c) = exp_coefficients(theta);
    let w = xi.omega.skew();
    let w2 = w * w;
    let i = Mat3::identity();
    let r = i + w.scale(a) + w2.scale(b);
    let v = i + w.scale(b) + w2.scale(c);
    Pose::new(r, v * xi.rho)
}

/// Logarithm SE(3) → se(3).
///
/// Fails with [`Error::NearPi`] when the rotation angle is within
/// [`LOG_PI_MARGIN`] of π, where the axis becomes ill-determined.
pub fn log_se3<T: Real>(pose: &Pose<T>) -> Result<Twist<T>> {
    let s_axis = pose.r.vee_skew();
    let s = s_axis.norm();
    let c = (pose.r.trace() - T::one()) * T::lit(0.5);
    let theta = s.atan2(c);
    if theta > T::PI() - T::lit(LOG_PI_MARGIN) {
        return Err(Error::NearPi {
            angle: theta.to_f64_lossy(),
        });
    }
    let t2 = theta * theta;
    let (theta_over_sin, d) = if theta < T::lit(SMALL_ANGLE) {
        (
            horner(t2, &[1.0, 1.0 / 6.0, 7.0 / 360.0, 31.0 / 15120.0]),
            horner(t2, &[1.0 / 12.0, 1.0 / 720.0, 1.0 / 30240.0, 1.0 / 1209600.0]),
        )
    } else {
        let half = theta * T::lit(0.5);
        (
            theta / theta.sin(),
            (T::one() - half / half.tan()) / t2,
        )
    };
    let omega = s_axis.scale(theta_over_sin);
    let w = omega.skew();
    let vinv = Mat3::identity() - w.scale(T::lit(0.5)) + (w * w).scale(d);
    Ok(Twist::new(omega, vinv * pose.t))
}

/// Adjoint `Ad(T) = [[R, 0], [t×R, R]]` for the `[ω; ρ]` ordering.
pub fn adjoint<T: Real>(pose: &Pose<T>) -> Mat6<T> {
    Mat6::from_blocks(pose.r, Mat3::zeros(), pose.t.skew() * pose.r, pose.r)
}

/// Algebra adjoint `ad(ξ) = [[ω×, 0], [ρ×, ω×]]` (the matrix Ω).
pub fn ad<T: Real>(xi: &Twist<T>) -> Mat6<T> {
    let w = xi.omega.skew();
    Mat6::from_blocks(w, Mat3::zeros(), xi.rho.skew(), w)
}

/// Coefficients `(c1, c2, c3, c4)` of `𝒥 = I + c1 Ω + c2 Ω² + c3 Ω³ + c4 Ω⁴`
/// from the closed trigonometric forms. Inaccurate for very small θ.
pub fn jacobian_coefficients_closed<T: Real>(theta: T) -> [T; 4] {
    let (s, c) = theta.sin_cos();
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let two = T::lit(2.0);
    let (three, four, five) = (T::lit(3.0), T::lit(4.0), T::lit(5.0));
    [
        (four - theta * s - four * c) / (two * t2),
        (four * theta - five * s + theta * c) / (two * t3),
        (two - theta * s - two * c) / (two * t2 * t2),
        (two * theta - three * s + theta * c) / (two * t2 * t3),
    ]
}

/// Taylor expansions (through θ⁶) of the coefficients of
/// [`jacobian_coefficients_closed`].
pub fn jacobian_coefficients_taylor<T: Real>(theta: T) -> [T; 4] {
    let t2 = theta * theta;
    [
        horner(t2, &[0.5, 0.0, -1.0 / 720.0, 1.0 / 20160.0]),
        horner(t2, &[1.0 / 6.0, 0.0, -1.0 / 5040.0, 1.0 / 181440.0]),
        horner(t2, &[1.0 / 24.0, -1.0 / 360.0, 1.0 / 13440.0, -1.0 / 907200.0]),
        horner(t2, &[1.0 / 120.0, -1.0 / 2520.0, 1.0 / 120960.0, -1.0 / 9979200.0]),
    ]
}

/// `I + c1 Ω + c2 Ω² + c3 Ω³ + c4 Ω⁴` for explicit coefficients.
pub fn jacobian_from_coefficients<T: Real>(xi: &Twist<T>, c: [T; 4]) -> Mat6<T> {
    let om = ad(xi);
    let om2 = om * om;
    let om3 = om2 * om;
    let om4 = om2 * om2;
    Mat6::identity() + om.scale(c[0]) + om2.scale(c[1]) + om3.scale(c[2]) + om4.scale(c[3])
}

/// Left Jacobian 𝒥(ξ) of the exponential map:
/// `[δ exp(ξ̂) · exp(−ξ̂)]^∨ = 𝒥(ξ) δξ` to first order.
pub fn left_jacobian<T: Real>(xi: &Twist<T>) -> Mat6<T> {
    let theta = xi.omega.norm();
    let c = if theta < T::lit(SMALL_ANGLE) {
        jacobian_coefficients_taylor(theta)
    } else {
        jacobian_coefficients_closed(theta)
    };
    jacobian_from_coefficients(xi, c)
}

/// Joint Jacobian 𝔍(ξ, q) of `ξ ↦ exp(ξ̂ q)`:
/// `[δ exp(ξ̂ q) · exp(−ξ̂ q)]^∨ = 𝔍(ξ, q) δξ`, equal to `q · 𝒥(q ξ)`.
pub fn joint_jacobian<T: Real>(xi: &Twist<T>, q: T) -> Mat6<T> {
    left_jacobian(&xi.scale(q)).scale(q)
}
