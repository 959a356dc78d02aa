//! Product-of-exponentials forward kinematics of a serial arm.

use crate::error::{Error, Result};
use crate::liegroup::{exp_se3, log_se3, Pose, Twist};
use crate::scalar::Real;

/// Joint positions of one arm, radians.
pub type JointConfig<T> = Vec<T>;

/// PoE parameters of one serial arm: `FK(q) = exp(ξ̂¹q¹)···exp(ξ̂ⁿqⁿ)·exp(ξ̂ˢᵗ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel<T> {
    /// Human-readable label.
    pub name: String,
    /// Joint twists expressed in the base frame, ordered base to flange.
    pub joint_twists: Vec<Twist<T>>,
    /// Zero-offset twist ξˢᵗ (flange pose at `q = 0`); never optimized.
    pub zero_offset: Twist<T>,
}

impl<T: Real> RobotModel<T> {
    /// Builds a model, requiring at least one joint and finite twists.
    pub fn new(name: impl Into<String>, joint_twists: Vec<Twist<T>>, zero_offset: Twist<T>) -> Result<Self> {
        if joint_twists.is_empty() {
            return Err(Error::Invalid("robot model needs at least one joint".into()));
        }
        if !joint_twists.iter().chain(std::iter::once(&zero_offset)).all(Twist::is_finite) {
            return Err(Error::Invalid("robot model twists must be finite".into()));
        }
        Ok(Self {
            name: name.into(),
            joint_twists,
            zero_offset,
        })
    }

    /// Number of joints.
    pub fn n(&self) -> usize {
        self.joint_twists.len()
    }

    /// Converts the scalar type through `f64`.
    pub fn cast<U: Real>(&self) -> RobotModel<U> {
        RobotModel {
            name: self.name.clone(),
            joint_twists: self.joint_twists.iter().map(|x| Twist::from_f64(x.to_f64())).collect(),
            zero_offset: Twist::from_f64(self.zero_offset.to_f64()),
        }
    }

    /// Checks the length of a joint configuration against this model.
    pub fn check_config(&self, q: &[T]) -> Result<()> {
        if q.len() != self.n() {
            return Err(Error::Dimension {
                context: "joint configuration length",
                expected: self.n(),
                actual: q.len(),
            });
        }
        Ok(())
    }
}

/// Forward kinematics `exp(ξ̂¹q¹)···exp(ξ̂ⁿqⁿ)·exp(ξ̂ˢᵗ)`.
pub fn forward_kinematics<T: Real>(model: &RobotModel<T>, q: &[T]) -> Result<Pose<T>> {
    model.check_config(q)?;
    let mut pose = Pose::identity();
    for (xi, &qk) in model.joint_twists.iter().zip(q) {
        pose = pose * exp_se3(&xi.scale(qk));
    }
    Ok(pose * exp_se3(&model.zero_offset))
}

/// Applies right-multiplicative increments to every joint twist:
/// `exp(ξ̂_new) = exp(ξ̂_nom)·exp(Δξ̂)`. The zero offset is unchanged.
pub fn perturb_model<T: Real>(model: &RobotModel<T>, deltas: &[Twist<T>]) -> Result<RobotModel<T>> {
    if deltas.len() != model.n() {
        return Err(Error::Dimension {
            context: "perturbation count",
            expected: model.n(),
            actual: deltas.len(),
        });
    }
    let joint_twists = model
        .joint_twists
        .iter()
        .zip(deltas)
        .map(|(xi, d)| {
            if *d == Twist::zero() {
                Ok(*xi)
            } else {
                log_se3(&(exp_se3(xi) * exp_se3(d)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RobotModel {
        name: model.name.clone(),
        joint_twists,
        zero_offset: model.zero_offset,
    })
}
