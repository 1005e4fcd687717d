//! Rigid-body math on SO(3) and SE(3).
//!
//! Rotations are unit quaternions stored as (w, x, y, z). Tangent vectors of
//! SE(3) are split into a translational part `rho` and a rotational part
//! `phi`; the logarithm uses the closed-form inverse of the left Jacobian
//! (the "V matrix"), so `rho` is generally *not* the raw translation.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3, Vector6};
use thiserror::Error;

/// Below this angle the trigonometric coefficients switch to Taylor series.
const SMALL_ANGLE: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("interpolation parameter {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("quaternion has zero or non-finite norm")]
    DegenerateQuaternion,
}

/// Unit quaternion rotation.
///
/// `q` and `-q` describe the same rotation and compare equal.
#[derive(Clone, Copy, Debug)]
pub struct Rotation(UnitQuaternion<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    /// Builds a rotation from (w, x, y, z), normalizing the input.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(GeometryError::DegenerateQuaternion);
        }
        Ok(Self(UnitQuaternion::new_unchecked(q / n)))
    }

    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        Self(q).renormalized()
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        Self::exp(&(axis * (angle / n)))
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::z(), angle)
    }

    /// SO(3) exponential of a rotation vector.
    pub fn exp(phi: &Vector3<f64>) -> Self {
        let theta2 = phi.norm_squared();
        let theta = theta2.sqrt();
        let (w, k) = if theta < SMALL_ANGLE {
            // sin(θ/2)/θ = 1/2 - θ²/48 + ...
            (1.0 - theta2 / 8.0, 0.5 - theta2 / 48.0)
        } else {
            let half = 0.5 * theta;
            (half.cos(), half.sin() / theta)
        };
        let q = Quaternion::new(w, k * phi.x, k * phi.y, k * phi.z);
        Self(UnitQuaternion::new_normalize(q))
    }

    /// Principal SO(3) logarithm, `‖phi‖ ∈ [0, π]`.
    pub fn log(&self) -> Vector3<f64> {
        self.log_flagged().0
    }

    /// Logarithm plus a uniqueness flag; `false` when the angle is exactly π
    /// and `phi` and `-phi` are equally valid.
    pub fn log_flagged(&self) -> (Vector3<f64>, bool) {
        let q = self.0.quaternion();
        // Pick the hemisphere with w >= 0 so the angle lands in [0, π].
        let (w, v) = if q.w < 0.0 {
            (-q.w, -q.imag())
        } else {
            (q.w, q.imag())
        };
        let vn = v.norm();
        if vn < SMALL_ANGLE {
            // θ = 2 atan(vn / w); θ / vn ≈ 2/w (1 - vn²/(3w²))
            let scale = 2.0 / w * (1.0 - vn * vn / (3.0 * w * w));
            return (v * scale, true);
        }
        let theta = 2.0 * vn.atan2(w);
        (v * (theta / vn), w != 0.0)
    }

    /// Rotation angle in [0, π].
    pub fn angle(&self) -> f64 {
        self.log().norm()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn unit_quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    /// Components in (w, x, y, z) order.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Dot product of the underlying quaternions.
    pub fn dot(&self, other: &Rotation) -> f64 {
        self.0.quaternion().dot(other.0.quaternion())
    }

    /// `self⁻¹ · other`; exactly the identity when both are equal.
    pub fn between(&self, other: &Rotation) -> Rotation {
        if self == other {
            return Rotation::identity();
        }
        self.inverse() * *other
    }

    /// Angle of `self⁻¹ · other`.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        self.between(other).angle()
    }

    fn renormalized(self) -> Self {
        Self(UnitQuaternion::new_normalize(self.0.into_inner()))
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl PartialEq for Rotation {
    fn eq(&self, other: &Self) -> bool {
        let a = self.0.quaternion();
        let b = other.0.quaternion();
        a == b || *a == -*b
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0).renormalized()
    }
}

/// Element of se(3): `rho` is translational (m), `phi` rotational (rad).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Twist {
    pub rho: Vector3<f64>,
    pub phi: Vector3<f64>,
}

impl Twist {
    pub fn new(rho: Vector3<f64>, phi: Vector3<f64>) -> Self {
        Self { rho, phi }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Stacked as `[rho; phi]`.
    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.rho.x, self.rho.y, self.rho.z, self.phi.x, self.phi.y, self.phi.z,
        )
    }

    /// Euclidean norm of the stacked 6-vector.
    pub fn norm(&self) -> f64 {
        (self.rho.norm_squared() + self.phi.norm_squared()).sqrt()
    }
}

/// Rigid-body transform `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(Rotation::identity(), t)
    }

    pub fn from_rotation(r: Rotation) -> Self {
        Self::new(r, Vector3::zeros())
    }

    pub fn inverse(&self) -> Self {
        let r_inv = self.rotation.inverse();
        Self::new(r_inv, -r_inv.rotate(&self.translation))
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }

    /// `self⁻¹ · other`, the motion from `self` to `other`. Exactly the
    /// identity when both poses are equal.
    pub fn between(&self, other: &Pose) -> Pose {
        if self == other {
            return Pose::identity();
        }
        self.inverse() * *other
    }

    pub fn exp(t: &Twist) -> Self {
        exp_se3(t)
    }

    pub fn log(&self) -> Twist {
        log_se3(self)
    }

    /// Approximate equality in the pose-norm sense.
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        pose_norm(&self.between(other)) <= tol
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        Pose::new(
            self.rotation * rhs.rotation,
            self.rotation.rotate(&rhs.translation) + self.translation,
        )
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [w, x, y, z] = self.rotation.wxyz();
        let t = &self.translation;
        write!(
            f,
            "Pose(t: [{:.6}, {:.6}, {:.6}], q: [w {:.6}, x {:.6}, y {:.6}, z {:.6}])",
            t.x, t.y, t.z, w, x, y, z
        )
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Left Jacobian of SO(3), `V = I + b K + c K²` with `K = [phi]×`.
fn left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let (b, c) = if theta < SMALL_ANGLE {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        (
            (1.0 - theta.cos()) / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    let k = skew(phi);
    Matrix3::identity() + k * b + k * k * c
}

/// Closed-form inverse of the left Jacobian, `V⁻¹ = I - K/2 + d K²`.
fn left_jacobian_inverse(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let d = if theta < SMALL_ANGLE {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        (1.0 - theta * theta.sin() / (2.0 * (1.0 - theta.cos()))) / theta2
    };
    let k = skew(phi);
    Matrix3::identity() - k * 0.5 + k * k * d
}

pub fn exp_se3(t: &Twist) -> Pose {
    Pose::new(Rotation::exp(&t.phi), left_jacobian(&t.phi) * t.rho)
}

pub fn log_se3(p: &Pose) -> Twist {
    log_se3_flagged(p).0
}

/// SE(3) logarithm plus a uniqueness flag (false at rotation angle π).
pub fn log_se3_flagged(p: &Pose) -> (Twist, bool) {
    let (phi, unique) = p.rotation.log_flagged();
    let rho = left_jacobian_inverse(&phi) * p.translation;
    (Twist::new(rho, phi), unique)
}

/// `‖log(P)∨‖₂` over the stacked 6-vector.
pub fn pose_norm(p: &Pose) -> f64 {
    log_se3(p).norm()
}

/// Shortest-arc spherical interpolation of the rotation, linear interpolation
/// of the translation.
pub fn interpolate_pose(a: &Pose, b: &Pose, alpha: f64) -> Result<Pose, GeometryError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(GeometryError::AlphaOutOfRange(alpha));
    }
    if alpha == 0.0 {
        return Ok(*a);
    }
    if alpha == 1.0 {
        return Ok(*b);
    }
    let delta = (a.rotation.inverse() * b.rotation).log();
    let rotation = a.rotation * Rotation::exp(&(delta * alpha));
    let translation = a.translation + (b.translation - a.translation) * alpha;
    Ok(Pose::new(rotation, translation))
}
