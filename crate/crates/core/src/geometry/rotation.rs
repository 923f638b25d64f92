use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Vectors shorter than this are treated as having no direction.
pub const MIN_VECTOR_NORM: f64 = 1e-12;

/// Angles closer than this to pi take the deterministic half-turn branch
/// of [`rotation_between`].
pub const ANTIPODAL_MARGIN: f64 = 1e-6;

/// A rotation in SO(3) stored as a unit quaternion.
///
/// `q` and `-q` describe the same rotation; every comparison in this crate
/// goes through [`geodesic_angle`], which is sign-invariant. The quaternion
/// is renormalized whenever one is built or composed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation(UnitQuaternion<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    /// Builds a rotation from raw quaternion components, normalizing them.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || n < MIN_VECTOR_NORM {
            return Err(domain(format!(
                "quaternion ({w}, {x}, {y}, {z}) has no direction"
            )));
        }
        Ok(Self(UnitQuaternion::new_normalize(q)))
    }

    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        Self(UnitQuaternion::new_normalize(q.into_inner()))
    }

    /// Components in (w, x, y, z) order.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn as_unit_quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transform_vector(v)
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(UnitQuaternion::new_normalize(
            self.0.into_inner() * rhs.0.into_inner(),
        ))
    }
}

/// A rigid transform: rotation plus position in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Rotation,
    pub position: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Rotation, position: Vector3<f64>) -> Self {
        Self { rotation, position }
    }

    /// The image of the tool-frame axis `e_c` in the world frame.
    pub fn axis(&self, e_c: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(e_c)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|c| c.is_finite())
            && self.rotation.wxyz().iter().all(|c| c.is_finite())
    }
}

/// Rotation angle of `r1⁻¹ r2`, in `[0, pi]`.
pub fn geodesic_angle(r1: &Rotation, r2: &Rotation) -> f64 {
    let d =
        r1.0.quaternion()
            .coords
            .dot(&r2.0.quaternion().coords)
            .abs();
    2.0 * d.min(1.0).acos()
}

/// Unsigned angle between two vectors, in `[0, pi]`.
pub fn angle_between(u: &Vector3<f64>, v: &Vector3<f64>) -> Result<f64> {
    let (nu, nv) = (u.norm(), v.norm());
    if !(nu > MIN_VECTOR_NORM && nv > MIN_VECTOR_NORM) {
        return Err(domain("angle_between needs two non-zero vectors"));
    }
    Ok((u.dot(v) / (nu * nv)).clamp(-1.0, 1.0).acos())
}

/// Rotation by `angle` radians about a unit `axis`.
pub fn exp_rotation(axis: &Vector3<f64>, angle: f64) -> Rotation {
    let (s, c) = (0.5 * angle).sin_cos();
    Rotation(UnitQuaternion::new_normalize(Quaternion::new(
        c,
        s * axis.x,
        s * axis.y,
        s * axis.z,
    )))
}

/// Exponential of the skew matrix of a rotation vector `omega`
/// (axis times angle). The zero vector maps to the identity.
pub fn exp_map(omega: &Vector3<f64>) -> Rotation {
    let angle = omega.norm();
    if angle < MIN_VECTOR_NORM {
        return Rotation::identity();
    }
    exp_rotation(&(omega / angle), angle)
}

/// The minimal rotation carrying direction `u` onto direction `v`.
///
/// Near-antipodal pairs rotate by pi about the normalized largest of
/// `x̂ × u`, `ŷ × u`, `ẑ × u` (first wins on ties).
pub fn rotation_between(u: &Vector3<f64>, v: &Vector3<f64>) -> Rotation {
    let u = u.normalize();
    let v = v.normalize();
    let cross = u.cross(&v);
    let angle = cross.norm().atan2(u.dot(&v));
    if angle > PI - ANTIPODAL_MARGIN {
        return exp_rotation(&perpendicular_axis(&u), PI);
    }
    if cross.norm() < MIN_VECTOR_NORM {
        return Rotation::identity();
    }
    exp_rotation(&cross.normalize(), angle)
}

/// Unit vector perpendicular to `u`: the normalized largest of `x̂ × u`,
/// `ŷ × u`, `ẑ × u`.
pub fn perpendicular_axis(u: &Vector3<f64>) -> Vector3<f64> {
    let mut best = Vector3::x().cross(u);
    for e in [Vector3::y(), Vector3::z()] {
        let c = e.cross(u);
        if c.norm() > best.norm() {
            best = c;
        }
    }
    best.normalize()
}
