use nalgebra::{Matrix3, Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::SceneError;

/// Orthonormality and determinant tolerance for rotation matrices.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// Proper rigid transform `p' = R p + t`.
///
/// The rotation is validated on construction: orthonormal with determinant
/// +1 (within [`ROTATION_TOLERANCE`]) and every entry finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTransform", into = "RawTransform")]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTransform {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl TryFrom<RawTransform> for RigidTransform {
    type Error = SceneError;

    fn try_from(raw: RawTransform) -> Result<Self, Self::Error> {
        let r = raw.rotation;
        let rotation = Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        );
        RigidTransform::new(rotation, Vector3::from(raw.translation))
    }
}

impl From<RigidTransform> for RawTransform {
    fn from(t: RigidTransform) -> Self {
        RawTransform {
            rotation: t.rotation_rows(),
            translation: t.translation.into(),
        }
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, SceneError> {
        let t = RigidTransform {
            rotation,
            translation,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Result<Self, SceneError> {
        Self::new(Matrix3::identity(), translation)
    }

    /// Head-pose convention: `R = R_y(yaw) · R_x(pitch) · R_z(roll)` with the
    /// vertical axis +y, the face looking toward +z.
    pub fn from_euler_deg(
        yaw_deg: f64,
        pitch_deg: f64,
        roll_deg: f64,
        translation: Vector3<f64>,
    ) -> Result<Self, SceneError> {
        let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), yaw_deg.to_radians());
        let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), pitch_deg.to_radians());
        let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), roll_deg.to_radians());
        Self::new((ry * rx * rz).into_inner(), translation)
    }

    /// Checks finiteness and that the rotation is proper.
    pub fn validate(&self) -> Result<(), SceneError> {
        if self
            .rotation
            .iter()
            .chain(self.translation.iter())
            .any(|v| !v.is_finite())
        {
            return Err(SceneError::NonFiniteTransform);
        }
        let gram = self.rotation.transpose() * self.rotation;
        let ortho_err = (gram - Matrix3::identity()).abs().max();
        let det = self.rotation.determinant();
        if ortho_err > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(SceneError::ImproperRotation { det, ortho_err });
        }
        Ok(())
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn rotation_rows(&self) -> [[f64; 3]; 3] {
        let r = &self.rotation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ]
    }

    pub fn apply_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_reflection() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            RigidTransform::new(m, Vector3::zeros()),
            Err(SceneError::ImproperRotation { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            RigidTransform::from_translation(Vector3::new(f64::NAN, 0.0, 0.0)),
            Err(SceneError::NonFiniteTransform)
        ));
    }

    #[test]
    fn yaw_rotates_face_direction_toward_x() {
        let t = RigidTransform::from_euler_deg(90.0, 0.0, 0.0, Vector3::zeros()).unwrap();
        let v = t.apply_vector(&Vector3::z());
        assert!((v - Vector3::x()).norm() < 1e-12);
    }

    #[test]
    fn inverse_round_trips() {
        let t =
            RigidTransform::from_euler_deg(10.0, -5.0, 3.0, Vector3::new(0.1, 0.2, -0.9)).unwrap();
        let p = Point3::new(0.3, -0.2, 0.5);
        let back = t.inverse().apply_point(&t.apply_point(&p));
        assert!((back - p).norm() < 1e-12);
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let t =
            RigidTransform::from_euler_deg(17.0, 4.0, -2.5, Vector3::new(0.0, 0.0, -0.8)).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: RigidTransform = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }
}
