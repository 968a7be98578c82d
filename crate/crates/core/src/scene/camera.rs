use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{RigidTransform, SceneError};

/// Physical pinhole camera.
///
/// The camera frame is x right, y up, looking down −z. Image rows grow
/// downward, so a point above the optical axis lands at `v < cy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    /// Millimetres.
    pub focal_length: f64,
    /// Horizontal sensor extent in millimetres.
    pub sensor_width: f64,
    pub width_px: u32,
    pub height_px: u32,
    /// Metres.
    pub near_clip: f64,
    /// Metres.
    pub far_clip: f64,
    /// Camera-to-world.
    pub pose: RigidTransform,
}

impl Default for CameraRig {
    fn default() -> Self {
        CameraRig {
            focal_length: 60.0,
            sensor_width: 36.0,
            width_px: 480,
            height_px: 640,
            near_clip: 0.01,
            far_clip: 5.0,
            pose: RigidTransform::identity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Pixel coordinates plus planar depth along the optical axis.
    Visible {
        u: f64,
        v: f64,
        z: f64,
    },
    BehindCamera,
}

impl CameraRig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |field: &'static str, reason: &'static str| {
            Err(SceneError::InvalidCamera { field, reason })
        };
        if !(self.focal_length.is_finite() && self.focal_length > 0.0) {
            return bad("focal_length", "must be finite and > 0");
        }
        if !(self.sensor_width.is_finite() && self.sensor_width > 0.0) {
            return bad("sensor_width", "must be finite and > 0");
        }
        if self.width_px == 0 || self.height_px == 0 {
            return bad("resolution", "width and height must be >= 1");
        }
        if !(self.near_clip.is_finite() && self.near_clip > 0.0) {
            return bad("near_clip", "must be finite and > 0");
        }
        if !(self.far_clip.is_finite() && self.far_clip > self.near_clip) {
            return bad("far_clip", "must be finite and > near_clip");
        }
        self.pose.validate()
    }

    /// Sensor height implied by square pixels.
    pub fn sensor_height(&self) -> f64 {
        self.sensor_width * self.height_px as f64 / self.width_px as f64
    }

    pub fn intrinsics(&self) -> Intrinsics {
        let fx = self.width_px as f64 * (self.focal_length / self.sensor_width);
        Intrinsics {
            fx,
            fy: fx,
            cx: self.width_px as f64 / 2.0,
            cy: self.height_px as f64 / 2.0,
        }
    }

    /// World point into the camera frame.
    pub fn to_camera(&self, p: &Point3<f64>) -> Point3<f64> {
        let r = self.pose.rotation();
        Point3::from(r.transpose() * (p.coords - self.pose.translation()))
    }

    pub fn to_world(&self, p: &Point3<f64>) -> Point3<f64> {
        self.pose.apply_point(p)
    }

    pub fn project(&self, p: &Point3<f64>, intr: &Intrinsics) -> Projection {
        intr.project_camera(&self.to_camera(p))
    }

    /// Inverse of [`CameraRig::project`] for a pixel and planar depth.
    pub fn unproject(&self, u: f64, v: f64, z: f64, intr: &Intrinsics) -> Point3<f64> {
        self.to_world(&intr.unproject_camera(u, v, z))
    }
}

impl Intrinsics {
    /// Projects a camera-frame point. Points with non-positive depth are
    /// reported as behind the camera without dividing.
    pub fn project_camera(&self, p: &Point3<f64>) -> Projection {
        let z = -p.z;
        if z <= 0.0 {
            return Projection::BehindCamera;
        }
        Projection::Visible {
            u: self.cx + self.fx * p.x / z,
            v: self.cy - self.fy * p.y / z,
            z,
        }
    }

    pub fn unproject_camera(&self, u: f64, v: f64, z: f64) -> Point3<f64> {
        Point3::new(
            (u - self.cx) * z / self.fx,
            -(v - self.cy) * z / self.fy,
            -z,
        )
    }

    /// Unit view direction in the camera frame through pixel `(u, v)`.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        self.unproject_camera(u, v, 1.0).coords.normalize()
    }
}
