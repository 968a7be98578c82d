//! Camera model, rigid poses, lighting and seeded per-frame scene sampling.
//!
//! The camera sits at the world origin looking down −z; the head is placed
//! in front of it by [`SceneSample::head_pose`], which carries all of the
//! per-frame pose and distance variation.

mod camera;
mod sampling;
mod transform;

pub use camera::{CameraRig, Intrinsics, Projection};
pub use sampling::{
    frame_seed, light_direction, sample_scene, PointLight, SceneSample, SweepConfig,
};
pub use transform::{RigidTransform, ROTATION_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("transform has non-finite entries")]
    NonFiniteTransform,
    #[error("rotation is not proper (det = {det}, orthonormality error = {ortho_err})")]
    ImproperRotation { det: f64, ortho_err: f64 },
    #[error("camera.{field}: {reason}")]
    InvalidCamera {
        field: &'static str,
        reason: &'static str,
    },
    #[error("sweep.{field}: {reason}")]
    InvalidRange {
        field: &'static str,
        reason: &'static str,
    },
    #[error("sweep.expressions: expression set is empty")]
    EmptyExpressionSet,
    #[error("light: {0}")]
    InvalidLight(&'static str),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
}
