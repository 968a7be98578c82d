//! Z-buffer rasterisation of posed meshes into colour, metric depth and
//! coverage planes.

mod composite;
mod raster;

pub use composite::{composite_background, resize_nearest, solid_background};
pub use raster::rasterize;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{apply_expression, transform_mesh, MeshError, TriMesh};
use crate::scene::{light_direction, CameraRig, Intrinsics, SceneError, SceneSample};

pub type RgbImage = image::RgbImage;

/// Depth value marking a pixel without a surface.
pub const INVALID_DEPTH: f64 = 0.0;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("background is {found:?}, frame is {expected:?} and rescaling is disabled")]
    BackgroundSize {
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("render settings: {0}")]
    Settings(&'static str),
}

/// Row-major per-pixel planar depth in metres; [`INVALID_DEPTH`] where no
/// surface was hit.
///
/// Rendered maps never hold NaN or infinities. Maps built from external
/// predictions may, which is why validity is always checked per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32) -> Self {
        DepthMap {
            width,
            height,
            values: vec![INVALID_DEPTH; width as usize * height as usize],
        }
    }

    /// Returns `None` when `values` does not hold `width * height` entries.
    pub fn from_vec(width: u32, height: u32, values: Vec<f64>) -> Option<Self> {
        (values.len() == width as usize * height as usize).then_some(DepthMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn is_valid_at(&self, i: usize) -> bool {
        let v = self.values[i];
        v.is_finite() && v > 0.0
    }

    pub fn valid_count(&self) -> usize {
        (0..self.values.len())
            .filter(|&i| self.is_valid_at(i))
            .count()
    }
}

/// Per-pixel boolean plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn filled(width: u32, height: u32, value: bool) -> Self {
        Mask {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<bool>) -> Option<Self> {
        (data.len() == width as usize * height as usize).then_some(Mask {
            width,
            height,
            data,
        })
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Generation metadata attached to a rendered frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub sample: SceneSample,
    /// Unit vector from the head origin toward the light, world frame.
    pub light_direction: [f64; 3],
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePacket {
    pub rgb: RgbImage,
    pub depth: DepthMap,
    /// Face coverage; true exactly where `depth` is valid.
    pub mask: Mask,
    pub meta: Option<FrameMeta>,
}

#[derive(Debug, Clone)]
pub enum Albedo {
    Flat([f64; 3]),
    /// Sampled bilinearly at the mesh texture coordinates; meshes without
    /// texture coordinates fall back to [`RenderSettings::DEFAULT_ALBEDO`].
    Texture(Arc<RgbImage>),
}

#[derive(Debug, Clone)]
pub struct RenderSettings {
    pub ambient: f64,
    pub albedo: Albedo,
    /// Allow nearest-neighbour resizing of a background with the wrong size.
    pub rescale_background: bool,
}

impl RenderSettings {
    pub const DEFAULT_AMBIENT: f64 = 0.15;
    pub const DEFAULT_ALBEDO: [f64; 3] = [0.75, 0.75, 0.75];

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.ambient.is_finite() && self.ambient >= 0.0) {
            return Err(RenderError::Settings("ambient must be finite and >= 0"));
        }
        if let Albedo::Flat(a) = &self.albedo {
            if a.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(RenderError::Settings(
                    "albedo components must lie in [0, 1]",
                ));
            }
        }
        Ok(())
    }
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            ambient: Self::DEFAULT_AMBIENT,
            albedo: Albedo::Flat(Self::DEFAULT_ALBEDO),
            rescale_background: false,
        }
    }
}

/// Full per-frame pipeline: expression, head pose, rasterisation and
/// background compositing. Pure in its inputs.
pub fn render_frame(
    mesh: &TriMesh,
    sample: &SceneSample,
    cam: &CameraRig,
    background: &RgbImage,
    settings: &RenderSettings,
) -> Result<FramePacket, RenderError> {
    let expressed = apply_expression(mesh, &sample.expression)?;
    let posed = transform_mesh(&expressed, &sample.head_pose)?;
    let frame = rasterize(&posed, cam, &sample.light, settings)?;
    let mut frame = composite_background(frame, background, settings.rescale_background)?;
    let head_origin = nalgebra::Point3::from(*sample.head_pose.translation());
    let dir = light_direction(sample, &head_origin)?;
    frame.meta = Some(FrameMeta {
        sample: sample.clone(),
        light_direction: dir.into(),
        intrinsics: cam.intrinsics(),
    });
    Ok(frame)
}
