//! Line-delimited JSON manifest.
//!
//! The first line is the header, prefixed with `# `; every following line
//! is one self-contained [`FrameRecord`].

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, DepthEncoding};
use crate::mesh::ExpressionWeights;
use crate::render::FrameMeta;
use crate::scene::{CameraRig, Intrinsics};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const HEADER_PREFIX: &str = "# ";
pub const FORMAT_NAME: &str = "facedepth-manifest";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub format_version: u32,
    pub generator_version: String,
    pub seed: u64,
    pub frame_count: u64,
    pub encoding: DepthEncoding,
    pub camera: CameraRig,
    /// Effective run configuration, echoed verbatim.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl ManifestHeader {
    pub fn new(
        seed: u64,
        frame_count: u64,
        encoding: DepthEncoding,
        camera: CameraRig,
        config: serde_json::Value,
    ) -> Self {
        ManifestHeader {
            format: FORMAT_NAME.to_owned(),
            format_version: FORMAT_VERSION,
            generator_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            frame_count,
            encoding,
            camera,
            config,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{HEADER_PREFIX}{}",
            serde_json::to_string(self).expect("header serialises")
        )
    }
}

/// Head pose as Euler angles (degrees) and as the authoritative matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub rotation: [[f64; 3]; 3],
    /// Metres, world frame.
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    /// Paths relative to the dataset root, `/`-separated.
    pub rgb: String,
    pub depth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_raw: Option<String>,
    /// Metres.
    pub camera_distance: f64,
    pub head_pose: HeadPose,
    pub light_position: [f64; 3],
    pub light_direction: [f64; 3],
    pub expression: String,
    pub expression_weights: ExpressionWeights,
    pub seed: u64,
    pub intrinsics: Intrinsics,
    pub valid_pixels: u64,
}

impl FrameRecord {
    pub fn from_meta(
        meta: &FrameMeta,
        rgb: String,
        depth: String,
        depth_raw: Option<String>,
        valid_pixels: u64,
    ) -> Self {
        let s = &meta.sample;
        FrameRecord {
            frame_index: s.frame_index,
            rgb,
            depth,
            depth_raw,
            camera_distance: s.camera_distance,
            head_pose: HeadPose {
                yaw_deg: s.yaw_deg,
                pitch_deg: s.pitch_deg,
                roll_deg: s.roll_deg,
                rotation: s.head_pose.rotation_rows(),
                translation: (*s.head_pose.translation()).into(),
            },
            light_position: s.light.position,
            light_direction: meta.light_direction,
            expression: s.expression_name.clone(),
            expression_weights: s.expression.clone(),
            seed: s.seed,
            intrinsics: meta.intrinsics,
            valid_pixels,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serialises")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub records: Vec<FrameRecord>,
}

impl Manifest {
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, DatasetError> {
        let mut lines = reader.lines().enumerate();
        let bad = |line: usize, message: String| DatasetError::Manifest { line, message };
        let (_, first) = lines
            .next()
            .ok_or_else(|| bad(1, "empty manifest".into()))?;
        let first = first.map_err(|e| bad(1, e.to_string()))?;
        let body = first
            .strip_prefix(HEADER_PREFIX)
            .ok_or_else(|| bad(1, format!("header must start with '{HEADER_PREFIX}'")))?;
        let header: ManifestHeader =
            serde_json::from_str(body).map_err(|e| bad(1, e.to_string()))?;
        if header.format != FORMAT_NAME || header.format_version > FORMAT_VERSION {
            return Err(bad(
                1,
                format!(
                    "unsupported format {} v{}",
                    header.format, header.format_version
                ),
            ));
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| bad(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(|e| bad(i + 1, e.to_string()))?);
        }
        Ok(Manifest { header, records })
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(path).map_err(|e| DatasetError::io(path, e))?;
        Self::parse(std::io::BufReader::new(file)).map_err(|e| DatasetError::in_file(path, e))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.to_line())?;
        for r in &self.records {
            writeln!(w, "{}", r.to_line())?;
        }
        Ok(())
    }
}
