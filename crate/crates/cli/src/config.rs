//! Run configuration: a TOML file with optional `section.key=value`
//! overrides. Relative paths are resolved against the config file's
//! directory.

use std::path::{Path, PathBuf};

use facedepth_core::dataset::DepthEncoding;
use facedepth_core::{CameraRig, RigidTransform, SweepConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("override `{0}`: expected section.key=value")]
    Override(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetsConfig {
    /// Base head mesh (OBJ).
    pub base_mesh: PathBuf,
    /// TOML table of `expression = "target.obj"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morphs: Option<PathBuf>,
    /// Static background image; a solid colour is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<PathBuf>,
    /// Albedo texture sampled at the mesh texture coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texture: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub focal_length_mm: f64,
    pub sensor_width_mm: f64,
    pub width_px: u32,
    pub height_px: u32,
    pub near_clip_m: f64,
    pub far_clip_m: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        let rig = CameraRig::default();
        CameraConfig {
            focal_length_mm: rig.focal_length,
            sensor_width_mm: rig.sensor_width,
            width_px: rig.width_px,
            height_px: rig.height_px,
            near_clip_m: rig.near_clip,
            far_clip_m: rig.far_clip,
        }
    }
}

impl CameraConfig {
    pub fn rig(&self) -> CameraRig {
        CameraRig {
            focal_length: self.focal_length_mm,
            sensor_width: self.sensor_width_mm,
            width_px: self.width_px,
            height_px: self.height_px,
            near_clip: self.near_clip_m,
            far_clip: self.far_clip_m,
            pose: RigidTransform::identity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadingConfig {
    pub ambient: f64,
    /// Flat albedo used when no texture is given.
    pub albedo: [f64; 3],
    pub background_color: [u8; 3],
    /// Resize a background of the wrong size instead of failing.
    pub rescale_background: bool,
}

impl Default for ShadingConfig {
    fn default() -> Self {
        ShadingConfig {
            ambient: 0.15,
            albedo: [0.75; 3],
            background_color: [128, 128, 128],
            rescale_background: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    /// Integer depth units per metre in the 16-bit PNGs.
    pub depth_scale: f64,
    /// Also write `depth_raw/NNNNNN.bin` with f32 metres.
    pub float_sidecar: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            depth_scale: DepthEncoding::default().scale,
            float_sidecar: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Render threads; 0 uses every core.
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("dataset"),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub assets: AssetsConfig,
    #[serde(default)]
    pub camera: CameraConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub shading: ShadingConfig,
    #[serde(default)]
    pub encoding: EncodingConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Parses `section.key=value`. The value is read as a TOML literal, falling
/// back to a bare string.
pub fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value), ConfigError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(raw.to_owned()))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(raw.to_owned()));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_owned()));
    Ok((path, parsed))
}

fn apply_override(
    table: &mut toml::Table,
    path: &[String],
    value: toml::Value,
) -> Result<(), ConfigError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = table;
    for key in parents {
        node = node
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| invalid(&path.join("."), format!("`{key}` is not a section")))?;
    }
    node.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    pub fn from_toml(
        text: &str,
        base_dir: &Path,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let parse_err = |message: String| ConfigError::Parse {
            path: base_dir.to_owned(),
            message,
        };
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
        for raw in overrides {
            let (path, value) = parse_override(raw)?;
            apply_override(&mut table, &path, value)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| parse_err(e.message().to_owned()))?;
        cfg.base_dir = base_dir.to_owned();
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("")).to_owned();
        Self::from_toml(&text, &base, overrides).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_owned(),
                message,
            },
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    pub fn encoding(&self) -> DepthEncoding {
        DepthEncoding {
            scale: self.encoding.depth_scale,
        }
    }

    /// Field-level validation of everything that can be checked without
    /// loading assets.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sweep.frame_count < 1 {
            return Err(invalid("sweep.frame_count", "must be at least 1"));
        }
        self.sweep.validate().map_err(|e| invalid("sweep", e))?;
        let rig = self.camera.rig();
        rig.validate().map_err(|e| invalid("camera", e))?;
        self.encoding()
            .check_range(rig.far_clip)
            .map_err(|e| invalid("encoding.depth_scale", e))?;
        let s = &self.shading;
        if !(s.ambient.is_finite() && s.ambient >= 0.0) {
            return Err(invalid("shading.ambient", "must be finite and >= 0"));
        }
        if s.albedo.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(invalid("shading.albedo", "components must lie in [0, 1]"));
        }
        let assets = [
            ("assets.base_mesh", Some(&self.assets.base_mesh)),
            ("assets.morphs", self.assets.morphs.as_ref()),
            ("assets.background", self.assets.background.as_ref()),
            ("assets.texture", self.assets.texture.as_ref()),
        ];
        for (field, path) in assets {
            if let Some(p) = path {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(invalid(
                        field,
                        format!("file not found: {}", full.display()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The configuration echoed into the manifest header. Output location
    /// and worker count are left out: they do not affect the data.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output");
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = "[assets]\nbase_mesh = \"head.obj\"\n";

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = RunConfig::from_toml(MIN, Path::new("cfg"), &[]).unwrap();
        assert_eq!(cfg.camera.rig(), CameraRig::default());
        assert_eq!(cfg.sweep, SweepConfig::default());
        assert_eq!(
            cfg.resolve(&cfg.assets.base_mesh),
            Path::new("cfg/head.obj")
        );
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = RunConfig::from_toml(
            MIN,
            Path::new(""),
            &[
                "sweep.frame_count=7".into(),
                "sweep.expressions=[\"happy\"]".into(),
                "output.dir=out/run".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.sweep.frame_count, 7);
        assert_eq!(cfg.sweep.expressions, vec!["happy".to_owned()]);
        assert_eq!(cfg.output.dir, Path::new("out/run"));
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = RunConfig::from_toml(MIN, Path::new(""), &["sweep.frames=3".into()]).unwrap_err();
        assert!(err.to_string().contains("frames"), "{err}");
        assert!(matches!(
            RunConfig::from_toml(MIN, Path::new(""), &["nokey".into()]),
            Err(ConfigError::Override(_))
        ));
    }

    #[test]
    fn validation_names_the_field() {
        let cfg = RunConfig::from_toml(MIN, Path::new("/nonexistent"), &[]).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().starts_with("assets.base_mesh"), "{err}");
        let cfg =
            RunConfig::from_toml(MIN, Path::new(""), &["sweep.frame_count=0".into()]).unwrap();
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .starts_with("sweep.frame_count"));
        let cfg = RunConfig::from_toml(MIN, Path::new(""), &["encoding.depth_scale=20000".into()])
            .unwrap();
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .starts_with("encoding.depth_scale"));
    }

    #[test]
    fn echo_omits_output() {
        let cfg = RunConfig::from_toml(MIN, Path::new(""), &[]).unwrap();
        let echo = cfg.echo();
        assert!(echo.get("output").is_none());
        assert!(echo.get("sweep").is_some());
    }
}
