//! Procedural demo assets: a stand-in head with four expression targets and
//! a commented run config.

use std::path::{Path, PathBuf};

use anyhow::Context;
use facedepth_core::mesh::{synth, write_obj};
use facedepth_core::TriMesh;

pub const CONFIG_FILE: &str = "config.toml";

pub const CONFIG_TEMPLATE: &str = r#"# facedepth run configuration. Relative paths are resolved against this
# file's directory. Any key can be overridden with `--set section.key=value`.

[assets]
base_mesh = "head.obj"
morphs = "morphs.toml"
# background = "background.png"   # solid shading.background_color if unset
# texture = "albedo.png"           # needs texture coordinates in the mesh

[camera]
focal_length_mm = 60.0
sensor_width_mm = 36.0
width_px = 480
height_px = 640
near_clip_m = 0.01
far_clip_m = 5.0

[sweep]
frame_count = 100
seed = 42
distance_mm = [700.0, 1000.0]
yaw_deg = [-45.0, 45.0]
pitch_deg = [-20.0, 20.0]
roll_deg = [-10.0, 10.0]
expressions = ["neutral", "angry", "happy", "sad", "scared"]
expression_weight = [1.0, 1.0]
light_min_mm = [-300.0, -300.0, -50.0]
light_max_mm = [300.0, 300.0, 50.0]
light_intensity = 0.66
light_color = [1.0, 1.0, 1.0]

[shading]
ambient = 0.15
albedo = [0.75, 0.75, 0.75]
background_color = [128, 128, 128]
rescale_background = false

[encoding]
depth_scale = 10000.0
float_sidecar = false

[output]
dir = "dataset"
workers = 0
"#;

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes `head.obj`, `morphs/<name>.obj`, `morphs.toml` and `config.toml`
/// into `dir` and returns the config path.
pub fn write_demo_assets(dir: &Path, segments: u32, rings: u32) -> anyhow::Result<PathBuf> {
    let head = synth::demo_head(segments, rings);
    std::fs::create_dir_all(dir.join("morphs"))
        .with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("head.obj"), &write_obj(&head))?;
    let mut manifest = String::new();
    for (name, deltas) in head.morphs() {
        let verts = head
            .vertices()
            .iter()
            .zip(deltas)
            .map(|(v, d)| v + d)
            .collect();
        let target = TriMesh::new(verts, head.triangles().to_vec())?;
        write(
            &dir.join("morphs").join(format!("{name}.obj")),
            &write_obj(&target),
        )?;
        manifest.push_str(&format!("{name} = \"morphs/{name}.obj\"\n"));
    }
    write(&dir.join("morphs.toml"), &manifest)?;
    let config = dir.join(CONFIG_FILE);
    write(&config, CONFIG_TEMPLATE)?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RunConfig;

    #[test]
    fn template_matches_defaults() {
        let cfg = RunConfig::from_toml(CONFIG_TEMPLATE, Path::new(""), &[]).unwrap();
        assert_eq!(cfg.sweep, facedepth_core::SweepConfig::default());
        assert_eq!(cfg.camera, Default::default());
        assert_eq!(cfg.shading, Default::default());
        assert_eq!(cfg.encoding, Default::default());
        assert_eq!(cfg.output, Default::default());
    }

    #[test]
    fn assets_load_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_demo_assets(dir.path(), 16, 8).unwrap();
        let cfg = RunConfig::load(&path, &[]).unwrap();
        cfg.validate().unwrap();
        let p = crate::Pipeline::new(&cfg).unwrap();
        let names: Vec<&str> = p.mesh.morph_names().collect();
        assert_eq!(names, ["angry", "happy", "sad", "scared"]);
    }
}
