use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use facedepth_core::dataset::{
    colorize_depth, encode_frame, frame_stem, png_rgb_bytes, write_atomic, DatasetWriter,
    FrameRecord, ManifestHeader,
};
use facedepth_core::mesh::{load_mesh_with_morphs, NEUTRAL};
use facedepth_core::render::{solid_background, Albedo, RgbImage};
use facedepth_core::scene::sample_scene;
use facedepth_core::{
    render_frame, CameraRig, DepthEncoding, FramePacket, RenderSettings, SweepConfig, TriMesh,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::CliError;

/// Everything needed to render any frame of a run, loaded once.
pub struct Pipeline {
    pub mesh: TriMesh,
    pub camera: CameraRig,
    pub background: RgbImage,
    pub settings: RenderSettings,
    pub sweep: SweepConfig,
    pub encoding: DepthEncoding,
    pub float_sidecar: bool,
}

fn load_rgb(path: &Path) -> anyhow::Result<RgbImage> {
    Ok(image::open(path)
        .with_context(|| format!("reading image {}", path.display()))?
        .to_rgb8())
}

impl Pipeline {
    /// Validates `cfg` and loads its assets. Invalid configuration maps to
    /// a usage error, unreadable assets to a runtime error.
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        cfg.validate().map_err(|e| CliError::Usage(e.into()))?;
        let camera = cfg.camera.rig();
        let base = cfg.resolve(&cfg.assets.base_mesh);
        let morphs = cfg.assets.morphs.as_ref().map(|p| cfg.resolve(p));
        let mesh = load_mesh_with_morphs(&base, morphs.as_deref())
            .with_context(|| format!("loading mesh {}", base.display()))?;
        for name in &cfg.sweep.expressions {
            if name != NEUTRAL && !mesh.morphs().contains_key(name) {
                return Err(CliError::usage(format!(
                    "sweep.expressions: `{name}` is not a morph target of {}",
                    base.display()
                )));
            }
        }
        let background = match &cfg.assets.background {
            Some(p) => {
                let img = load_rgb(&cfg.resolve(p))?;
                let want = (camera.width_px, camera.height_px);
                if img.dimensions() != want && !cfg.shading.rescale_background {
                    return Err(CliError::usage(format!(
                        "assets.background: image is {:?}, frame is {want:?}; set shading.rescale_background = true to resize",
                        img.dimensions()
                    )));
                }
                img
            }
            None => solid_background(
                camera.width_px,
                camera.height_px,
                cfg.shading.background_color,
            ),
        };
        let albedo = match &cfg.assets.texture {
            Some(p) => Albedo::Texture(Arc::new(load_rgb(&cfg.resolve(p))?)),
            None => Albedo::Flat(cfg.shading.albedo),
        };
        Ok(Pipeline {
            mesh,
            camera,
            background,
            settings: RenderSettings {
                ambient: cfg.shading.ambient,
                albedo,
                rescale_background: cfg.shading.rescale_background,
            },
            sweep: cfg.sweep.clone(),
            encoding: cfg.encoding(),
            float_sidecar: cfg.encoding.float_sidecar,
        })
    }

    pub fn render(&self, frame_index: u64) -> anyhow::Result<FramePacket> {
        let sample = sample_scene(&self.sweep, frame_index, self.sweep.seed)?;
        Ok(render_frame(
            &self.mesh,
            &sample,
            &self.camera,
            &self.background,
            &self.settings,
        )?)
    }

    pub fn header(&self, cfg: &RunConfig) -> ManifestHeader {
        ManifestHeader::new(
            self.sweep.seed,
            self.sweep.frame_count,
            self.encoding,
            self.camera.clone(),
            cfg.echo(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSummary {
    pub output: PathBuf,
    pub frames: u64,
    pub min_valid: u64,
    pub max_valid: u64,
    pub mean_valid: f64,
    pub seconds: f64,
}

pub fn cmd_render(cfg: &RunConfig) -> Result<RenderSummary, CliError> {
    let start = Instant::now();
    let pipeline = Pipeline::new(cfg)?;
    let out = cfg.output_dir();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.workers)
        .build()
        .context("starting worker pool")?;
    let mut writer = DatasetWriter::create(&out, &pipeline.header(cfg), pipeline.float_sidecar)
        .with_context(|| format!("creating dataset in {}", out.display()))?;

    let total = pipeline.sweep.frame_count;
    let chunk = (pool.current_num_threads() as u64 * 4).max(1);
    let mut valid = Vec::with_capacity(total as usize);
    let mut next_report = 0;
    for first in (0..total).step_by(chunk as usize) {
        let indices: Vec<u64> = (first..(first + chunk).min(total)).collect();
        let files = writer.files();
        let records: Vec<anyhow::Result<FrameRecord>> = pool.install(|| {
            indices
                .par_iter()
                .map(|&i| {
                    let frame = pipeline.render(i)?;
                    Ok(files.write(&frame)?)
                })
                .collect()
        });
        for (i, record) in indices.iter().zip(records) {
            let record = record.with_context(|| format!("frame {i}"))?;
            writer
                .append(&record)
                .with_context(|| format!("frame {i}"))?;
            valid.push(record.valid_pixels);
        }
        let done = valid.len() as u64;
        if done * 10 >= next_report * total {
            eprintln!("rendered {done}/{total} frames");
            next_report = done * 10 / total + 1;
        }
    }
    writer.finish().context("finishing manifest")?;

    let summary = RenderSummary {
        output: out,
        frames: total,
        min_valid: valid.iter().copied().min().unwrap_or(0),
        max_valid: valid.iter().copied().max().unwrap_or(0),
        mean_valid: valid.iter().sum::<u64>() as f64 / valid.len().max(1) as f64,
        seconds: start.elapsed().as_secs_f64(),
    };
    eprintln!(
        "wrote {} frames to {} in {:.2} s; valid pixels per frame min {} mean {:.0} max {}",
        summary.frames,
        summary.output.display(),
        summary.seconds,
        summary.min_valid,
        summary.mean_valid,
        summary.max_valid
    );
    Ok(summary)
}

/// Writes `NNNNNN_rgb.png`, `NNNNNN_depth.png` and `NNNNNN_depth_color.png`
/// for one frame into `out` (default `<output.dir>/preview`).
pub fn cmd_preview(
    cfg: &RunConfig,
    frame_index: u64,
    out: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    let pipeline = Pipeline::new(cfg)?;
    let dir = out
        .map(Path::to_owned)
        .unwrap_or_else(|| cfg.output_dir().join("preview"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let frame = pipeline
        .render(frame_index)
        .with_context(|| format!("frame {frame_index}"))?;
    let encoded = encode_frame(&frame, &pipeline.encoding, false)
        .with_context(|| format!("frame {frame_index}"))?;
    let color =
        png_rgb_bytes(&colorize_depth(&frame.depth)).context("encoding colourised depth")?;
    let stem = frame_stem(frame_index);
    let mut written = Vec::new();
    for (suffix, bytes) in [
        ("rgb", &encoded.rgb_png),
        ("depth", &encoded.depth_png),
        ("depth_color", &color),
    ] {
        let path = dir.join(format!("{stem}_{suffix}.png"));
        write_atomic(&path, bytes).with_context(|| format!("frame {frame_index}"))?;
        written.push(path);
    }
    eprintln!("wrote preview of frame {frame_index} to {}", dir.display());
    Ok(written)
}
