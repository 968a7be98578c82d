//! `facedepth` command line: render synthetic face datasets from a config
//! file, preview single frames and score depth predictions against them.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

pub mod config;
pub mod demo;
pub mod eval;
pub mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use facedepth_core::{Aggregation, Alignment};
use thiserror::Error;

pub use config::{ConfigError, RunConfig};
pub use eval::{cmd_eval, EvalOptions};
pub use render::{cmd_preview, cmd_render, Pipeline, RenderSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0:#}")]
    Usage(anyhow::Error),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn usage(message: impl std::fmt::Display) -> Self {
        CliError::Usage(anyhow::anyhow!("{message}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "facedepth",
    version,
    about = "Synthetic face RGB-D dataset renderer and depth evaluator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by commands that read a run config. Each has a config-file
/// key; flags win over the file.
#[derive(Debug, clap::Args)]
pub struct ConfigArgs {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Number of frames [sweep.frame_count].
    #[arg(long)]
    pub frames: Option<u64>,
    /// Global seed [sweep.seed].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, relative to the working directory [output.dir].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Render threads, 0 for all cores [output.workers].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write f32 depth sidecars [encoding.float_sidecar].
    #[arg(long)]
    pub float_sidecar: bool,
    /// Override any config key, e.g. `--set camera.width_px=320`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<RunConfig, CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(n) = self.frames {
            overrides.push(format!("sweep.frame_count={n}"));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("sweep.seed={s}"));
        }
        if let Some(w) = self.workers {
            overrides.push(format!("output.workers={w}"));
        }
        if self.float_sidecar {
            overrides.push("encoding.float_sidecar=true".into());
        }
        let mut cfg = RunConfig::load(&self.config, &overrides)?;
        if let Some(out) = &self.out {
            let cwd = std::env::current_dir().map_err(anyhow::Error::from)?;
            cfg.output.dir = cwd.join(out);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlignArg {
    None,
    MedianScale,
    AffineInverseDepth,
}

impl From<AlignArg> for Alignment {
    fn from(a: AlignArg) -> Self {
        match a {
            AlignArg::None => Alignment::None,
            AlignArg::MedianScale => Alignment::MedianScale,
            AlignArg::AffineInverseDepth => Alignment::AffineInverseDepth,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render every frame of a sweep into a dataset directory.
    Render(ConfigArgs),
    /// Render one frame as RGB, 16-bit depth and colourised depth PNGs.
    Preview {
        #[command(flatten)]
        args: ConfigArgs,
        /// Frame index to render.
        #[arg(long, default_value_t = 0)]
        frame: u64,
        /// Directory for the preview images [default: <output.dir>/preview].
        #[arg(long)]
        preview_dir: Option<PathBuf>,
    },
    /// Score predicted depth maps against a rendered dataset.
    Eval {
        /// Ground-truth dataset directory.
        #[arg(long)]
        gt: PathBuf,
        /// Prediction directory: NNNNNN.png / NNNNNN.bin, optionally under depth/ or depth_raw/.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        align: AlignArg,
        /// JSON report path; a text table is written next to it.
        #[arg(long)]
        report: PathBuf,
        /// Average frames equally instead of pooling pixels.
        #[arg(long)]
        frame_averaged: bool,
        /// Evaluate the frames that have predictions and list the rest.
        #[arg(long)]
        skip_missing: bool,
        /// Depth units per metre of 16-bit predictions.
        #[arg(long)]
        pred_scale: Option<f64>,
        /// Method name in the text table.
        #[arg(long)]
        name: Option<String>,
    },
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Render(args) => {
            cmd_render(&args.load()?)?;
        }
        Command::Preview {
            args,
            frame,
            preview_dir,
        } => {
            cmd_preview(&args.load()?, frame, preview_dir.as_deref())?;
        }
        Command::Eval {
            gt,
            pred,
            align,
            report,
            frame_averaged,
            skip_missing,
            pred_scale,
            name,
        } => {
            cmd_eval(&EvalOptions {
                gt,
                pred,
                alignment: align.into(),
                report,
                aggregation: if frame_averaged {
                    Aggregation::FrameAveraged
                } else {
                    Aggregation::PixelWeighted
                },
                skip_missing,
                pred_scale,
                name,
            })?;
        }
    }
    Ok(())
}

/// Runs a parsed command line, reporting errors on stderr.
pub fn run(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
