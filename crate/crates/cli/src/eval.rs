use std::path::{Path, PathBuf};

use anyhow::Context;
use facedepth_core::dataset::{
    decode_depth_raw, frame_stem, read_depth_png, Manifest, MANIFEST_FILE,
};
use facedepth_core::metrics::{evaluate, format_report, ClipRange, EvalReport, FrameScore};
use facedepth_core::{aggregate_report, Aggregation, Alignment, DepthEncoding, DepthMap};
use rayon::prelude::*;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Ground-truth dataset directory (with a manifest).
    pub gt: PathBuf,
    /// Directory of predicted depth maps.
    pub pred: PathBuf,
    pub alignment: Alignment,
    /// Structured JSON report; the text table goes next to it as `.txt`.
    pub report: PathBuf,
    pub aggregation: Aggregation,
    pub skip_missing: bool,
    /// Units per metre of 16-bit predictions when the prediction directory
    /// has no manifest of its own. Defaults to the ground truth's encoding.
    pub pred_scale: Option<f64>,
    /// Row label in the text table; defaults to the prediction directory name.
    pub name: Option<String>,
}

/// Prediction files tried for a frame, in order.
pub fn prediction_candidates(dir: &Path, frame_index: u64) -> [PathBuf; 4] {
    let stem = frame_stem(frame_index);
    [
        dir.join("depth_raw").join(format!("{stem}.bin")),
        dir.join(format!("{stem}.bin")),
        dir.join("depth").join(format!("{stem}.png")),
        dir.join(format!("{stem}.png")),
    ]
}

fn read_depth(path: &Path, enc: &DepthEncoding) -> anyhow::Result<DepthMap> {
    if path.extension().is_some_and(|e| e == "bin") {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(decode_depth_raw(&bytes).with_context(|| path.display().to_string())?)
    } else {
        Ok(read_depth_png(path, enc)?)
    }
}

pub fn text_report_path(report: &Path) -> PathBuf {
    let txt = report.with_extension("txt");
    if txt == report {
        report.with_extension("table.txt")
    } else {
        txt
    }
}

pub fn cmd_eval(opts: &EvalOptions) -> Result<EvalReport, CliError> {
    let manifest_path = opts.gt.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(CliError::usage(format!(
            "--gt: no {MANIFEST_FILE} in {}",
            opts.gt.display()
        )));
    }
    if !opts.pred.is_dir() {
        return Err(CliError::usage(format!(
            "--pred: {} is not a directory",
            opts.pred.display()
        )));
    }
    let gt_manifest = Manifest::read(&manifest_path).context("reading ground-truth manifest")?;
    let pred_encoding = match opts.pred_scale {
        Some(scale) => {
            DepthEncoding::new(scale).map_err(|e| CliError::usage(format!("--pred-scale: {e}")))?
        }
        None => {
            let own = opts.pred.join(MANIFEST_FILE);
            if own.is_file() {
                Manifest::read(&own)
                    .context("reading prediction manifest")?
                    .header
                    .encoding
            } else {
                gt_manifest.header.encoding
            }
        }
    };
    let clip = ClipRange {
        near: gt_manifest.header.camera.near_clip,
        far: gt_manifest.header.camera.far_clip,
    };

    let mut matched = Vec::new();
    let mut missing = Vec::new();
    for record in &gt_manifest.records {
        match prediction_candidates(&opts.pred, record.frame_index)
            .into_iter()
            .find(|p| p.is_file())
        {
            Some(p) => matched.push((record, p)),
            None => missing.push(record.frame_index),
        }
    }
    if matched.is_empty() {
        return Err(CliError::usage(format!(
            "no prediction in {} matches any ground-truth frame",
            opts.pred.display()
        )));
    }
    if !missing.is_empty() && !opts.skip_missing {
        return Err(CliError::usage(format!(
            "{} frame(s) have no prediction (first: {}); pass --skip-missing to evaluate the rest",
            missing.len(),
            missing[0]
        )));
    }

    let scored: Vec<(u64, anyhow::Result<_>)> = matched
        .par_iter()
        .map(|(record, pred_path)| {
            let index = record.frame_index;
            let result = (|| {
                let gt_path = match &record.depth_raw {
                    Some(raw) => opts.gt.join(raw),
                    None => opts.gt.join(&record.depth),
                };
                let gt = read_depth(&gt_path, &gt_manifest.header.encoding)?;
                let pred = read_depth(pred_path, &pred_encoding)?;
                Ok(evaluate(&gt, &pred, opts.alignment, clip)?)
            })();
            (index, result)
        })
        .collect();

    let mut frames = Vec::with_capacity(scored.len());
    let mut unreadable = Vec::new();
    for (index, result) in scored {
        match result {
            Ok(report) => frames.push(FrameScore {
                frame_index: index,
                report,
            }),
            Err(e) if opts.skip_missing => {
                eprintln!("skipping frame {index}: {e:#}");
                unreadable.push(index);
            }
            Err(e) => return Err(CliError::Runtime(e.context(format!("frame {index}")))),
        }
    }
    let mut skipped = missing;
    skipped.extend(&unreadable);
    skipped.sort_unstable();
    if frames.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no frame could be evaluated; skipped frames {skipped:?}"
        )));
    }

    let reports: Vec<_> = frames.iter().map(|f| f.report).collect();
    let aggregate = aggregate_report(&reports, opts.aggregation).context("aggregating")?;
    let report = EvalReport {
        alignment: opts.alignment,
        aggregation: opts.aggregation,
        aggregate,
        frames,
        skipped,
    };

    let name = opts.name.clone().unwrap_or_else(|| {
        opts.pred
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "prediction".to_owned())
    });
    let table = format_report(&[(name.as_str(), &report.aggregate)]);
    if let Some(parent) = opts.report.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let json = serde_json::to_string_pretty(&report).context("serialising report")?;
    std::fs::write(&opts.report, json + "\n")
        .with_context(|| format!("writing {}", opts.report.display()))?;
    let txt = text_report_path(&opts.report);
    std::fs::write(&txt, &table).with_context(|| format!("writing {}", txt.display()))?;

    eprint!("{table}");
    eprintln!(
        "{} frame(s) evaluated, {} valid pixels, alignment {}",
        report.frames.len(),
        report.aggregate.valid_pixel_count,
        report.alignment
    );
    if !report.skipped.is_empty() {
        eprintln!("skipped frames: {:?}", report.skipped);
    }
    if !unreadable.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "unreadable prediction(s) for frames {unreadable:?}; report written without them"
        )));
    }
    Ok(report)
}
