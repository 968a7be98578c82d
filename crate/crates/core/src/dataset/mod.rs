//! On-disk dataset layout: PNG colour and 16-bit depth per frame plus a
//! line-delimited manifest.
//!
//! ```text
//! <root>/manifest.jsonl
//! <root>/rgb/000000.png        8-bit RGB
//! <root>/depth/000000.png      16-bit grayscale, see DepthEncoding
//! <root>/depth_raw/000000.bin  optional f32 sidecar
//! ```

mod encoding;
mod manifest;

pub use encoding::{
    decode_depth16, decode_depth16_buffer, decode_depth_raw, encode_depth16, encode_depth_raw,
    read_depth_png, Depth16Image, DepthEncoding, INVALID_CODE,
};
pub use manifest::{
    FrameRecord, HeadPose, Manifest, ManifestHeader, FORMAT_NAME, FORMAT_VERSION, HEADER_PREFIX,
    MANIFEST_FILE,
};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use thiserror::Error;

use crate::render::{DepthMap, FramePacket, RgbImage};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("depth {depth} m at pixel ({x}, {y}) does not fit in 16 bits")]
    DepthOverflow { x: u32, y: u32, depth: f64 },
    #[error("depth encoding: {0}")]
    InvalidEncoding(&'static str),
    #[error("{0}")]
    Format(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("frame has no metadata; only frames from render_frame can be stored")]
    MissingMeta,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<DatasetError>,
    },
    #[error("frame {frame}: {source}")]
    Frame {
        frame: u64,
        #[source]
        source: Box<DatasetError>,
    },
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub(crate) fn image(path: &Path, source: image::ImageError) -> Self {
        DatasetError::Image {
            path: path.to_owned(),
            source,
        }
    }

    pub(crate) fn in_file(path: &Path, source: DatasetError) -> Self {
        DatasetError::InFile {
            path: path.to_owned(),
            source: Box::new(source),
        }
    }

    fn in_frame(frame: u64, source: DatasetError) -> Self {
        DatasetError::Frame {
            frame,
            source: Box::new(source),
        }
    }
}

pub fn frame_stem(frame_index: u64) -> String {
    format!("{frame_index:06}")
}

pub fn rgb_rel_path(frame_index: u64) -> String {
    format!("rgb/{}.png", frame_stem(frame_index))
}

pub fn depth_rel_path(frame_index: u64) -> String {
    format!("depth/{}.png", frame_stem(frame_index))
}

pub fn depth_raw_rel_path(frame_index: u64) -> String {
    format!("depth_raw/{}.bin", frame_stem(frame_index))
}

pub fn png_rgb_bytes(img: &RgbImage) -> Result<Vec<u8>, image::ImageError> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        ExtendedColorType::Rgb8,
    )?;
    Ok(out)
}

pub fn png_depth_bytes(img: &Depth16Image) -> Result<Vec<u8>, image::ImageError> {
    // The encoder takes native-endian samples and byte-swaps them itself.
    let bytes: Vec<u8> = img.as_raw().iter().flat_map(|v| v.to_ne_bytes()).collect();
    let mut out = Vec::new();
    PngEncoder::new(&mut out).write_image(
        &bytes,
        img.width(),
        img.height(),
        ExtendedColorType::L16,
    )?;
    Ok(out)
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| DatasetError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| DatasetError::io(path, e))
}

/// Encoded images of one frame, ready to be written.
pub struct EncodedFrame {
    pub rgb_png: Vec<u8>,
    pub depth_png: Vec<u8>,
    pub depth_raw: Option<Vec<u8>>,
}

pub fn encode_frame(
    frame: &FramePacket,
    enc: &DepthEncoding,
    float_sidecar: bool,
) -> Result<EncodedFrame, DatasetError> {
    let img_err = |e| DatasetError::Format(format!("png encoding: {e}"));
    Ok(EncodedFrame {
        rgb_png: png_rgb_bytes(&frame.rgb).map_err(img_err)?,
        depth_png: png_depth_bytes(&encode_depth16(&frame.depth, enc)?).map_err(img_err)?,
        depth_raw: float_sidecar.then(|| encode_depth_raw(&frame.depth)),
    })
}

/// Writes per-frame image files. Cheap to share between threads: each call
/// touches only its own frame's files.
#[derive(Debug, Clone)]
pub struct FrameFiles {
    root: PathBuf,
    encoding: DepthEncoding,
    float_sidecar: bool,
}

impl FrameFiles {
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Encodes and atomically writes the frame's files, returning its record.
    pub fn write(&self, frame: &FramePacket) -> Result<FrameRecord, DatasetError> {
        let meta = frame.meta.as_ref().ok_or(DatasetError::MissingMeta)?;
        let index = meta.sample.frame_index;
        let wrap = |e| DatasetError::in_frame(index, e);
        let encoded = encode_frame(frame, &self.encoding, self.float_sidecar).map_err(wrap)?;
        let rgb = rgb_rel_path(index);
        let depth = depth_rel_path(index);
        write_atomic(&self.root.join(&rgb), &encoded.rgb_png).map_err(wrap)?;
        write_atomic(&self.root.join(&depth), &encoded.depth_png).map_err(wrap)?;
        let depth_raw = match &encoded.depth_raw {
            Some(bytes) => {
                let rel = depth_raw_rel_path(index);
                write_atomic(&self.root.join(&rel), bytes).map_err(wrap)?;
                Some(rel)
            }
            None => None,
        };
        Ok(FrameRecord::from_meta(
            meta,
            rgb,
            depth,
            depth_raw,
            frame.mask.count() as u64,
        ))
    }
}

/// Dataset directory with a single manifest appender. Records are appended
/// only after their files are in place.
pub struct DatasetWriter {
    files: FrameFiles,
    manifest_path: PathBuf,
    manifest: BufWriter<File>,
    records: usize,
}

impl DatasetWriter {
    pub fn create(
        root: &Path,
        header: &ManifestHeader,
        float_sidecar: bool,
    ) -> Result<Self, DatasetError> {
        header.encoding.validate()?;
        let mut dirs = vec![root.join("rgb"), root.join("depth")];
        if float_sidecar {
            dirs.push(root.join("depth_raw"));
        }
        for d in &dirs {
            std::fs::create_dir_all(d).map_err(|e| DatasetError::io(d, e))?;
        }
        let manifest_path = root.join(MANIFEST_FILE);
        let file = File::create(&manifest_path).map_err(|e| DatasetError::io(&manifest_path, e))?;
        let mut manifest = BufWriter::new(file);
        writeln!(manifest, "{}", header.to_line())
            .and_then(|_| manifest.flush())
            .map_err(|e| DatasetError::io(&manifest_path, e))?;
        Ok(DatasetWriter {
            files: FrameFiles {
                root: root.to_owned(),
                encoding: header.encoding,
                float_sidecar,
            },
            manifest_path,
            manifest,
            records: 0,
        })
    }

    pub fn files(&self) -> &FrameFiles {
        &self.files
    }

    pub fn append(&mut self, record: &FrameRecord) -> Result<(), DatasetError> {
        writeln!(self.manifest, "{}", record.to_line())
            .and_then(|_| self.manifest.flush())
            .map_err(|e| DatasetError::io(&self.manifest_path, e))?;
        self.records += 1;
        Ok(())
    }

    /// Writes the frame's files then appends its record.
    pub fn write_frame(&mut self, frame: &FramePacket) -> Result<FrameRecord, DatasetError> {
        let record = self.files.write(frame)?;
        self.append(&record)?;
        Ok(record)
    }

    pub fn record_count(&self) -> usize {
        self.records
    }

    pub fn finish(mut self) -> Result<usize, DatasetError> {
        self.manifest
            .flush()
            .map_err(|e| DatasetError::io(&self.manifest_path, e))?;
        Ok(self.records)
    }
}

/// Writes a stream of frames sequentially and returns the resulting manifest.
pub fn write_dataset<I>(
    frames: I,
    dir: &Path,
    header: ManifestHeader,
    float_sidecar: bool,
) -> Result<Manifest, DatasetError>
where
    I: IntoIterator<Item = FramePacket>,
{
    let mut writer = DatasetWriter::create(dir, &header, float_sidecar)?;
    let mut records = Vec::new();
    for frame in frames {
        records.push(writer.write_frame(&frame)?);
    }
    writer.finish()?;
    Ok(Manifest { header, records })
}

/// Visualises depth: nearer pixels are brighter in every channel, invalid
/// pixels are black and valid pixels never are.
pub fn colorize_depth(depth: &DepthMap) -> RgbImage {
    let valid = || {
        depth
            .values()
            .iter()
            .copied()
            .filter(|v| v.is_finite() && *v > 0.0)
    };
    let near = valid().fold(f64::INFINITY, f64::min);
    let far = valid().fold(f64::NEG_INFINITY, f64::max);
    let (w, h) = depth.dims();
    RgbImage::from_fn(w, h, |x, y| {
        let d = depth.get(x, y);
        if !(d.is_finite() && d > 0.0) {
            return image::Rgb([0, 0, 0]);
        }
        let t = if far > near {
            (far - d) / (far - near)
        } else {
            1.0
        };
        let t = t.clamp(0.0, 1.0);
        let ch = |lo: f64, gamma: f64| ((lo + (1.0 - lo) * t.powf(gamma)) * 255.0).round() as u8;
        image::Rgb([ch(0.3, 1.0), ch(0.1, 2.0), ch(0.08, 3.0)])
    })
}
