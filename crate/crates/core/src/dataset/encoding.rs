use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::render::{DepthMap, INVALID_DEPTH};

/// Single-channel 16-bit depth image.
pub type Depth16Image = ImageBuffer<Luma<u16>, Vec<u16>>;

/// Stored integer for pixels without depth.
pub const INVALID_CODE: u16 = 0;

/// Fixed-point depth encoding: `code = round(depth · scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEncoding {
    /// Integer units per metre.
    pub scale: f64,
}

impl Default for DepthEncoding {
    /// 0.1 mm per unit: 5 m encodes as 50000.
    fn default() -> Self {
        DepthEncoding { scale: 10_000.0 }
    }
}

impl DepthEncoding {
    pub fn new(scale: f64) -> Result<Self, DatasetError> {
        let enc = DepthEncoding { scale };
        enc.validate()?;
        Ok(enc)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(DatasetError::InvalidEncoding(
                "scale must be finite and > 0",
            ));
        }
        Ok(())
    }

    /// Checks that depths up to `far_clip` fit in 16 bits.
    pub fn check_range(&self, far_clip: f64) -> Result<(), DatasetError> {
        self.validate()?;
        if (far_clip * self.scale).round() > u16::MAX as f64 {
            return Err(DatasetError::InvalidEncoding(
                "scale * far_clip exceeds 65535; lower encoding.depth_scale",
            ));
        }
        Ok(())
    }

    /// Largest representable depth in metres.
    pub fn max_depth(&self) -> f64 {
        u16::MAX as f64 / self.scale
    }

    /// Encodes one depth value. Valid depths never map to [`INVALID_CODE`].
    pub fn encode(&self, depth: f64) -> Option<u16> {
        if !(depth.is_finite() && depth > 0.0) {
            return Some(INVALID_CODE);
        }
        let code = (depth * self.scale).round();
        if code > u16::MAX as f64 {
            return None;
        }
        Some(code.max(1.0) as u16)
    }

    pub fn decode(&self, code: u16) -> f64 {
        if code == INVALID_CODE {
            INVALID_DEPTH
        } else {
            code as f64 / self.scale
        }
    }
}

pub fn encode_depth16(depth: &DepthMap, enc: &DepthEncoding) -> Result<Depth16Image, DatasetError> {
    enc.validate()?;
    let (w, h) = depth.dims();
    let mut codes = Vec::with_capacity(depth.values().len());
    for (i, &d) in depth.values().iter().enumerate() {
        let code = enc.encode(d).ok_or(DatasetError::DepthOverflow {
            x: (i % w as usize) as u32,
            y: (i / w as usize) as u32,
            depth: d,
        })?;
        codes.push(code);
    }
    Ok(Depth16Image::from_raw(w, h, codes).expect("sized to map"))
}

pub fn decode_depth16_buffer(img: &Depth16Image, enc: &DepthEncoding) -> DepthMap {
    let (w, h) = img.dimensions();
    let values = img.as_raw().iter().map(|&c| enc.decode(c)).collect();
    DepthMap::from_vec(w, h, values).expect("sized to image")
}

/// Decodes a 16-bit grayscale image; any other pixel layout is rejected.
pub fn decode_depth16(img: &DynamicImage, enc: &DepthEncoding) -> Result<DepthMap, DatasetError> {
    enc.validate()?;
    match img {
        DynamicImage::ImageLuma16(buf) => Ok(decode_depth16_buffer(buf, enc)),
        other => Err(DatasetError::Format(format!(
            "expected 16-bit single-channel depth, found {:?}",
            other.color()
        ))),
    }
}

pub fn read_depth_png(path: &Path, enc: &DepthEncoding) -> Result<DepthMap, DatasetError> {
    let img = image::open(path).map_err(|e| DatasetError::image(path, e))?;
    decode_depth16(&img, enc).map_err(|e| DatasetError::in_file(path, e))
}

const RAW_MAGIC: &[u8; 8] = b"FDEPTHF1";

/// Float sidecar: 8-byte magic, little-endian u32 width and height, then
/// row-major little-endian f32 metres (0 = invalid).
pub fn encode_depth_raw(depth: &DepthMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + depth.values().len() * 4);
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&depth.width().to_le_bytes());
    out.extend_from_slice(&depth.height().to_le_bytes());
    for &v in depth.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_depth_raw(bytes: &[u8]) -> Result<DepthMap, DatasetError> {
    let bad = |m: &str| DatasetError::Format(format!("float depth: {m}"));
    if bytes.len() < 16 || &bytes[..8] != RAW_MAGIC {
        return Err(bad("missing FDEPTHF1 header"));
    }
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let h = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    let body = &bytes[16..];
    if body.len() != w as usize * h as usize * 4 {
        return Err(bad("payload size does not match dimensions"));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(DepthMap::from_vec(w, h, values).expect("length checked"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc() -> DepthEncoding {
        DepthEncoding::default()
    }

    #[test]
    fn reference_values() {
        assert_eq!(enc().encode(0.85), Some(8500));
        assert_eq!(enc().encode(5.0), Some(50000));
        assert_eq!(enc().encode(INVALID_DEPTH), Some(0));
        assert_eq!(enc().decode(8500), 0.85);
    }

    #[test]
    fn tiny_depth_never_aliases_sentinel() {
        assert_eq!(enc().encode(1e-7), Some(1));
    }

    #[test]
    fn integer_round_trip() {
        for code in [0u16, 1, 8500, 50000, 65535] {
            assert_eq!(enc().encode(enc().decode(code)), Some(code));
        }
    }

    #[test]
    fn overflow_names_pixel() {
        let d = DepthMap::from_vec(2, 2, vec![1.0, 1.0, 1.0, 7.0]).unwrap();
        let err = encode_depth16(&d, &enc()).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::DepthOverflow { x: 1, y: 1, .. }
        ));
    }

    #[test]
    fn wrong_layout_rejected() {
        let img = DynamicImage::new_rgb8(2, 2);
        assert!(matches!(
            decode_depth16(&img, &enc()),
            Err(DatasetError::Format(_))
        ));
    }

    #[test]
    fn range_check_against_far_clip() {
        assert!(enc().check_range(5.0).is_ok());
        assert!(DepthEncoding { scale: 20_000.0 }.check_range(5.0).is_err());
        assert!(DepthEncoding::new(0.0).is_err());
    }

    #[test]
    fn raw_sidecar_round_trip() {
        let d = DepthMap::from_vec(3, 1, vec![0.0, 0.5, 4.25]).unwrap();
        let back = decode_depth_raw(&encode_depth_raw(&d)).unwrap();
        assert_eq!(back, d);
        assert!(decode_depth_raw(b"nope").is_err());
    }
}
