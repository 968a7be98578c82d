use super::{FramePacket, RenderError, RgbImage, INVALID_DEPTH};

pub fn solid_background(width: u32, height: u32, rgb: [u8; 3]) -> RgbImage {
    RgbImage::from_pixel(width, height, image::Rgb(rgb))
}

/// Nearest-neighbour resize, sampling source pixel centres.
pub fn resize_nearest(src: &RgbImage, width: u32, height: u32) -> RgbImage {
    let (sw, sh) = src.dimensions();
    RgbImage::from_fn(width, height, |x, y| {
        let sx = ((x as u64 * 2 + 1) * sw as u64 / (2 * width as u64)).min(sw as u64 - 1);
        let sy = ((y as u64 * 2 + 1) * sh as u64 / (2 * height as u64)).min(sh as u64 - 1);
        *src.get_pixel(sx as u32, sy as u32)
    })
}

/// Replaces every uncovered pixel with the background; covered pixels and
/// all depth values are left alone (background depth stays invalid).
pub fn composite_background(
    mut frame: FramePacket,
    background: &RgbImage,
    rescale: bool,
) -> Result<FramePacket, RenderError> {
    let dims = frame.mask.dims();
    let resized;
    let bg = if background.dimensions() == dims {
        background
    } else if rescale && background.width() > 0 && background.height() > 0 {
        resized = resize_nearest(background, dims.0, dims.1);
        &resized
    } else {
        return Err(RenderError::BackgroundSize {
            expected: dims,
            found: background.dimensions(),
        });
    };
    let width = dims.0 as usize;
    for (i, &covered) in frame.mask.data().iter().enumerate() {
        if !covered {
            let (x, y) = ((i % width) as u32, (i / width) as u32);
            frame.rgb.put_pixel(x, y, *bg.get_pixel(x, y));
            debug_assert_eq!(frame.depth.values()[i], INVALID_DEPTH);
        }
    }
    Ok(frame)
}
