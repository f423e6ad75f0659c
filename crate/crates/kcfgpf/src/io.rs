//! Frame decoding and encoding.

use std::path::Path;

use image::{DynamicImage, ImageError};
use kcfgpf_core::GrayImage;

use crate::{Error, Result};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Decodes an 8-bit grayscale or RGB file into intensities in `[0, 1]`.
/// Colour is reduced with the 0.299 / 0.587 / 0.114 luminance weights.
pub fn load_frame(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| match e {
        ImageError::IoError(source) => Error::io(path, source),
        other => Error::format(path, other.to_string()),
    })?;
    Ok(to_gray(&img))
}

pub fn to_gray(img: &DynamicImage) -> GrayImage {
    match img {
        DynamicImage::ImageLuma8(g) => {
            GrayImage::from_fn(g.width() as usize, g.height() as usize, |x, y| {
                g.get_pixel(x as u32, y as u32)[0] as f64 / 255.0
            })
        }
        other => {
            let rgb = other.to_rgb8();
            GrayImage::from_fn(rgb.width() as usize, rgb.height() as usize, |x, y| {
                let p = rgb.get_pixel(x as u32, y as u32);
                (LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64) / 255.0
            })
        }
    }
}

/// Writes an 8-bit grayscale image; the format follows the extension.
pub fn save_frame(img: &GrayImage, path: &Path) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let buf = image::GrayImage::from_fn(w, h, |x, y| {
        let v = img.get(x as usize, y as usize);
        image::Luma([(v * 255.0).round().clamp(0.0, 255.0) as u8])
    });
    buf.save(path).map_err(|e| match e {
        ImageError::IoError(source) => Error::io(path, source),
        other => Error::format(path, other.to_string()),
    })
}
