//! Raster types, luma conversion, box-filter pyramids, perspective warps and
//! occlusion masks.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Homography;

/// Smallest pyramid level kept; the 31×31 descriptor patch must fit.
pub const MIN_LEVEL_SIZE: u32 = 32;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("pixel buffer has {actual} bytes, expected {expected} for {width}x{height}")]
    BufferSize {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("image dimensions must be non-zero")]
    EmptyImage,
    #[error("image {width}x{height} is smaller than the {min}x{min} minimum")]
    TooSmall { width: u32, height: u32, min: u32 },
    #[error("invalid pyramid parameters: {0}")]
    InvalidPyramid(String),
    #[error("homography is singular")]
    SingularHomography,
    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),
}

/// 8-bit luminance raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyImage);
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImagingError::BufferSize {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        Image {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut img = Image::filled(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                img.pixels[(y * width + x) as usize] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    /// Signed-coordinate read for callers that have already checked bounds.
    #[inline]
    pub(crate) fn at(&self, x: i32, y: i32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[(y * self.width + x) as usize] = v;
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&p| p as f64).sum::<f64>() / self.pixels.len() as f64
    }

    /// Replicates luminance into RGB with opaque alpha.
    pub fn to_rgba(&self) -> ColorImage {
        let mut out = Vec::with_capacity(self.pixels.len() * 4);
        for &p in &self.pixels {
            out.extend_from_slice(&[p, p, p, 255]);
        }
        ColorImage {
            width: self.width,
            height: self.height,
            pixels: out,
        }
    }

    /// Copies `src` into `self` with its top-left at `(ox, oy)`; clipped.
    pub fn blit(&mut self, src: &Image, ox: i64, oy: i64) {
        for y in 0..src.height as i64 {
            let dy = y + oy;
            if dy < 0 || dy >= self.height as i64 {
                continue;
            }
            for x in 0..src.width as i64 {
                let dx = x + ox;
                if dx < 0 || dx >= self.width as i64 {
                    continue;
                }
                self.set(dx as u32, dy as u32, src.get(x as u32, y as u32));
            }
        }
    }

    /// Sub-rectangle; coordinates outside the source read as `fill`.
    pub fn crop(&self, x0: i64, y0: i64, width: u32, height: u32, fill: u8) -> Image {
        let mut out = Image::filled(width, height, fill);
        out.blit(self, -x0, -y0);
        out
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ImagingError> {
        image::save_buffer(
            path,
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::L8,
        )?;
        Ok(())
    }
}

/// 8-bit RGBA raster, row-major, 4 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyImage);
        }
        let expected = 4 * width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImagingError::BufferSize {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(ColorImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgba: [u8; 4]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let n = width as usize * height as usize;
        ColorImage {
            width,
            height,
            pixels: rgba.iter().copied().cycle().take(n * 4).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 4] {
        let i = 4 * (y * self.width + x) as usize;
        [
            self.pixels[i],
            self.pixels[i + 1],
            self.pixels[i + 2],
            self.pixels[i + 3],
        ]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let i = 4 * (y * self.width + x) as usize;
        self.pixels[i..i + 4].copy_from_slice(&rgba);
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self, ImagingError> {
        let rgba = image::open(path)?.to_rgba8();
        let (w, h) = rgba.dimensions();
        ColorImage::new(w, h, rgba.into_raw())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ImagingError> {
        image::save_buffer(
            path,
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::Rgba8,
        )?;
        Ok(())
    }
}

/// BT.601 luma with round-half-up, computed in integers so every platform
/// agrees bit-for-bit. Alpha is ignored.
pub fn to_grayscale(img: &ColorImage) -> Image {
    let pixels = img
        .pixels
        .chunks_exact(4)
        .map(|px| {
            let y = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
            ((y + 500) / 1000).min(255) as u8
        })
        .collect();
    Image {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Multi-scale stack; level 0 is the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    pub levels: Vec<Image>,
    pub scale_factor: f64,
}

impl Pyramid {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Multiplier from level-local to base coordinates.
    pub fn level_scale(&self, level: usize) -> f64 {
        self.scale_factor.powi(level as i32)
    }
}

pub fn build_pyramid(img: &Image, n_levels: usize, scale_factor: f64) -> Result<Pyramid, ImagingError> {
    if n_levels == 0 {
        return Err(ImagingError::InvalidPyramid("n_levels must be at least 1".into()));
    }
    if !(scale_factor > 1.0) || !scale_factor.is_finite() {
        return Err(ImagingError::InvalidPyramid(format!(
            "scale factor {scale_factor} must be > 1"
        )));
    }
    if img.width < MIN_LEVEL_SIZE || img.height < MIN_LEVEL_SIZE {
        return Err(ImagingError::TooSmall {
            width: img.width,
            height: img.height,
            min: MIN_LEVEL_SIZE,
        });
    }
    let mut levels = vec![img.clone()];
    for k in 1..n_levels {
        let s = scale_factor.powi(k as i32);
        let w = (img.width as f64 / s).round() as u32;
        let h = (img.height as f64 / s).round() as u32;
        if w < MIN_LEVEL_SIZE || h < MIN_LEVEL_SIZE {
            break;
        }
        levels.push(resize_area(img, w, h));
    }
    Ok(Pyramid {
        levels,
        scale_factor,
    })
}

/// Per-destination-pixel source spans with fractional coverage weights.
fn area_weights(src: u32, dst: u32) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let lo = d as f64 * ratio;
            let hi = ((d + 1) as f64 * ratio).min(src as f64);
            let mut spans = Vec::new();
            let mut s = lo.floor() as usize;
            while (s as f64) < hi && s < src as usize {
                let a = lo.max(s as f64);
                let b = hi.min((s + 1) as f64);
                if b > a {
                    spans.push((s, b - a));
                }
                s += 1;
            }
            spans
        })
        .collect()
}

/// Box-filter downsampling: each destination pixel averages its exact
/// source footprint, partial pixels weighted by coverage.
pub fn resize_area(img: &Image, width: u32, height: u32) -> Image {
    let wx = area_weights(img.width, width);
    let wy = area_weights(img.height, height);
    let mut rows = vec![0.0f64; width as usize * img.height as usize];
    for y in 0..img.height as usize {
        let src = &img.pixels[y * img.width as usize..(y + 1) * img.width as usize];
        for (x, spans) in wx.iter().enumerate() {
            let (mut acc, mut tot) = (0.0, 0.0);
            for &(s, w) in spans {
                acc += src[s] as f64 * w;
                tot += w;
            }
            rows[y * width as usize + x] = acc / tot;
        }
    }
    let mut out = Vec::with_capacity(width as usize * height as usize);
    for spans in &wy {
        for x in 0..width as usize {
            let (mut acc, mut tot) = (0.0, 0.0);
            for &(s, w) in spans {
                acc += rows[s * width as usize + x] * w;
                tot += w;
            }
            out.push((acc / tot).round().clamp(0.0, 255.0) as u8);
        }
    }
    Image {
        width,
        height,
        pixels: out,
    }
}

// Slack for sample points that land a hair outside the raster after a
// floating-point inverse map of an exact grid transform.
const EDGE_EPS: f64 = 1e-6;

/// Bilinear sample at a real-valued position, or `None` outside the raster.
pub fn sample_bilinear(img: &Image, x: f64, y: f64) -> Option<f64> {
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    if !(x >= -EDGE_EPS && y >= -EDGE_EPS && x <= max_x + EDGE_EPS && y <= max_y + EDGE_EPS) {
        return None;
    }
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let x0 = (x.floor() as u32).min(img.width.saturating_sub(2));
    let y0 = (y.floor() as u32).min(img.height.saturating_sub(2));
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
    let bot = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
    Some(top * (1.0 - fy) + bot * fy)
}

/// Inverse-mapped perspective warp: output pixel `(x, y)` samples the source
/// at `H⁻¹·(x, y, 1)`. Samples outside the source take `fill`.
pub fn warp_perspective(
    img: &Image,
    homography: &Homography,
    out_width: u32,
    out_height: u32,
    fill: u8,
) -> Result<Image, ImagingError> {
    let inv = homography
        .inverse()
        .ok_or(ImagingError::SingularHomography)?;
    if out_width == 0 || out_height == 0 {
        return Err(ImagingError::EmptyImage);
    }
    let mut out = Image::filled(out_width, out_height, fill);
    for y in 0..out_height {
        for x in 0..out_width {
            let v = inv
                .apply(x as f64, y as f64)
                .and_then(|(sx, sy)| sample_bilinear(img, sx, sy));
            if let Some(v) = v {
                out.set(x, y, v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Top, Side::Bottom];

    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Top => "top",
            Side::Bottom => "bottom",
        }
    }
}

/// Paints `⌊fraction·area⌋` pixels with `fill`, sweeping in from `side`.
///
/// Left/right sweep whole columns top to bottom, top/bottom sweep whole
/// rows left to right, so a fraction that is not a multiple of one line
/// leaves a partial line at the band's inner edge.
pub fn occlude(img: &Image, fraction: f64, side: Side, fill: u8) -> Image {
    let fraction = fraction.clamp(0.0, 1.0);
    let (w, h) = (img.width as usize, img.height as usize);
    let count = (fraction * (w * h) as f64).floor() as usize;
    let mut out = img.clone();
    for i in 0..count {
        let (x, y) = match side {
            Side::Left => (i / h, i % h),
            Side::Right => (w - 1 - i / h, i % h),
            Side::Top => (i % w, i / w),
            Side::Bottom => (i % w, h - 1 - i / w),
        };
        out.pixels[y * w + x] = fill;
    }
    out
}
