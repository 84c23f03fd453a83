//! Oriented multi-scale corners with 256-bit steered binary descriptors.
//!
//! [`extract`] runs the whole chain: box-filter pyramid, FAST-9 on every
//! level, intensity-centroid orientation, steered binary tests, then a
//! spatially bucketed top-N selection in base-image coordinates.

mod descriptor;
mod fast;

use thiserror::Error;

use crate::imaging::{build_pyramid, Image, ImagingError};

pub use descriptor::{
    compute_descriptor, compute_orientation, Descriptor, SamplingPattern, DESCRIPTOR_BITS,
    DESCRIPTOR_BYTES, DESCRIPTOR_MARGIN, ORIENTATION_RADIUS, PATTERN_HALF, PATTERN_SEED,
};
pub use fast::{detect_corners, segment_score, BORDER_MARGIN, CIRCLE};

/// Smallest image [`extract`] accepts.
pub const MIN_EXTRACT_SIZE: u32 = 64;
/// Side length of the bucketing grid.
pub const GRID: u32 = 8;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("image {width}x{height} is smaller than {min}x{min}")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("patch around ({x}, {y}) does not fit in the image")]
    PatchOutOfBounds { x: f32, y: f32 },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    /// Sub-pixel position; base-image frame once returned from [`extract`].
    pub x: f32,
    pub y: f32,
    /// Pyramid level the corner was detected on.
    pub level: u8,
    /// Radians in [−π, π].
    pub orientation: f32,
    pub score: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub width: u32,
    pub height: u32,
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

impl FeatureSet {
    pub fn empty(width: u32, height: u32) -> Self {
        FeatureSet {
            width,
            height,
            keypoints: Vec::new(),
            descriptors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    /// 8×8 grid cell index of a base-frame point.
    pub fn grid_cell(&self, x: f32, y: f32) -> usize {
        let cx = ((x as f64 * GRID as f64 / self.width as f64).floor() as i64).clamp(0, GRID as i64 - 1);
        let cy = ((y as f64 * GRID as f64 / self.height as f64).floor() as i64).clamp(0, GRID as i64 - 1);
        (cy * GRID as i64 + cx) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractParams {
    pub threshold: u8,
    pub n_levels: usize,
    pub scale_factor: f64,
    pub max_features: usize,
    pub nms_radius: u32,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            threshold: 20,
            n_levels: 4,
            scale_factor: 1.2,
            max_features: 500,
            nms_radius: 3,
        }
    }
}

/// Detects, orients and describes features over the pyramid of `img`.
///
/// Output order is descending score; ties keep detection order (level,
/// then raster order). Two runs on the same input are bit-identical.
pub fn extract(img: &Image, params: &ExtractParams) -> Result<FeatureSet, FeatureError> {
    if img.width() < MIN_EXTRACT_SIZE || img.height() < MIN_EXTRACT_SIZE {
        return Err(FeatureError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: MIN_EXTRACT_SIZE,
        });
    }
    let pattern = SamplingPattern::standard();
    let pyramid = build_pyramid(img, params.n_levels, params.scale_factor)?;
    let mut found: Vec<(Keypoint, Descriptor)> = Vec::new();
    for (level, level_img) in pyramid.levels.iter().enumerate() {
        let scale = pyramid.level_scale(level);
        for mut kp in detect_corners(level_img, params.threshold, params.nms_radius) {
            let Ok(theta) = compute_orientation(level_img, &kp, ORIENTATION_RADIUS) else {
                continue;
            };
            kp.orientation = theta as f32;
            let Ok(desc) = compute_descriptor(level_img, &kp, pattern) else {
                continue;
            };
            kp.x = (kp.x as f64 * scale) as f32;
            kp.y = (kp.y as f64 * scale) as f32;
            kp.level = level as u8;
            found.push((kp, desc));
        }
    }

    let mut set = FeatureSet::empty(img.width(), img.height());
    let by_score = |a: &(usize, &(Keypoint, Descriptor)), b: &(usize, &(Keypoint, Descriptor))| {
        b.1 .0
            .score
            .total_cmp(&a.1 .0.score)
            .then(a.0.cmp(&b.0))
    };
    let cap = params.max_features.div_ceil((GRID * GRID) as usize) * 2;
    let mut cells: Vec<Vec<(usize, &(Keypoint, Descriptor))>> = vec![Vec::new(); (GRID * GRID) as usize];
    for (i, f) in found.iter().enumerate() {
        cells[set.grid_cell(f.0.x, f.0.y)].push((i, f));
    }
    let mut kept = Vec::new();
    for mut cell in cells {
        cell.sort_by(by_score);
        cell.truncate(cap);
        kept.extend(cell);
    }
    kept.sort_by(by_score);
    kept.truncate(params.max_features);
    for (_, (kp, desc)) in kept {
        set.keypoints.push(*kp);
        set.descriptors.push(*desc);
    }
    Ok(set)
}
