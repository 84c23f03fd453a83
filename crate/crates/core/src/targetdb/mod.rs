//! Registered reference pictures ("image targets") and their quality rating.

mod format;

use serde::Serialize;
use thiserror::Error;

use crate::features::{extract, ExtractParams, FeatureError, FeatureSet, GRID};
use crate::imaging::{to_grayscale, ColorImage};

pub use format::{load_db, save_db, FORMAT_VERSION, HEADER_LEN, MAGIC};

/// Registration threshold below which a picture is too plain to recognize.
pub const DEFAULT_MIN_KEYPOINTS: usize = 50;

#[derive(Debug, Error)]
pub enum DbError {
    #[error("target {name:?} has only {keypoint_count} keypoints ({} stars); at least {min} required", rating.stars)]
    TooFewFeatures {
        name: String,
        keypoint_count: usize,
        min: usize,
        rating: QualityRating,
    },
    #[error("a target named {0:?} is already registered")]
    DuplicateName(String),
    #[error("target name must not be empty")]
    EmptyName,
    #[error("not a target database (bad magic)")]
    BadMagic,
    #[error("unsupported database format version {0}")]
    UnsupportedVersion(u32),
    #[error("database file is truncated")]
    TruncatedFile,
    #[error("database checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("invalid database contents: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub id: u32,
    pub name: String,
    pub image_width: u32,
    pub image_height: u32,
    pub features: FeatureSet,
    pub content_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityRating {
    pub stars: u8,
    pub keypoint_count: usize,
    /// Fraction of the 8×8 grid cells holding at least one keypoint.
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegisterParams {
    pub extract: ExtractParams,
    pub min_keypoints: usize,
}

impl Default for RegisterParams {
    fn default() -> Self {
        RegisterParams {
            extract: ExtractParams::default(),
            min_keypoints: DEFAULT_MIN_KEYPOINTS,
        }
    }
}

/// Stars from keypoint count and spatial spread:
/// `min(5, ⌊count/100⌋ + ⌊spread·4⌋)`.
pub fn rating_from(keypoint_count: usize, occupied_cells: usize) -> QualityRating {
    let spread = occupied_cells as f64 / (GRID * GRID) as f64;
    let stars = (keypoint_count / 100 + (spread * 4.0).floor() as usize).min(5) as u8;
    QualityRating {
        stars,
        keypoint_count,
        spread,
    }
}

pub fn rate_features(features: &FeatureSet) -> QualityRating {
    let mut occupied = [false; (GRID * GRID) as usize];
    for k in &features.keypoints {
        occupied[features.grid_cell(k.x, k.y)] = true;
    }
    rating_from(features.len(), occupied.iter().filter(|&&o| o).count())
}

pub fn rate_target(target: &Target) -> QualityRating {
    rate_features(&target.features)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetDatabase {
    pub format_version: u32,
    targets: Vec<Target>,
}

impl Default for TargetDatabase {
    fn default() -> Self {
        TargetDatabase::new()
    }
}

impl TargetDatabase {
    pub fn new() -> Self {
        TargetDatabase {
            format_version: FORMAT_VERSION,
            targets: Vec::new(),
        }
    }

    /// Builds a database from targets, checking id order and name rules.
    pub fn from_targets(targets: Vec<Target>) -> Result<Self, DbError> {
        let mut db = TargetDatabase::new();
        for t in targets {
            db.push(t)?;
        }
        Ok(db)
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&Target> {
        self.targets
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.targets[i])
    }

    pub fn by_name(&self, name: &str) -> Option<&Target> {
        self.targets.iter().find(|t| t.name == name)
    }

    pub fn next_id(&self) -> u32 {
        self.targets.last().map_or(1, |t| t.id + 1)
    }

    /// Appends a fully formed target; ids must stay strictly increasing.
    pub fn push(&mut self, target: Target) -> Result<(), DbError> {
        if target.name.is_empty() {
            return Err(DbError::EmptyName);
        }
        if self.by_name(&target.name).is_some() {
            return Err(DbError::DuplicateName(target.name));
        }
        if let Some(last) = self.targets.last() {
            if target.id <= last.id {
                return Err(DbError::InvalidData(format!(
                    "target id {} does not follow {}",
                    target.id, last.id
                )));
            }
        }
        if target.features.keypoints.len() != target.features.descriptors.len() {
            return Err(DbError::InvalidData(format!(
                "target {} has mismatched keypoint/descriptor counts",
                target.id
            )));
        }
        self.targets.push(target);
        Ok(())
    }

    /// Grayscales and extracts `img`, then appends it under the next free id.
    pub fn register_target(
        &mut self,
        name: &str,
        content_id: &str,
        img: &ColorImage,
        params: &RegisterParams,
    ) -> Result<&Target, DbError> {
        if name.is_empty() {
            return Err(DbError::EmptyName);
        }
        if self.by_name(name).is_some() {
            return Err(DbError::DuplicateName(name.to_string()));
        }
        let target = build_target(self.next_id(), name, content_id, img, params)?;
        self.push(target)?;
        Ok(self.targets.last().unwrap())
    }
}

/// Feature extraction half of registration, independent of any database.
pub fn build_target(
    id: u32,
    name: &str,
    content_id: &str,
    img: &ColorImage,
    params: &RegisterParams,
) -> Result<Target, DbError> {
    let gray = to_grayscale(img);
    let features = extract(&gray, &params.extract)?;
    if features.len() < params.min_keypoints {
        return Err(DbError::TooFewFeatures {
            name: name.to_string(),
            keypoint_count: features.len(),
            min: params.min_keypoints,
            rating: rate_features(&features),
        });
    }
    Ok(Target {
        id,
        name: name.to_string(),
        image_width: img.width(),
        image_height: img.height(),
        features,
        content_id: content_id.to_string(),
    })
}
