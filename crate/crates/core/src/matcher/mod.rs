//! Descriptor matching, robust homography estimation and the recognition
//! verdict.
//!
//! A target is recognized when RANSAC finds at least `min_inliers`
//! geometrically consistent matches and those make up at least
//! `min_confidence` of all ratio-test survivors.

mod dlt;
mod matching;
mod ransac;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::features::FeatureSet;
use crate::targetdb::{Target, TargetDatabase};

pub use crate::geometry::Homography;
pub use dlt::{estimate_homography_dlt, COLLINEAR_EPS, RANK_RATIO};
pub use matching::{match_descriptors, Match, MatchParams};
pub use ransac::{inlier_mask, ransac_homography, reprojection_error, RansacParams, RansacResult};

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("need at least 4 correspondences, got {0}")]
    TooFewCorrespondences(usize),
    #[error("source has {src} points but destination has {dst}")]
    LengthMismatch { src: usize, dst: usize },
    #[error("degenerate point configuration")]
    DegenerateConfiguration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub target_id: u32,
    /// Maps target-image pixels to frame pixels.
    pub homography: Homography,
    pub inliers: usize,
    pub matched: usize,
    /// `inliers / matched`.
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecognizeParams {
    pub matching: MatchParams,
    pub ransac: RansacParams,
    pub min_inliers: usize,
    pub min_confidence: f64,
}

impl Default for RecognizeParams {
    fn default() -> Self {
        RecognizeParams {
            matching: MatchParams::default(),
            ransac: RansacParams::default(),
            min_inliers: 12,
            min_confidence: 0.25,
        }
    }
}

/// Matching and verification outcome for one target, accepted or not.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub target_id: u32,
    pub matched: usize,
    pub result: Option<RansacResult>,
}

impl Candidate {
    pub fn inliers(&self) -> usize {
        self.result.as_ref().map_or(0, |r| r.inlier_count)
    }

    pub fn confidence(&self) -> f64 {
        if self.matched == 0 {
            0.0
        } else {
            self.inliers() as f64 / self.matched as f64
        }
    }

    pub fn accepted(&self, params: &RecognizeParams) -> bool {
        self.result.is_some()
            && self.inliers() >= params.min_inliers
            && self.confidence() >= params.min_confidence
    }

    fn into_detection(self) -> Option<Detection> {
        let confidence = self.confidence();
        let r = self.result?;
        Some(Detection {
            target_id: self.target_id,
            homography: r.homography,
            inliers: r.inlier_count,
            matched: self.matched,
            confidence,
        })
    }
}

/// Matches the frame against one target and verifies geometrically.
///
/// RANSAC is skipped when fewer matches survive than `min_inliers`, since
/// such a target can never be accepted.
pub fn evaluate_target(frame: &FeatureSet, target: &Target, params: &RecognizeParams) -> Candidate {
    let matches = match_descriptors(frame, &target.features, &params.matching);
    let matched = matches.len();
    let result = if matched >= params.min_inliers.max(4) {
        let src: Vec<[f64; 2]> = matches
            .iter()
            .map(|m| {
                let k = &target.features.keypoints[m.target_idx];
                [k.x as f64, k.y as f64]
            })
            .collect();
        let dst: Vec<[f64; 2]> = matches
            .iter()
            .map(|m| {
                let k = &frame.keypoints[m.query_idx];
                [k.x as f64, k.y as f64]
            })
            .collect();
        ransac_homography(&src, &dst, &params.ransac)
    } else {
        None
    };
    Candidate {
        target_id: target.id,
        matched,
        result,
    }
}

/// Evaluates every target (in parallel) and returns them in database order.
pub fn evaluate_all(frame: &FeatureSet, db: &TargetDatabase, params: &RecognizeParams) -> Vec<Candidate> {
    db.targets()
        .par_iter()
        .map(|t| evaluate_target(frame, t, params))
        .collect()
}

/// Best accepted target by inlier count; ties go to the lower target id.
pub fn recognize(frame: &FeatureSet, db: &TargetDatabase, params: &RecognizeParams) -> Option<Detection> {
    let mut best: Option<Candidate> = None;
    for c in evaluate_all(frame, db, params) {
        if !c.accepted(params) {
            continue;
        }
        // Database order is ascending id, so strict > keeps the lower id on ties.
        if best.as_ref().is_none_or(|b| c.inliers() > b.inliers()) {
            best = Some(c);
        }
    }
    best.and_then(Candidate::into_detection)
}

/// Extracts features from a luminance frame and recognizes it. Frames too
/// small to extract from yield no detection.
pub fn recognize_image(
    frame: &crate::imaging::Image,
    db: &TargetDatabase,
    extract_params: &crate::features::ExtractParams,
    params: &RecognizeParams,
) -> Option<Detection> {
    let features = crate::features::extract(frame, extract_params).ok()?;
    recognize(&features, db, params)
}
