//! Seeded RANSAC over minimal four-point DLT hypotheses.

use crate::geometry::Homography;
use crate::rng::XorShift64Star;

use super::dlt::estimate_homography_dlt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    /// Reprojection distance in pixels at or below which a pair is an inlier.
    pub inlier_px: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            iterations: 500,
            inlier_px: 3.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    /// DLT refit on all inliers of the best hypothesis (that hypothesis
    /// itself if the refit is degenerate).
    pub homography: Homography,
    /// Inliers of the best hypothesis.
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
}

/// Euclidean distance between `H·src` and `dst`; infinite at the horizon.
pub fn reprojection_error(h: &Homography, src: [f64; 2], dst: [f64; 2]) -> f64 {
    match h.apply(src[0], src[1]) {
        Some((x, y)) => ((x - dst[0]).powi(2) + (y - dst[1]).powi(2)).sqrt(),
        None => f64::INFINITY,
    }
}

pub fn inlier_mask(h: &Homography, src: &[[f64; 2]], dst: &[[f64; 2]], inlier_px: f64) -> Vec<bool> {
    src.iter()
        .zip(dst)
        .map(|(&s, &d)| reprojection_error(h, s, d) <= inlier_px)
        .collect()
}

/// Draws four distinct indices by rejection.
fn sample_four(rng: &mut XorShift64Star, n: usize) -> [usize; 4] {
    let mut picked = [usize::MAX; 4];
    let mut k = 0;
    while k < 4 {
        let i = rng.next_index(n);
        if !picked[..k].contains(&i) {
            picked[k] = i;
            k += 1;
        }
    }
    picked
}

/// Fits `dst ≈ H·src` robustly. Every iteration consumes one four-index
/// sample; degenerate samples still count as iterations. The first model
/// reaching the highest inlier count wins. Returns `None` with fewer than
/// four pairs or when no model gathers four inliers.
pub fn ransac_homography(src: &[[f64; 2]], dst: &[[f64; 2]], params: &RansacParams) -> Option<RansacResult> {
    let n = src.len();
    if n < 4 || dst.len() != n {
        return None;
    }
    let mut rng = XorShift64Star::new(params.seed);
    let mut best: Option<(Homography, Vec<bool>, usize)> = None;
    for _ in 0..params.iterations {
        let idx = sample_four(&mut rng, n);
        let s = idx.map(|i| src[i]);
        let d = idx.map(|i| dst[i]);
        let Ok(h) = estimate_homography_dlt(&s, &d) else {
            continue;
        };
        let mask = inlier_mask(&h, src, dst, params.inlier_px);
        let count = mask.iter().filter(|&&m| m).count();
        if best.as_ref().is_none_or(|b| count > b.2) {
            best = Some((h, mask, count));
        }
    }
    let (h, mask, count) = best?;
    if count < 4 {
        return None;
    }
    let (s, d): (Vec<_>, Vec<_>) = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| (src[i], dst[i]))
        .unzip();
    let homography = estimate_homography_dlt(&s, &d).unwrap_or(h);
    Some(RansacResult {
        homography,
        inliers: mask,
        inlier_count: count,
    })
}
