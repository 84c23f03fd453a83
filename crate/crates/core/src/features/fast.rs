//! FAST-9 segment-test corner detection with score-based non-maximum
//! suppression.

use crate::imaging::Image;

use super::Keypoint;

/// Pixels closer than this to any edge are never tested.
pub const BORDER_MARGIN: u32 = 16;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
pub const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

const ARC: usize = 9;

/// Segment-test score at `(x, y)`, or `None` when it is not a corner.
///
/// The score sums `|I(c) − I(p)|` over the longest circular run of circle
/// pixels that are all brighter than `I(p)+t` or all darker than `I(p)−t`.
/// Caller guarantees the circle lies inside the image.
pub fn segment_score(img: &Image, x: i32, y: i32, threshold: u8) -> Option<u32> {
    let p = img.at(x, y) as i32;
    let t = threshold as i32;
    let mut class = [0i8; 16];
    let mut diff = [0u32; 16];
    for (i, &(dx, dy)) in CIRCLE.iter().enumerate() {
        let c = img.at(x + dx, y + dy) as i32;
        diff[i] = (c - p).unsigned_abs();
        class[i] = if c > p + t {
            1
        } else if c < p - t {
            -1
        } else {
            0
        };
    }
    // Quick reject: a 9-arc must cover at least two of the four compass points.
    let compass = [class[0], class[4], class[8], class[12]];
    let bright = compass.iter().filter(|&&c| c == 1).count();
    let dark = compass.iter().filter(|&&c| c == -1).count();
    if bright < 2 && dark < 2 {
        return None;
    }

    let mut best: Option<(usize, u32)> = None;
    for sign in [1i8, -1] {
        if class.iter().all(|&c| c == sign) {
            return Some(diff.iter().sum());
        }
        // Walk runs starting just after a non-member so wrap-around runs are whole.
        let Some(start) = (0..16).find(|&i| class[i] != sign) else {
            continue;
        };
        let mut len = 0usize;
        let mut sum = 0u32;
        for k in 1..=16 {
            let i = (start + k) % 16;
            if class[i] == sign {
                len += 1;
                sum += diff[i];
            } else {
                if len >= ARC && best.is_none_or(|(l, _)| len > l) {
                    best = Some((len, sum));
                }
                len = 0;
                sum = 0;
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Detects FAST-9 corners and keeps local score maxima within a square
/// window of half-size `nms_radius`. Equal scores resolve to the earlier
/// pixel in raster order. Keypoints come back in raster order with
/// level-local coordinates and orientation unset.
pub fn detect_corners(img: &Image, threshold: u8, nms_radius: u32) -> Vec<Keypoint> {
    let (w, h) = (img.width(), img.height());
    if w <= 2 * BORDER_MARGIN || h <= 2 * BORDER_MARGIN {
        return Vec::new();
    }
    let threshold = threshold.max(1);
    let mut scores = vec![0u32; w as usize * h as usize];
    let mut candidates = Vec::new();
    for y in BORDER_MARGIN..h - BORDER_MARGIN {
        for x in BORDER_MARGIN..w - BORDER_MARGIN {
            if let Some(s) = segment_score(img, x as i32, y as i32, threshold) {
                scores[(y * w + x) as usize] = s;
                candidates.push((x, y, s));
            }
        }
    }
    let r = nms_radius as i64;
    candidates
        .into_iter()
        .filter(|&(x, y, s)| {
            let idx = (y * w + x) as i64;
            for ny in (y as i64 - r).max(0)..=(y as i64 + r).min(h as i64 - 1) {
                for nx in (x as i64 - r).max(0)..=(x as i64 + r).min(w as i64 - 1) {
                    let nidx = ny * w as i64 + nx;
                    if nidx == idx {
                        continue;
                    }
                    let ns = scores[nidx as usize];
                    if ns > s || (ns == s && nidx < idx) {
                        return false;
                    }
                }
            }
            true
        })
        .map(|(x, y, s)| Keypoint {
            x: x as f32,
            y: y as f32,
            level: 0,
            orientation: 0.0,
            score: s as f32,
        })
        .collect()
}
