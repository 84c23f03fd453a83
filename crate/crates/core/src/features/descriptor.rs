//! Intensity-centroid orientation and rotation-steered binary descriptors.

use std::sync::OnceLock;

use crate::imaging::Image;
use crate::rng::XorShift64Star;

use super::{FeatureError, Keypoint};

pub const DESCRIPTOR_BYTES: usize = 32;
pub const DESCRIPTOR_BITS: usize = DESCRIPTOR_BYTES * 8;
pub const ORIENTATION_RADIUS: i32 = 15;
/// Half-extent of the unrotated sampling offsets.
pub const PATTERN_HALF: i32 = 13;
/// Clearance needed for any steered offset: ⌈√2·13⌉.
pub const DESCRIPTOR_MARGIN: i32 = 19;
pub const PATTERN_SEED: u64 = 0x9E37_79B9_7F4A_7C15;

/// 256-bit binary signature. Bit `k` lives in byte `k / 8` at position
/// `k % 8` (least significant first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Descriptor(pub [u8; DESCRIPTOR_BYTES]);

impl Descriptor {
    pub fn bit(&self, k: usize) -> bool {
        self.0[k / 8] >> (k % 8) & 1 == 1
    }

    pub fn hamming(&self, other: &Descriptor) -> u32 {
        self.0
            .chunks_exact(8)
            .zip(other.0.chunks_exact(8))
            .map(|(a, b)| {
                let a = u64::from_le_bytes(a.try_into().unwrap());
                let b = u64::from_le_bytes(b.try_into().unwrap());
                (a ^ b).count_ones()
            })
            .sum()
    }
}

/// Point-pair offsets `(ax, ay, bx, by)` of the binary tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPattern {
    pub pairs: Vec<[i8; 4]>,
}

impl SamplingPattern {
    /// Deterministic pattern drawn from xorshift64* with a fixed seed.
    pub fn generate(seed: u64) -> Self {
        let mut rng = XorShift64Star::new(seed);
        let span = (2 * PATTERN_HALF + 1) as u64;
        let mut draw = || ((rng.next_u64() % span) as i32 - PATTERN_HALF) as i8;
        let mut pairs = Vec::with_capacity(DESCRIPTOR_BITS);
        while pairs.len() < DESCRIPTOR_BITS {
            let p = [draw(), draw(), draw(), draw()];
            if (p[0], p[1]) != (p[2], p[3]) {
                pairs.push(p);
            }
        }
        SamplingPattern { pairs }
    }

    pub fn standard() -> &'static SamplingPattern {
        static PATTERN: OnceLock<SamplingPattern> = OnceLock::new();
        PATTERN.get_or_init(|| SamplingPattern::generate(PATTERN_SEED))
    }
}

fn center(kp: &Keypoint) -> (i32, i32) {
    (kp.x.round() as i32, kp.y.round() as i32)
}

fn fits(img: &Image, cx: i32, cy: i32, margin: i32) -> bool {
    cx - margin >= 0
        && cy - margin >= 0
        && cx + margin < img.width() as i32
        && cy + margin < img.height() as i32
}

/// Orientation `atan2(m01, m10)` of the first-order moments over the disc of
/// the given radius around `kp` (coordinates in `img`'s frame). Vanishing
/// moments give 0.
pub fn compute_orientation(img: &Image, kp: &Keypoint, radius: i32) -> Result<f64, FeatureError> {
    let (cx, cy) = center(kp);
    if !fits(img, cx, cy, radius) {
        return Err(FeatureError::PatchOutOfBounds { x: kp.x, y: kp.y });
    }
    let (mut m10, mut m01) = (0i64, 0i64);
    let r2 = radius * radius;
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let v = img.at(cx + dx, cy + dy) as i64;
            m10 += dx as i64 * v;
            m01 += dy as i64 * v;
        }
    }
    if m10 == 0 && m01 == 0 {
        return Ok(0.0);
    }
    Ok((m01 as f64).atan2(m10 as f64))
}

/// Steered binary tests around `kp` (coordinates in `img`'s frame) using
/// the keypoint's stored orientation.
pub fn compute_descriptor(
    img: &Image,
    kp: &Keypoint,
    pattern: &SamplingPattern,
) -> Result<Descriptor, FeatureError> {
    let (cx, cy) = center(kp);
    if !fits(img, cx, cy, DESCRIPTOR_MARGIN) {
        return Err(FeatureError::PatchOutOfBounds { x: kp.x, y: kp.y });
    }
    let (s, c) = (kp.orientation as f64).sin_cos();
    let steer = |x: i8, y: i8| {
        let (x, y) = (x as f64, y as f64);
        (
            cx + (x * c - y * s).round() as i32,
            cy + (x * s + y * c).round() as i32,
        )
    };
    let mut bytes = [0u8; DESCRIPTOR_BYTES];
    for (k, p) in pattern.pairs.iter().enumerate() {
        let (ax, ay) = steer(p[0], p[1]);
        let (bx, by) = steer(p[2], p[3]);
        if img.at(ax, ay) < img.at(bx, by) {
            bytes[k / 8] |= 1 << (k % 8);
        }
    }
    Ok(Descriptor(bytes))
}
