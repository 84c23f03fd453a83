//! Synthetic confusion tests: in-plane rotation, half occlusion, a
//! neighbouring distractor picture and colour removal, each replayed
//! against the recognizer for every registered target.
//!
//! Report ordering is fixed (target id, family, parameter) no matter how
//! cases are scheduled.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::features::ExtractParams;
use crate::geometry::Homography;
use crate::imaging::{occlude, resize_area, sample_bilinear, to_grayscale, warp_perspective, ColorImage, Image, Side};
use crate::matcher::{recognize_image, Detection, RecognizeParams};
use crate::targetdb::{Target, TargetDatabase, DEFAULT_MIN_KEYPOINTS};

pub const ROTATION_ANGLES_DEG: [u32; 3] = [45, 90, 180];
pub const OCCLUSION_FRACTION: f64 = 0.5;
/// Gutter between composite pictures, as a fraction of the target width.
pub const GUTTER_FRACTION: f64 = 0.1;
/// Share of the distractor's width that falls inside the queried frame.
pub const DISTRACTOR_VISIBLE: f64 = 0.5;
pub const FILL: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Rotation,
    Occlusion,
    Interference,
    Color,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Rotation => "rotation",
            Family::Occlusion => "occlusion",
            Family::Interference => "interference",
            Family::Color => "color",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parameter {
    Angle { angle_deg: u32 },
    Occlusion { fraction: f64, side: Side },
    Distractor { distractor_id: u32 },
    None,
}

impl Parameter {
    /// File-name friendly tag used when dumping case frames.
    pub fn tag(&self) -> String {
        match self {
            Parameter::Angle { angle_deg } => format!("{angle_deg}deg"),
            Parameter::Occlusion { fraction, side } => {
                format!("{}pct-{}", (fraction * 100.0).round() as u32, side.as_str())
            }
            Parameter::Distractor { distractor_id } => format!("beside-{distractor_id}"),
            Parameter::None => "gray".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchCase {
    pub test: Family,
    pub target_id: u32,
    pub parameter: Parameter,
    pub expected_id: Option<u32>,
    pub got_id: Option<u32>,
    pub inliers: usize,
    pub confidence: f64,
    pub pass: bool,
    /// Documented failure mode (low-texture target); excluded from the verdict.
    pub expected_failure: bool,
    pub skipped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FamilySummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub expected_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub cases: Vec<BenchCase>,
    pub summary: BTreeMap<Family, FamilySummary>,
    pub all_passed: bool,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table for humans.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<13} {:>6}  {:<16} {:>8} {:>8} {:>7} {:>6}  {}\n",
            "test", "target", "parameter", "expected", "got", "inliers", "conf", "result"
        );
        let id = |v: Option<u32>| v.map_or("none".to_string(), |v| v.to_string());
        for c in &self.cases {
            let result = if c.skipped {
                "SKIP"
            } else if c.expected_failure {
                "XFAIL"
            } else if c.pass {
                "PASS"
            } else {
                "FAIL"
            };
            s.push_str(&format!(
                "{:<13} {:>6}  {:<16} {:>8} {:>8} {:>7} {:>6.3}  {}\n",
                c.test.as_str(),
                c.target_id,
                c.parameter.tag(),
                id(c.expected_id),
                id(c.got_id),
                c.inliers,
                c.confidence,
                result
            ));
        }
        for (fam, sum) in &self.summary {
            s.push_str(&format!(
                "{}: {}/{} passed, {} failed, {} skipped, {} expected failures\n",
                fam.as_str(),
                sum.passed,
                sum.total - sum.skipped - sum.expected_failures,
                sum.failed,
                sum.skipped,
                sum.expected_failures
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub extract: ExtractParams,
    pub recognize: RecognizeParams,
    /// Targets with fewer keypoints are treated as low-texture.
    pub low_texture_keypoints: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            extract: ExtractParams::default(),
            recognize: RecognizeParams::default(),
            low_texture_keypoints: DEFAULT_MIN_KEYPOINTS,
        }
    }
}

/// One synthesized perturbation, ready to recognize.
#[derive(Debug, Clone)]
pub struct CaseFrame {
    pub test: Family,
    pub target_id: u32,
    pub parameter: Parameter,
    pub expected_id: Option<u32>,
    pub expected_failure: bool,
    /// `None` when the source picture is unavailable.
    pub frames: Option<CaseImages>,
}

#[derive(Debug, Clone)]
pub enum CaseImages {
    Gray(Image),
    /// Colour original and its pre-grayscaled RGBA copy.
    ColorPair(ColorImage, ColorImage),
}

/// Scales to `height`, keeping aspect ratio. Downscaling box-filters;
/// upscaling samples bilinearly at pixel centres, clamped to the edge.
pub fn scale_to_height(img: &Image, height: u32) -> Image {
    if img.height() == height {
        return img.clone();
    }
    let s = height as f64 / img.height() as f64;
    let width = ((img.width() as f64 * s).round() as u32).max(1);
    if s < 1.0 {
        resize_area(img, width, height)
    } else {
        let (mx, my) = ((img.width() - 1) as f64, (img.height() - 1) as f64);
        Image::from_fn(width, height, |x, y| {
            let sx = ((x as f64 + 0.5) / s - 0.5).clamp(0.0, mx);
            let sy = ((y as f64 + 0.5) / s - 0.5).clamp(0.0, my);
            sample_bilinear(img, sx, sy).expect("clamped inside").round() as u8
        })
    }
}

/// In-plane rotation about the picture centre, same canvas, white fill.
pub fn rotated(img: &Image, angle_deg: u32) -> Image {
    let c = ((img.width() - 1) as f64 / 2.0, (img.height() - 1) as f64 / 2.0);
    let h = Homography::rotation_about((angle_deg as f64).to_radians(), c.0, c.1);
    warp_perspective(img, &h, img.width(), img.height(), FILL).expect("rotation is invertible")
}

/// Target and distractor side by side at equal height on white, with a
/// gutter of 10% of the target width, cropped so only the near half of the
/// distractor is in view.
pub fn interference_frame(target: &Image, distractor: &Image) -> Image {
    let d = scale_to_height(distractor, target.height());
    let gutter = (GUTTER_FRACTION * target.width() as f64).round() as u32;
    let visible = (DISTRACTOR_VISIBLE * d.width() as f64).round() as u32;
    let mut canvas = Image::filled(target.width() + gutter + visible, target.height(), FILL);
    canvas.blit(target, 0, 0);
    canvas.blit(&d, (target.width() + gutter) as i64, 0);
    canvas
}

fn is_low_texture(t: &Target, config: &BenchConfig) -> bool {
    t.features.len() < config.low_texture_keypoints
}

/// Builds every case frame in report order.
pub fn synthesize_cases(
    db: &TargetDatabase,
    sources: &HashMap<u32, ColorImage>,
    config: &BenchConfig,
) -> Vec<CaseFrame> {
    let mut out = Vec::new();
    let targets = db.targets();
    for (i, t) in targets.iter().enumerate() {
        let low = is_low_texture(t, config);
        let src = sources.get(&t.id);
        let gray = src.map(to_grayscale);
        let case = |test, parameter, expected_id, expected_failure, frames| CaseFrame {
            test,
            target_id: t.id,
            parameter,
            expected_id,
            expected_failure,
            frames,
        };
        for angle in ROTATION_ANGLES_DEG {
            let frames = gray.as_ref().map(|g| CaseImages::Gray(rotated(g, angle)));
            out.push(case(Family::Rotation, Parameter::Angle { angle_deg: angle }, Some(t.id), low, frames));
        }
        for side in Side::ALL {
            let frames = gray
                .as_ref()
                .map(|g| CaseImages::Gray(occlude(g, OCCLUSION_FRACTION, side, FILL)));
            // Low-texture pictures are expected to drop out once half is covered.
            let expected = if low { None } else { Some(t.id) };
            out.push(case(
                Family::Occlusion,
                Parameter::Occlusion {
                    fraction: OCCLUSION_FRACTION,
                    side,
                },
                expected,
                false,
                frames,
            ));
        }
        if targets.len() > 1 {
            let other = &targets[(i + 1) % targets.len()];
            let frames = match (gray.as_ref(), sources.get(&other.id)) {
                (Some(g), Some(o)) => Some(CaseImages::Gray(interference_frame(g, &to_grayscale(o)))),
                _ => None,
            };
            out.push(case(
                Family::Interference,
                Parameter::Distractor { distractor_id: other.id },
                Some(t.id),
                low,
                frames,
            ));
        }
        let frames = src.map(|c| CaseImages::ColorPair(c.clone(), to_grayscale(c).to_rgba()));
        out.push(case(Family::Color, Parameter::None, Some(t.id), false, frames));
    }
    out
}

fn run_case(frame: &CaseFrame, db: &TargetDatabase, config: &BenchConfig, low: bool) -> BenchCase {
    let mut case = BenchCase {
        test: frame.test,
        target_id: frame.target_id,
        parameter: frame.parameter.clone(),
        expected_id: frame.expected_id,
        got_id: None,
        inliers: 0,
        confidence: 0.0,
        pass: false,
        expected_failure: frame.expected_failure,
        skipped: false,
    };
    let fill = |case: &mut BenchCase, d: &Option<Detection>| {
        case.got_id = d.as_ref().map(|d| d.target_id);
        case.inliers = d.as_ref().map_or(0, |d| d.inliers);
        case.confidence = d.as_ref().map_or(0.0, |d| d.confidence);
    };
    match &frame.frames {
        None => case.skipped = true,
        Some(CaseImages::Gray(img)) => {
            let d = recognize_image(img, db, &config.extract, &config.recognize);
            fill(&mut case, &d);
            case.pass = case.got_id == case.expected_id;
        }
        Some(CaseImages::ColorPair(color, gray)) => {
            let dc = recognize_image(&to_grayscale(color), db, &config.extract, &config.recognize);
            let dg = recognize_image(&to_grayscale(gray), db, &config.extract, &config.recognize);
            fill(&mut case, &dc);
            // Low-texture targets only need identical verdicts here.
            case.pass = dc == dg && (low || case.got_id == case.expected_id);
        }
    }
    case
}

pub fn summarize(cases: Vec<BenchCase>) -> BenchReport {
    let mut summary: BTreeMap<Family, FamilySummary> = BTreeMap::new();
    for c in &cases {
        let s = summary.entry(c.test).or_default();
        s.total += 1;
        if c.skipped {
            s.skipped += 1;
        } else if c.expected_failure {
            s.expected_failures += 1;
        } else if c.pass {
            s.passed += 1;
        } else {
            s.failed += 1;
        }
    }
    let all_passed = summary.values().all(|s| s.failed == 0);
    BenchReport {
        cases,
        summary,
        all_passed,
    }
}

/// Runs every case (in parallel) and assembles the report.
pub fn run_bench(db: &TargetDatabase, sources: &HashMap<u32, ColorImage>, config: &BenchConfig) -> BenchReport {
    let frames = synthesize_cases(db, sources, config);
    let cases: Vec<BenchCase> = frames
        .par_iter()
        .map(|f| {
            let low = db.get(f.target_id).is_some_and(|t| is_low_texture(t, config));
            run_case(f, db, config, low)
        })
        .collect();
    summarize(cases)
}
