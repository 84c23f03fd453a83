//! Planar camera pose from a verified homography, point projection and
//! wireframe overlay rendering.
//!
//! The pose path expects homographies from a target plane normalized to
//! unit width, so translations come out in target widths. Use
//! [`normalized_target_homography`] to rescale a pixel-space detection.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Homography;
use crate::imaging::ColorImage;

#[derive(Debug, Error)]
pub enum PoseError {
    #[error("homography is singular")]
    SingularHomography,
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("invalid wireframe model: {0}")]
    InvalidModel(String),
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Pinhole intrinsics with zero skew.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    /// Uncalibrated guess: focal length 0.9·width, principal point centered.
    pub fn default_for(width: u32, height: u32) -> Self {
        CameraIntrinsics {
            fx: 0.9 * width as f64,
            fy: 0.9 * width as f64,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), PoseError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(PoseError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(PoseError::InvalidIntrinsics("principal point not finite".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, PoseError> {
        let k: CameraIntrinsics = serde_json::from_str(&read_text(path.as_ref())?)?;
        k.validate()?;
        Ok(k)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }
}

fn read_text(path: &Path) -> Result<String, PoseError> {
    std::fs::read_to_string(path).map_err(|source| PoseError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Camera-from-target rigid transform; `t` in target widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub r: [[f64; 3]; 3],
    pub t: [f64; 3],
}

impl Pose {
    pub const IDENTITY_AT_UNIT_DEPTH: Pose = Pose {
        r: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        t: [0.0, 0.0, 1.0],
    };

    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.r[i][j])
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::from(self.t)
    }

    pub fn r_row_major(&self) -> [f64; 9] {
        let r = &self.r;
        [
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        ]
    }

    /// Largest deviation of `RᵀR` from identity and of `det R` from 1.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation();
        let e = (r.transpose() * r - Matrix3::identity()).abs().max();
        e.max((r.determinant() - 1.0).abs())
    }

    pub fn transform(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.rotation() * Vector3::from(p) + self.translation();
        [v.x, v.y, v.z]
    }
}

/// Rescales a pixel-space detection so the target plane spans unit width.
pub fn normalized_target_homography(h: &Homography, target_width: u32) -> Homography {
    let w = target_width as f64;
    h.compose(&Homography::scaling(w, w))
}

/// `K·[r1 r2 t]`, the homography induced by a pose on the `z = 0` plane.
pub fn compose_homography(pose: &Pose, k: &CameraIntrinsics) -> Homography {
    let r = pose.rotation();
    let m = Matrix3::from_columns(&[r.column(0).into_owned(), r.column(1).into_owned(), pose.translation()]);
    let h = k.matrix() * m;
    Homography::new([
        [h[(0, 0)], h[(0, 1)], h[(0, 2)]],
        [h[(1, 0)], h[(1, 1)], h[(1, 2)]],
        [h[(2, 0)], h[(2, 1)], h[(2, 2)]],
    ])
}

/// Recovers `(R, t)` from `H ∝ K·[r1 r2 t]`.
///
/// `B = K⁻¹H` is scaled by `λ = 2/(‖b1‖+‖b2‖)`, with the sign chosen so
/// the target sits in front of the camera. `r3 = r1 × r2` and the result
/// is projected onto the nearest rotation by SVD.
pub fn decompose_homography(h: &Homography, k: &CameraIntrinsics) -> Result<Pose, PoseError> {
    k.validate()?;
    if !h.is_invertible() {
        return Err(PoseError::SingularHomography);
    }
    let hm = Matrix3::from_fn(|i, j| h.h[i][j]);
    let b = k.inverse_matrix() * hm;
    let (b1, b2, b3) = (b.column(0), b.column(1), b.column(2));
    let norm_sum = b1.norm() + b2.norm();
    if !(norm_sum > 1e-12) || !norm_sum.is_finite() {
        return Err(PoseError::SingularHomography);
    }
    let mut lambda = 2.0 / norm_sum;
    if lambda * b3[2] < 0.0 {
        lambda = -lambda;
    }
    let r1 = b1 * lambda;
    let r2 = b2 * lambda;
    let r3 = r1.cross(&r2);
    let t = b3 * lambda;
    let approx = Matrix3::from_columns(&[r1, r2, r3]);
    let svd = approx.svd(true, true);
    let (Some(mut u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(PoseError::SingularHomography);
    };
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    Ok(Pose {
        r: [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ],
        t: [t[0], t[1], t[2]],
    })
}

/// Minimum camera-frame depth for a projectable point.
pub const MIN_DEPTH: f64 = 1e-9;

pub fn project_point(pose: &Pose, k: &CameraIntrinsics, p: [f64; 3]) -> Result<[f64; 2], PoseError> {
    let [x, y, z] = pose.transform(p);
    if z <= MIN_DEPTH {
        return Err(PoseError::BehindCamera { z });
    }
    Ok([k.fx * x / z + k.cx, k.fy * y / z + k.cy])
}

pub fn project_points(
    pose: &Pose,
    k: &CameraIntrinsics,
    pts: &[[f64; 3]],
) -> Vec<Result<[f64; 2], PoseError>> {
    pts.iter().map(|&p| project_point(pose, k, p)).collect()
}

/// Line-drawing model in target-plane units.
///
/// `x` runs right and `y` down across the picture; `z` is height above the
/// picture toward the viewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireframeModel {
    pub name: String,
    pub vertices: Vec<[f64; 3]>,
    pub edges: Vec<[usize; 2]>,
}

impl WireframeModel {
    pub fn validate(&self) -> Result<(), PoseError> {
        if self.edges.is_empty() {
            return Err(PoseError::InvalidModel(format!("model {:?} has no edges", self.name)));
        }
        for e in &self.edges {
            if e[0] >= self.vertices.len() || e[1] >= self.vertices.len() {
                return Err(PoseError::InvalidModel(format!(
                    "edge {:?} references a missing vertex (model has {})",
                    e,
                    self.vertices.len()
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PoseError> {
        let m: WireframeModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, PoseError> {
        Self::from_json(&read_text(path.as_ref())?)
    }

    /// Vertex in the pose's target frame, where +z points into the picture.
    pub fn target_frame_vertex(&self, i: usize) -> [f64; 3] {
        let [x, y, z] = self.vertices[i];
        [x, y, -z]
    }
}

/// Projects the model and rasterizes each edge with Bresenham lines.
///
/// Edges with an endpoint behind the camera are skipped; the rest are
/// clipped to the frame.
pub fn render_overlay(
    frame: &ColorImage,
    pose: &Pose,
    k: &CameraIntrinsics,
    model: &WireframeModel,
    color: [u8; 4],
) -> ColorImage {
    let mut out = frame.clone();
    let projected: Vec<Option<[f64; 2]>> = (0..model.vertices.len())
        .map(|i| project_point(pose, k, model.target_frame_vertex(i)).ok())
        .collect();
    for e in &model.edges {
        let (Some(Some(a)), Some(Some(b))) = (projected.get(e[0]), projected.get(e[1])) else {
            continue;
        };
        draw_line(&mut out, *a, *b, color);
    }
    out
}

/// Liang–Barsky clip of a segment against `[xmin, xmax] × [ymin, ymax]`.
fn clip_segment(a: [f64; 2], b: [f64; 2], xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Option<([f64; 2], [f64; 2])> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-dx, a[0] - xmin),
        (dx, xmax - a[0]),
        (-dy, a[1] - ymin),
        (dy, ymax - a[1]),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some((
        [a[0] + t0 * dx, a[1] + t0 * dy],
        [a[0] + t1 * dx, a[1] + t1 * dy],
    ))
}

/// Rasterizes the segment between rounded endpoints; pixels outside the
/// image are dropped.
pub fn draw_line(img: &mut ColorImage, a: [f64; 2], b: [f64; 2], color: [u8; 4]) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let inside = |p: [f64; 2]| p[0] >= -0.5 && p[1] >= -0.5 && p[0] < w - 0.5 && p[1] < h - 0.5;
    let (a, b) = if inside(a) && inside(b) {
        (a, b)
    } else {
        match clip_segment(a, b, -1.0, w, -1.0, h) {
            Some(seg) => seg,
            None => return,
        }
    };
    let (mut x0, mut y0) = (a[0].round() as i64, a[1].round() as i64);
    let (x1, y1) = (b[0].round() as i64, b[1].round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x0 >= 0 && y0 >= 0 && x0 < img.width() as i64 && y0 < img.height() as i64 {
            img.set(x0 as u32, y0 as u32, color);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}
