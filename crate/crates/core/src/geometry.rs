//! Projective 3×3 maps between the target plane and the camera frame.

use serde::{Deserialize, Serialize};

/// Determinant magnitude below which a homography is treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// A 3×3 projective transform, stored row-major.
///
/// Constructors normalize so that `h[2][2] == 1` whenever `|h[2][2]| > 1e-12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub h: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        h: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Builds a homography from rows, normalizing the bottom-right entry.
    pub fn new(h: [[f64; 3]; 3]) -> Self {
        Homography { h }.normalized()
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography {
            h: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]],
        }
    }

    pub fn scaling(sx: f64, sy: f64) -> Self {
        Homography {
            h: [[sx, 0.0, 0.0], [0.0, sy, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// In-plane rotation by `angle` radians about `(cx, cy)`.
    ///
    /// Positive angles turn +x toward +y, which on a raster with y pointing
    /// down reads as clockwise.
    pub fn rotation_about(angle: f64, cx: f64, cy: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Homography {
            h: [
                [c, -s, cx - c * cx + s * cy],
                [s, c, cy - s * cx - c * cy],
                [0.0, 0.0, 1.0],
            ],
        }
    }

    pub fn normalized(self) -> Self {
        let d = self.h[2][2];
        if d.abs() > SINGULAR_DET {
            let mut h = self.h;
            for row in h.iter_mut() {
                for v in row.iter_mut() {
                    *v /= d;
                }
            }
            Homography { h }
        } else {
            self
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.h;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn is_invertible(&self) -> bool {
        self.determinant().abs() > SINGULAR_DET
    }

    /// Adjugate-based inverse, normalized; `None` when singular.
    pub fn inverse(&self) -> Option<Homography> {
        let det = self.determinant();
        if det.abs() <= SINGULAR_DET {
            return None;
        }
        let m = &self.h;
        let mut inv = [[0.0; 3]; 3];
        inv[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
        inv[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
        inv[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
        inv[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
        inv[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
        inv[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
        inv[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
        inv[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
        inv[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        for row in inv.iter_mut() {
            for v in row.iter_mut() {
                *v /= det;
            }
        }
        Some(Homography::new(inv))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Homography) -> Homography {
        let a = &self.h;
        let b = &other.h;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Homography::new(out)
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let m = &self.h;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        if w.abs() < 1e-15 {
            return None;
        }
        Some((
            (m[0][0] * x + m[0][1] * y + m[0][2]) / w,
            (m[1][0] * x + m[1][1] * y + m[1][2]) / w,
        ))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.h;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn max_abs_diff(&self, other: &Homography) -> f64 {
        self.to_row_major()
            .iter()
            .zip(other.to_row_major().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
