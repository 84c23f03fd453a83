//! Hartley-normalized direct linear transform for point homographies.

use nalgebra::{DMatrix, SMatrix};

use crate::geometry::{Homography, SINGULAR_DET};

use super::MatchError;

/// Above this σ_min/σ_next ratio the null space is not one-dimensional.
pub const RANK_RATIO: f64 = 0.99;
/// Twice-triangle-area floor, in normalized coordinates, for minimal samples.
pub const COLLINEAR_EPS: f64 = 1e-6;

/// Similarity moving the centroid to the origin and the mean distance to √2.
fn normalizer(points: &[[f64; 2]]) -> Option<Homography> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean = points
        .iter()
        .map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !(mean > 1e-12) || !mean.is_finite() {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Some(Homography {
        h: [[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]],
    })
}

fn apply_all(t: &Homography, pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    // Similarities never hit the line at infinity.
    pts.iter()
        .map(|p| {
            let (x, y) = t.apply(p[0], p[1]).unwrap();
            [x, y]
        })
        .collect()
}

fn any_three_collinear(pts: &[[f64; 2]]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (pts[i], pts[j], pts[k]);
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if cross.abs() < COLLINEAR_EPS {
                    return true;
                }
            }
        }
    }
    false
}

/// Estimates `H` with `dst ≈ H·src` from at least four correspondences.
///
/// The homogeneous 2n×9 system is solved by SVD on Hartley-normalized
/// coordinates, then denormalized and scaled so `h33 = 1`. Minimal
/// four-point samples with three collinear points on either side, and
/// systems whose two smallest singular values are nearly equal, are
/// rejected as degenerate.
pub fn estimate_homography_dlt(src: &[[f64; 2]], dst: &[[f64; 2]]) -> Result<Homography, MatchError> {
    if src.len() != dst.len() {
        return Err(MatchError::LengthMismatch {
            src: src.len(),
            dst: dst.len(),
        });
    }
    let n = src.len();
    if n < 4 {
        return Err(MatchError::TooFewCorrespondences(n));
    }
    let t_src = normalizer(src).ok_or(MatchError::DegenerateConfiguration)?;
    let t_dst = normalizer(dst).ok_or(MatchError::DegenerateConfiguration)?;
    let ns = apply_all(&t_src, src);
    let nd = apply_all(&t_dst, dst);
    if n == 4 && (any_three_collinear(&ns) || any_three_collinear(&nd)) {
        return Err(MatchError::DegenerateConfiguration);
    }

    let h = if n == 4 {
        null_vector_minimal(&ns, &nd)?
    } else {
        null_vector(&ns, &nd)?
    };
    let hn = Homography {
        h: [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], h[8]]],
    };
    let t_dst_inv = t_dst.inverse().ok_or(MatchError::DegenerateConfiguration)?;
    let out = Homography {
        h: mul(&mul(&t_dst_inv.h, &hn.h), &t_src.h),
    }
    .normalized();
    if out.determinant().abs() <= SINGULAR_DET || out.h.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MatchError::DegenerateConfiguration);
    }
    Ok(out)
}

fn equations(p: [f64; 2], q: [f64; 2]) -> [[f64; 9]; 2] {
    let (x, y, u, v) = (p[0], p[1], q[0], q[1]);
    [
        [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u],
        [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v],
    ]
}

/// Right singular vector of the smallest singular value, after the rank check.
fn smallest_right_vector(sv: &[f64], v_t_row: impl Fn(usize) -> [f64; 9]) -> Result<[f64; 9], MatchError> {
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let (smallest, next) = (sv[order[0]], sv[order[1]]);
    if !(next > 0.0) || smallest / next > RANK_RATIO {
        return Err(MatchError::DegenerateConfiguration);
    }
    Ok(v_t_row(order[0]))
}

/// Four-point system padded with a zero row to 9×9 (stack allocated).
fn null_vector_minimal(ns: &[[f64; 2]], nd: &[[f64; 2]]) -> Result<[f64; 9], MatchError> {
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for (i, (p, q)) in ns.iter().zip(nd).enumerate() {
        for (k, row) in equations(*p, *q).iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a[(2 * i + k, j)] = *v;
            }
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(MatchError::DegenerateConfiguration)?;
    smallest_right_vector(svd.singular_values.as_slice(), |r| std::array::from_fn(|j| v_t[(r, j)]))
}

fn null_vector(ns: &[[f64; 2]], nd: &[[f64; 2]]) -> Result<[f64; 9], MatchError> {
    // At least 9 rows so the SVD exposes the full right basis.
    let rows = (2 * ns.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (p, q)) in ns.iter().zip(nd).enumerate() {
        for (k, row) in equations(*p, *q).iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a[(2 * i + k, j)] = *v;
            }
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(MatchError::DegenerateConfiguration)?;
    smallest_right_vector(svd.singular_values.as_slice(), |r| std::array::from_fn(|j| v_t[(r, j)]))
}

fn mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn through(h: &Homography, pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
        pts.iter()
            .map(|p| {
                let (x, y) = h.apply(p[0], p[1]).unwrap();
                [x, y]
            })
            .collect()
    }

    #[test]
    fn identity_from_four_points() {
        let src = [[0.0, 0.0], [100.0, 0.0], [100.0, 80.0], [0.0, 80.0]];
        let h = estimate_homography_dlt(&src, &src).unwrap();
        assert!(h.max_abs_diff(&Homography::IDENTITY) < 1e-10);
    }

    #[test]
    fn recovers_known_homography_from_five_points() {
        let h0 = Homography::new([[1.2, 0.1, 10.0], [-0.05, 0.9, -4.0], [1e-4, 2e-4, 1.0]]);
        let src = [[0.0, 0.0], [320.0, 10.0], [300.0, 250.0], [15.0, 230.0], [160.0, 120.0]];
        let dst = through(&h0, &src);
        let h = estimate_homography_dlt(&src, &dst).unwrap();
        assert!(h.max_abs_diff(&h0) < 1e-6, "{:?}", h);
    }

    #[test]
    fn collinear_minimal_sample_is_degenerate() {
        let src = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 5.0]];
        let dst = [[3.0, 1.0], [5.0, 2.0], [9.0, 9.0], [1.0, 7.0]];
        assert!(matches!(
            estimate_homography_dlt(&src, &dst),
            Err(MatchError::DegenerateConfiguration)
        ));
        assert!(matches!(
            estimate_homography_dlt(&dst, &src),
            Err(MatchError::DegenerateConfiguration)
        ));
    }

    #[test]
    fn all_collinear_is_degenerate() {
        let src: Vec<_> = (0..8).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let dst: Vec<_> = (0..8).map(|i| [3.0 * i as f64, i as f64 + 1.0]).collect();
        assert!(estimate_homography_dlt(&src, &dst).is_err());
    }

    #[test]
    fn input_validation() {
        let p = [[0.0, 0.0]; 3];
        assert!(matches!(
            estimate_homography_dlt(&p, &p),
            Err(MatchError::TooFewCorrespondences(3))
        ));
        assert!(matches!(
            estimate_homography_dlt(&[[0.0, 0.0]; 4], &p),
            Err(MatchError::LengthMismatch { .. })
        ));
    }
}
