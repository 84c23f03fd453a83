//! Brute-force references and the randomized trial loops that compare the
//! engine against them. Each loop returns the first disagreement.

use std::collections::BTreeMap;

use herbar_core::features::{Descriptor, FeatureSet, Keypoint};
use herbar_core::matcher::{
    estimate_homography_dlt, match_descriptors, ransac_homography, Homography, Match, MatchParams, RansacParams,
};
use herbar_core::pose::{compose_homography, decompose_homography, CameraIntrinsics, Pose};

use super::{four_point_homography, project, random_homography, TestRng};

pub fn feature_set(descs: Vec<Descriptor>) -> FeatureSet {
    let kp = Keypoint {
        x: 0.0,
        y: 0.0,
        level: 0,
        orientation: 0.0,
        score: 0.0,
    };
    FeatureSet {
        width: 64,
        height: 64,
        keypoints: vec![kp; descs.len()],
        descriptors: descs,
    }
}

pub fn random_descriptor(rng: &mut TestRng) -> Descriptor {
    let mut d = [0u8; 32];
    for chunk in d.chunks_mut(8) {
        chunk.copy_from_slice(&rng.next_u64().to_le_bytes());
    }
    Descriptor(d)
}

pub fn flip_bits(rng: &mut TestRng, d: &Descriptor, n: usize) -> Descriptor {
    let mut out = d.0;
    for _ in 0..n {
        let b = rng.below(256);
        out[b / 8] ^= 1 << (b % 8);
    }
    Descriptor(out)
}

fn bit_distance(a: &Descriptor, b: &Descriptor) -> u32 {
    (0..256).filter(|&k| a.bit(k) != b.bit(k)).count() as u32
}

/// Full distance matrix scan with the documented tie rules.
pub fn exhaustive_matches(q: &[Descriptor], t: &[Descriptor], params: &MatchParams) -> Vec<Match> {
    let mut per_target: BTreeMap<usize, (u32, usize)> = BTreeMap::new();
    for (qi, qd) in q.iter().enumerate() {
        let mut ranked: Vec<(u32, usize)> = t.iter().enumerate().map(|(ti, td)| (bit_distance(qd, td), ti)).collect();
        ranked.sort();
        let Some(&(d1, ti)) = ranked.first() else { continue };
        let ok_ratio = match ranked.get(1) {
            Some(&(d2, _)) => (d1 as f64) < params.ratio * d2 as f64,
            None => true,
        };
        if !ok_ratio || d1 > params.max_distance {
            continue;
        }
        let better = match per_target.get(&ti) {
            None => true,
            Some(&(bd, bq)) => (d1, qi) < (bd, bq),
        };
        if better {
            per_target.insert(ti, (d1, qi));
        }
    }
    let mut out: Vec<Match> = per_target
        .into_iter()
        .map(|(ti, (d, qi))| Match {
            query_idx: qi,
            target_idx: ti,
            distance: d,
        })
        .collect();
    out.sort_by_key(|m| m.query_idx);
    out
}

pub fn matching_trials(trials: usize, seed: u64) -> Result<(), String> {
    let mut rng = TestRng::new(seed);
    for trial in 0..trials {
        let nt = 1 + rng.below(if trial % 10 == 0 { 256 } else { 64 });
        let nq = 1 + rng.below(if trial % 10 == 0 { 256 } else { 64 });
        let mut targets: Vec<Descriptor> = (0..nt).map(|_| random_descriptor(&mut rng)).collect();
        // Duplicates force nearest-distance ties.
        if nt > 3 {
            targets[nt - 1] = targets[0];
        }
        let queries: Vec<Descriptor> = (0..nq)
            .map(|i| {
                if i % 5 == 4 {
                    random_descriptor(&mut rng)
                } else {
                    let base = targets[rng.below(nt)];
                    let flips = rng.below(90);
                    flip_bits(&mut rng, &base, flips)
                }
            })
            .collect();
        let params = match trial % 3 {
            0 => MatchParams::default(),
            1 => MatchParams {
                ratio: 0.95,
                max_distance: 256,
            },
            _ => MatchParams {
                ratio: 0.6,
                max_distance: 40,
            },
        };
        let got = match_descriptors(&feature_set(queries.clone()), &feature_set(targets.clone()), &params);
        let want = exhaustive_matches(&queries, &targets, &params);
        if got != want {
            return Err(format!("matching trial {trial}: {} matches vs {} expected", got.len(), want.len()));
        }
    }
    Ok(())
}

pub fn inlier_set(h: &[[f64; 3]; 3], src: &[[f64; 2]], dst: &[[f64; 2]], thr: f64) -> Vec<bool> {
    src.iter()
        .zip(dst)
        .map(|(&s, &d)| match project(h, s) {
            Some(p) => ((p[0] - d[0]).powi(2) + (p[1] - d[1]).powi(2)).sqrt() <= thr,
            None => false,
        })
        .collect()
}

/// Best inlier count over every 4-subset, and every mask achieving it.
pub fn all_subsets_optimum(src: &[[f64; 2]], dst: &[[f64; 2]], thr: f64) -> (usize, Vec<Vec<bool>>) {
    let n = src.len();
    let mut best = 0;
    let mut masks = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let s = [src[a], src[b], src[c], src[d]];
                    let t = [dst[a], dst[b], dst[c], dst[d]];
                    let Some(h) = four_point_homography(&s, &t) else { continue };
                    let mask = inlier_set(&h, src, dst, thr);
                    let count = mask.iter().filter(|&&m| m).count();
                    if count > best {
                        best = count;
                        masks.clear();
                    }
                    if count == best {
                        masks.push(mask);
                    }
                }
            }
        }
    }
    (best, masks)
}

/// Twelve correspondences, 6 to 10 of them exact under a random homography.
pub fn contaminated_instance(rng: &mut TestRng) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let h0 = random_homography(rng);
    let n_in = 6 + rng.below(5);
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for i in 0..12 {
        let p = [rng.range(0.0, 640.0), rng.range(0.0, 480.0)];
        src.push(p);
        if i < n_in {
            dst.push(project(&h0, p).unwrap());
        } else {
            dst.push([rng.range(0.0, 640.0), rng.range(0.0, 480.0)]);
        }
    }
    for i in (1..12).rev() {
        let j = rng.below(i + 1);
        src.swap(i, j);
        dst.swap(i, j);
    }
    (src, dst)
}

pub fn ransac_trials(trials: usize, seed: u64) -> Result<(), String> {
    let mut rng = TestRng::new(seed);
    for trial in 0..trials {
        let (src, dst) = contaminated_instance(&mut rng);
        let (best, masks) = all_subsets_optimum(&src, &dst, 3.0);
        let params = RansacParams {
            iterations: 500,
            inlier_px: 3.0,
            seed: 1000 + trial as u64,
        };
        let r = ransac_homography(&src, &dst, &params).ok_or(format!("ransac trial {trial}: no model"))?;
        if r.inlier_count != best {
            return Err(format!("ransac trial {trial}: {} inliers, optimum {best}", r.inlier_count));
        }
        if !masks.contains(&r.inliers) {
            return Err(format!("ransac trial {trial}: inlier set is not an optimal one"));
        }
    }
    Ok(())
}

/// Largest elementwise error of DLT over random exact instances.
pub fn dlt_trials(trials: usize, seed: u64) -> Result<f64, String> {
    let mut rng = TestRng::new(seed);
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let h0 = random_homography(&mut rng);
        let n = 4 + rng.below(30);
        let src: Vec<[f64; 2]> = (0..n).map(|_| [rng.range(0.0, 640.0), rng.range(0.0, 480.0)]).collect();
        let dst: Vec<[f64; 2]> = src.iter().map(|&p| project(&h0, p).unwrap()).collect();
        let h = estimate_homography_dlt(&src, &dst).map_err(|e| format!("dlt trial {trial}: {e}"))?;
        worst = worst.max(h.max_abs_diff(&Homography { h: h0 }));
    }
    if worst < 1e-6 {
        Ok(worst)
    } else {
        Err(format!("dlt error {worst:e} exceeds 1e-6"))
    }
}

pub fn rodrigues(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|v| v / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// Tilt up to 60°, depth 0.5 to 5 target widths, target roughly in view.
pub fn random_pose(rng: &mut TestRng) -> Pose {
    let axis = [rng.range(-1.0, 1.0), rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)];
    let angle = rng.range(0.0, 60f64.to_radians());
    let depth = rng.range(0.5, 5.0);
    Pose {
        r: rodrigues(axis, angle),
        t: [rng.range(-0.5, 0.5) * depth, rng.range(-0.5, 0.5) * depth, depth],
    }
}

/// Largest deviation of a compose/decompose round trip.
pub fn pose_trials(trials: usize, seed: u64) -> Result<f64, String> {
    let mut rng = TestRng::new(seed);
    let k = CameraIntrinsics::default_for(640, 480);
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let pose = random_pose(&mut rng);
        let got = decompose_homography(&compose_homography(&pose, &k), &k)
            .map_err(|e| format!("pose trial {trial}: {e}"))?;
        for i in 0..3 {
            worst = worst.max((got.t[i] - pose.t[i]).abs());
            for j in 0..3 {
                worst = worst.max((got.r[i][j] - pose.r[i][j]).abs());
            }
        }
        if got.orthonormality_error() > 1e-9 || got.t[2] <= 0.0 {
            return Err(format!("pose trial {trial}: not a rotation in front of the camera"));
        }
    }
    if worst < 1e-6 {
        Ok(worst)
    } else {
        Err(format!("pose round-trip error {worst:e} exceeds 1e-6"))
    }
}
