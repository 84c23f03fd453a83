//! Nearest-neighbour Hamming matching with ratio test and one-to-one filtering.

use serde::Serialize;

use crate::features::FeatureSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Match {
    pub query_idx: usize,
    pub target_idx: usize,
    pub distance: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    pub ratio: f64,
    pub max_distance: u32,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            ratio: 0.8,
            max_distance: 64,
        }
    }
}

/// Matches every query descriptor to its nearest target descriptor.
///
/// A match survives when `d1 < ratio·d2` and `d1 ≤ max_distance`, where
/// `d2` is the second-nearest distance (infinite with a single target
/// descriptor). Equal nearest distances resolve to the lower target index.
/// Each target index keeps only its smallest-distance match, ties going to
/// the lower query index. Output is sorted by query index.
pub fn match_descriptors(query: &FeatureSet, target: &FeatureSet, params: &MatchParams) -> Vec<Match> {
    if query.is_empty() || target.is_empty() {
        return Vec::new();
    }
    let mut best_for_target: Vec<Option<Match>> = vec![None; target.len()];
    for (qi, qd) in query.descriptors.iter().enumerate() {
        let (mut d1, mut d2) = (u32::MAX, u32::MAX);
        let mut ti_best = 0;
        for (ti, td) in target.descriptors.iter().enumerate() {
            let d = qd.hamming(td);
            if d < d1 {
                d2 = d1;
                d1 = d;
                ti_best = ti;
            } else if d < d2 {
                d2 = d;
            }
        }
        let passes_ratio = d2 == u32::MAX || (d1 as f64) < params.ratio * d2 as f64;
        if !passes_ratio || d1 > params.max_distance {
            continue;
        }
        let slot = &mut best_for_target[ti_best];
        // Queries arrive in ascending order, so keeping the incumbent on ties
        // prefers the lower query index.
        if slot.is_none_or(|m| d1 < m.distance) {
            *slot = Some(Match {
                query_idx: qi,
                target_idx: ti_best,
                distance: d1,
            });
        }
    }
    let mut out: Vec<Match> = best_for_target.into_iter().flatten().collect();
    out.sort_by_key(|m| m.query_idx);
    out
}
