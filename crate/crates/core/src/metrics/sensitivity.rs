use alloc::collections::BTreeMap;
use alloc::string::String;

use super::groups::{GroupAssignment, MIN_GROUP_SIZE};
use crate::recommend::RecommendationList;

/// `|R_s ∩ R_n| / k`, comparing entries by catalog id (normalized title for
/// unmatched entries).
pub fn overlap_fraction(neutral: &RecommendationList, sensitive: &RecommendationList, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let shared = neutral.keys().intersection(&sensitive.keys()).count();
    (shared as f64 / k as f64).min(1.0)
}

/// Mean overlap fraction per group (groups with at least two users having
/// both lists).
pub fn group_overlaps(
    neutral: &BTreeMap<String, RecommendationList>,
    sensitive: &BTreeMap<String, RecommendationList>,
    groups: &GroupAssignment,
    k: usize,
) -> BTreeMap<String, f64> {
    let members = groups.members(|u| neutral.contains_key(u) && sensitive.contains_key(u));
    members
        .into_iter()
        .filter(|(_, users)| users.len() >= MIN_GROUP_SIZE)
        .map(|(label, users)| {
            let sum: f64 = users
                .iter()
                .map(|u| overlap_fraction(&neutral[*u], &sensitive[*u], k))
                .sum();
            (String::from(label), sum / users.len() as f64)
        })
        .collect()
}

/// Range (max - min) of group overlaps; 0 for one group, `None` for none.
pub fn snsr(overlaps: &[f64]) -> Option<f64> {
    let max = overlaps.iter().copied().reduce(f64::max)?;
    let min = overlaps.iter().copied().reduce(f64::min)?;
    Some(max - min)
}

/// Population variance of group overlaps; `None` for no groups.
///
/// Deviations are taken from the first value before the mean, so identical
/// overlaps give exactly 0 rather than rounding residue.
pub fn snsv(overlaps: &[f64]) -> Option<f64> {
    let first = *overlaps.first()?;
    let n = overlaps.len() as f64;
    let shifted = overlaps.iter().map(|x| x - first);
    let mean = shifted.clone().sum::<f64>() / n;
    Some(shifted.map(|d| (d - mean) * (d - mean)).sum::<f64>() / n)
}

/// Jaccard similarity of two lists; two empty lists count as identical.
pub fn jaccard_k(a: &RecommendationList, b: &RecommendationList) -> f64 {
    let ka = a.keys();
    let kb = b.keys();
    let union = ka.union(&kb).count();
    if union == 0 {
        return 1.0;
    }
    ka.intersection(&kb).count() as f64 / union as f64
}
