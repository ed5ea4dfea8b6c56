use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::groups::{GroupAssignment, MIN_GROUP_SIZE};
use crate::personality::normalized_entropy;
use crate::recommend::RecommendationList;

/// Demographic parity gap in item exposure.
///
/// For each group, the exposure rate of item `i` is the share of its users
/// whose list contains `i`. Two groups are compared by
/// `Σ_i |r_a(i) - r_b(i)| / Σ_i max(r_a(i), r_b(i))`, which lies in `[0, 1]`
/// and cancels a uniform shift across the catalog. The result is the largest
/// gap over all pairs of groups with at least two users; `None` when fewer
/// than two such groups exist.
pub fn demographic_parity(
    recs: &BTreeMap<String, RecommendationList>,
    groups: &GroupAssignment,
) -> Option<f64> {
    let members = groups.members(|u| recs.contains_key(u));
    let mut exposure: Vec<BTreeMap<&str, f64>> = Vec::new();
    for users in members.values().filter(|u| u.len() >= MIN_GROUP_SIZE) {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for u in users {
            for id in recs[*u].matched_ids() {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        let n = users.len() as f64;
        exposure.push(counts.into_iter().map(|(i, c)| (i, c as f64 / n)).collect());
    }
    if exposure.len() < 2 {
        return None;
    }
    let mut worst = 0.0f64;
    for a in 0..exposure.len() {
        for b in a + 1..exposure.len() {
            worst = worst.max(exposure_gap(&exposure[a], &exposure[b]));
        }
    }
    Some(worst)
}

fn exposure_gap(a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>) -> f64 {
    let items: BTreeSet<&str> = a.keys().chain(b.keys()).copied().collect();
    let (mut diff, mut top) = (0.0, 0.0);
    for i in items {
        let ra = a.get(i).copied().unwrap_or(0.0);
        let rb = b.get(i).copied().unwrap_or(0.0);
        diff += (ra - rb).abs();
        top += ra.max(rb);
    }
    if top > 0.0 {
        (diff / top).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Share of the user's relevant catalog items that appear in the list;
/// `None` when no relevant item is in `universe`.
pub fn true_positive_rate(
    rec: &RecommendationList,
    relevant: &BTreeSet<String>,
    universe: &BTreeSet<String>,
) -> Option<f64> {
    let reachable: BTreeSet<&str> = relevant
        .iter()
        .filter(|i| universe.contains(*i))
        .map(String::as_str)
        .collect();
    if reachable.is_empty() {
        return None;
    }
    let hits = rec.matched_ids().intersection(&reachable).count();
    Some(hits as f64 / reachable.len() as f64)
}

/// Equal opportunity gap: per-group mean true positive rate, then
/// `(max - min) / max` over groups with at least two counted users
/// (0 when every rate is 0). `None` with fewer than two such groups.
pub fn equal_opportunity(
    recs: &BTreeMap<String, RecommendationList>,
    relevance: &BTreeMap<String, BTreeSet<String>>,
    groups: &GroupAssignment,
    universe: &BTreeSet<String>,
) -> Option<f64> {
    let members = groups.members(|u| recs.contains_key(u) && relevance.contains_key(u));
    let mut rates = Vec::new();
    for users in members.values() {
        let tprs: Vec<f64> = users
            .iter()
            .filter_map(|u| true_positive_rate(&recs[*u], &relevance[*u], universe))
            .collect();
        if tprs.len() >= MIN_GROUP_SIZE {
            rates.push(tprs.iter().sum::<f64>() / tprs.len() as f64);
        }
    }
    if rates.len() < 2 {
        return None;
    }
    let max = rates.iter().copied().fold(f64::MIN, f64::max);
    let min = rates.iter().copied().fold(f64::MAX, f64::min);
    if max > 0.0 {
        Some(((max - min) / max).clamp(0.0, 1.0))
    } else {
        Some(0.0)
    }
}

/// Intra-list diversity: entropy of the list's matched genre slots,
/// normalized by `ln(vocabulary_size)`. `None` without matched genres.
pub fn ilf(rec: &RecommendationList, vocabulary_size: usize) -> Option<f64> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for g in rec.genre_slots() {
        *counts.entry(g).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return None;
    }
    Some(normalized_entropy(
        counts.values().map(|&c| c as f64 / total as f64),
        vocabulary_size,
    ))
}
