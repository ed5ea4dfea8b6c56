use alloc::collections::BTreeSet;
use alloc::string::String;

use crate::recommend::RecommendationList;

fn hits(rec: &RecommendationList, relevant: &BTreeSet<String>) -> usize {
    rec.matched_ids()
        .into_iter()
        .filter(|id| relevant.contains(*id))
        .count()
}

/// Relevant hits over list length. Unmatched entries count in the
/// denominator only. `None` for an empty list.
pub fn precision_at_k(rec: &RecommendationList, relevant: &BTreeSet<String>) -> Option<f64> {
    if rec.is_empty() {
        return None;
    }
    Some(hits(rec, relevant) as f64 / rec.len() as f64)
}

/// Relevant hits over the size of the relevance set; `None` when it is empty.
pub fn recall_at_k(rec: &RecommendationList, relevant: &BTreeSet<String>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(hits(rec, relevant) as f64 / relevant.len() as f64)
}
