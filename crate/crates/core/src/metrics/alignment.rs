use alloc::collections::BTreeSet;
use alloc::string::String;

use crate::ocean::{cosine, OceanVector, Trait};
use crate::personality::{genre_key, project_genres_to_traits, GenreTraitMap};
use crate::recommend::RecommendationList;

/// Personality alignment: cosine between the user's trait vector and the
/// trait projection of the list's matched genre slots.
pub fn pas(p: &OceanVector, rec: &RecommendationList, map: &GenreTraitMap) -> Option<f64> {
    let g = project_genres_to_traits(rec.genre_slots(), map);
    // both vectors are non-negative, so the cosine is already in [0, 1]
    cosine(p, &g).map(|c| c.max(0.0))
}

/// Genre-personality alignment: trait scores summed over every (distinct
/// recommended genre, trait containing it) pair, divided by the number of
/// such pairs. Equals 1 for an all-ones trait vector.
pub fn gpa(p: &OceanVector, rec: &RecommendationList, map: &GenreTraitMap) -> Option<f64> {
    let distinct: BTreeSet<String> = rec.genre_slots().map(genre_key).collect();
    let mut raw = 0.0;
    let mut pairs = 0usize;
    for g in &distinct {
        for t in Trait::ALL {
            if map.contains(t, g) {
                raw += p.get(t);
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return None;
    }
    Some(raw / pairs as f64)
}
