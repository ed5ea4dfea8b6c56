//! Ranked recommendation lists after catalog matching.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::prompt::PromptKind;
use crate::titles::normalize_title;

/// One entry of a recommendation list. Unmatched titles keep `item_id`
/// absent and an empty genre set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedItem {
    pub raw_title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
    pub genres: BTreeSet<String>,
    pub rank: usize,
}

/// Identity used for set comparisons between lists: the catalog id when
/// matched, otherwise the normalized title.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemKey {
    Id(String),
    Title(String),
}

impl MatchedItem {
    pub fn key(&self) -> ItemKey {
        match &self.item_id {
            Some(id) => ItemKey::Id(id.clone()),
            None => ItemKey::Title(normalize_title(&self.raw_title)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationList {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_id: Option<String>,
    pub kind: PromptKind,
    pub k: usize,
    pub items: Vec<MatchedItem>,
}

impl RecommendationList {
    /// A list of catalog-matched items, ranked in the given order. Intended
    /// for tests and synthetic fixtures.
    pub fn from_matched<I, S, G>(kind: PromptKind, k: usize, items: I) -> Self
    where
        I: IntoIterator<Item = (S, G)>,
        S: Into<String>,
        G: IntoIterator,
        G::Item: Into<String>,
    {
        let items = items
            .into_iter()
            .enumerate()
            .map(|(i, (id, genres))| {
                let id: String = id.into();
                MatchedItem {
                    raw_title: id.clone(),
                    year: None,
                    item_id: Some(id),
                    genres: genres.into_iter().map(Into::into).collect(),
                    rank: i + 1,
                }
            })
            .collect();
        RecommendationList {
            user_id: None,
            kind,
            k,
            items,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn matched_ids(&self) -> BTreeSet<&str> {
        self.items.iter().filter_map(|m| m.item_id.as_deref()).collect()
    }

    pub fn keys(&self) -> BTreeSet<ItemKey> {
        self.items.iter().map(MatchedItem::key).collect()
    }

    /// Genre multiset over matched items, one slot per (item, genre).
    pub fn genre_slots(&self) -> impl Iterator<Item = &str> {
        self.items
            .iter()
            .filter(|m| m.item_id.is_some())
            .flat_map(|m| m.genres.iter().map(String::as_str))
    }

    pub fn distinct_genres(&self) -> BTreeSet<&str> {
        self.genre_slots().collect()
    }

    pub fn matched_count(&self) -> usize {
        self.items.iter().filter(|m| m.item_id.is_some()).count()
    }

    /// Fraction of entries matched to the catalog; 1 for an empty list.
    pub fn match_rate(&self) -> f64 {
        if self.items.is_empty() {
            1.0
        } else {
            self.matched_count() as f64 / self.items.len() as f64
        }
    }

    /// Ranks start at 1 and increase by one, matched ids are unique and the
    /// list is no longer than `k`.
    pub fn is_well_formed(&self) -> bool {
        let ranks_ok = self.items.iter().enumerate().all(|(i, m)| m.rank == i + 1);
        let ids: Vec<&str> = self.items.iter().filter_map(|m| m.item_id.as_deref()).collect();
        let unique = ids.iter().collect::<BTreeSet<_>>().len() == ids.len();
        ranks_ok && unique && self.items.len() <= self.k
    }
}
