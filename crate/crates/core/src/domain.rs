//! Interaction, catalog, demographic and profile types shared by every stage.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Movie,
    Music,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Movie => "movie",
            Domain::Music => "music",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "movie" | "movies" | "movielens" => Ok(Domain::Movie),
            "music" | "lastfm" | "last.fm" => Ok(Domain::Music),
            _ => Err(()),
        }
    }
}

/// One user–item event: a star rating (movies) or a play count (music).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub user_id: String,
    pub item_id: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemCatalogEntry {
    pub item_id: String,
    pub title: String,
    pub genres: BTreeSet<String>,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Other,
}

impl Gender {
    pub fn label(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Other => "other",
        }
    }

    /// Parses the single-letter and spelled-out forms used by both datasets.
    /// Empty input means the attribute is absent.
    pub fn parse(s: &str) -> Option<Gender> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" => None,
            "f" | "female" => Some(Gender::Female),
            "m" | "male" => Some(Gender::Male),
            _ => Some(Gender::Other),
        }
    }
}

pub const MAX_AGE: u32 = 130;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
}

impl Demographics {
    pub fn is_empty(&self) -> bool {
        self.gender.is_none() && self.age.is_none() && self.occupation.is_none() && self.country.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub demographics: Demographics,
    pub interactions: Vec<InteractionRecord>,
    pub relevance_set: BTreeSet<String>,
}

/// Item catalog with id lookup.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    entries: Vec<ItemCatalogEntry>,
    by_id: BTreeMap<String, usize>,
}

impl Catalog {
    /// Later entries with an already-seen id are ignored.
    pub fn new(entries: Vec<ItemCatalogEntry>) -> Self {
        let mut kept = Vec::with_capacity(entries.len());
        let mut by_id = BTreeMap::new();
        for e in entries {
            if by_id.contains_key(&e.item_id) {
                continue;
            }
            by_id.insert(e.item_id.clone(), kept.len());
            kept.push(e);
        }
        Catalog { entries: kept, by_id }
    }

    pub fn entries(&self) -> &[ItemCatalogEntry] {
        &self.entries
    }

    pub fn get(&self, item_id: &str) -> Option<&ItemCatalogEntry> {
        self.by_id.get(item_id).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, item_id: &str) -> bool {
        self.by_id.contains_key(item_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct genre labels across the catalog.
    pub fn genre_vocabulary(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .flat_map(|e| e.genres.iter().cloned())
            .collect()
    }

    pub fn item_ids(&self) -> BTreeSet<String> {
        self.by_id.keys().cloned().collect()
    }
}

/// Groups records per user, keeping users with at least `min_interactions`
/// records. Each user's records are ordered by timestamp, ties by item id.
pub fn filter_active_users(
    records: &[InteractionRecord],
    min_interactions: usize,
) -> BTreeMap<String, Vec<InteractionRecord>> {
    let mut by_user: BTreeMap<String, Vec<InteractionRecord>> = BTreeMap::new();
    for r in records {
        by_user.entry(r.user_id.clone()).or_default().push(r.clone());
    }
    by_user.retain(|_, v| v.len() >= min_interactions.max(1));
    for v in by_user.values_mut() {
        // stable: exact duplicates keep file order
        v.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.item_id.cmp(&b.item_id)));
    }
    by_user
}

/// Thresholds deciding which interacted items count as relevant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelevanceRule {
    /// Movie domain: minimum star rating.
    pub rating_threshold: f64,
}

impl Default for RelevanceRule {
    fn default() -> Self {
        RelevanceRule { rating_threshold: 4.0 }
    }
}

/// Movies: items rated at or above the threshold. Music: items whose play
/// count reaches the user's median play count.
pub fn derive_relevance(
    interactions: &[InteractionRecord],
    domain: Domain,
    rule: &RelevanceRule,
) -> BTreeSet<String> {
    let cutoff = match domain {
        Domain::Movie => rule.rating_threshold,
        Domain::Music => match median(interactions.iter().map(|r| r.weight).collect()) {
            Some(m) => m,
            None => return BTreeSet::new(),
        },
    };
    interactions
        .iter()
        .filter(|r| r.weight >= cutoff)
        .map(|r| r.item_id.clone())
        .collect()
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    })
}

/// Collapses repeated (user, item) events to one record, the one with the
/// largest weight (first occurrence on ties). Output keeps first-seen order.
pub fn dedup_interactions(records: &[InteractionRecord]) -> Vec<InteractionRecord> {
    let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out: Vec<InteractionRecord> = Vec::new();
    for r in records {
        match slot.get(r.item_id.as_str()) {
            Some(&i) => {
                if r.weight > out[i].weight {
                    out[i] = r.clone();
                }
            }
            None => {
                slot.insert(&r.item_id, out.len());
                out.push(r.clone());
            }
        }
    }
    out
}

/// Builds a profile from one user's filtered records: duplicates collapsed,
/// relevance set derived.
pub fn build_profile(
    user_id: &str,
    records: &[InteractionRecord],
    demographics: Demographics,
    domain: Domain,
    rule: &RelevanceRule,
) -> UserProfile {
    let interactions = dedup_interactions(records);
    let relevance_set = derive_relevance(&interactions, domain, rule);
    UserProfile {
        user_id: user_id.into(),
        demographics,
        interactions,
        relevance_set,
    }
}
