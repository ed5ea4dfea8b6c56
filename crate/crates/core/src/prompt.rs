//! Neutral and personality-sensitive prompt construction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{Demographics, Domain};
use crate::error::ConfigFileError;
use crate::ocean::{OceanVector, Trait};
use crate::personality::{dominant_traits, Level};

const BUNDLED_PHRASES: &str = include_str!("../data/trait_phrases.txt");

pub const DEFAULT_K: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Neutral,
    Sensitive,
}

impl PromptKind {
    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Neutral => "neutral",
            PromptKind::Sensitive => "sensitive",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub kind: PromptKind,
    pub domain: Domain,
    /// Absent for neutral prompts.
    pub user_id: Option<String>,
    pub text: String,
    pub k: usize,
}

/// Item noun for a count: "movie"/"movies"; "music" is invariant.
fn item_noun(domain: Domain, k: usize) -> &'static str {
    match (domain, k) {
        (Domain::Movie, 1) => "movie",
        (Domain::Movie, _) => "movies",
        (Domain::Music, _) => "music",
    }
}

/// `Please recommend {k} popular {movies|music} suitable for a general audience.`
pub fn build_neutral_prompt(domain: Domain, k: usize) -> PromptSpec {
    let k = k.max(1);
    PromptSpec {
        kind: PromptKind::Neutral,
        domain,
        user_id: None,
        text: format!(
            "Please recommend {k} popular {} suitable for a general audience.",
            item_noun(domain, k)
        ),
        k,
    }
}

/// Descriptor and preference phrase for one (trait, level) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitPhrase {
    pub descriptor: String,
    pub preference: String,
}

/// The ten trait phrases used in sensitive prompts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseTable {
    entries: BTreeMap<(Trait, Level), TraitPhrase>,
}

impl PhraseTable {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_PHRASES).expect("bundled phrase table is valid")
    }

    /// Parses `TRAIT.level: descriptor | preference` lines; all ten
    /// combinations must be present.
    pub fn parse(text: &str) -> Result<Self, ConfigFileError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| ConfigFileError {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (key, value) = line.split_once(':').ok_or_else(|| err("expected `TRAIT.level: ...`"))?;
            let (t, l) = key.trim().split_once('.').ok_or_else(|| err("expected `TRAIT.level`"))?;
            let t: Trait = t.parse().map_err(|_| err("unknown trait"))?;
            let level = match l.trim().to_ascii_lowercase().as_str() {
                "high" => Level::High,
                "low" => Level::Low,
                _ => return Err(err("level must be high or low")),
            };
            let (d, p) = value.split_once('|').ok_or_else(|| err("expected `descriptor | preference`"))?;
            let (d, p) = (d.trim(), p.trim());
            if d.is_empty() || p.is_empty() {
                return Err(err("empty phrase"));
            }
            entries.insert(
                (t, level),
                TraitPhrase {
                    descriptor: d.to_string(),
                    preference: p.to_string(),
                },
            );
        }
        for t in Trait::ALL {
            for l in [Level::High, Level::Low] {
                if !entries.contains_key(&(t, l)) {
                    return Err(ConfigFileError {
                        line: 0,
                        reason: format!("missing entry {}.{}", t.name(), l.name()),
                    });
                }
            }
        }
        Ok(PhraseTable { entries })
    }

    pub fn get(&self, t: Trait, level: Level) -> &TraitPhrase {
        &self.entries[&(t, level)]
    }
}

impl Default for PhraseTable {
    fn default() -> Self {
        Self::bundled()
    }
}

/// "a", "a and b", "a, b and c".
fn join_phrases(items: &[&str]) -> String {
    match items {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

fn indefinite_article(next: &str) -> &'static str {
    match next.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// `I am a(n) {descriptors} {movie|music} lover who prefers {preferences}.
/// Please recommend {k} {movies|music}.` built from the user's dominant
/// traits. Demographic attributes never enter the text.
pub fn build_sensitive_prompt(
    user_id: &str,
    p: &OceanVector,
    domain: Domain,
    k: usize,
    phrases: &PhraseTable,
    dominance_threshold: f64,
) -> PromptSpec {
    let k = k.max(1);
    let dominant = dominant_traits(p, dominance_threshold);
    let chosen: Vec<&TraitPhrase> = dominant.iter().map(|&(t, l)| phrases.get(t, l)).collect();
    let descriptors = join_phrases(&chosen.iter().map(|c| c.descriptor.as_str()).collect::<Vec<_>>());
    let preferences = join_phrases(&chosen.iter().map(|c| c.preference.as_str()).collect::<Vec<_>>());
    let text = format!(
        "I am {} {descriptors} {} lover who prefers {preferences}. Please recommend {k} {}.",
        indefinite_article(&descriptors),
        domain.name(),
        item_noun(domain, k),
    );
    PromptSpec {
        kind: PromptKind::Sensitive,
        domain,
        user_id: Some(user_id.to_string()),
        text,
        k,
    }
}

/// Words that reveal demographic attributes regardless of the user.
pub const DEMOGRAPHIC_BASE_VOCABULARY: &[&str] = &[
    "female", "male", "man", "woman", "men", "women", "boy", "girl", "gender", "he", "she",
    "his", "hers", "age", "aged", "old", "young", "younger", "older", "senior", "elderly",
    "teen", "teenager", "retired", "occupation", "job", "profession", "country", "nationality",
];

/// Lowercase alphanumeric tokens of `text`.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Base vocabulary plus the tokens of this user's own attribute values.
pub fn demographic_vocabulary(d: &Demographics) -> BTreeSet<String> {
    let mut v: BTreeSet<String> = DEMOGRAPHIC_BASE_VOCABULARY.iter().map(|s| s.to_string()).collect();
    if let Some(g) = d.gender {
        v.insert(g.label().to_string());
    }
    if let Some(a) = d.age {
        v.insert(a.to_string());
    }
    for s in [&d.occupation, &d.country].into_iter().flatten() {
        v.extend(tokens(s));
    }
    v
}

/// First token of `text` found in `vocabulary`, if any.
pub fn find_demographic_token(text: &str, vocabulary: &BTreeSet<String>) -> Option<String> {
    tokens(text).find(|t| vocabulary.contains(t))
}
