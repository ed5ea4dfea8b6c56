//! Reply parsing and title-to-catalog matching.
//!
//! Replies are scanned for numbered (`1. Title`, `1) Title`) or bulleted
//! (`- Title`, `* Title`) lines; anything else is treated as prose. Each title
//! is then resolved against the catalog by normalized exact match, a year
//! agreement check and, failing that, token-set Jaccard similarity.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::Catalog;
use crate::error::ResponseError;
use crate::prompt::PromptKind;
use crate::recommend::{ItemKey, MatchedItem, RecommendationList};

pub const DEFAULT_FUZZY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTitle {
    pub title: String,
    pub year: Option<u16>,
}

const QUOTES: &[char] = &['"', '\'', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];
const DESCRIPTION_SEPARATORS: &[&str] = &[" - ", " \u{2013} ", " \u{2014} "];

/// Extracts up to `k` titles in reply order.
pub fn parse_recommendation_text(text: &str, k: usize) -> Result<Vec<ParsedTitle>, ResponseError> {
    let mut out = Vec::new();
    for line in text.lines() {
        if out.len() >= k {
            break;
        }
        let Some(body) = list_item_body(line.trim()) else { continue };
        let parsed = clean_title(body);
        if !parsed.title.is_empty() {
            out.push(parsed);
        }
    }
    if out.is_empty() {
        return Err(ResponseError::Unparseable);
    }
    Ok(out)
}

/// Body of a numbered or bulleted line, or `None` for prose.
fn list_item_body(line: &str) -> Option<&str> {
    for bullet in ['-', '*', '\u{2022}'] {
        if let Some(rest) = line.strip_prefix(bullet) {
            if rest.starts_with(char::is_whitespace) {
                return Some(rest.trim());
            }
        }
    }
    // `1. Title`, `**1.** Title`, `### 1) Title`
    let line = line.trim_start_matches(['*', '#']).trim_start();
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    let rest = rest.trim_start_matches('*');
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    Some(rest.trim())
}

/// Splits a trailing `(yyyy)` off `s`.
pub fn split_year(s: &str) -> (&str, Option<u16>) {
    let t = s.trim_end();
    if let Some(inner) = t.strip_suffix(')') {
        if let Some(open) = inner.rfind('(') {
            let y = inner[open + 1..].trim();
            if y.len() == 4 && y.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(year) = y.parse::<u16>() {
                    if (1800..=2200).contains(&year) {
                        return (t[..open].trim_end(), Some(year));
                    }
                }
            }
        }
    }
    (t, None)
}

fn clean_title(body: &str) -> ParsedTitle {
    let body = body.replace("**", "").replace("__", "");
    let body = body.trim().trim_matches(['*', '_', '`']).trim();
    let (title, rest) = if body.starts_with(QUOTES) {
        let open_len = body.chars().next().map_or(0, char::len_utf8);
        let inner = &body[open_len..];
        match inner.rfind(QUOTES) {
            Some(close) => {
                let after = inner[close..].chars().next().map_or(0, char::len_utf8);
                (&inner[..close], &inner[close + after..])
            }
            None => (inner, ""),
        }
    } else {
        let cut = DESCRIPTION_SEPARATORS
            .iter()
            .filter_map(|sep| body.find(sep))
            .min()
            .unwrap_or(body.len());
        (&body[..cut], "")
    };
    let (title, mut year) = split_year(title.trim());
    if year.is_none() {
        // `"Title" (2010) - description`
        let rest = rest.trim_start();
        if rest.starts_with('(') {
            let end = rest.find(')').map_or(rest.len(), |i| i + 1);
            year = split_year(&rest[..end]).1;
        }
    }
    let title = title
        .trim()
        .trim_matches(QUOTES)
        .trim_end_matches([',', ';', ':'])
        .trim();
    ParsedTitle {
        title: title.to_string(),
        year,
    }
}

/// Case-folded, punctuation-free title without year, aka suffix or
/// leading/trailing article.
pub fn normalize_title(title: &str) -> String {
    let (t, _) = split_year(title);
    let mut t = t.trim();
    // `(a.k.a. ...)` or foreign-title suffix
    if t.ends_with(')') {
        if let Some(open) = t.rfind('(') {
            if open > 0 {
                t = t[..open].trim_end();
            }
        }
    }
    let lower = t.to_lowercase();
    let mut s = lower.as_str();
    for art in [", the", ", a", ", an"] {
        if let Some(stripped) = s.strip_suffix(art) {
            s = stripped;
            break;
        }
    }
    let mut cleaned = String::with_capacity(s.len());
    for c in s.chars() {
        if c == '\'' || c == '\u{2019}' {
            continue;
        }
        if c == '&' {
            cleaned.push_str(" and ");
        } else if c.is_alphanumeric() {
            cleaned.push(c);
        } else {
            cleaned.push(' ');
        }
    }
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    let start = match words.first() {
        Some(&("the" | "a" | "an")) if words.len() > 1 => 1,
        _ => 0,
    };
    words[start..].join(" ")
}

fn token_set(norm: &str) -> BTreeSet<String> {
    norm.split_whitespace().map(ToString::to_string).collect()
}

/// Token-set Jaccard similarity; 1 for two empty sets.
pub fn token_jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone)]
struct IndexedEntry {
    item_id: String,
    year: Option<u16>,
    tokens: BTreeSet<String>,
    genres: BTreeSet<String>,
}

/// Normalized-title index over a catalog.
#[derive(Debug, Clone)]
pub struct CatalogIndex {
    entries: Vec<IndexedEntry>,
    exact: BTreeMap<String, Vec<usize>>,
    fuzzy_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    Exact,
    Fuzzy,
}

impl CatalogIndex {
    pub fn new(catalog: &Catalog, fuzzy_threshold: f64) -> Self {
        let mut entries = Vec::with_capacity(catalog.len());
        let mut exact: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for e in catalog.entries() {
            let norm = normalize_title(&e.title);
            let (_, year) = split_year(&e.title);
            exact.entry(norm.clone()).or_default().push(entries.len());
            entries.push(IndexedEntry {
                item_id: e.item_id.clone(),
                year,
                tokens: token_set(&norm),
                genres: e.genres.clone(),
            });
        }
        CatalogIndex {
            entries,
            exact,
            fuzzy_threshold,
        }
    }

    fn year_ok(entry: &IndexedEntry, year: Option<u16>) -> bool {
        match (year, entry.year) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
    }

    /// Catalog id for a parsed title, with the stage that matched it.
    pub fn lookup(&self, parsed: &ParsedTitle) -> Option<(&str, MatchKind)> {
        let norm = normalize_title(&parsed.title);
        if let Some(cands) = self.exact.get(&norm) {
            let best = cands
                .iter()
                .map(|&i| &self.entries[i])
                .filter(|e| Self::year_ok(e, parsed.year))
                .min_by(|a, b| a.item_id.cmp(&b.item_id));
            if let Some(e) = best {
                return Some((&e.item_id, MatchKind::Exact));
            }
        }
        let tokens = token_set(&norm);
        if tokens.is_empty() {
            return None;
        }
        let mut best: Option<(f64, &IndexedEntry)> = None;
        for e in &self.entries {
            if !Self::year_ok(e, parsed.year) {
                continue;
            }
            let score = token_jaccard(&tokens, &e.tokens);
            if score < self.fuzzy_threshold {
                continue;
            }
            best = match best {
                Some((s, b)) if s > score || (s == score && b.item_id <= e.item_id) => Some((s, b)),
                _ => Some((score, e)),
            };
        }
        best.map(|(_, e)| (e.item_id.as_str(), MatchKind::Fuzzy))
    }

    fn genres_of(&self, id: &str) -> BTreeSet<String> {
        self.entries
            .iter()
            .find(|e| e.item_id == id)
            .map(|e| e.genres.clone())
            .unwrap_or_default()
    }
}

/// Resolves parsed titles into a ranked list. Later entries that resolve to
/// an already-listed item (or repeat an unmatched title) are dropped and
/// ranks are renumbered from 1.
pub fn match_titles_to_catalog(
    titles: &[ParsedTitle],
    index: &CatalogIndex,
    user_id: Option<&str>,
    kind: PromptKind,
    k: usize,
) -> RecommendationList {
    let mut seen: BTreeSet<ItemKey> = BTreeSet::new();
    let mut items = Vec::new();
    for t in titles.iter().take(k) {
        let item_id = index.lookup(t).map(|(id, _)| id.to_string());
        let genres = item_id.as_deref().map(|id| index.genres_of(id)).unwrap_or_default();
        let item = MatchedItem {
            raw_title: t.title.clone(),
            year: t.year,
            item_id,
            genres,
            rank: items.len() + 1,
        };
        if seen.insert(item.key()) {
            items.push(item);
        }
    }
    RecommendationList {
        user_id: user_id.map(ToString::to_string),
        kind,
        k,
        items,
    }
}
