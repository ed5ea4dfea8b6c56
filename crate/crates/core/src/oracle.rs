//! Deterministic offline stand-in for a chat-completion backend.
//!
//! Neutral prompts get the globally most-interacted items. Sensitive prompts
//! get the items whose genre trait projection best aligns with the user's
//! trait vector. The reply is rendered as a numbered list so it travels
//! through the same parsing and matching path as a live reply.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::domain::{Catalog, ItemCatalogEntry, UserProfile};
use crate::ocean::OceanVector;
use crate::personality::{project_genres_to_traits, GenreTraitMap};
use crate::prompt::{PromptKind, PromptSpec};
use crate::titles::{split_year, ParsedTitle};

/// Everything the oracle needs besides the prompt and catalog.
#[derive(Debug, Clone)]
pub struct OracleContext {
    pub popularity: BTreeMap<String, usize>,
    pub personalities: BTreeMap<String, OceanVector>,
    pub trait_map: GenreTraitMap,
    pub seed: u64,
}

impl OracleContext {
    /// Popularity is the number of profile interactions per item.
    pub fn new<'a>(
        profiles: impl IntoIterator<Item = &'a UserProfile>,
        personalities: BTreeMap<String, OceanVector>,
        trait_map: GenreTraitMap,
        seed: u64,
    ) -> Self {
        let mut popularity = BTreeMap::new();
        for p in profiles {
            for r in &p.interactions {
                *popularity.entry(r.item_id.clone()).or_insert(0usize) += 1;
            }
        }
        OracleContext {
            popularity,
            personalities,
            trait_map,
            seed,
        }
    }

    fn popularity_of(&self, id: &str) -> usize {
        self.popularity.get(id).copied().unwrap_or(0)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Top-`prompt.k` catalog entries the oracle would return for `prompt`.
pub fn oracle_ranking<'c>(
    prompt: &PromptSpec,
    catalog: &'c Catalog,
    ctx: &OracleContext,
) -> Vec<&'c ItemCatalogEntry> {
    let persona = match (prompt.kind, &prompt.user_id) {
        (PromptKind::Sensitive, Some(u)) => ctx.personalities.get(u),
        _ => None,
    };
    let mut scored: Vec<(f64, usize, u64, &ItemCatalogEntry)> = catalog
        .entries()
        .iter()
        .map(|e| {
            let align = persona.map_or(0.0, |p| {
                project_genres_to_traits(e.genres.iter().map(String::as_str), &ctx.trait_map).dot(p)
            });
            let tie = splitmix64(ctx.seed ^ fnv1a(&e.item_id));
            (align, ctx.popularity_of(&e.item_id), tie, e)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
            .then_with(|| a.3.item_id.cmp(&b.3.item_id))
    });
    scored.into_iter().take(prompt.k).map(|s| s.3).collect()
}

/// One list line for a catalog title. Titles that the reply parser would
/// split or unquote are wrapped in double quotes with the year outside.
pub fn render_title(title: &str) -> String {
    let needs_quotes = title.starts_with(['"', '\'', '\u{201c}', '\u{2018}'])
        || [" - ", " \u{2013} ", " \u{2014} "].iter().any(|s| title.contains(s));
    if !needs_quotes {
        return title.into();
    }
    match split_year(title) {
        (t, Some(y)) => format!("\"{t}\" ({y})"),
        (t, None) => format!("\"{t}\""),
    }
}

/// Numbered list, one `{rank}. {title}` line per entry, no trailing newline.
pub fn render_numbered_list<'a>(titles: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for (i, t) in titles.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{}. {}", i + 1, render_title(t)));
    }
    out
}

/// Renders parsed titles back to list text (years in parentheses).
pub fn render_parsed(titles: &[ParsedTitle]) -> String {
    let mut out = String::new();
    for (i, t) in titles.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let line = match t.year {
            Some(y) => format!("{} ({y})", t.title),
            None => t.title.clone(),
        };
        out.push_str(&format!("{}. {}", i + 1, render_title(&line)));
    }
    out
}

/// The oracle's reply text for `prompt`.
pub fn popularity_oracle(prompt: &PromptSpec, catalog: &Catalog, ctx: &OracleContext) -> String {
    render_numbered_list(
        oracle_ranking(prompt, catalog, ctx)
            .into_iter()
            .map(|e| e.title.as_str()),
    )
}
