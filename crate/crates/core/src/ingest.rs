//! Line-level parsers for the MovieLens (`::`-separated) and Last.fm
//! (tab-separated) layouts, plus the malformed-line bookkeeping shared by the
//! streaming readers in the std crate.
//!
//! Every parser takes a single line without its terminator. Blank lines are
//! skipped by the drivers and never counted.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{Demographics, Domain, Gender, InteractionRecord, ItemCatalogEntry, MAX_AGE};
use crate::error::IngestError;

/// Above this fraction of malformed lines a file is rejected outright.
pub const DEFAULT_MALFORMED_TOLERANCE: f64 = 0.01;

pub const NO_GENRES_LISTED: &str = "(no genres listed)";

/// ML-1M occupation codes.
pub const MOVIELENS_OCCUPATIONS: [&str; 21] = [
    "other",
    "academic/educator",
    "artist",
    "clerical/admin",
    "college/grad student",
    "customer service",
    "doctor/health care",
    "executive/managerial",
    "farmer",
    "homemaker",
    "K-12 student",
    "lawyer",
    "programmer",
    "retired",
    "sales/marketing",
    "scientist",
    "self-employed",
    "technician/engineer",
    "tradesman/craftsman",
    "unemployed",
    "writer",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

/// Per-file parse statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub source: String,
    /// Non-blank lines seen.
    pub lines: usize,
    pub malformed: Vec<MalformedLine>,
}

impl ParseReport {
    pub fn new(source: impl Into<String>) -> Self {
        ParseReport {
            source: source.into(),
            ..Default::default()
        }
    }

    /// Feeds one raw line through `parse`. Returns the parsed value, or
    /// `None` for blank or malformed lines (the latter is recorded).
    pub fn feed<T>(
        &mut self,
        line_no: usize,
        line: &str,
        parse: impl FnOnce(&str) -> Result<T, &'static str>,
    ) -> Option<T> {
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            return None;
        }
        self.lines += 1;
        match parse(line) {
            Ok(v) => Some(v),
            Err(reason) => {
                self.malformed.push(MalformedLine {
                    line: line_no,
                    reason: reason.to_string(),
                });
                None
            }
        }
    }

    pub fn malformed_fraction(&self) -> f64 {
        if self.lines == 0 {
            0.0
        } else {
            self.malformed.len() as f64 / self.lines as f64
        }
    }

    /// Fails when the malformed fraction exceeds `tolerance`.
    pub fn check(&self, tolerance: f64) -> Result<(), IngestError> {
        if self.malformed_fraction() > tolerance {
            return Err(IngestError::TooManyMalformed {
                file: self.source.clone(),
                malformed: self.malformed.len(),
                lines: self.lines,
            });
        }
        Ok(())
    }
}

/// Runs `parse` over every line of `text`, returning values and the report.
pub fn parse_lines<T>(
    source: &str,
    text: &str,
    mut parse: impl FnMut(&str) -> Result<T, &'static str>,
) -> (Vec<T>, ParseReport) {
    let mut report = ParseReport::new(source);
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(v) = report.feed(i + 1, line, &mut parse) {
            out.push(v);
        }
    }
    (out, report)
}

fn non_empty(s: &str, what: &'static str) -> Result<String, &'static str> {
    let s = s.trim();
    if s.is_empty() {
        Err(what)
    } else {
        Ok(s.to_string())
    }
}

/// `userId::movieId::rating::timestamp`
pub fn parse_rating_line(line: &str) -> Result<InteractionRecord, &'static str> {
    let mut parts = line.split("::");
    let (Some(u), Some(i), Some(r), Some(t), None) =
        (parts.next(), parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err("expected 4 '::'-separated fields");
    };
    let weight: f64 = r.trim().parse().map_err(|_| "rating is not a number")?;
    if !weight.is_finite() || weight < 0.0 {
        return Err("rating must be a non-negative number");
    }
    let timestamp: i64 = t.trim().parse().map_err(|_| "timestamp is not an integer")?;
    Ok(InteractionRecord {
        user_id: non_empty(u, "empty user id")?,
        item_id: non_empty(i, "empty item id")?,
        weight,
        timestamp: Some(timestamp),
    })
}

fn split_genres(field: &str) -> BTreeSet<String> {
    let field = field.trim();
    if field.is_empty() || field == NO_GENRES_LISTED {
        return BTreeSet::new();
    }
    field
        .split('|')
        .map(str::trim)
        .filter(|g| !g.is_empty() && *g != NO_GENRES_LISTED)
        .map(ToString::to_string)
        .collect()
}

/// `movieId::Title (Year)::Genre1|Genre2|...`
pub fn parse_movie_line(line: &str) -> Result<ItemCatalogEntry, &'static str> {
    let mut parts = line.split("::");
    let (Some(id), Some(title), Some(genres), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err("expected 3 '::'-separated fields");
    };
    Ok(ItemCatalogEntry {
        item_id: non_empty(id, "empty movie id")?,
        title: non_empty(title, "empty title")?,
        genres: split_genres(genres),
        domain: Domain::Movie,
    })
}

/// ML-1M `users.dat`: `UserID::Gender::Age::Occupation::Zip-code`.
/// Numeric occupation codes are mapped to their labels.
pub fn parse_movielens_user_line(line: &str) -> Result<(String, Demographics), &'static str> {
    let fields: Vec<&str> = line.split("::").collect();
    if fields.len() != 5 {
        return Err("expected 5 '::'-separated fields");
    }
    let user = non_empty(fields[0], "empty user id")?;
    let age = parse_age(fields[2])?;
    let occ = fields[3].trim();
    let occupation = if occ.is_empty() {
        None
    } else {
        match occ.parse::<usize>() {
            Ok(code) => Some(
                MOVIELENS_OCCUPATIONS
                    .get(code)
                    .ok_or("unknown occupation code")?
                    .to_string(),
            ),
            Err(_) => Some(occ.to_string()),
        }
    };
    Ok((
        user,
        Demographics {
            gender: Gender::parse(fields[1]),
            age,
            occupation,
            country: None,
        },
    ))
}

fn parse_age(s: &str) -> Result<Option<u32>, &'static str> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let age: u32 = s.parse().map_err(|_| "age is not a non-negative integer")?;
    if age > MAX_AGE {
        return Err("age out of range");
    }
    Ok(Some(age))
}

/// A parsed Last.fm plays line: the interaction plus the artist display name.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayLine {
    pub record: InteractionRecord,
    pub artist_name: String,
}

/// Artist id used when the dump carries no MusicBrainz id.
pub fn fallback_artist_id(name: &str) -> String {
    let mut s = String::from("name:");
    s.push_str(&name.trim().to_lowercase());
    s
}

/// `user-sha \t artist-mbid \t artist-name \t playcount`
pub fn parse_play_line(line: &str) -> Result<PlayLine, &'static str> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err("expected 4 tab-separated fields");
    }
    let user = non_empty(fields[0], "empty user id")?;
    let name = fields[2].trim();
    let mbid = fields[1].trim();
    let item_id = match (mbid.is_empty(), name.is_empty()) {
        (false, _) => mbid.to_string(),
        (true, false) => fallback_artist_id(name),
        (true, true) => return Err("artist has neither id nor name"),
    };
    let plays: f64 = fields[3].trim().parse().map_err(|_| "play count is not a number")?;
    if !plays.is_finite() || plays < 0.0 {
        return Err("play count must be non-negative");
    }
    Ok(PlayLine {
        record: InteractionRecord {
            user_id: user,
            item_id,
            weight: plays,
            timestamp: None,
        },
        artist_name: if name.is_empty() { mbid.to_string() } else { name.to_string() },
    })
}

/// `user-sha \t gender \t age \t country \t signup-date`
pub fn parse_profile_line(line: &str) -> Result<(String, Demographics), &'static str> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err("expected 5 tab-separated fields");
    }
    let user = non_empty(fields[0], "empty user id")?;
    let country = fields[3].trim();
    Ok((
        user,
        Demographics {
            gender: Gender::parse(fields[1]),
            age: parse_age(fields[2])?,
            occupation: None,
            country: (!country.is_empty()).then(|| country.to_string()),
        },
    ))
}

/// Artist-genre sidecar: `artist-id \t genre1|genre2|...`
pub fn parse_sidecar_line(line: &str) -> Result<(String, BTreeSet<String>), &'static str> {
    let (id, genres) = line.split_once('\t').ok_or("expected 2 tab-separated fields")?;
    if genres.contains('\t') {
        return Err("expected 2 tab-separated fields");
    }
    Ok((non_empty(id, "empty artist id")?, split_genres(genres)))
}

/// Fraction of artists that received genres from the sidecar.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenreCoverage {
    pub artists: usize,
    pub with_genres: usize,
}

/// Accumulates distinct artists from plays lines and turns them into
/// catalog entries once the sidecar is known.
#[derive(Debug, Default)]
pub struct ArtistCatalogBuilder {
    names: BTreeMap<String, String>,
    order: Vec<String>,
}

impl ArtistCatalogBuilder {
    pub fn add(&mut self, line: &PlayLine) {
        if !self.names.contains_key(&line.record.item_id) {
            self.order.push(line.record.item_id.clone());
            self.names
                .insert(line.record.item_id.clone(), line.artist_name.clone());
        }
    }

    /// Sidecar lookups try the artist id first, then the fallback name id.
    pub fn finish(
        self,
        sidecar: &BTreeMap<String, BTreeSet<String>>,
    ) -> (Vec<ItemCatalogEntry>, GenreCoverage) {
        let mut coverage = GenreCoverage::default();
        let mut out = Vec::with_capacity(self.order.len());
        for id in self.order {
            let name = self.names[&id].clone();
            let genres = sidecar
                .get(&id)
                .or_else(|| sidecar.get(&fallback_artist_id(&name)))
                .cloned()
                .unwrap_or_default();
            coverage.artists += 1;
            if !genres.is_empty() {
                coverage.with_genres += 1;
            }
            out.push(ItemCatalogEntry {
                item_id: id,
                title: name,
                genres,
                domain: Domain::Music,
            });
        }
        (out, coverage)
    }
}
