//! Streaming readers for the MovieLens and Last.fm dump layouts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{Context, Result};
use fairalign_core::domain::{
    build_profile, filter_active_users, Catalog, Demographics, Domain, InteractionRecord,
    ItemCatalogEntry, RelevanceRule, UserProfile,
};
use fairalign_core::ingest::{
    parse_movie_line, parse_movielens_user_line, parse_play_line, parse_profile_line,
    parse_rating_line, parse_sidecar_line, ArtistCatalogBuilder, GenreCoverage, ParseReport,
};
use log::{info, warn};

/// Everything ingestion produces for one dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub domain: Domain,
    pub interactions: Vec<InteractionRecord>,
    pub catalog: Catalog,
    pub demographics: BTreeMap<String, Demographics>,
    pub reports: Vec<ParseReport>,
    pub genre_coverage: Option<GenreCoverage>,
}

/// Parses every line of `reader` with `parse`, one line in memory at a time.
/// Fails once reading finishes if more than `tolerance` of lines are malformed.
pub fn read_records<R: BufRead, T>(
    source: &str,
    mut reader: R,
    tolerance: f64,
    mut parse: impl FnMut(&str) -> Result<T, &'static str>,
) -> Result<(Vec<T>, ParseReport)> {
    let mut report = ParseReport::new(source);
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader
            .read_line(&mut buf)
            .with_context(|| format!("reading {source}"))?
            == 0
        {
            break;
        }
        line_no += 1;
        if let Some(v) = report.feed(line_no, &buf, &mut parse) {
            out.push(v);
        }
    }
    for m in report.malformed.iter().take(5) {
        warn!("{source}:{}: {}", m.line, m.reason);
    }
    report.check(tolerance)?;
    Ok((out, report))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn read_file<T>(
    path: &Path,
    tolerance: f64,
    parse: impl FnMut(&str) -> Result<T, &'static str>,
) -> Result<(Vec<T>, ParseReport)> {
    read_records(&path.display().to_string(), open(path)?, tolerance, parse)
}

/// `ratings.dat` + `movies.dat`, with optional `users.dat` demographics.
pub fn load_movielens(
    ratings: &Path,
    movies: &Path,
    users: Option<&Path>,
    tolerance: f64,
) -> Result<Dataset> {
    let (interactions, r1) = read_file(ratings, tolerance, parse_rating_line)?;
    let (items, r2) = read_file(movies, tolerance, parse_movie_line)?;
    let mut reports = vec![r1, r2];
    let mut demographics = BTreeMap::new();
    if let Some(u) = users {
        let (rows, r3) = read_file(u, tolerance, parse_movielens_user_line)?;
        demographics.extend(rows);
        reports.push(r3);
    }
    info!(
        "movielens: {} ratings, {} movies, {} user profiles",
        interactions.len(),
        items.len(),
        demographics.len()
    );
    Ok(Dataset {
        domain: Domain::Movie,
        interactions,
        catalog: Catalog::new(items),
        demographics,
        reports,
        genre_coverage: None,
    })
}

/// Plays + profiles TSVs, with artist genres from a sidecar file.
pub fn load_lastfm(
    plays: &Path,
    profiles: &Path,
    sidecar: Option<&Path>,
    tolerance: f64,
) -> Result<Dataset> {
    let mut builder = ArtistCatalogBuilder::default();
    let (interactions, r1) = read_file(plays, tolerance, |l| {
        let line = parse_play_line(l)?;
        builder.add(&line);
        Ok(line.record)
    })?;
    let (profiles, r2) = read_file(profiles, tolerance, parse_profile_line)?;
    let mut reports = vec![r1, r2];
    let mut genres: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    if let Some(s) = sidecar {
        let (rows, r3) = read_file(s, tolerance, parse_sidecar_line)?;
        genres.extend(rows);
        reports.push(r3);
    }
    let (items, coverage) = builder.finish(&genres);
    info!(
        "lastfm: {} plays, {} artists ({} with genres), {} profiles",
        interactions.len(),
        coverage.artists,
        coverage.with_genres,
        profiles.len()
    );
    Ok(Dataset {
        domain: Domain::Music,
        interactions,
        catalog: Catalog::new(items),
        demographics: profiles.into_iter().collect(),
        reports,
        genre_coverage: Some(coverage),
    })
}

impl Dataset {
    /// Profiles of users with at least `min_interactions` records, in user
    /// id order. Users without a demographics row get empty demographics.
    pub fn active_profiles(&self, min_interactions: usize, rule: &RelevanceRule) -> Vec<UserProfile> {
        filter_active_users(&self.interactions, min_interactions)
            .into_iter()
            .map(|(user, records)| {
                let d = self.demographics.get(&user).cloned().unwrap_or_default();
                build_profile(&user, &records, d, self.domain, rule)
            })
            .collect()
    }

    pub fn items(&self) -> &[ItemCatalogEntry] {
        self.catalog.entries()
    }
}
