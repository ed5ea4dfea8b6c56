//! Checks shared by the integration tests and the acceptance runner. Each
//! returns `Err` with a readable reason instead of panicking.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use fairalign::config::RunConfig;
use fairalign::datasets::{load_lastfm, load_movielens, Dataset};
use fairalign::harness::{build_population, load_phrases, run_evaluation, RunReport};
use fairalign::report::{emit_report, REPORT_FILES};
use fairalign_core::domain::{Domain, Gender, RelevanceRule};
use fairalign_core::aggregate::MetricId;
use fairalign_core::prompt::{
    build_neutral_prompt, build_sensitive_prompt, demographic_vocabulary, find_demographic_token, PromptKind,
};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(rel: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(rel)
}

pub fn synthetic_config_path() -> PathBuf {
    manifest_dir().join("data/synthetic/config.toml")
}

pub fn golden_dir() -> PathBuf {
    manifest_dir().join("tests/golden/synthetic")
}

pub fn synthetic_config() -> RunConfig {
    RunConfig::load(&synthetic_config_path()).expect("bundled config loads")
}

fn lerr(e: anyhow::Error) -> String {
    format!("{e:#}")
}

pub fn movielens_fixture() -> Result<Dataset, String> {
    load_movielens(
        &fixture("movielens/ratings.dat"),
        &fixture("movielens/movies.dat"),
        Some(&fixture("movielens/users.dat")),
        0.01,
    )
    .map_err(lerr)
}

pub fn lastfm_fixture() -> Result<Dataset, String> {
    load_lastfm(
        &fixture("lastfm/plays.tsv"),
        &fixture("lastfm/profiles.tsv"),
        Some(&fixture("lastfm/sidecar.tsv")),
        0.01,
    )
    .map_err(lerr)
}

pub const LASTFM_A: &str = "00000c289a1829a808ac09c00daf10bc3c4e223b";
pub const LASTFM_B: &str = "00001411dc427966b17297bf4d69e7e193135d89";
pub const BETTY: &str = "3bd73256-3905-4f3a-97e2-8b341527f805";

pub fn check_movielens_fixture() -> Check {
    let d = movielens_fixture()?;
    ensure!(d.domain == Domain::Movie, "domain {:?}", d.domain);
    ensure!(d.interactions.len() == 8, "{} ratings, expected 8", d.interactions.len());
    ensure!(d.catalog.entries().len() == 6, "{} movies, expected 6", d.catalog.entries().len());
    ensure!(d.demographics.len() == 3, "{} users, expected 3", d.demographics.len());
    let r = &d.interactions[0];
    ensure!(
        r.user_id == "1" && r.item_id == "122" && r.weight == 5.0 && r.timestamp == Some(838985046),
        "first rating parsed as {r:?}"
    );
    let jumanji = d.catalog.get("2").ok_or("movie 2 missing")?;
    let genres: Vec<&str> = jumanji.genres.iter().map(String::as_str).collect();
    ensure!(jumanji.title == "Jumanji (1995)", "title {:?}", jumanji.title);
    ensure!(genres == ["Adventure", "Children", "Fantasy"], "genres {genres:?}");
    ensure!(
        d.catalog.get("185").map(|e| e.title.as_str()) == Some("Net, The (1995)"),
        "article-suffixed title not kept verbatim"
    );
    let u1 = &d.demographics["1"];
    ensure!(u1.gender == Some(Gender::Female) && u1.age == Some(1), "user 1 demographics {u1:?}");
    ensure!(u1.occupation.is_some(), "user 1 occupation code not mapped");
    let profiles = d.active_profiles(1, &RelevanceRule::default());
    ensure!(profiles.len() == 3, "{} profiles", profiles.len());
    let u2 = &profiles[1];
    ensure!(u2.interactions.len() == 3, "user 2 re-rating not collapsed: {:?}", u2.interactions);
    let rel: Vec<&str> = u2.relevance_set.iter().map(String::as_str).collect();
    ensure!(rel == ["292", "316"], "user 2 relevance {rel:?}");
    let two_plus = d.active_profiles(3, &RelevanceRule::default());
    let ids: Vec<&str> = two_plus.iter().map(|p| p.user_id.as_str()).collect();
    ensure!(ids == ["1", "2"], "threshold 3 kept {ids:?}");
    Ok(())
}

pub fn check_lastfm_fixture() -> Check {
    let d = lastfm_fixture()?;
    ensure!(d.domain == Domain::Music, "domain {:?}", d.domain);
    ensure!(d.interactions.len() == 5, "{} plays, expected 5", d.interactions.len());
    ensure!(d.catalog.entries().len() == 3, "{} artists, expected 3", d.catalog.entries().len());
    let cov = d.genre_coverage.ok_or("no coverage")?;
    ensure!(cov.artists == 3 && cov.with_genres == 2, "coverage {cov:?}");
    let nightwish = d.catalog.get("name:nightwish").ok_or("artist without id not keyed by name")?;
    ensure!(nightwish.genres.contains("Metal"), "sidecar genres {:?}", nightwish.genres);
    let plays = d
        .interactions
        .iter()
        .find(|r| r.item_id == "name:nightwish")
        .ok_or("nightwish play missing")?;
    ensure!(plays.weight == 137.0 && plays.timestamp.is_none(), "nightwish play {plays:?}");
    let b = &d.demographics[LASTFM_B];
    ensure!(
        b.age.is_none() && b.gender == Some(Gender::Male) && b.country.as_deref() == Some("United States"),
        "user B demographics {b:?}"
    );
    let profiles = d.active_profiles(1, &RelevanceRule::default());
    let pb = profiles.iter().find(|p| p.user_id == LASTFM_B).ok_or("user B inactive")?;
    ensure!(
        pb.interactions.len() == 1 && pb.interactions[0].weight == 80.0 && pb.interactions[0].item_id == BETTY,
        "duplicate plays not collapsed to the larger count: {:?}",
        pb.interactions
    );
    Ok(())
}

pub const PLANTED_ACTIVE: std::ops::RangeInclusive<u32> = 1..=16;

pub fn check_planted_filter() -> Check {
    let config = synthetic_config();
    let pop = build_population(&config).map_err(lerr)?;
    let got: BTreeSet<u32> = pop.profiles.iter().map(|p| p.user_id.parse().unwrap()).collect();
    let want: BTreeSet<u32> = PLANTED_ACTIVE.collect();
    ensure!(got == want, "active users {got:?}, planted {want:?}");
    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for r in &pop.dataset.interactions {
        *counts.entry(r.user_id.as_str()).or_default() += 1;
    }
    ensure!(counts["16"] == 200 && counts["17"] == 199, "boundary users have {counts:?}");
    Ok(())
}

pub const NEUTRAL_K15: &str = "Please recommend 15 popular movies suitable for a general audience.";

pub fn check_prompt_contract() -> Check {
    let config = synthetic_config();
    let pop = build_population(&config).map_err(lerr)?;
    let phrases = load_phrases(&config).map_err(lerr)?;
    let neutral = build_neutral_prompt(Domain::Movie, 15);
    ensure!(neutral.text == NEUTRAL_K15, "neutral prompt {:?}", neutral.text);
    ensure!(
        build_neutral_prompt(Domain::Movie, config.k).text == NEUTRAL_K15,
        "configured k gives a different neutral prompt"
    );
    let mut checked = 0;
    for p in &pop.profiles {
        let v = pop
            .personalities
            .vectors
            .get(&p.user_id)
            .ok_or_else(|| format!("user {} has no personality", p.user_id))?;
        let spec = build_sensitive_prompt(
            &p.user_id,
            v,
            Domain::Movie,
            config.k,
            &phrases,
            config.personality.dominance_threshold,
        );
        let vocab = demographic_vocabulary(&p.demographics);
        if let Some(tok) = find_demographic_token(&spec.text, &vocab) {
            return Err(format!("user {} prompt contains {tok:?}: {}", p.user_id, spec.text));
        }
        checked += 1;
    }
    ensure!(checked == 16, "checked {checked} users");
    Ok(())
}

pub fn run_synthetic(seed: u64) -> Result<RunReport, String> {
    let mut config = synthetic_config();
    config.seed = seed;
    run_evaluation(&config).map_err(lerr)
}

pub fn emit(report: &RunReport, dir: &Path) -> Check {
    emit_report(report, dir).map(|_| ()).map_err(lerr)
}

pub fn compare_dirs(a: &Path, b: &Path) -> Check {
    for name in REPORT_FILES {
        let x = fs::read(a.join(name)).map_err(|e| format!("{}: {e}", a.join(name).display()))?;
        let y = fs::read(b.join(name)).map_err(|e| format!("{}: {e}", b.join(name).display()))?;
        if x != y {
            let line = x
                .split(|c| *c == b'\n')
                .zip(y.split(|c| *c == b'\n'))
                .position(|(l, r)| l != r)
                .map_or(0, |i| i + 1);
            return Err(format!("{name} differs (first at line {line})"));
        }
    }
    Ok(())
}

/// Two seeded runs are byte-identical and match the frozen golden report.
/// With `UPDATE_GOLDEN=1` the golden directory is rewritten instead.
pub fn check_determinism_and_golden() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let first = run_synthetic(7)?;
    ensure!(!first.is_partial(), "run is partial: {:?}", first.missing);
    emit(&first, &a)?;
    emit(&run_synthetic(7)?, &b)?;
    compare_dirs(&a, &b)?;
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        emit(&first, &golden_dir())?;
    }
    compare_dirs(&a, &golden_dir()).map_err(|e| format!("golden mismatch: {e}"))
}

/// Sensitive lists align better with personalities and differ from neutral.
pub fn check_direction() -> Check {
    let r = run_synthetic(7)?;
    let n = r.cell("oracle", PromptKind::Neutral).ok_or("no neutral cell")?;
    let s = r.cell("oracle", PromptKind::Sensitive).ok_or("no sensitive cell")?;
    let (pn, ps) = (
        n.metrics.get(MetricId::Pas).ok_or("neutral PAS undefined")?,
        s.metrics.get(MetricId::Pas).ok_or("sensitive PAS undefined")?,
    );
    let j = s.metrics.get(MetricId::JaccardK).ok_or("Jaccard undefined")?;
    ensure!(ps.partial_cmp(&pn) == Some(std::cmp::Ordering::Greater), "sensitive PAS {ps} is not above neutral {pn}");
    ensure!(j.partial_cmp(&1.0) == Some(std::cmp::Ordering::Less), "Jaccard {j} is not below 1");
    Ok(())
}
