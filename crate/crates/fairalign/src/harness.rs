//! The evaluation pipeline: ingest, personality, prompts, backends, metrics.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::{anyhow, bail, Context, Result};
use fairalign_core::aggregate::{
    aggregate_over_users, fpx, CohortMetrics, MetricId, MetricVector, UserMetrics,
};
use fairalign_core::domain::{Domain, RelevanceRule, UserProfile};
use fairalign_core::metrics::{
    demographic_parity, equal_opportunity, gpa, group_overlaps, ilf, jaccard_k, pas,
    precision_at_k, recall_at_k, snsr, snsv, Attribute, GroupAssignment,
};
use fairalign_core::ocean::OceanVector;
use fairalign_core::oracle::{popularity_oracle, OracleContext};
use fairalign_core::personality::{infer_population, GenreTraitMap, InferredPersonalities};
use fairalign_core::prompt::{
    build_neutral_prompt, build_sensitive_prompt, demographic_vocabulary, find_demographic_token,
    PhraseTable, PromptKind, PromptSpec,
};
use fairalign_core::recommend::{ItemKey, RecommendationList};
use fairalign_core::titles::{match_titles_to_catalog, parse_recommendation_text, CatalogIndex};
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{BackendConfig, BackendKind, LiveBackend, ResponseCache};
use crate::config::{DatasetFormat, RunConfig};
use crate::datasets::{load_lastfm, load_movielens, Dataset};
use crate::interchange::{dataset_from_records, read_ndjson};

/// Headline fairness values for one grouping of users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFairness {
    pub attribute: Attribute,
    pub groups: usize,
    pub dp: Option<f64>,
    pub eo: Option<f64>,
    pub snsr_k: Option<f64>,
    pub snsv_k: Option<f64>,
    /// Mean neutral/sensitive overlap per group (sensitive cells only).
    pub overlaps: BTreeMap<String, f64>,
}

/// Aggregated metrics for one (backend, condition) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub backend: String,
    pub model: String,
    pub condition: PromptKind,
    pub metrics: MetricVector,
    pub users: usize,
    /// Users contributing to each per-user mean.
    pub defined: BTreeMap<MetricId, usize>,
    pub fairness: Vec<GroupFairness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpxRow {
    pub backend: String,
    pub fpx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRow {
    pub backend: String,
    pub condition: PromptKind,
    #[serde(flatten)]
    pub metrics: UserMetrics,
    pub match_rate: f64,
    /// Catalog ids, or `?title` for unmatched entries, in rank order.
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MissingCell {
    pub backend: String,
    pub condition: PromptKind,
    pub user_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub domain: Domain,
    pub k: usize,
    pub seed: u64,
    pub primary_attribute: Attribute,
    pub users: Vec<String>,
    pub cells: Vec<CellReport>,
    pub fpx: Vec<FpxRow>,
    pub user_rows: Vec<UserRow>,
    pub missing: Vec<MissingCell>,
    pub config: serde_json::Value,
    /// sha256 over every reply used, in cell order.
    pub response_digest: String,
}

impl RunReport {
    pub fn is_partial(&self) -> bool {
        !self.missing.is_empty()
    }

    pub fn cell(&self, backend: &str, condition: PromptKind) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.backend == backend && c.condition == condition)
    }
}

/// Loads the configured dataset files.
pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let d = &config.dataset;
    let need = |p: &Option<std::path::PathBuf>, what: &str| {
        p.as_deref()
            .map(|p| config.resolve(p))
            .ok_or_else(|| anyhow!("dataset.{what} is required for format {:?}", d.format))
    };
    let opt = |p: &Option<std::path::PathBuf>| p.as_deref().map(|p| config.resolve(p));
    match d.format {
        DatasetFormat::Movielens => load_movielens(
            &need(&d.ratings, "ratings")?,
            &need(&d.movies, "movies")?,
            opt(&d.users).as_deref(),
            d.malformed_tolerance,
        ),
        DatasetFormat::Lastfm => load_lastfm(
            &need(&d.plays, "plays")?,
            &need(&d.profiles, "profiles")?,
            opt(&d.sidecar).as_deref(),
            d.malformed_tolerance,
        ),
        DatasetFormat::Interchange => {
            let path = need(&d.interchange, "interchange")?;
            let f = std::fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            dataset_from_records(read_ndjson(std::io::BufReader::new(f))?)
        }
    }
}

pub fn load_trait_map(config: &RunConfig) -> Result<GenreTraitMap> {
    match &config.personality.trait_map {
        None => Ok(GenreTraitMap::bundled()),
        Some(p) => {
            let p = config.resolve(p);
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            GenreTraitMap::parse(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

pub fn load_phrases(config: &RunConfig) -> Result<PhraseTable> {
    match &config.personality.phrases {
        None => Ok(PhraseTable::bundled()),
        Some(p) => {
            let p = config.resolve(p);
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            PhraseTable::parse(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

/// Active users and their inferred personalities, before selection.
pub struct Population {
    pub dataset: Dataset,
    pub profiles: Vec<UserProfile>,
    pub personalities: InferredPersonalities,
    pub trait_map: GenreTraitMap,
}

pub fn build_population(config: &RunConfig) -> Result<Population> {
    let dataset = load_dataset(config).context("stage ingest")?;
    let rule = RelevanceRule {
        rating_threshold: config.dataset.rating_threshold,
    };
    let profiles = dataset.active_profiles(config.dataset.min_interactions, &rule);
    info!("{} users with >= {} interactions", profiles.len(), config.dataset.min_interactions);
    let trait_map = load_trait_map(config).context("stage personality")?;
    let personalities = infer_population(
        &profiles,
        &dataset.catalog,
        dataset.domain,
        &trait_map,
        &config.personality.weights,
    );
    Ok(Population {
        dataset,
        profiles,
        personalities,
        trait_map,
    })
}

/// Explicit ids, a seeded sample stratified by the primary attribute, or
/// every active user. Returned ids are sorted.
pub fn select_users(config: &RunConfig, pop: &Population) -> Result<Vec<String>> {
    let active: BTreeSet<&str> = pop.profiles.iter().map(|p| p.user_id.as_str()).collect();
    let sel = &config.selection;
    if !sel.users.is_empty() {
        for u in &sel.users {
            if !active.contains(u.as_str()) {
                bail!("selected user {u} is unknown or below the interaction threshold");
            }
        }
        let mut out = sel.users.clone();
        out.sort();
        out.dedup();
        return Ok(out);
    }
    let Some(n) = sel.sample else {
        return Ok(active.iter().map(|s| s.to_string()).collect());
    };
    let groups = assignment(config.attributes[0], config, pop, pop.profiles.iter());
    let mut strata: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for p in &pop.profiles {
        let label = groups.label(&p.user_id).unwrap_or("").to_string();
        strata.entry(label).or_default().push(p.user_id.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for users in strata.values_mut() {
        users.shuffle(&mut rng);
    }
    let mut out = Vec::new();
    let mut round = 0;
    while out.len() < n.min(active.len()) {
        for users in strata.values() {
            if let Some(u) = users.get(round) {
                if out.len() < n {
                    out.push(u.clone());
                }
            }
        }
        round += 1;
    }
    out.sort();
    Ok(out)
}

fn assignment<'a>(
    attribute: Attribute,
    config: &RunConfig,
    pop: &Population,
    profiles: impl IntoIterator<Item = &'a UserProfile>,
) -> GroupAssignment {
    let profiles: Vec<&UserProfile> = profiles.into_iter().collect();
    match attribute {
        Attribute::DominantTrait => {
            let ids: BTreeSet<&str> = profiles.iter().map(|p| p.user_id.as_str()).collect();
            GroupAssignment::from_traits(
                pop.personalities
                    .vectors
                    .iter()
                    .filter(|(u, _)| ids.contains(u.as_str())),
                config.personality.dominance_threshold,
            )
        }
        a => GroupAssignment::from_demographics(a, profiles, &config.age_groups),
    }
}

/// One prompt cell awaiting a reply.
struct Cell<'a> {
    condition: PromptKind,
    user: &'a str,
    prompt: PromptSpec,
}

fn build_cells<'a>(
    config: &RunConfig,
    pop: &'a Population,
    users: &'a [String],
    phrases: &PhraseTable,
) -> Result<(Vec<Cell<'a>>, Vec<MissingCell>)> {
    let domain = pop.dataset.domain;
    let neutral = build_neutral_prompt(domain, config.k);
    let by_id: BTreeMap<&str, &UserProfile> = pop.profiles.iter().map(|p| (p.user_id.as_str(), p)).collect();
    let mut cells = Vec::new();
    let mut missing = Vec::new();
    for u in users {
        cells.push(Cell {
            condition: PromptKind::Neutral,
            user: u,
            prompt: neutral.clone(),
        });
        let Some(p) = pop.personalities.vectors.get(u) else {
            let why = pop
                .personalities
                .excluded
                .get(u)
                .map(|e| e.to_string())
                .unwrap_or_else(|| "no personality vector".into());
            missing.push(MissingCell {
                backend: "*".into(),
                condition: PromptKind::Sensitive,
                user_id: u.clone(),
                reason: why,
            });
            continue;
        };
        let spec = build_sensitive_prompt(u, p, domain, config.k, phrases, config.personality.dominance_threshold);
        let vocab = demographic_vocabulary(&by_id[u.as_str()].demographics);
        if let Some(tok) = find_demographic_token(&spec.text, &vocab) {
            bail!("stage prompt: sensitive prompt for user {u} contains demographic token {tok:?}");
        }
        cells.push(Cell {
            condition: PromptKind::Sensitive,
            user: u,
            prompt: spec,
        });
    }
    Ok((cells, missing))
}

/// Reply texts per cell (index into `cells`), one per repeat.
type Replies = BTreeMap<usize, Vec<String>>;

fn resolve_oracle(cells: &[Cell], pop: &Population, seed: u64) -> Replies {
    let ctx = OracleContext::new(
        &pop.profiles,
        pop.personalities.vectors.clone(),
        pop.trait_map.clone(),
        seed,
    );
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| (i, vec![popularity_oracle(&c.prompt, &pop.dataset.catalog, &ctx)]))
        .collect()
}

fn resolve_live(
    backend: &BackendConfig,
    cells: &[Cell],
    cache: &ResponseCache,
    n_repeat: usize,
    missing: &mut Vec<MissingCell>,
) -> Result<Replies> {
    let live = LiveBackend::new(backend.clone(), cache).map_err(|e| anyhow!(e))?;
    let jobs: Vec<(&str, usize)> = cells
        .iter()
        .flat_map(|c| (0..n_repeat).map(move |r| (c.prompt.text.as_str(), r)))
        .collect();
    let results = live.query_all(&jobs).map_err(|e| anyhow!(e)).context("stage backend")?;
    info!(
        "{}: {} network calls, {} cache hits, {} retries",
        backend.name,
        live.counters.network_calls.load(std::sync::atomic::Ordering::SeqCst),
        live.counters.cache_hits.load(std::sync::atomic::Ordering::SeqCst),
        live.counters.retries.load(std::sync::atomic::Ordering::SeqCst),
    );
    let mut out = Replies::new();
    for (i, c) in cells.iter().enumerate() {
        let mut texts = Vec::new();
        for r in 0..n_repeat {
            match &results[&(c.prompt.text.as_str(), r)] {
                Ok(resp) => texts.push(resp.text.clone()),
                Err(e) => {
                    missing.push(MissingCell {
                        backend: backend.name.clone(),
                        condition: c.condition,
                        user_id: c.user.to_string(),
                        reason: e.to_string(),
                    });
                    texts.clear();
                    break;
                }
            }
        }
        if !texts.is_empty() {
            out.insert(i, texts);
        }
    }
    Ok(out)
}

/// Items present in more than half of `lists`, ordered by mean rank.
fn majority_list(lists: Vec<RecommendationList>) -> RecommendationList {
    if lists.len() == 1 {
        return lists.into_iter().next().unwrap();
    }
    let n = lists.len();
    let mut seen: BTreeMap<ItemKey, (usize, usize, fairalign_core::recommend::MatchedItem)> = BTreeMap::new();
    for l in &lists {
        for m in &l.items {
            let e = seen.entry(m.key()).or_insert((0, 0, m.clone()));
            e.0 += 1;
            e.1 += m.rank;
        }
    }
    let mut kept: Vec<(usize, usize, ItemKey, fairalign_core::recommend::MatchedItem)> = seen
        .into_iter()
        .filter(|(_, (count, _, _))| 2 * count > n)
        .map(|(k, (count, ranks, m))| (count, ranks, k, m))
        .collect();
    // mean rank = ranks / count; compare ranks_a * count_b against ranks_b * count_a
    kept.sort_by(|a, b| (a.1 * b.0).cmp(&(b.1 * a.0)).then_with(|| a.2.cmp(&b.2)));
    let first = &lists[0];
    let k = first.k;
    let items = kept
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (_, _, _, mut m))| {
            m.rank = i + 1;
            m
        })
        .collect();
    RecommendationList {
        user_id: first.user_id.clone(),
        kind: first.kind,
        k,
        items,
    }
}

fn list_items(l: &RecommendationList) -> Vec<String> {
    l.items
        .iter()
        .map(|m| match &m.item_id {
            Some(id) => id.clone(),
            None => format!("?{}", m.raw_title),
        })
        .collect()
}

struct MetricInputs<'a> {
    vectors: &'a BTreeMap<String, OceanVector>,
    relevance: BTreeMap<String, BTreeSet<String>>,
    universe: BTreeSet<String>,
    vocab: usize,
    map: &'a GenreTraitMap,
    groupings: Vec<GroupAssignment>,
    k: usize,
}

fn group_fairness(
    g: &GroupAssignment,
    lists: &BTreeMap<String, RecommendationList>,
    neutral: Option<&BTreeMap<String, RecommendationList>>,
    inputs: &MetricInputs,
) -> GroupFairness {
    let overlaps = neutral
        .map(|n| group_overlaps(n, lists, g, inputs.k))
        .unwrap_or_default();
    let values: Vec<f64> = overlaps.values().copied().collect();
    let paired = neutral.is_some();
    GroupFairness {
        attribute: g.attribute,
        groups: g.members(|u| lists.contains_key(u)).len(),
        dp: demographic_parity(lists, g),
        eo: equal_opportunity(lists, &inputs.relevance, g, &inputs.universe),
        snsr_k: snsr(&values).filter(|_| paired),
        snsv_k: snsv(&values).filter(|_| paired),
        overlaps,
    }
}

fn evaluate_cell(
    backend: &BackendConfig,
    condition: PromptKind,
    lists: &BTreeMap<String, RecommendationList>,
    neutral: Option<&BTreeMap<String, RecommendationList>>,
    inputs: &MetricInputs,
) -> (CellReport, Vec<UserRow>) {
    let mut rows = Vec::new();
    for (u, l) in lists {
        let p = inputs.vectors.get(u);
        let rel = inputs.relevance.get(u);
        let m = UserMetrics {
            user_id: u.clone(),
            pas: p.and_then(|p| pas(p, l, inputs.map)),
            gpa: p.and_then(|p| gpa(p, l, inputs.map)),
            ilf: ilf(l, inputs.vocab),
            jaccard_k: neutral.and_then(|n| n.get(u)).map(|n| jaccard_k(n, l)),
            precision_k: rel.and_then(|r| precision_at_k(l, r)),
            recall_k: rel.and_then(|r| recall_at_k(l, r)),
        };
        rows.push(UserRow {
            backend: backend.name.clone(),
            condition,
            metrics: m,
            match_rate: l.match_rate(),
            items: list_items(l),
        });
    }
    let fairness: Vec<GroupFairness> = inputs
        .groupings
        .iter()
        .map(|g| group_fairness(g, lists, neutral, inputs))
        .collect();
    let primary = &fairness[0];
    let cohort = CohortMetrics {
        dp: primary.dp,
        eo: primary.eo,
        snsr_k: primary.snsr_k,
        snsv_k: primary.snsv_k,
    };
    let user_metrics: Vec<UserMetrics> = rows.iter().map(|r| r.metrics.clone()).collect();
    let (metrics, counts) = aggregate_over_users(&user_metrics, &cohort);
    (
        CellReport {
            backend: backend.name.clone(),
            model: backend.model.clone(),
            condition,
            metrics,
            users: counts.users,
            defined: counts.per_metric.into_iter().collect(),
            fairness,
        },
        rows,
    )
}

/// Runs every stage for every configured backend.
pub fn run_evaluation(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let pop = build_population(config)?;
    let users = select_users(config, &pop).context("stage selection")?;
    if users.is_empty() {
        bail!("stage selection: no users with at least {} interactions", config.dataset.min_interactions);
    }
    let phrases = load_phrases(config).context("stage prompt")?;
    let (cells, mut missing) = build_cells(config, &pop, &users, &phrases)?;

    let selected: BTreeSet<&str> = users.iter().map(String::as_str).collect();
    let chosen: Vec<&UserProfile> = pop
        .profiles
        .iter()
        .filter(|p| selected.contains(p.user_id.as_str()))
        .collect();
    let mut attributes = config.attributes.clone();
    if !attributes.contains(&Attribute::DominantTrait) {
        attributes.push(Attribute::DominantTrait);
    }
    let inputs = MetricInputs {
        vectors: &pop.personalities.vectors,
        relevance: chosen
            .iter()
            .map(|p| (p.user_id.clone(), p.relevance_set.clone()))
            .collect(),
        universe: pop.dataset.catalog.item_ids(),
        vocab: pop.dataset.catalog.genre_vocabulary().len(),
        map: &pop.trait_map,
        groupings: attributes
            .iter()
            .map(|a| assignment(*a, config, &pop, chosen.iter().copied()))
            .collect(),
        k: config.k,
    };
    let index = CatalogIndex::new(&pop.dataset.catalog, config.fuzzy_threshold);
    let cache_path = config.resolve(&config.output.cache);

    let mut report_cells = Vec::new();
    let mut fpx_rows = Vec::new();
    let mut user_rows = Vec::new();
    let mut digest = Sha256::new();
    for backend in &config.backends {
        let replies = match backend.kind {
            BackendKind::Oracle => resolve_oracle(&cells, &pop, config.seed),
            BackendKind::ChatCompletion => {
                let cache = ResponseCache::open(&cache_path)?;
                resolve_live(backend, &cells, &cache, config.n_repeat, &mut missing)?
            }
        };
        let mut by_condition: BTreeMap<PromptKind, BTreeMap<String, RecommendationList>> = BTreeMap::new();
        for (i, c) in cells.iter().enumerate() {
            let Some(texts) = replies.get(&i) else { continue };
            let mut lists = Vec::new();
            for t in texts {
                digest.update(format!("{}\0{}\0{}\0{}\0", backend.name, c.condition, c.user, t));
                match parse_recommendation_text(t, config.k) {
                    Ok(titles) => lists.push(match_titles_to_catalog(
                        &titles,
                        &index,
                        Some(c.user),
                        c.condition,
                        config.k,
                    )),
                    Err(e) => {
                        missing.push(MissingCell {
                            backend: backend.name.clone(),
                            condition: c.condition,
                            user_id: c.user.to_string(),
                            reason: e.to_string(),
                        });
                        lists.clear();
                        break;
                    }
                }
            }
            if !lists.is_empty() {
                by_condition
                    .entry(c.condition)
                    .or_default()
                    .insert(c.user.to_string(), majority_list(lists));
            }
        }
        let empty = BTreeMap::new();
        let neutral_lists = by_condition.get(&PromptKind::Neutral).unwrap_or(&empty);
        let sensitive_lists = by_condition.get(&PromptKind::Sensitive).unwrap_or(&empty);
        let (n_cell, n_rows) = evaluate_cell(backend, PromptKind::Neutral, neutral_lists, None, &inputs);
        let (s_cell, s_rows) =
            evaluate_cell(backend, PromptKind::Sensitive, sensitive_lists, Some(neutral_lists), &inputs);
        let score = fpx(&s_cell.metrics, &config.weights);
        fpx_rows.push(FpxRow {
            backend: backend.name.clone(),
            fpx: score.as_ref().ok().copied(),
            missing: score.err().map(|e| e.to_string()),
        });
        report_cells.push(n_cell);
        report_cells.push(s_cell);
        user_rows.extend(n_rows);
        user_rows.extend(s_rows);
    }
    missing.sort();
    Ok(RunReport {
        dataset: config.dataset.name.clone(),
        domain: pop.dataset.domain,
        k: config.k,
        seed: config.seed,
        primary_attribute: config.attributes[0],
        users,
        cells: report_cells,
        fpx: fpx_rows,
        user_rows,
        missing,
        config: config.snapshot(),
        response_digest: hex::encode(digest.finalize()),
    })
}
