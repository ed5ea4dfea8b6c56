//! Personality inference from interaction logs and trait projection of genre
//! multisets.
//!
//! Inference runs in two passes. [`raw_behavior`] extracts per-user signals
//! (genre affinity, weight dispersion, catalog diversity, activity), then
//! [`PopulationStats::collect`] records the population ranges used to
//! normalize them. [`compute_behavior_features`] and [`infer_ocean`] finish
//! the job per user.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{Catalog, Domain, UserProfile};
use crate::error::{ConfigFileError, PersonalityError};
use crate::ocean::{OceanVector, Trait};

const BUNDLED_TRAIT_MAP: &str = include_str!("../data/genre_traits.txt");

/// Case-normalized genre key used for every trait lookup.
pub fn genre_key(label: &str) -> String {
    label.trim().to_lowercase()
}

/// Genre sets associated with each trait.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenreTraitMap {
    sets: [BTreeSet<String>; 5],
}

impl GenreTraitMap {
    /// The default map shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TRAIT_MAP).expect("bundled trait map is valid")
    }

    /// Parses `TRAIT: genre, genre, ...` lines. `#` starts a comment line;
    /// repeated trait lines accumulate.
    pub fn parse(text: &str) -> Result<Self, ConfigFileError> {
        let mut map = GenreTraitMap::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| ConfigFileError {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (key, genres) = line.split_once(':').ok_or_else(|| err("expected `TRAIT: genres`"))?;
            let t: Trait = key.parse().map_err(|_| err("unknown trait"))?;
            for g in genres.split(',') {
                let g = genre_key(g);
                if !g.is_empty() {
                    map.sets[t.index()].insert(g);
                }
            }
        }
        Ok(map)
    }

    pub fn from_sets(sets: [&[&str]; 5]) -> Self {
        let mut map = GenreTraitMap::default();
        for (i, s) in sets.iter().enumerate() {
            map.sets[i] = s.iter().map(|g| genre_key(g)).collect();
        }
        map
    }

    pub fn genres(&self, t: Trait) -> &BTreeSet<String> {
        &self.sets[t.index()]
    }

    /// Membership test on an already-normalized key.
    fn contains_key(&self, t: Trait, key: &str) -> bool {
        self.sets[t.index()].contains(key)
    }

    pub fn contains(&self, t: Trait, genre: &str) -> bool {
        self.contains_key(t, &genre_key(genre))
    }

    /// Number of traits the genre belongs to.
    pub fn memberships(&self, genre: &str) -> usize {
        let key = genre_key(genre);
        Trait::ALL.iter().filter(|&&t| self.contains_key(t, &key)).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in Trait::ALL {
            s.push(t.letter());
            s.push(':');
            for (i, g) in self.sets[t.index()].iter().enumerate() {
                s.push_str(if i == 0 { " " } else { ", " });
                s.push_str(g);
            }
            s.push('\n');
        }
        s
    }
}

/// Fraction of genre slots in `genres` associated with each trait; the zero
/// vector for an empty multiset.
pub fn project_genres_to_traits<'a, I>(genres: I, map: &GenreTraitMap) -> OceanVector
where
    I: IntoIterator<Item = &'a str>,
{
    let mut hits = [0usize; 5];
    let mut slots = 0usize;
    for g in genres {
        slots += 1;
        let key = genre_key(g);
        for t in Trait::ALL {
            if map.contains_key(t, &key) {
                hits[t.index()] += 1;
            }
        }
    }
    if slots == 0 {
        return OceanVector::ZERO;
    }
    let mut out = [0.0; 5];
    for (o, h) in out.iter_mut().zip(hits) {
        *o = h as f64 / slots as f64;
    }
    OceanVector::from_array(out)
}

/// Unnormalized behavioral signals for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBehavior {
    pub user_id: String,
    /// Genre label -> share of genre-bearing interactions. Each interaction
    /// splits unit mass evenly over its item's genres.
    pub genre_affinity: BTreeMap<String, f64>,
    /// Population std-dev of weights (`ln(1 + w)` in the music domain).
    pub dispersion: f64,
    /// Genre entropy over `ln(vocabulary size)`.
    pub catalog_diversity: f64,
    /// Interactions per distinct active day; 0 without timestamps.
    pub activity: f64,
}

/// Extracts raw signals. Items missing from the catalog or without genres
/// are ignored for the genre-based signals.
pub fn raw_behavior(
    profile: &UserProfile,
    catalog: &Catalog,
    domain: Domain,
) -> Result<RawBehavior, PersonalityError> {
    let mut affinity: BTreeMap<String, f64> = BTreeMap::new();
    let mut bearing = 0usize;
    for r in &profile.interactions {
        let Some(item) = catalog.get(&r.item_id) else { continue };
        if item.genres.is_empty() {
            continue;
        }
        bearing += 1;
        let share = 1.0 / item.genres.len() as f64;
        for g in &item.genres {
            *affinity.entry(g.clone()).or_insert(0.0) += share;
        }
    }
    if bearing == 0 {
        return Err(PersonalityError::NoGenreSignal(profile.user_id.clone()));
    }
    for v in affinity.values_mut() {
        *v /= bearing as f64;
    }

    let vocab = catalog.genre_vocabulary().len();
    let catalog_diversity = normalized_entropy(affinity.values().copied(), vocab);

    let weights: Vec<f64> = profile
        .interactions
        .iter()
        .map(|r| match domain {
            Domain::Movie => r.weight,
            Domain::Music => libm::log1p(r.weight),
        })
        .collect();
    let dispersion = population_std(&weights);

    let days: BTreeSet<i64> = profile
        .interactions
        .iter()
        .filter_map(|r| r.timestamp)
        .map(|ts| ts.div_euclid(86_400))
        .collect();
    let timed = profile.interactions.iter().filter(|r| r.timestamp.is_some()).count();
    let activity = if days.is_empty() {
        0.0
    } else {
        timed as f64 / days.len() as f64
    };

    Ok(RawBehavior {
        user_id: profile.user_id.clone(),
        genre_affinity: affinity,
        dispersion,
        catalog_diversity,
        activity,
    })
}

/// `-Σ p ln p / ln(vocab)`, clamped to `[0, 1]`; 0 when `vocab <= 1`.
pub fn normalized_entropy(probs: impl IntoIterator<Item = f64>, vocab: usize) -> f64 {
    let mut h = 0.0;
    let mut support = 0usize;
    for p in probs {
        if p > 0.0 {
            h -= p * libm::log(p);
            support += 1;
        }
    }
    let v = vocab.max(support);
    if v <= 1 {
        return 0.0;
    }
    (h / libm::log(v as f64)).clamp(0.0, 1.0)
}

fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    libm::sqrt(var)
}

/// Observed range of a raw signal across the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<MinMax> {
        values.into_iter().fold(None, |acc, x| match acc {
            None => Some(MinMax { min: x, max: x }),
            Some(m) => Some(MinMax {
                min: m.min.min(x),
                max: m.max.max(x),
            }),
        })
    }

    /// Maps into `[0, 1]`; a degenerate range (max == min) maps to 0.
    pub fn normalize(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        if span <= 0.0 || !span.is_finite() {
            return 0.0;
        }
        ((x - self.min) / span).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub dispersion: MinMax,
    pub activity: MinMax,
    /// Largest raw trait affinity seen per trait, used to rescale affinities.
    pub trait_affinity_max: [f64; 5],
}

impl PopulationStats {
    pub fn collect(raws: &[RawBehavior], map: &GenreTraitMap) -> PopulationStats {
        let zero = MinMax { min: 0.0, max: 0.0 };
        let mut trait_affinity_max = [0.0f64; 5];
        for r in raws {
            let a = trait_affinity(&r.genre_affinity, map);
            for (m, x) in trait_affinity_max.iter_mut().zip(a) {
                *m = m.max(x);
            }
        }
        PopulationStats {
            dispersion: MinMax::of(raws.iter().map(|r| r.dispersion)).unwrap_or(zero),
            activity: MinMax::of(raws.iter().map(|r| r.activity)).unwrap_or(zero),
            trait_affinity_max,
        }
    }
}

/// Σ over each trait's genres of the user's affinity.
pub fn trait_affinity(genre_affinity: &BTreeMap<String, f64>, map: &GenreTraitMap) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (g, share) in genre_affinity {
        let key = genre_key(g);
        for t in Trait::ALL {
            if map.contains_key(t, &key) {
                out[t.index()] += share;
            }
        }
    }
    out
}

/// Normalized behavioral proxies for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorFeatures {
    pub genre_affinity: BTreeMap<String, f64>,
    pub rating_dispersion: f64,
    pub catalog_diversity: f64,
    pub temporal_activity: f64,
}

impl BehaviorFeatures {
    pub fn from_raw(raw: &RawBehavior, population: &PopulationStats) -> Self {
        BehaviorFeatures {
            genre_affinity: raw.genre_affinity.clone(),
            rating_dispersion: population.dispersion.normalize(raw.dispersion),
            catalog_diversity: raw.catalog_diversity,
            temporal_activity: population.activity.normalize(raw.activity),
        }
    }
}

pub fn compute_behavior_features(
    profile: &UserProfile,
    catalog: &Catalog,
    domain: Domain,
    population: &PopulationStats,
) -> Result<BehaviorFeatures, PersonalityError> {
    let raw = raw_behavior(profile, catalog, domain)?;
    Ok(BehaviorFeatures::from_raw(&raw, population))
}

/// Blend weights turning features into trait scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OceanWeights {
    pub openness_affinity: f64,
    pub openness_diversity: f64,
    pub conscientiousness_affinity: f64,
    pub conscientiousness_stability: f64,
    pub extraversion_affinity: f64,
    pub extraversion_activity: f64,
    pub agreeableness_affinity: f64,
    pub neuroticism_affinity: f64,
    pub neuroticism_dispersion: f64,
}

impl Default for OceanWeights {
    fn default() -> Self {
        OceanWeights {
            openness_affinity: 0.5,
            openness_diversity: 0.5,
            conscientiousness_affinity: 0.7,
            conscientiousness_stability: 0.3,
            extraversion_affinity: 0.7,
            extraversion_activity: 0.3,
            agreeableness_affinity: 1.0,
            neuroticism_affinity: 0.5,
            neuroticism_dispersion: 0.5,
        }
    }
}

/// Combines features into a trait vector. Every component is clamped to
/// `[0, 1]`; non-finite intermediate values become 0.
pub fn infer_ocean(
    features: &BehaviorFeatures,
    map: &GenreTraitMap,
    population: &PopulationStats,
    w: &OceanWeights,
) -> OceanVector {
    let raw = trait_affinity(&features.genre_affinity, map);
    let mut aff = [0.0; 5];
    for i in 0..5 {
        let m = population.trait_affinity_max[i];
        aff[i] = if m > 0.0 { (raw[i] / m).clamp(0.0, 1.0) } else { 0.0 };
    }
    let disp = features.rating_dispersion;
    let o = w.openness_affinity * aff[0] + w.openness_diversity * features.catalog_diversity;
    let c = w.conscientiousness_affinity * aff[1] + w.conscientiousness_stability * (1.0 - disp);
    let e = w.extraversion_affinity * aff[2] + w.extraversion_activity * features.temporal_activity;
    let a = w.agreeableness_affinity * aff[3];
    let n = w.neuroticism_affinity * aff[4] + w.neuroticism_dispersion * disp;
    let unit = |x: f64| if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.0 };
    OceanVector::from_array([unit(o), unit(c), unit(e), unit(a), unit(n)])
}

/// Result of running both inference passes over a cohort.
#[derive(Debug, Clone, Default)]
pub struct InferredPersonalities {
    pub vectors: BTreeMap<String, OceanVector>,
    pub features: BTreeMap<String, BehaviorFeatures>,
    /// Users excluded from personality-dependent metrics.
    pub excluded: BTreeMap<String, PersonalityError>,
    pub population: Option<PopulationStats>,
}

/// Runs raw extraction, population statistics and inference over `profiles`.
pub fn infer_population<'a>(
    profiles: impl IntoIterator<Item = &'a UserProfile>,
    catalog: &Catalog,
    domain: Domain,
    map: &GenreTraitMap,
    weights: &OceanWeights,
) -> InferredPersonalities {
    let mut out = InferredPersonalities::default();
    let mut raws = Vec::new();
    for p in profiles {
        match raw_behavior(p, catalog, domain) {
            Ok(r) => raws.push(r),
            Err(e) => {
                out.excluded.insert(p.user_id.clone(), e);
            }
        }
    }
    let population = PopulationStats::collect(&raws, map);
    for raw in &raws {
        let f = BehaviorFeatures::from_raw(raw, &population);
        out.vectors
            .insert(raw.user_id.clone(), infer_ocean(&f, map, &population, weights));
        out.features.insert(raw.user_id.clone(), f);
    }
    out.population = Some(population);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    High,
    Low,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Low => "low",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_DOMINANCE_THRESHOLD: f64 = 0.6;

/// Traits scoring at least `threshold` (as high), plus low extraversion
/// (below `1 - threshold`), ordered by distance from 0.5 with O, C, E, A, N
/// breaking ties. When nothing qualifies the single most extreme trait is
/// returned, low only if it is extraversion below 0.5.
pub fn dominant_traits(p: &OceanVector, threshold: f64) -> Vec<(Trait, Level)> {
    let mut picked: Vec<(Trait, Level, f64)> = Vec::new();
    for t in Trait::ALL {
        let s = p.get(t);
        let dist = (s - 0.5).abs();
        if s >= threshold {
            picked.push((t, Level::High, dist));
        } else if t == Trait::Extraversion && s < 1.0 - threshold {
            picked.push((t, Level::Low, dist));
        }
    }
    if picked.is_empty() {
        let mut best = Trait::Openness;
        let mut best_dist = -1.0;
        for t in Trait::ALL {
            let d = (p.get(t) - 0.5).abs();
            if d > best_dist {
                best = t;
                best_dist = d;
            }
        }
        let level = if best == Trait::Extraversion && p.get(best) < 0.5 {
            Level::Low
        } else {
            Level::High
        };
        return alloc::vec![(best, level)];
    }
    // stable sort keeps canonical trait order among equal distances
    picked.sort_by(|a, b| b.2.total_cmp(&a.2));
    picked.into_iter().map(|(t, l, _)| (t, l)).collect()
}
