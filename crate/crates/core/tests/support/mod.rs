//! Random metric instances, naive direct-from-formula metric implementations,
//! and the invariant checks shared by the property and acceptance suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fairalign_core::metrics::{
    demographic_parity, equal_opportunity, gpa, group_overlaps, ilf, jaccard_k, pas,
    precision_at_k, recall_at_k, snsr, snsv, Attribute, GroupAssignment,
};
use fairalign_core::ocean::{cosine, OceanVector, Trait};
use fairalign_core::personality::GenreTraitMap;
use fairalign_core::prompt::PromptKind;
use fairalign_core::recommend::{MatchedItem, RecommendationList};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore};

/// Genres drawn for random items: mapped to one trait, two traits, or none.
pub const GENRES: [&str; 8] = [
    "Sci-Fi", "Documentary", "Comedy", "Romance", "Drama", "War", "Western", "Musical",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Item(usize),
    Unmatched(String),
}

#[derive(Debug, Clone)]
pub struct UserCase {
    pub id: String,
    pub p: [f64; 5],
    pub neutral: Vec<Entry>,
    pub sensitive: Vec<Entry>,
    pub relevant: BTreeSet<usize>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub item_genres: Vec<Vec<&'static str>>,
    pub users: Vec<UserCase>,
    pub k: usize,
    pub vocab: usize,
}

pub fn item_id(i: usize) -> String {
    format!("item{i}")
}

pub fn to_list(entries: &[Entry], item_genres: &[Vec<&'static str>], kind: PromptKind, k: usize) -> RecommendationList {
    let items = entries
        .iter()
        .enumerate()
        .map(|(r, e)| match e {
            Entry::Item(i) => MatchedItem {
                raw_title: format!("Title {i}"),
                year: None,
                item_id: Some(item_id(*i)),
                genres: item_genres[*i].iter().map(|g| g.to_string()).collect(),
                rank: r + 1,
            },
            Entry::Unmatched(t) => MatchedItem {
                raw_title: t.clone(),
                year: None,
                item_id: None,
                genres: BTreeSet::new(),
                rank: r + 1,
            },
        })
        .collect();
    RecommendationList { user_id: None, kind, k, items }
}

impl Instance {
    pub fn lists(&self, kind: PromptKind) -> BTreeMap<String, RecommendationList> {
        self.users
            .iter()
            .map(|u| {
                let e = if kind == PromptKind::Neutral { &u.neutral } else { &u.sensitive };
                (u.id.clone(), to_list(e, &self.item_genres, kind, self.k))
            })
            .collect()
    }

    pub fn relevance(&self) -> BTreeMap<String, BTreeSet<String>> {
        self.users
            .iter()
            .map(|u| (u.id.clone(), u.relevant.iter().map(|&i| item_id(i)).collect()))
            .collect()
    }

    pub fn universe(&self) -> BTreeSet<String> {
        (0..self.item_genres.len()).map(item_id).collect()
    }

    pub fn groups(&self) -> GroupAssignment {
        let mut g = GroupAssignment::new(Attribute::Gender);
        for u in &self.users {
            g.assign(u.id.clone(), u.label.clone());
        }
        g
    }
}

fn random_list(rng: &mut impl RngCore, n_items: usize, k: usize) -> Vec<Entry> {
    let len = rng.random_range(0..=k);
    let mut ids: Vec<usize> = (0..n_items).collect();
    ids.shuffle(rng);
    let mut out: Vec<Entry> = Vec::new();
    let mut next = 0;
    while out.len() < len {
        if rng.random_bool(0.15) {
            let t = format!("Unknown {}", rng.random_range(0..3));
            if !out.contains(&Entry::Unmatched(t.clone())) {
                out.push(Entry::Unmatched(t));
            }
        } else if next < ids.len() {
            out.push(Entry::Item(ids[next]));
            next += 1;
        } else {
            break;
        }
    }
    out
}

pub fn random_vector(rng: &mut impl RngCore) -> [f64; 5] {
    let mut p = [0.0; 5];
    for x in &mut p {
        *x = match rng.random_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        };
    }
    p
}

pub fn random_instance(rng: &mut impl RngCore) -> Instance {
    let n_items = rng.random_range(1..=12);
    let item_genres = (0..n_items)
        .map(|_| {
            let n = rng.random_range(0..=3);
            let mut g: Vec<&'static str> = GENRES.choose_multiple(rng, n).copied().collect();
            g.sort();
            g
        })
        .collect();
    let k = rng.random_range(1..=6);
    let n_users = rng.random_range(1..=9);
    let labels = ["f", "m", "x"];
    let users = (0..n_users)
        .map(|u| UserCase {
            id: format!("u{u}"),
            p: random_vector(rng),
            neutral: random_list(rng, n_items, k),
            sensitive: random_list(rng, n_items, k),
            relevant: (0..n_items).filter(|_| rng.random_bool(0.4)).collect(),
            label: labels[rng.random_range(0..labels.len())].to_string(),
        })
        .collect();
    Instance {
        item_genres,
        users,
        k,
        vocab: rng.random_range(1..=GENRES.len() + 4),
    }
}

// ---------------------------------------------------------------------------
// naive implementations, written from the formulas with plain vectors

fn traits_of(map: &GenreTraitMap, genre: &str) -> Vec<usize> {
    Trait::ALL
        .iter()
        .filter(|t| map.genres(**t).iter().any(|g| g.eq_ignore_ascii_case(genre)))
        .map(|t| t.index())
        .collect()
}

fn slots(entries: &[Entry], item_genres: &[Vec<&'static str>]) -> Vec<&'static str> {
    let mut out = Vec::new();
    for e in entries {
        if let Entry::Item(i) = e {
            out.extend(item_genres[*i].iter().copied());
        }
    }
    out
}

pub fn naive_pas(p: [f64; 5], entries: &[Entry], item_genres: &[Vec<&'static str>], map: &GenreTraitMap) -> Option<f64> {
    let s = slots(entries, item_genres);
    let mut g = [0.0; 5];
    for genre in &s {
        for t in traits_of(map, genre) {
            g[t] += 1.0 / s.len() as f64;
        }
    }
    let dot: f64 = (0..5).map(|i| p[i] * g[i]).sum();
    let np = (0..5).map(|i| p[i] * p[i]).sum::<f64>().sqrt();
    let ng = (0..5).map(|i| g[i] * g[i]).sum::<f64>().sqrt();
    if np == 0.0 || ng == 0.0 {
        None
    } else {
        Some(dot / (np * ng))
    }
}

pub fn naive_gpa(p: [f64; 5], entries: &[Entry], item_genres: &[Vec<&'static str>], map: &GenreTraitMap) -> Option<f64> {
    let mut distinct: Vec<String> = slots(entries, item_genres).iter().map(|g| g.to_lowercase()).collect();
    distinct.sort();
    distinct.dedup();
    let mut num = 0.0;
    let mut den = 0.0;
    for g in &distinct {
        for t in traits_of(map, g) {
            num += p[t];
            den += 1.0;
        }
    }
    (den > 0.0).then(|| num / den)
}

pub fn naive_ilf(entries: &[Entry], item_genres: &[Vec<&'static str>], vocab: usize) -> Option<f64> {
    let s = slots(entries, item_genres);
    if s.is_empty() {
        return None;
    }
    let mut distinct = s.clone();
    distinct.sort();
    distinct.dedup();
    let mut h = 0.0;
    for g in &distinct {
        let p = s.iter().filter(|x| *x == g).count() as f64 / s.len() as f64;
        h -= p * p.ln();
    }
    let v = vocab.max(distinct.len());
    Some(if v <= 1 { 0.0 } else { h / (v as f64).ln() })
}

fn key(e: &Entry) -> String {
    match e {
        Entry::Item(i) => format!("id:{}", item_id(*i)),
        Entry::Unmatched(t) => format!("title:{}", t.to_lowercase()),
    }
}

pub fn naive_jaccard(a: &[Entry], b: &[Entry]) -> f64 {
    let ka: Vec<String> = a.iter().map(key).collect();
    let kb: Vec<String> = b.iter().map(key).collect();
    let inter = ka.iter().filter(|x| kb.contains(x)).count();
    let union = ka.len() + kb.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn hits(entries: &[Entry], rel: &BTreeSet<usize>) -> usize {
    entries
        .iter()
        .filter(|e| matches!(e, Entry::Item(i) if rel.contains(i)))
        .count()
}

pub fn naive_precision(entries: &[Entry], rel: &BTreeSet<usize>) -> Option<f64> {
    (!entries.is_empty()).then(|| hits(entries, rel) as f64 / entries.len() as f64)
}

pub fn naive_recall(entries: &[Entry], rel: &BTreeSet<usize>) -> Option<f64> {
    (!rel.is_empty()).then(|| hits(entries, rel) as f64 / rel.len() as f64)
}

fn labels_with_at_least(users: &[&UserCase], n: usize) -> Vec<String> {
    let mut labels: Vec<String> = users.iter().map(|u| u.label.clone()).collect();
    labels.sort();
    labels.dedup();
    labels
        .into_iter()
        .filter(|l| users.iter().filter(|u| &u.label == l).count() >= n)
        .collect()
}

/// Mean over the all-user item union of the per-item exposure gap, over the
/// mean of the per-item larger exposure; maximum over eligible group pairs.
pub fn naive_dp(inst: &Instance, sensitive: bool) -> Option<f64> {
    let list = |u: &UserCase| if sensitive { u.sensitive.clone() } else { u.neutral.clone() };
    let users: Vec<&UserCase> = inst.users.iter().collect();
    let labels = labels_with_at_least(&users, 2);
    if labels.len() < 2 {
        return None;
    }
    let mut union: Vec<usize> = Vec::new();
    for u in &users {
        for e in list(u) {
            if let Entry::Item(i) = e {
                if !union.contains(&i) {
                    union.push(i);
                }
            }
        }
    }
    let rate = |label: &str, item: usize| {
        let members: Vec<&&UserCase> = users.iter().filter(|u| u.label == label).collect();
        let with = members.iter().filter(|u| list(u).contains(&Entry::Item(item))).count();
        with as f64 / members.len() as f64
    };
    let mut best = 0.0f64;
    for a in 0..labels.len() {
        for b in a + 1..labels.len() {
            if union.is_empty() {
                continue;
            }
            let n = union.len() as f64;
            let mean_diff: f64 = union.iter().map(|&i| (rate(&labels[a], i) - rate(&labels[b], i)).abs()).sum::<f64>() / n;
            let mean_max: f64 = union.iter().map(|&i| rate(&labels[a], i).max(rate(&labels[b], i))).sum::<f64>() / n;
            if mean_max > 0.0 {
                best = best.max(mean_diff / mean_max);
            }
        }
    }
    Some(best)
}

/// Per-group mean TPR over users with reachable relevant items, then the
/// largest pairwise gap over the largest rate.
pub fn naive_eo(inst: &Instance, sensitive: bool) -> Option<f64> {
    let n_items = inst.item_genres.len();
    let counted: Vec<&UserCase> = inst
        .users
        .iter()
        .filter(|u| u.relevant.iter().any(|&i| i < n_items))
        .collect();
    let labels = labels_with_at_least(&counted, 2);
    if labels.len() < 2 {
        return None;
    }
    let tpr = |u: &UserCase| {
        let l = if sensitive { &u.sensitive } else { &u.neutral };
        hits(l, &u.relevant) as f64 / u.relevant.len() as f64
    };
    let rates: Vec<f64> = labels
        .iter()
        .map(|l| {
            let m: Vec<&&UserCase> = counted.iter().filter(|u| &u.label == l).collect();
            m.iter().map(|u| tpr(u)).sum::<f64>() / m.len() as f64
        })
        .collect();
    let mut gap = 0.0f64;
    for a in &rates {
        for b in &rates {
            gap = gap.max((a - b).abs());
        }
    }
    let max = rates.iter().cloned().fold(0.0, f64::max);
    Some(if max > 0.0 { gap / max } else { 0.0 })
}

pub fn naive_group_overlaps(inst: &Instance) -> Vec<f64> {
    let users: Vec<&UserCase> = inst.users.iter().collect();
    labels_with_at_least(&users, 2)
        .iter()
        .map(|l| {
            let m: Vec<&&UserCase> = users.iter().filter(|u| &u.label == l).collect();
            m.iter()
                .map(|u| {
                    let ks: Vec<String> = u.sensitive.iter().map(key).collect();
                    let shared = u.neutral.iter().map(key).filter(|x| ks.contains(x)).count();
                    shared as f64 / inst.k as f64
                })
                .sum::<f64>()
                / m.len() as f64
        })
        .collect()
}

pub fn naive_snsr(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut best = 0.0f64;
    for a in xs {
        for b in xs {
            best = best.max(a - b);
        }
    }
    Some(best)
}

pub fn naive_snsv(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mu = xs.iter().sum::<f64>() / xs.len() as f64;
    Some(xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / xs.len() as f64)
}

// ---------------------------------------------------------------------------
// comparisons

pub const EQ_TOL: f64 = 1e-12;

pub fn same(name: &str, fast: Option<f64>, slow: Option<f64>) -> Result<(), String> {
    match (fast, slow) {
        (None, None) => Ok(()),
        (Some(a), Some(b)) if (a - b).abs() <= EQ_TOL => Ok(()),
        _ => Err(format!("{name}: optimized {fast:?} vs naive {slow:?}")),
    }
}

/// Checks every metric on `inst` against its naive counterpart.
pub fn check_equivalence(inst: &Instance, map: &GenreTraitMap) -> Result<(), String> {
    let neutral = inst.lists(PromptKind::Neutral);
    let sensitive = inst.lists(PromptKind::Sensitive);
    let rel = inst.relevance();
    for u in &inst.users {
        let p = OceanVector::from_array(u.p);
        let s = &sensitive[&u.id];
        let n = &neutral[&u.id];
        same("pas", pas(&p, s, map), naive_pas(u.p, &u.sensitive, &inst.item_genres, map))?;
        same("gpa", gpa(&p, s, map), naive_gpa(u.p, &u.sensitive, &inst.item_genres, map))?;
        same("ilf", ilf(s, inst.vocab), naive_ilf(&u.sensitive, &inst.item_genres, inst.vocab))?;
        same("jaccard", Some(jaccard_k(n, s)), Some(naive_jaccard(&u.neutral, &u.sensitive)))?;
        same("precision", precision_at_k(s, &rel[&u.id]), naive_precision(&u.sensitive, &u.relevant))?;
        same("recall", recall_at_k(s, &rel[&u.id]), naive_recall(&u.sensitive, &u.relevant))?;
    }
    let groups = inst.groups();
    same("dp", demographic_parity(&sensitive, &groups), naive_dp(inst, true))?;
    same("eo", equal_opportunity(&sensitive, &rel, &groups, &inst.universe()), naive_eo(inst, true))?;
    let overlaps: Vec<f64> = group_overlaps(&neutral, &sensitive, &groups, inst.k).into_values().collect();
    let naive = naive_group_overlaps(inst);
    if overlaps.len() != naive.len() || overlaps.iter().zip(&naive).any(|(a, b)| (a - b).abs() > EQ_TOL) {
        return Err(format!("group overlaps: {overlaps:?} vs {naive:?}"));
    }
    same("snsr", snsr(&overlaps), naive_snsr(&naive))?;
    same("snsv", snsv(&overlaps), naive_snsv(&naive))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// invariants

fn in_unit(name: &str, v: Option<f64>) -> Result<(), String> {
    match v {
        Some(x) if !(0.0..=1.0).contains(&x) => Err(format!("{name} out of [0,1]: {x}")),
        _ => Ok(()),
    }
}

fn eq_opt(name: &str, a: Option<f64>, b: Option<f64>) -> Result<(), String> {
    match (a, b) {
        (None, None) => Ok(()),
        (Some(x), Some(y)) if (x - y).abs() <= 1e-12 => Ok(()),
        _ => Err(format!("{name}: {a:?} != {b:?}")),
    }
}

fn reversed(l: &RecommendationList) -> RecommendationList {
    let mut r = l.clone();
    r.items.reverse();
    for (i, m) in r.items.iter_mut().enumerate() {
        m.rank = i + 1;
    }
    r
}

/// Per-user metrics: range, order-insensitivity, PAS scale invariance,
/// Jaccard reflexivity and symmetry.
pub fn check_user_invariants(inst: &Instance, map: &GenreTraitMap, rng: &mut impl RngCore) -> Result<(), String> {
    let neutral = inst.lists(PromptKind::Neutral);
    let sensitive = inst.lists(PromptKind::Sensitive);
    let rel = inst.relevance();
    for u in &inst.users {
        let p = OceanVector::from_array(u.p);
        let s = &sensitive[&u.id];
        let n = &neutral[&u.id];
        let rs = reversed(s);
        let values = [
            ("pas", pas(&p, s, map), pas(&p, &rs, map)),
            ("gpa", gpa(&p, s, map), gpa(&p, &rs, map)),
            ("ilf", ilf(s, inst.vocab), ilf(&rs, inst.vocab)),
            ("jaccard", Some(jaccard_k(n, s)), Some(jaccard_k(n, &rs))),
            ("precision", precision_at_k(s, &rel[&u.id]), precision_at_k(&rs, &rel[&u.id])),
            ("recall", recall_at_k(s, &rel[&u.id]), recall_at_k(&rs, &rel[&u.id])),
        ];
        for (name, a, b) in values {
            in_unit(name, a)?;
            eq_opt(&format!("{name} order"), a, b)?;
        }
        let c: f64 = rng.random_range(0.01..100.0);
        eq_opt("pas scale", pas(&p, s, map), pas(&p.scaled(c), s, map))?;
        eq_opt("jaccard self", Some(jaccard_k(s, s)), Some(1.0))?;
        eq_opt("jaccard symmetry", Some(jaccard_k(n, s)), Some(jaccard_k(s, n)))?;
        let g = fairalign_core::personality::project_genres_to_traits(s.genre_slots(), map);
        eq_opt("cosine scale", cosine(&p, &g), cosine(&p, &g.scaled(c)))?;
    }
    Ok(())
}

/// Group metrics: range, label-swap symmetry, zero under identical lists,
/// SNSR/SNSV bounds.
pub fn check_group_invariants(inst: &Instance) -> Result<(), String> {
    let neutral = inst.lists(PromptKind::Neutral);
    let sensitive = inst.lists(PromptKind::Sensitive);
    let rel = inst.relevance();
    let universe = inst.universe();
    let groups = inst.groups();
    let dp = demographic_parity(&sensitive, &groups);
    let eo = equal_opportunity(&sensitive, &rel, &groups, &universe);
    in_unit("dp", dp)?;
    in_unit("eo", eo)?;

    let mut swapped = groups.clone();
    for l in swapped.labels.values_mut() {
        *l = match l.as_str() {
            "f" => "m".into(),
            "m" => "x".into(),
            _ => "f".into(),
        };
    }
    eq_opt("dp relabel", dp, demographic_parity(&sensitive, &swapped))?;
    eq_opt("eo relabel", eo, equal_opportunity(&sensitive, &rel, &swapped, &universe))?;

    let shared = sensitive.values().next().cloned();
    if let Some(shared) = shared {
        let same_lists: BTreeMap<String, RecommendationList> =
            sensitive.keys().map(|u| (u.clone(), shared.clone())).collect();
        let dp0 = demographic_parity(&same_lists, &groups);
        if dp0.is_some_and(|v| v != 0.0) {
            return Err(format!("dp with shared list = {dp0:?}"));
        }
        // identical lists and identical relevance sets give identical TPRs
        let shared_rel: BTreeMap<String, BTreeSet<String>> = rel
            .keys()
            .map(|u| (u.clone(), rel.values().next().cloned().unwrap_or_default()))
            .collect();
        let eo0 = equal_opportunity(&same_lists, &shared_rel, &groups, &universe);
        if eo0.is_some_and(|v| v.abs() > 1e-12) {
            return Err(format!("eo with shared list = {eo0:?}"));
        }
    }

    let overlaps: Vec<f64> = group_overlaps(&neutral, &sensitive, &groups, inst.k).into_values().collect();
    in_unit("snsr", snsr(&overlaps))?;
    if let Some(v) = snsv(&overlaps) {
        if !(0.0..=0.25).contains(&v) {
            return Err(format!("snsv out of [0,0.25]: {v}"));
        }
    }
    let mut shuffled = overlaps.clone();
    shuffled.reverse();
    eq_opt("snsr order", snsr(&overlaps), snsr(&shuffled))?;
    eq_opt("snsv order", snsv(&overlaps), snsv(&shuffled))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// bounded exhaustive enumeration: at most 5 users, 6 items, K <= 3

pub const EXHAUSTIVE_ITEM_GENRES: [&[&str]; 6] = [
    &["Sci-Fi"],
    &["Documentary"],
    &["Comedy", "Romance"],
    &["Drama"],
    &["Western"],
    &["War", "Sci-Fi"],
];

fn exhaustive_genres() -> Vec<Vec<&'static str>> {
    EXHAUSTIVE_ITEM_GENRES.iter().map(|g| g.to_vec()).collect()
}

/// Item subsets of `0..n` with at most `max` elements, in ascending order.
pub fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

/// Every list of at most 3 entries over 6 items, plus those with one
/// unmatched title in place of a fourth slot.
pub fn exhaustive_lists() -> Vec<Vec<Entry>> {
    let mut out: Vec<Vec<Entry>> = subsets(6, 3)
        .into_iter()
        .map(|s| s.into_iter().map(Entry::Item).collect())
        .collect();
    for s in subsets(6, 2) {
        let mut l: Vec<Entry> = s.into_iter().map(Entry::Item).collect();
        l.push(Entry::Unmatched("Unknown".into()));
        out.push(l);
    }
    out
}

/// Restricted-growth labelings of `n` users with at most `max_labels` labels.
pub fn labelings(n: usize, max_labels: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0]];
    for _ in 1..n {
        let mut next = Vec::new();
        for l in &out {
            let top = *l.iter().max().unwrap();
            for v in 0..=(top + 1).min(max_labels - 1) {
                let mut c = l.clone();
                c.push(v);
                next.push(c);
            }
        }
        out = next;
    }
    out
}

fn product(choices: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v: Vec<usize>| {
                (0..choices).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

/// One user's (sensitive list, relevant items) choice.
type GroupOption = (Vec<usize>, Vec<usize>);

/// Runs every enumerated case; returns the number of cases checked.
pub fn exhaustive_equivalence(map: &GenreTraitMap) -> Result<usize, String> {
    let genres = exhaustive_genres();
    let lists = exhaustive_lists();
    let rels: Vec<BTreeSet<usize>> = subsets(6, 6).into_iter().map(|s| s.into_iter().collect()).collect();
    let grid = [0.0, 0.5, 1.0];
    let mut cases = 0usize;

    for entries in &lists {
        let list = to_list(entries, &genres, PromptKind::Sensitive, 3);
        for code in 0..243usize {
            let mut p = [0.0; 5];
            let mut c = code;
            for x in &mut p {
                *x = grid[c % 3];
                c /= 3;
            }
            let v = OceanVector::from_array(p);
            same("pas", pas(&v, &list, map), naive_pas(p, entries, &genres, map))?;
            same("gpa", gpa(&v, &list, map), naive_gpa(p, entries, &genres, map))?;
            cases += 2;
        }
        for vocab in 0..=8 {
            same("ilf", ilf(&list, vocab), naive_ilf(entries, &genres, vocab))?;
            cases += 1;
        }
        for rel in &rels {
            let ids: BTreeSet<String> = rel.iter().map(|&i| item_id(i)).collect();
            same("precision", precision_at_k(&list, &ids), naive_precision(entries, rel))?;
            same("recall", recall_at_k(&list, &ids), naive_recall(entries, rel))?;
            cases += 2;
        }
        for other in &lists {
            let o = to_list(other, &genres, PromptKind::Neutral, 3);
            same("jaccard", Some(jaccard_k(&o, &list)), Some(naive_jaccard(other, entries)))?;
            cases += 1;
        }
    }

    // group metrics: each user picks one (sensitive list, relevance) option;
    // neutral lists are fixed per user position
    let neutral_by_pos: [&[usize]; 5] = [&[0], &[0, 1], &[2], &[], &[1, 2, 3]];
    let group_cases: [(usize, Vec<GroupOption>); 2] = [
        (
            4,
            vec![
                (vec![], vec![0]),
                (vec![0], vec![0]),
                (vec![0, 1], vec![0]),
                (vec![1, 2, 3], vec![0]),
                (vec![], vec![1, 2]),
                (vec![0], vec![1, 2]),
                (vec![0, 1], vec![1, 2]),
                (vec![1, 2, 3], vec![1, 2]),
            ],
        ),
        (
            5,
            vec![
                (vec![0], vec![0, 4]),
                (vec![0, 4], vec![4]),
                (vec![2, 5], vec![]),
                (vec![1, 2, 3], vec![3]),
            ],
        ),
    ];
    for (n, options) in &group_cases {
        for labels in labelings(*n, 3) {
            for pick in product(options.len(), *n) {
                for k in [1, 3] {
                    let users = (0..*n)
                        .map(|u| {
                            let (s, r) = &options[pick[u]];
                            let trim = |v: &[usize]| v.iter().take(k).map(|&i| Entry::Item(i)).collect::<Vec<_>>();
                            UserCase {
                                id: format!("u{u}"),
                                p: [0.5; 5],
                                neutral: trim(neutral_by_pos[u]),
                                sensitive: trim(s),
                                relevant: r.iter().copied().collect(),
                                label: ["f", "m", "x"][labels[u]].to_string(),
                            }
                        })
                        .collect();
                    let inst = Instance { item_genres: genres.clone(), users, k, vocab: 12 };
                    check_equivalence(&inst, map)?;
                    cases += 1;
                }
            }
        }
    }
    Ok(cases)
}
