//! Seeded generator for the bundled 20-user MovieLens-layout dataset.
//!
//! Users 1..=16 clear the 200-interaction threshold (user 16 sits exactly on
//! it); users 17..=20 fall below it (user 17 has 199). Each active user leans
//! towards the genres of one trait, so trait-aware recommendations differ
//! from popularity ones. Every user has also seen each mainstream title
//! (Comedy or Action first), which concentrates popularity the way large
//! public catalogs do. Items 1 and 2 share a title and differ by year.
//! With 100 items, heavy users re-rate titles; ingestion keeps the highest
//! rating per item.

use std::fmt::Write;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SYNTHETIC_SEED: u64 = 7;
pub const USERS: usize = 20;
pub const ITEMS: usize = 100;

/// Each genre belongs to exactly one trait in the bundled mapping.
pub const GENRES: [&str; 12] = [
    "Sci-Fi",
    "Fantasy",
    "Animation",
    "War",
    "Film-Noir",
    "Comedy",
    "Action",
    "Romance",
    "Children",
    "Drama",
    "Thriller",
    "Horror",
];

/// Genres each archetype favours, in O, C, E, A, N order.
const ARCHETYPES: [&[&str]; 5] = [
    &["Sci-Fi", "Fantasy", "Animation"],
    &["War", "Film-Noir"],
    &["Comedy", "Action"],
    &["Romance", "Children"],
    &["Drama", "Thriller", "Horror"],
];

/// Primary genres of the titles every user has seen.
const MAINSTREAM: [&str; 2] = ["Comedy", "Action"];

/// Interaction count per user id (1-based).
pub const ACTIVITY: [usize; USERS] = [
    260, 231, 318, 244, 207, 289, 222, 301, 236, 275, 213, 250, 298, 229, 264, 200, 199, 150, 96, 41,
];

/// (gender, MovieLens age code, occupation code) per user id.
const PEOPLE: [(&str, u32, u32); USERS] = [
    ("F", 18, 4),
    ("M", 56, 13),
    ("F", 25, 12),
    ("M", 18, 4),
    ("F", 56, 6),
    ("M", 25, 17),
    ("F", 35, 1),
    ("M", 56, 7),
    ("F", 1, 10),
    ("M", 45, 16),
    ("F", 56, 9),
    ("M", 25, 0),
    ("F", 50, 3),
    ("M", 18, 4),
    ("F", 25, 20),
    ("M", 56, 14),
    ("F", 25, 2),
    ("M", 35, 11),
    ("F", 18, 19),
    ("M", 45, 5),
];

const ADJECTIVES: [&str; 10] = [
    "Silent", "Crimson", "Hidden", "Last", "Golden", "Broken", "Distant", "Wild", "Hollow", "Bright",
];
const NOUNS: [&str; 10] = [
    "Harbor", "Engine", "Garden", "Signal", "Frontier", "Mirror", "Orchard", "Tide", "Lantern", "Summit",
];

/// Contents of the four dataset files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticFiles {
    pub ratings: String,
    pub movies: String,
    pub users: String,
}

struct Item {
    genres: Vec<&'static str>,
}

fn items(rng: &mut ChaCha8Rng, out: &mut String) -> Vec<Item> {
    let mut catalog = Vec::with_capacity(ITEMS);
    for i in 0..ITEMS {
        let mut genres = vec![GENRES[i % GENRES.len()]];
        if rng.random_bool(0.3) {
            let g = GENRES[rng.random_range(0..GENRES.len())];
            if !genres.contains(&g) {
                genres.push(g);
            }
        }
        let title = match i {
            0 => "Solaris (1972)".to_string(),
            1 => "Solaris (2002)".to_string(),
            _ => format!(
                "The {} {} ({})",
                ADJECTIVES[i % 10],
                NOUNS[i / 10],
                1960 + rng.random_range(0..40)
            ),
        };
        writeln!(out, "{}::{}::{}", i + 1, title, genres.join("|")).unwrap();
        catalog.push(Item { genres });
    }
    catalog
}

/// Generates the dataset files for `seed`.
pub fn generate(seed: u64) -> SyntheticFiles {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut movies = String::new();
    let catalog = items(&mut rng, &mut movies);
    let mut users = String::new();
    let mut ratings = String::new();
    for u in 1..=USERS {
        let (gender, age, occ) = PEOPLE[u - 1];
        writeln!(users, "{u}::{gender}::{age}::{occ}::{:05}", 10000 + 317 * u).unwrap();
        let liked = ARCHETYPES[(u - 1) % 5];
        let fav: Vec<usize> = (0..ITEMS)
            .filter(|&i| liked.contains(&catalog[i].genres[0]))
            .collect();
        let all: Vec<usize> = (0..ITEMS).collect();
        let mainstream = (0..ITEMS).filter(|&i| MAINSTREAM.contains(&catalog[i].genres[0]));
        let picks = ACTIVITY[u - 1] - mainstream.clone().count();
        let mut order: Vec<usize> = mainstream.collect();
        for _ in 0..picks {
            let on_taste = rng.random_bool(0.9);
            let pool = if on_taste { &fav } else { &all };
            order.push(*pool.choose(&mut rng).expect("non-empty pool"));
        }
        // lighter users rate at a slower pace
        let pace = 3_600 * (1 + (u as i64 % 4));
        let mut ts = 978_300_000 + 86_400 * u as i64;
        for i in order {
            let likes = catalog[i].genres.iter().any(|g| liked.contains(g));
            let stars = if likes {
                rng.random_range(4..=5)
            } else {
                rng.random_range(1..=3)
            };
            ts += rng.random_range(60..pace);
            writeln!(ratings, "{u}::{}::{stars}::{ts}", i + 1).unwrap();
        }
    }
    SyntheticFiles {
        ratings,
        movies,
        users,
    }
}

/// Run configuration shipped next to the generated files.
pub const CONFIG_TOML: &str = r#"# Bundled synthetic dataset with the offline oracle backend.
seed = 7
k = 15
attributes = ["gender", "age-group"]

[dataset]
name = "synthetic"
format = "movielens"
ratings = "ratings.dat"
movies = "movies.dat"
users = "users.dat"
min_interactions = 200

[[backends]]
name = "oracle"
kind = "oracle"
model = "oracle"

[output]
dir = "report"
cache = "cache/responses.ndjson"
"#;
