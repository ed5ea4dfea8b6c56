//! Big Five trait identifiers and the five-component trait vector.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the five OCEAN personality dimensions.
///
/// The declaration order (O, C, E, A, N) is the canonical component order
/// and the tie-break order wherever traits are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trait {
    Openness,
    Conscientiousness,
    Extraversion,
    Agreeableness,
    Neuroticism,
}

impl Trait {
    pub const ALL: [Trait; 5] = [
        Trait::Openness,
        Trait::Conscientiousness,
        Trait::Extraversion,
        Trait::Agreeableness,
        Trait::Neuroticism,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Trait::Openness => "openness",
            Trait::Conscientiousness => "conscientiousness",
            Trait::Extraversion => "extraversion",
            Trait::Agreeableness => "agreeableness",
            Trait::Neuroticism => "neuroticism",
        }
    }

    /// Single-letter code used in the trait map file (`O`, `C`, ...).
    pub fn letter(self) -> char {
        match self {
            Trait::Openness => 'O',
            Trait::Conscientiousness => 'C',
            Trait::Extraversion => 'E',
            Trait::Agreeableness => 'A',
            Trait::Neuroticism => 'N',
        }
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Trait {
    type Err = ();

    /// Accepts the full name or the single-letter code, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        for t in Trait::ALL {
            if s.eq_ignore_ascii_case(t.name())
                || (s.len() == 1 && s.chars().next().map(|c| c.to_ascii_uppercase()) == Some(t.letter()))
            {
                return Ok(t);
            }
        }
        Err(())
    }
}

/// Five trait scores in canonical O, C, E, A, N order.
///
/// Used both for a user's inferred personality and for the trait projection
/// of a recommended genre multiset; the latter is not range-checked.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OceanVector {
    pub openness: f64,
    pub conscientiousness: f64,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
}

impl OceanVector {
    pub const ZERO: OceanVector = OceanVector::from_array([0.0; 5]);

    pub const fn from_array(v: [f64; 5]) -> Self {
        OceanVector {
            openness: v[0],
            conscientiousness: v[1],
            extraversion: v[2],
            agreeableness: v[3],
            neuroticism: v[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.openness,
            self.conscientiousness,
            self.extraversion,
            self.agreeableness,
            self.neuroticism,
        ]
    }

    pub fn get(&self, t: Trait) -> f64 {
        self.to_array()[t.index()]
    }

    pub fn set(&mut self, t: Trait, value: f64) {
        match t {
            Trait::Openness => self.openness = value,
            Trait::Conscientiousness => self.conscientiousness = value,
            Trait::Extraversion => self.extraversion = value,
            Trait::Agreeableness => self.agreeableness = value,
            Trait::Neuroticism => self.neuroticism = value,
        }
    }

    pub fn dot(&self, other: &OceanVector) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn is_zero(&self) -> bool {
        self.to_array().iter().all(|&x| x == 0.0)
    }

    /// True when every component is finite and inside `[0, 1]`.
    pub fn in_unit_cube(&self) -> bool {
        self.to_array()
            .iter()
            .all(|&x| x.is_finite() && (0.0..=1.0).contains(&x))
    }

    pub fn scaled(&self, factor: f64) -> OceanVector {
        let mut a = self.to_array();
        for x in &mut a {
            *x *= factor;
        }
        OceanVector::from_array(a)
    }
}

impl From<[f64; 5]> for OceanVector {
    fn from(v: [f64; 5]) -> Self {
        OceanVector::from_array(v)
    }
}

/// Cosine similarity; `None` when either vector has zero norm.
pub fn cosine(a: &OceanVector, b: &OceanVector) -> Option<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return None;
    }
    let c = a.dot(b) / (na * nb);
    Some(c.clamp(-1.0, 1.0))
}
