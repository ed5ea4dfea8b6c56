use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{Demographics, UserProfile};
use crate::ocean::OceanVector;
use crate::personality::dominant_traits;

/// Groups smaller than this are left out of between-group comparisons.
pub const MIN_GROUP_SIZE: usize = 2;

/// Attribute a cohort can be partitioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attribute {
    Gender,
    AgeGroup,
    Occupation,
    Country,
    DominantTrait,
}

impl Attribute {
    pub fn name(self) -> &'static str {
        match self {
            Attribute::Gender => "gender",
            Attribute::AgeGroup => "age-group",
            Attribute::Occupation => "occupation",
            Attribute::Country => "country",
            Attribute::DominantTrait => "dominant-trait",
        }
    }

    pub fn is_demographic(self) -> bool {
        self != Attribute::DominantTrait
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "gender" => Ok(Attribute::Gender),
            "age" | "age-group" => Ok(Attribute::AgeGroup),
            "occupation" => Ok(Attribute::Occupation),
            "country" => Ok(Attribute::Country),
            "dominant-trait" | "trait" | "personality" => Ok(Attribute::DominantTrait),
            other => Err(format!("unknown attribute `{other}`")),
        }
    }
}

/// Age bucket boundaries. Ages in between belong to neither bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgeGroups {
    /// Ages strictly below this are "young".
    pub young_below: u32,
    /// Ages at or above this are "senior".
    pub senior_from: u32,
}

impl Default for AgeGroups {
    fn default() -> Self {
        AgeGroups {
            young_below: 35,
            senior_from: 55,
        }
    }
}

impl AgeGroups {
    pub fn label(&self, age: u32) -> Option<&'static str> {
        if age < self.young_below {
            Some("young")
        } else if age >= self.senior_from {
            Some("senior")
        } else {
            None
        }
    }
}

/// Group label per user for one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub attribute: Attribute,
    pub labels: BTreeMap<String, String>,
}

impl GroupAssignment {
    pub fn new(attribute: Attribute) -> Self {
        GroupAssignment {
            attribute,
            labels: BTreeMap::new(),
        }
    }

    pub fn assign(&mut self, user: impl Into<String>, label: impl Into<String>) {
        self.labels.insert(user.into(), label.into());
    }

    /// Label from demographics; users lacking the attribute stay ungrouped.
    pub fn demographic_label(attribute: Attribute, d: &Demographics, ages: &AgeGroups) -> Option<String> {
        match attribute {
            Attribute::Gender => d.gender.map(|g| g.label().to_string()),
            Attribute::AgeGroup => d.age.and_then(|a| ages.label(a)).map(ToString::to_string),
            Attribute::Occupation => d.occupation.clone(),
            Attribute::Country => d.country.clone(),
            Attribute::DominantTrait => None,
        }
    }

    pub fn from_demographics<'a>(
        attribute: Attribute,
        profiles: impl IntoIterator<Item = &'a UserProfile>,
        ages: &AgeGroups,
    ) -> Self {
        let mut g = GroupAssignment::new(attribute);
        for p in profiles {
            if let Some(l) = Self::demographic_label(attribute, &p.demographics, ages) {
                g.assign(p.user_id.clone(), l);
            }
        }
        g
    }

    /// Groups users by their strongest dominant trait, e.g. `openness-high`.
    pub fn from_traits<'a>(
        vectors: impl IntoIterator<Item = (&'a String, &'a OceanVector)>,
        threshold: f64,
    ) -> Self {
        let mut g = GroupAssignment::new(Attribute::DominantTrait);
        for (u, p) in vectors {
            if let Some((t, l)) = dominant_traits(p, threshold).first() {
                g.assign(u.clone(), format!("{}-{}", t.name(), l.name()));
            }
        }
        g
    }

    pub fn label(&self, user: &str) -> Option<&str> {
        self.labels.get(user).map(String::as_str)
    }

    /// Members per label, restricted to users accepted by `keep`.
    pub fn members(&self, mut keep: impl FnMut(&str) -> bool) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (u, l) in &self.labels {
            if keep(u) {
                out.entry(l.as_str()).or_default().push(u.as_str());
            }
        }
        out
    }
}
