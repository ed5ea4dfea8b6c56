//! TOML run configuration. Relative paths resolve against the directory of
//! the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fairalign_core::aggregate::FpxWeights;
use fairalign_core::metrics::{AgeGroups, Attribute};
use fairalign_core::personality::{OceanWeights, DEFAULT_DOMINANCE_THRESHOLD};
use fairalign_core::prompt::DEFAULT_K;
use fairalign_core::titles::DEFAULT_FUZZY_THRESHOLD;
use serde::{Deserialize, Serialize};

use crate::backend::BackendConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Movielens,
    Lastfm,
    Interchange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub format: DatasetFormat,
    pub ratings: Option<PathBuf>,
    pub movies: Option<PathBuf>,
    /// `UserID::Gender::Age::Occupation::Zip` demographics file.
    pub users: Option<PathBuf>,
    pub plays: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
    pub interchange: Option<PathBuf>,
    pub min_interactions: usize,
    pub rating_threshold: f64,
    pub malformed_tolerance: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            name: "dataset".into(),
            format: DatasetFormat::Movielens,
            ratings: None,
            movies: None,
            users: None,
            plays: None,
            profiles: None,
            sidecar: None,
            interchange: None,
            min_interactions: 200,
            rating_threshold: 4.0,
            malformed_tolerance: fairalign_core::ingest::DEFAULT_MALFORMED_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Explicit user ids; wins over `sample`.
    pub users: Vec<String>,
    /// Seeded sample size, stratified by the primary attribute.
    pub sample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersonalityConfig {
    pub trait_map: Option<PathBuf>,
    pub phrases: Option<PathBuf>,
    pub dominance_threshold: f64,
    pub weights: OceanWeights,
}

impl Default for PersonalityConfig {
    fn default() -> Self {
        PersonalityConfig {
            trait_map: None,
            phrases: None,
            dominance_threshold: DEFAULT_DOMINANCE_THRESHOLD,
            weights: OceanWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub cache: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "report".into(),
            cache: "cache/responses.ndjson".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub k: usize,
    /// Grouping attributes; the first drives the headline DP, EO, SNSR and
    /// SNSV values.
    pub attributes: Vec<Attribute>,
    /// Calls per prompt; above 1, items kept by a majority of replies win.
    pub n_repeat: usize,
    pub fuzzy_threshold: f64,
    pub dataset: DatasetConfig,
    pub selection: SelectionConfig,
    pub personality: PersonalityConfig,
    pub age_groups: AgeGroups,
    pub weights: FpxWeights,
    pub backends: Vec<BackendConfig>,
    pub output: OutputConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            k: DEFAULT_K,
            attributes: vec![Attribute::Gender, Attribute::AgeGroup],
            n_repeat: 1,
            fuzzy_threshold: DEFAULT_FUZZY_THRESHOLD,
            dataset: DatasetConfig::default(),
            selection: SelectionConfig::default(),
            personality: PersonalityConfig::default(),
            age_groups: AgeGroups::default(),
            weights: FpxWeights::default(),
            backends: vec![BackendConfig::oracle()],
            output: OutputConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(text).context("parsing config")?;
        c.base_dir = base_dir.to_path_buf();
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).with_context(|| format!("in {}", path.display()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            bail!("k must be >= 1");
        }
        if self.n_repeat == 0 {
            bail!("n_repeat must be >= 1");
        }
        if self.attributes.is_empty() {
            bail!("at least one grouping attribute is required");
        }
        if !self.weights.is_valid() {
            bail!("FPx weights must be finite and non-negative");
        }
        if self.backends.is_empty() {
            bail!("no backends configured");
        }
        let mut names: Vec<&str> = self.backends.iter().map(|b| b.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            bail!("backend names must be unique");
        }
        for b in &self.backends {
            b.validate().map_err(anyhow::Error::msg)?;
        }
        Ok(())
    }

    /// Keeps only the named backends, in config order.
    pub fn select_backends(&mut self, names: &[String]) -> Result<()> {
        if names.is_empty() {
            return Ok(());
        }
        for n in names {
            if !self.backends.iter().any(|b| &b.name == n) {
                bail!("unknown backend {n:?}");
            }
        }
        self.backends.retain(|b| names.contains(&b.name));
        Ok(())
    }

    /// Everything that shapes results, without output locations.
    pub fn snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("output");
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::parse(
            r#"
            seed = 3
            attributes = ["age-group"]
            [dataset]
            format = "lastfm"
            plays = "plays.tsv"
            [[backends]]
            name = "deepseek"
            kind = "chat_completion"
            base_url = "https://example.invalid/v1"
            model = "deepseek-chat"
            api_key_env = "DEEPSEEK_API_KEY"
            "#,
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.k, 15);
        assert_eq!(c.attributes, vec![Attribute::AgeGroup]);
        assert_eq!(c.dataset.min_interactions, 200);
        assert_eq!(c.backends[0].temperature, 0.0);
        assert_eq!(c.resolve(Path::new("plays.tsv")), PathBuf::from("/cfg/plays.tsv"));
        c.validate().unwrap();
        assert!(c.snapshot().get("output").is_none());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("sed = 1", Path::new(".")).is_err());
        let c = RunConfig::parse("k = 0", Path::new(".")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn backend_selection() {
        let mut c = RunConfig::default();
        assert!(c.select_backends(&["nope".into()]).is_err());
        c.select_backends(&["oracle".into()]).unwrap();
        assert_eq!(c.backends.len(), 1);
    }
}
