//! Cohort aggregation and the weighted FPx score.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FpxError;

/// Identifies one reported metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Pas,
    Gpa,
    Dp,
    Eo,
    Ilf,
    SnsrK,
    SnsvK,
    JaccardK,
    PrecisionK,
    RecallK,
}

impl MetricId {
    /// All ten, in report column order.
    pub const ALL: [MetricId; 10] = [
        MetricId::Pas,
        MetricId::Gpa,
        MetricId::Dp,
        MetricId::Eo,
        MetricId::Ilf,
        MetricId::SnsrK,
        MetricId::SnsvK,
        MetricId::JaccardK,
        MetricId::PrecisionK,
        MetricId::RecallK,
    ];

    /// The eight terms of the FPx sum.
    pub const FPX_TERMS: [MetricId; 8] = [
        MetricId::Pas,
        MetricId::Gpa,
        MetricId::Dp,
        MetricId::Eo,
        MetricId::Ilf,
        MetricId::JaccardK,
        MetricId::PrecisionK,
        MetricId::RecallK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Pas => "pas",
            MetricId::Gpa => "gpa",
            MetricId::Dp => "dp",
            MetricId::Eo => "eo",
            MetricId::Ilf => "ilf",
            MetricId::SnsrK => "snsr_k",
            MetricId::SnsvK => "snsv_k",
            MetricId::JaccardK => "jaccard_k",
            MetricId::PrecisionK => "precision_k",
            MetricId::RecallK => "recall_k",
        }
    }

    /// Computed once per cohort rather than averaged over users.
    pub fn is_cohort_level(self) -> bool {
        matches!(self, MetricId::Dp | MetricId::Eo | MetricId::SnsrK | MetricId::SnsvK)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or(())
    }
}

/// Aggregated metric values for one (dataset, backend, condition) cell.
/// `None` marks a metric with no defined value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricVector {
    pub pas: Option<f64>,
    pub gpa: Option<f64>,
    pub dp: Option<f64>,
    pub eo: Option<f64>,
    pub ilf: Option<f64>,
    pub jaccard_k: Option<f64>,
    pub precision_k: Option<f64>,
    pub recall_k: Option<f64>,
    pub snsr_k: Option<f64>,
    pub snsv_k: Option<f64>,
}

impl MetricVector {
    pub fn get(&self, m: MetricId) -> Option<f64> {
        match m {
            MetricId::Pas => self.pas,
            MetricId::Gpa => self.gpa,
            MetricId::Dp => self.dp,
            MetricId::Eo => self.eo,
            MetricId::Ilf => self.ilf,
            MetricId::SnsrK => self.snsr_k,
            MetricId::SnsvK => self.snsv_k,
            MetricId::JaccardK => self.jaccard_k,
            MetricId::PrecisionK => self.precision_k,
            MetricId::RecallK => self.recall_k,
        }
    }

    pub fn set(&mut self, m: MetricId, v: Option<f64>) {
        let slot = match m {
            MetricId::Pas => &mut self.pas,
            MetricId::Gpa => &mut self.gpa,
            MetricId::Dp => &mut self.dp,
            MetricId::Eo => &mut self.eo,
            MetricId::Ilf => &mut self.ilf,
            MetricId::SnsrK => &mut self.snsr_k,
            MetricId::SnsvK => &mut self.snsv_k,
            MetricId::JaccardK => &mut self.jaccard_k,
            MetricId::PrecisionK => &mut self.precision_k,
            MetricId::RecallK => &mut self.recall_k,
        };
        *slot = v;
    }

    /// Range invariants: every present value in `[0, 1]`, SNSV in `[0, 0.25]`.
    pub fn in_range(&self) -> bool {
        MetricId::ALL.iter().all(|&m| match self.get(m) {
            None => true,
            Some(v) if m == MetricId::SnsvK => (0.0..=0.25).contains(&v),
            Some(v) => (0.0..=1.0).contains(&v),
        })
    }
}

/// Non-negative term weights, one per FPx term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FpxWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub zeta: f64,
    pub eta: f64,
    pub mu: f64,
}

impl Default for FpxWeights {
    fn default() -> Self {
        FpxWeights::uniform(1.0)
    }
}

impl FpxWeights {
    pub fn uniform(w: f64) -> Self {
        FpxWeights {
            alpha: w,
            beta: w,
            gamma: w,
            delta: w,
            epsilon: w,
            zeta: w,
            eta: w,
            mu: w,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.as_array().iter().all(|w| w.is_finite() && *w >= 0.0)
    }

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.epsilon,
            self.zeta,
            self.eta,
            self.mu,
        ]
    }

    pub fn scaled(&self, f: f64) -> Self {
        let a = self.as_array();
        FpxWeights {
            alpha: a[0] * f,
            beta: a[1] * f,
            gamma: a[2] * f,
            delta: a[3] * f,
            epsilon: a[4] * f,
            zeta: a[5] * f,
            eta: a[6] * f,
            mu: a[7] * f,
        }
    }
}

/// `α·PAS + β·GPA + γ(1−DP) + δ(1−EO) + ε·ILF + ζ·Jaccard + η·Precision + μ·Recall`.
///
/// Jaccard enters positively even though a lower Jaccard means the prompt
/// moved the list more; SNSR and SNSV are not part of the score.
pub fn fpx(m: &MetricVector, w: &FpxWeights) -> Result<f64, FpxError> {
    let need = |id: MetricId| m.get(id).ok_or(FpxError::IncompleteVector(id.name()));
    Ok(w.alpha * need(MetricId::Pas)?
        + w.beta * need(MetricId::Gpa)?
        + w.gamma * (1.0 - need(MetricId::Dp)?)
        + w.delta * (1.0 - need(MetricId::Eo)?)
        + w.epsilon * need(MetricId::Ilf)?
        + w.zeta * need(MetricId::JaccardK)?
        + w.eta * need(MetricId::PrecisionK)?
        + w.mu * need(MetricId::RecallK)?)
}

/// Per-user metric values for one cell.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user_id: alloc::string::String,
    pub pas: Option<f64>,
    pub gpa: Option<f64>,
    pub ilf: Option<f64>,
    pub jaccard_k: Option<f64>,
    pub precision_k: Option<f64>,
    pub recall_k: Option<f64>,
}

impl UserMetrics {
    fn get(&self, m: MetricId) -> Option<f64> {
        match m {
            MetricId::Pas => self.pas,
            MetricId::Gpa => self.gpa,
            MetricId::Ilf => self.ilf,
            MetricId::JaccardK => self.jaccard_k,
            MetricId::PrecisionK => self.precision_k,
            MetricId::RecallK => self.recall_k,
            _ => None,
        }
    }
}

/// Cohort-level values computed once per cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CohortMetrics {
    pub dp: Option<f64>,
    pub eo: Option<f64>,
    pub snsr_k: Option<f64>,
    pub snsv_k: Option<f64>,
}

/// How many users contributed to each per-user mean.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DefinedCounts {
    pub users: usize,
    pub per_metric: Vec<(MetricId, usize)>,
}

/// Mean of each per-user metric over the users where it is defined; cohort
/// metrics pass through unchanged.
pub fn aggregate_over_users(users: &[UserMetrics], cohort: &CohortMetrics) -> (MetricVector, DefinedCounts) {
    let mut v = MetricVector {
        dp: cohort.dp,
        eo: cohort.eo,
        snsr_k: cohort.snsr_k,
        snsv_k: cohort.snsv_k,
        ..MetricVector::default()
    };
    let mut counts = DefinedCounts {
        users: users.len(),
        per_metric: Vec::new(),
    };
    for m in MetricId::ALL.into_iter().filter(|m| !m.is_cohort_level()) {
        let vals: Vec<f64> = users.iter().filter_map(|u| u.get(m)).collect();
        counts.per_metric.push((m, vals.len()));
        let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
        v.set(m, mean);
    }
    (v, counts)
}
