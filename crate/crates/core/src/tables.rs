//! Bundled published metric values and the FPx reproduction check.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::aggregate::{fpx, FpxWeights, MetricId, MetricVector};
use crate::error::ConfigFileError;

const METRICS_CSV: &str = include_str!("../data/published_tables.csv");
const FPX_CSV: &str = include_str!("../data/published_fpx.csv");

/// Allowed absolute difference between a recomputed and a published score.
pub const TABLE_TOLERANCE: f64 = 0.001;

/// One (dataset, model) pair.
pub type CellKey = (String, String);

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedTables {
    /// Metric vectors under each condition, keyed by (dataset, model).
    pub neutral: BTreeMap<CellKey, MetricVector>,
    pub sensitive: BTreeMap<CellKey, MetricVector>,
    /// Published FPx per (dataset, model), in file order.
    pub fpx: Vec<(CellKey, f64)>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .skip(1)
}

fn bad(line: usize, reason: impl Into<String>) -> ConfigFileError {
    ConfigFileError {
        line,
        reason: reason.into(),
    }
}

fn parse_value(line: usize, s: &str) -> Result<f64, ConfigFileError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| bad(line, format!("bad number {s:?}")))
}

impl PublishedTables {
    /// The copy shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(METRICS_CSV, FPX_CSV).expect("bundled tables are well-formed")
    }

    /// Parses `dataset,model,condition,metric,value` and `dataset,model,fpx`
    /// files. `#` lines and blank lines are ignored, as is each header row.
    pub fn parse(metrics_csv: &str, fpx_csv: &str) -> Result<Self, ConfigFileError> {
        let mut t = PublishedTables {
            neutral: BTreeMap::new(),
            sensitive: BTreeMap::new(),
            fpx: Vec::new(),
        };
        for (n, line) in data_lines(metrics_csv) {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let [dataset, model, condition, metric, value] = f[..] else {
                return Err(bad(n, "expected 5 fields"));
            };
            let metric: MetricId = metric
                .parse()
                .map_err(|_| bad(n, format!("unknown metric {metric:?}")))?;
            let table = match condition {
                "neutral" => &mut t.neutral,
                "sensitive" => &mut t.sensitive,
                other => return Err(bad(n, format!("unknown condition {other:?}"))),
            };
            table
                .entry((dataset.to_string(), model.to_string()))
                .or_default()
                .set(metric, Some(parse_value(n, value)?));
        }
        for (n, line) in data_lines(fpx_csv) {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let [dataset, model, value] = f[..] else {
                return Err(bad(n, "expected 3 fields"));
            };
            t.fpx
                .push(((dataset.to_string(), model.to_string()), parse_value(n, value)?));
        }
        Ok(t)
    }
}

/// Result of recomputing one published score.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCheck {
    pub dataset: String,
    pub model: String,
    pub published: f64,
    /// `None` when the metric vector for the cell is incomplete.
    pub recomputed: Option<f64>,
}

impl TableCheck {
    pub fn diff(&self) -> Option<f64> {
        self.recomputed.map(|r| r - self.published)
    }

    pub fn passed(&self) -> bool {
        self.diff().is_some_and(|d| d.abs() <= TABLE_TOLERANCE)
    }
}

/// Recomputes FPx from the sensitive-condition vectors for every published
/// score.
pub fn verify_tables(tables: &PublishedTables, weights: &FpxWeights) -> Vec<TableCheck> {
    tables
        .fpx
        .iter()
        .map(|((dataset, model), published)| TableCheck {
            dataset: dataset.clone(),
            model: model.clone(),
            published: *published,
            recomputed: tables
                .sensitive
                .get(&(dataset.clone(), model.clone()))
                .and_then(|v| fpx(v, weights).ok()),
        })
        .collect()
}

/// Fixed-width diff table, one row per check plus a trailing verdict line.
pub fn render_checks(checks: &[TableCheck]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:<10} {:>9} {:>10} {:>8}  status",
        "dataset", "model", "published", "recomputed", "diff"
    );
    for c in checks {
        let (r, d) = match (c.recomputed, c.diff()) {
            (Some(r), Some(d)) => (format!("{r:.3}"), format!("{d:+.3}")),
            _ => ("missing".to_string(), "-".to_string()),
        };
        let _ = writeln!(
            out,
            "{:<10} {:<10} {:>9.3} {:>10} {:>8}  {}",
            c.dataset,
            c.model,
            c.published,
            r,
            d,
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    let _ = writeln!(out, "{} of {} cells within ±{TABLE_TOLERANCE}", checks.len() - failed, checks.len());
    out
}
