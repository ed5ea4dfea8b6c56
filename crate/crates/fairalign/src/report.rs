//! Report files: CSV tables, the NDJSON summary, and plot data.
//!
//! | file                   | contents                                              |
//! |------------------------|-------------------------------------------------------|
//! | `metrics.csv`          | one row per (backend, condition), all ten metrics     |
//! | `fpx.csv`              | FPx per backend over the sensitive condition          |
//! | `comparison.csv`       | per metric and backend: neutral, sensitive, delta     |
//! | `summary.ndjson`       | run header, cells, FPx, per-user rows, missing cells  |
//! | `plot_tradeoff.csv`    | PAS vs DP arrow from neutral to sensitive per backend |
//! | `plot_metric_bars.csv` | long-form metric values for bar charts                |

use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fairalign_core::aggregate::MetricId;
use fairalign_core::domain::Domain;
use fairalign_core::metrics::Attribute;
use fairalign_core::prompt::PromptKind;
use serde::{Deserialize, Serialize};

use crate::harness::{CellReport, FpxRow, MissingCell, RunReport, UserRow};

pub const REPORT_FILES: [&str; 6] = [
    "metrics.csv",
    "fpx.csv",
    "comparison.csv",
    "summary.ndjson",
    "plot_tradeoff.csv",
    "plot_metric_bars.csv",
];

const CONDITIONS: [PromptKind; 2] = [PromptKind::Neutral, PromptKind::Sensitive];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    /// `complete`, or `PARTIAL` when any cell is missing.
    pub status: String,
    pub partial: bool,
    pub dataset: String,
    pub domain: Domain,
    pub k: usize,
    pub seed: u64,
    pub primary_attribute: Attribute,
    pub users: Vec<String>,
    pub missing_cells: usize,
    pub config: serde_json::Value,
    pub response_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SummaryLine {
    Run(RunHeader),
    Cell(CellReport),
    Fpx(FpxRow),
    User(UserRow),
    Missing(MissingCell),
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn metrics_csv(r: &RunReport) -> Result<Vec<u8>> {
    let mut header = vec!["backend", "model", "condition", "users"];
    header.extend(MetricId::ALL.iter().map(|m| m.name()));
    let rows = r
        .cells
        .iter()
        .map(|c| {
            let mut row = vec![
                c.backend.clone(),
                c.model.clone(),
                c.condition.to_string(),
                c.users.to_string(),
            ];
            row.extend(MetricId::ALL.iter().map(|m| num(c.metrics.get(*m))));
            row
        })
        .collect();
    csv_bytes(&header, rows)
}

fn fpx_csv(r: &RunReport) -> Result<Vec<u8>> {
    let rows = r
        .fpx
        .iter()
        .map(|f| vec![f.backend.clone(), num(f.fpx), f.missing.clone().unwrap_or_default()])
        .collect();
    csv_bytes(&["backend", "fpx", "note"], rows)
}

fn backends(r: &RunReport) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for c in &r.cells {
        if !out.contains(&c.backend.as_str()) {
            out.push(&c.backend);
        }
    }
    out
}

fn value(r: &RunReport, backend: &str, cond: PromptKind, m: MetricId) -> Option<f64> {
    r.cell(backend, cond).and_then(|c| c.metrics.get(m))
}

fn comparison_csv(r: &RunReport) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for m in MetricId::ALL {
        for b in backends(r) {
            let n = value(r, b, PromptKind::Neutral, m);
            let s = value(r, b, PromptKind::Sensitive, m);
            let delta = n.zip(s).map(|(n, s)| s - n);
            rows.push(vec![m.name().to_string(), b.to_string(), num(n), num(s), num(delta)]);
        }
    }
    csv_bytes(&["metric", "backend", "neutral", "sensitive", "delta"], rows)
}

fn tradeoff_csv(r: &RunReport) -> Result<Vec<u8>> {
    let rows = backends(r)
        .into_iter()
        .map(|b| {
            vec![
                b.to_string(),
                num(value(r, b, PromptKind::Neutral, MetricId::Pas)),
                num(value(r, b, PromptKind::Neutral, MetricId::Dp)),
                num(value(r, b, PromptKind::Sensitive, MetricId::Pas)),
                num(value(r, b, PromptKind::Sensitive, MetricId::Dp)),
            ]
        })
        .collect();
    csv_bytes(
        &["backend", "pas_neutral", "dp_neutral", "pas_sensitive", "dp_sensitive"],
        rows,
    )
}

fn bars_csv(r: &RunReport) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for m in MetricId::ALL {
        for b in backends(r) {
            for cond in CONDITIONS {
                rows.push(vec![
                    m.name().to_string(),
                    b.to_string(),
                    cond.to_string(),
                    num(value(r, b, cond, m)),
                ]);
            }
        }
    }
    csv_bytes(&["metric", "backend", "condition", "value"], rows)
}

pub fn summary_lines(r: &RunReport) -> Vec<SummaryLine> {
    let partial = r.is_partial();
    let mut out = vec![SummaryLine::Run(RunHeader {
        status: if partial { "PARTIAL" } else { "complete" }.into(),
        partial,
        dataset: r.dataset.clone(),
        domain: r.domain,
        k: r.k,
        seed: r.seed,
        primary_attribute: r.primary_attribute,
        users: r.users.clone(),
        missing_cells: r.missing.len(),
        config: r.config.clone(),
        response_digest: r.response_digest.clone(),
    })];
    out.extend(r.cells.iter().cloned().map(SummaryLine::Cell));
    out.extend(r.fpx.iter().cloned().map(SummaryLine::Fpx));
    out.extend(r.user_rows.iter().cloned().map(SummaryLine::User));
    out.extend(r.missing.iter().cloned().map(SummaryLine::Missing));
    out
}

fn summary_bytes(r: &RunReport) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    crate::interchange::write_ndjson(&mut buf, summary_lines(r))?;
    Ok(buf)
}

/// Rebuilds a report from `summary.ndjson`.
pub fn read_summary(reader: impl BufRead) -> Result<RunReport> {
    let lines: Vec<SummaryLine> = crate::interchange::read_ndjson(reader)?;
    let mut header = None;
    let (mut cells, mut fpx, mut user_rows, mut missing) = (vec![], vec![], vec![], vec![]);
    for l in lines {
        match l {
            SummaryLine::Run(h) => header = Some(h),
            SummaryLine::Cell(c) => cells.push(c),
            SummaryLine::Fpx(f) => fpx.push(f),
            SummaryLine::User(u) => user_rows.push(u),
            SummaryLine::Missing(m) => missing.push(m),
        }
    }
    let Some(h) = header else {
        bail!("summary has no run record");
    };
    Ok(RunReport {
        dataset: h.dataset,
        domain: h.domain,
        k: h.k,
        seed: h.seed,
        primary_attribute: h.primary_attribute,
        users: h.users,
        cells,
        fpx,
        user_rows,
        missing,
        config: h.config,
        response_digest: h.response_digest,
    })
}

/// File name and contents of every report file.
pub fn render_report(r: &RunReport) -> Result<Vec<(&'static str, Vec<u8>)>> {
    Ok(vec![
        (REPORT_FILES[0], metrics_csv(r)?),
        (REPORT_FILES[1], fpx_csv(r)?),
        (REPORT_FILES[2], comparison_csv(r)?),
        (REPORT_FILES[3], summary_bytes(r)?),
        (REPORT_FILES[4], tradeoff_csv(r)?),
        (REPORT_FILES[5], bars_csv(r)?),
    ])
}

/// Writes all report files into `dir`. Everything is rendered and staged
/// first, so an unwritable directory leaves no report file behind.
pub fn emit_report(r: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = render_report(r)?;
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut staged = Vec::new();
    for (name, bytes) in &files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e).with_context(|| format!("writing into {}", dir.display()));
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut out = Vec::new();
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).with_context(|| format!("moving {} into place", dest.display()))?;
        out.push(dest);
    }
    Ok(out)
}
