//! Canonical newline-delimited JSON interchange.
//!
//! One object per line, discriminated by `type`:
//!
//! ```text
//! {"type":"dataset","domain":"movie"}
//! {"type":"item","item_id":"2","title":"Jumanji (1995)","genres":["Adventure"],"domain":"movie"}
//! {"type":"user","user_id":"1","demographics":{"gender":"female","age":18}}
//! {"type":"interaction","user_id":"1","item_id":"122","weight":5.0,"timestamp":838985046}
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use anyhow::{bail, Context, Result};
use fairalign_core::domain::{Catalog, Demographics, Domain, InteractionRecord, ItemCatalogEntry};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::datasets::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Dataset { domain: Domain },
    Item(ItemCatalogEntry),
    User { user_id: String, demographics: Demographics },
    Interaction(InteractionRecord),
}

/// Writes one JSON object per line.
pub fn write_ndjson<T: Serialize>(mut w: impl Write, rows: impl IntoIterator<Item = T>) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one JSON object per non-blank line.
pub fn read_ndjson<T: DeserializeOwned>(r: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("line {}", i + 1))?);
    }
    Ok(out)
}

pub fn dataset_records(d: &Dataset) -> Vec<Record> {
    let mut out = vec![Record::Dataset { domain: d.domain }];
    out.extend(d.catalog.entries().iter().cloned().map(Record::Item));
    out.extend(d.demographics.iter().map(|(u, dem)| Record::User {
        user_id: u.clone(),
        demographics: dem.clone(),
    }));
    out.extend(d.interactions.iter().cloned().map(Record::Interaction));
    out
}

pub fn dataset_from_records(records: Vec<Record>) -> Result<Dataset> {
    let mut domain = None;
    let mut items = Vec::new();
    let mut demographics = BTreeMap::new();
    let mut interactions = Vec::new();
    for r in records {
        match r {
            Record::Dataset { domain: d } => domain = Some(d),
            Record::Item(i) => items.push(i),
            Record::User { user_id, demographics: d } => {
                demographics.insert(user_id, d);
            }
            Record::Interaction(i) => interactions.push(i),
        }
    }
    let Some(domain) = domain else {
        bail!("interchange file has no dataset record");
    };
    Ok(Dataset {
        domain,
        interactions,
        catalog: Catalog::new(items),
        demographics,
        reports: Vec::new(),
        genre_coverage: None,
    })
}
