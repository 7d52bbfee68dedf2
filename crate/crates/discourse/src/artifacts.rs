//! JSON and CSV outputs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use discourse_core::analytics::PlotRow;
use discourse_core::metrics::ConfusionMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ProjectConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Envelope around every JSON artifact: what produced it, with which seeds
/// and configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub kind: String,
    pub tool_version: String,
    pub seeds: BTreeMap<String, u64>,
    pub config: ProjectConfig,
    pub payload: T,
}

impl<T> Artifact<T> {
    pub fn new(kind: &str, config: &ProjectConfig, seeds: &[(&str, u64)], payload: T) -> Self {
        Artifact {
            kind: kind.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seeds: seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            config: config.clone(),
            payload,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

/// Reads an artifact and checks its kind.
pub fn read_artifact<T: DeserializeOwned>(path: &Path, kind: &str) -> anyhow::Result<Artifact<T>> {
    let a: Artifact<T> = read_json(path)?;
    anyhow::ensure!(a.kind == kind, "{} holds a `{}` artifact, expected `{kind}`", path.display(), a.kind);
    Ok(a)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long format: one column per key, then value, count, ci_lo, ci_hi.
/// Missing values are empty cells.
pub fn write_plot_csv<W: Write>(writer: W, rows: &[PlotRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let key_names: Vec<&str> = rows
        .first()
        .map(|r| r.keys.iter().map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    let mut header: Vec<&str> = key_names.clone();
    header.extend(["value", "count", "ci_lo", "ci_hi"]);
    w.write_record(&header)?;
    for r in rows {
        let mut record: Vec<String> = r.keys.iter().map(|(_, v)| v.clone()).collect();
        record.extend([opt(r.value), r.count.to_string(), opt(r.ci_lo), opt(r.ci_hi)]);
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are true labels, columns predictions; the first column names the row.
pub fn write_confusion_csv<W: Write, L: std::fmt::Display>(writer: W, cm: &ConfusionMatrix<L>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["true\\pred".to_string()];
    header.extend(cm.labels.iter().map(|l| l.to_string()));
    w.write_record(&header)?;
    for (label, row) in cm.labels.iter().zip(&cm.counts) {
        let mut record = vec![label.to_string()];
        record.extend(row.iter().map(|c| c.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
