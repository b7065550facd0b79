//! `manifest.json`: resolved parameters, artifact version and file list.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, RawConfig};

pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    pub csv_schema: u32,
    pub experiment: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, String>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, files: &[String]) -> Self {
        Self {
            artifact: "nhbath".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            csv_schema: CSV_SCHEMA,
            experiment: cfg.experiment.name().into(),
            seed: cfg.seed,
            parameters: cfg.resolved.clone(),
            files: files.to_vec(),
        }
    }
}

pub fn write_manifest(path: &Path, cfg: &ExperimentConfig, files: &[String]) -> nhbath::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &Manifest::new(cfg, files))
        .map_err(|e| nhbath::Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Rebuilds the raw config recorded in a manifest.
pub fn config_from_manifest(text: &str) -> Result<RawConfig, String> {
    let m: Manifest = serde_json::from_str(text).map_err(|e| format!("bad manifest: {e}"))?;
    let mut raw = RawConfig::default();
    for (k, v) in &m.parameters {
        raw.set(k, v).map_err(|e| e.to_string())?;
    }
    if raw.get("experiment").is_none() {
        raw.set("experiment", &m.experiment).map_err(|e| e.to_string())?;
    }
    Ok(raw)
}
