//! Output directory bookkeeping: CSV/JSON writers and the run manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Version of every file format written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// `λ̂` and `φ_*μ` moments used by every command.
#[derive(Clone, Debug, Serialize)]
pub struct Snapshot {
    pub lambda_hat: f64,
    pub lambda_half_width: f64,
    pub lambda_sd: f64,
    pub mean_phi: f64,
    pub var_phi: f64,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    schema_version: u32,
    artifact: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    master_seed: u64,
    workers: usize,
    started_at: String,
    finished_at: String,
    outputs: &'a [OutputRecord],
    snapshot: &'a Snapshot,
}

pub struct OutputDir {
    root: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.records.push(OutputRecord {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, csv: Csv) -> Result<()> {
        let bytes = csv.into_bytes()?;
        self.write(name, &bytes)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes `manifest.json`; it is not listed in itself.
    pub fn finish(
        self,
        command: &str,
        config_hash: &str,
        master_seed: u64,
        snapshot: &Snapshot,
        started: DateTime<Utc>,
    ) -> Result<Vec<OutputRecord>> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            artifact: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash,
            master_seed,
            workers: rayon::current_num_threads(),
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: &self.records,
            snapshot,
        };
        let path = self.root.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.records)
    }
}

/// In-memory CSV whose first column is `schema_version`.
pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(std::iter::once("schema_version").chain(header.iter().copied()))?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let version = SCHEMA_VERSION.to_string();
        let mut record = csv::ByteRecord::new();
        record.push_field(version.as_bytes());
        for f in fields {
            record.push_field(f.as_ref());
        }
        self.writer.write_byte_record(&record)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| anyhow::anyhow!("flushing CSV: {}", e.error()))
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
