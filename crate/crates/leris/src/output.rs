//! CSV tables and their JSON sidecars.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use leris_core::sweep::{Cell, Table};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// One CSV field. Integers are written as integers and reals in Rust's
/// shortest round-trip form, so a table re-parses to the same values.
pub fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Real(x) => x.to_string(),
    }
}

/// Writes `header` and `rows` as CSV.
pub fn write_csv<W: Write>(out: W, header: &str, rows: &[Vec<String>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.split(','))?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_rows(t: &Table) -> Vec<Vec<String>> {
    t.rows.iter().map(|r| r.iter().map(cell_text).collect()).collect()
}

pub fn table_csv(t: &Table) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, t.header, &table_rows(t)).expect("writing to memory");
    buf
}

/// Digest of the configuration that determines the results. The output
/// directory is blanked first: it changes where files go, not what they hold.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.out_dir.clear();
    let digest = Sha256::digest(c.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    pub seed: u64,
    pub trials: usize,
    pub rows: usize,
    pub config_sha256: String,
    pub version: &'static str,
}

impl Meta {
    pub fn new(command: &str, figure: Option<&str>, cfg: &RunConfig, rows: usize) -> Self {
        Self {
            command: command.into(),
            figure: figure.map(str::to_string),
            seed: cfg.seed,
            trials: cfg.trials,
            rows,
            config_sha256: config_hash(cfg),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("meta serialises");
        s.push('\n');
        s
    }
}

/// Creates `dir` if needed and writes `name` into it.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}
