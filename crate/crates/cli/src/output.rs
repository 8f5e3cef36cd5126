//! CSV tables with a leading provenance comment, written atomically per file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// Where and how a command writes its artifacts.
pub struct Sink {
    dir: PathBuf,
    comment: String,
}

impl Sink {
    /// `config_text` is hashed into the comment line of every file.
    pub fn new(dir: &Path, config_text: &str, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let hash = Sha256::digest(config_text.as_bytes());
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Sink {
            dir: dir.to_path_buf(),
            comment: format!(
                "# orthoasym {} config-sha256={hex} seed={seed}",
                env!("CARGO_PKG_VERSION")
            ),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_table(&self, name: &str, table: &Table) -> Result<PathBuf> {
        let path = self.path(name);
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.comment)?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

/// Shortest round-trip form in exponent notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
