use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// CSV table with a provenance comment line followed by the header.
pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new(config_sha256: &str, seed: Option<u64>, header: &[&str]) -> Self {
        let mut buf = format!("# config_sha256={config_sha256}");
        if let Some(s) = seed {
            let _ = write!(buf, " seed={s}");
        }
        buf.push('\n');
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self { buf, width: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.width);
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn floats(&mut self, fields: &[f64]) {
        let v: Vec<String> = fields.iter().map(|x| x.to_string()).collect();
        self.row(&v);
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }
}

/// Files written by one command, in order.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    /// Human-readable summary lines for stdout.
    pub summary: Vec<String>,
}

impl Outputs {
    pub fn csv(&mut self, dir: &Path, name: &str, csv: &Csv) -> Result<()> {
        self.text(dir, name, csv.as_str())
    }

    pub fn json<S: Serialize>(&mut self, dir: &Path, name: &str, value: &S) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(dir, name, &s)
    }

    fn text(&mut self, dir: &Path, name: &str, body: &str) -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }

    pub fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }
}
