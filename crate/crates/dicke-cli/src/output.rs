//! CSV and JSON emission.
//!
//! Every file starts with '#'-prefixed metadata: the artifact version,
//! the command, and the full resolved configuration sorted by key. No
//! timestamps or machine identifiers, so identical configurations produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub const ARTIFACT: &str = concat!("dicke-cli ", env!("CARGO_PKG_VERSION"));

/// In-memory CSV file: metadata comments, one header row, data rows.
pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(command: &str, config: &BTreeMap<String, String>) -> Csv {
        let mut lines = vec![
            format!("# artifact: {ARTIFACT}"),
            format!("# command: {command}"),
        ];
        for (key, value) in config {
            lines.push(format!("# {key} = {value}"));
        }
        Csv { lines }
    }

    pub fn comment(&mut self, text: &str) {
        self.lines.push(format!("# {text}"));
    }

    pub fn header(&mut self, columns: &[&str]) {
        self.lines.push(columns.join(","));
    }

    pub fn row(&mut self, cells: &[String]) {
        self.lines.push(cells.join(","));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

/// Shortest round-trip decimal form; '.' decimal separator always.
pub fn num(x: f64) -> String {
    x.to_string()
}

/// Empty cell for a missing value.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
