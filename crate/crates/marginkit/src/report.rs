//! Report file writers.
//!
//! Every file carries the run's seed, config hash and tool version: JSON as
//! top-level fields, CSV as a leading `#` comment line.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::CliError;

/// Identifies the run that produced a file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub version: &'static str,
}

impl Provenance {
    fn comment(&self) -> String {
        format!(
            "# seed={} config_hash={} version={}\n",
            self.seed, self.config_hash, self.version
        )
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

/// Collects files and writes them once everything has been computed.
#[derive(Debug)]
pub struct Writer {
    dir: PathBuf,
    provenance: Provenance,
    files: Vec<(String, String)>,
}

impl Writer {
    pub fn new(dir: PathBuf, provenance: Provenance) -> Self {
        Self {
            dir,
            provenance,
            files: Vec::new(),
        }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        let stamped = Stamped {
            provenance: &self.provenance,
            body,
        };
        let mut text = serde_json::to_string_pretty(&stamped).map_err(|e| CliError::Portfolio(e.to_string()))?;
        text.push('\n');
        self.files.push((name.into(), text));
        Ok(())
    }

    /// `rows` are already formatted cells.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(header)
            .map_err(|e| CliError::Portfolio(e.to_string()))?;
        for row in rows {
            out.write_record(row).map_err(|e| CliError::Portfolio(e.to_string()))?;
        }
        let bytes = out.into_inner().map_err(|e| CliError::Portfolio(e.to_string()))?;
        let mut text = self.provenance.comment();
        text.push_str(&String::from_utf8_lossy(&bytes));
        self.files.push((name.into(), text));
        Ok(())
    }

    /// Writes every file and returns their paths in creation order.
    pub fn finish(self) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&self.dir).map_err(|source| CliError::Write {
            path: self.dir.clone(),
            source,
        })?;
        let mut paths = Vec::with_capacity(self.files.len());
        for (name, text) in self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, text).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Lowercase hex of a digest.
pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
