//! Artifact writing: CSV tables and versioned JSON summaries, each written
//! to a temporary file in the target directory and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::{Error, Result};

/// Version of the JSON summary layout.
pub const SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.flush().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// Decimal text of a float; non-finite values as `inf`, `-inf`, `nan`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

pub struct Artifacts<'a> {
    dir: PathBuf,
    config: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl<'a> Artifacts<'a> {
    pub fn new(dir: PathBuf, config: &'a RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self { dir, config, written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `name` with the given header and rows when CSV output is on.
    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        if !self.config.wants(Format::Csv) {
            return Ok(());
        }
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| io_err(&path, e))?;
        }
        let bytes = w.into_inner().map_err(|e| io_err(&path, e))?;
        write_atomic(&path, &bytes)?;
        self.written.push(path);
        Ok(())
    }

    /// Writes the summary `name` when JSON output is on. The envelope
    /// carries the schema and artifact versions, the configuration echo and,
    /// unless disabled, wall-clock timings.
    pub fn summary<T: Serialize>(&mut self, name: &str, command: &str, status: &str, result: &T, seconds: f64) -> Result<()> {
        if !self.config.wants(Format::Json) {
            return Ok(());
        }
        let path = self.dir.join(name);
        let timings: Value = if self.config.output.record_timings { json!({ "total_seconds": seconds }) } else { Value::Null };
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "status": status,
            "config": self.config,
            "result": result,
            "timings": timings,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| io_err(&path, e))?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        self.written.push(path);
        Ok(())
    }
}
