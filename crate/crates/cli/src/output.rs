//! Output files: every JSON document carries the schema version, the tool
//! version and the effective configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::SCHEMA_VERSION;
use crate::CliError;

pub fn tool() -> Value {
    json!({"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")})
}

/// Common header of every JSON document.
pub fn envelope(command: &str, config: Option<&Value>, cli: &Value) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("tool".into(), tool());
    m.insert("command".into(), json!(command));
    if let Some(c) = config {
        m.insert("config".into(), c.clone());
    }
    m.insert("cli".into(), cli.clone());
    m
}

pub struct OutDir {
    pub dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Opens `name` and runs `f` on a buffered writer.
    pub fn write_with<F, E>(&self, name: &str, f: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), E>,
        E: std::fmt::Display,
    {
        let path = self.path(name);
        let io = |e: &dyn std::fmt::Display| CliError::Io(format!("cannot write {}: {e}", path.display()));
        let file = File::create(&path).map_err(|e| io(&e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(|e| io(&e))?;
        w.flush().map_err(|e| io(&e))?;
        Ok(path)
    }

    pub fn write_json(&self, name: &str, value: &Value) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w).map_err(serde_json::Error::io)
        })
    }
}
