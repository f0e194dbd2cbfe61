use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Result files of one run. CSVs open with a `# seed=… config_sha256=…`
/// line and JSON documents wrap their payload with the same two fields.
/// Wall-clock data only goes to `meta.json`.
pub struct Output {
    dir: PathBuf,
    seed: u64,
    hash: String,
    files: Vec<String>,
    started: SystemTime,
}

impl Output {
    pub fn create(dir: &Path, seed: u64, hash: String) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            seed,
            hash,
            files: Vec::new(),
            started: SystemTime::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Registers a file some other writer will create and returns its path.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write_raw(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        std::fs::write(p, bytes)?;
        Ok(())
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> Result<()> {
        let mut buf = format!("# seed={} config_sha256={}\n", self.seed, self.hash).into_bytes();
        body(&mut buf)?;
        self.write_raw(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<()> {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "config_sha256": self.hash,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(json_err)?;
        text.push('\n');
        self.write_raw(name, text.as_bytes())
    }

    /// Writes `meta.json` with timings and the file list.
    pub fn finish(self, command: &str) -> Result<()> {
        let secs = |t: SystemTime| {
            t.duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0)
        };
        let now = SystemTime::now();
        let meta = json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config_sha256": self.hash,
            "started_unix": secs(self.started),
            "finished_unix": secs(now),
            "elapsed_seconds": now.duration_since(self.started).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&meta).map_err(json_err)?;
        std::fs::write(self.dir.join("meta.json"), text + "\n")?;
        Ok(())
    }
}

pub fn json_err(e: serde_json::Error) -> Error {
    Error::InvalidArgument(format!("json: {e}"))
}
