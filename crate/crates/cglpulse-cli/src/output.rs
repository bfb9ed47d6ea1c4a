//! Output files: 17-significant-digit CSV, atomic writes, manifest.

use anyhow::{Context, Result};
use cglpulse::archive::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST: &str = "manifest.json";
pub const FAILURE_MARKER: &str = "manifest.failed.json";

/// Round-trip exact decimal form of a double.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// CSV table held in memory and written in one atomic step.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_string(self) -> Result<String> {
        let bytes = self.writer.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {}", e.error()))?;
        Ok(String::from_utf8(bytes)?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CacheEntry {
    pub artifact: String,
    pub key: String,
    pub path: PathBuf,
    pub hit: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputEntry {
    pub path: PathBuf,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub config: crate::config::RunConfig,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub cache: Vec<CacheEntry>,
    pub residuals: serde_json::Map<String, serde_json::Value>,
    pub outputs: Vec<OutputEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureMarker {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub stage: String,
    pub error: String,
    pub outputs: Vec<OutputEntry>,
}

/// Run bookkeeping: stage timings, cache use, residuals and written files.
pub struct Recorder {
    pub dir: PathBuf,
    started: Instant,
    pub stage: String,
    pub stages: Vec<StageTiming>,
    pub cache: Vec<CacheEntry>,
    pub residuals: serde_json::Map<String, serde_json::Value>,
    pub outputs: Vec<OutputEntry>,
}

impl Recorder {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        for stale in [MANIFEST, FAILURE_MARKER] {
            let p = dir.join(stale);
            if p.exists() {
                std::fs::remove_file(&p).with_context(|| format!("removing {}", p.display()))?;
            }
        }
        Ok(Recorder {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            stage: "setup".into(),
            stages: Vec::new(),
            cache: Vec::new(),
            residuals: serde_json::Map::new(),
            outputs: Vec::new(),
        })
    }

    /// Run one named stage, recording its duration; errors carry the stage name.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let prev = std::mem::replace(&mut self.stage, name.to_string());
        let t0 = Instant::now();
        let out = f(self).with_context(|| format!("stage `{name}` failed"))?;
        self.stages.push(StageTiming { stage: name.to_string(), seconds: t0.elapsed().as_secs_f64() });
        self.stage = prev;
        Ok(out)
    }

    pub fn residual(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.residuals.insert(key.to_string(), v);
    }

    /// Path of a file inside the output directory, unless `path` is given.
    pub fn target(&self, name: &str, path: Option<&Path>) -> PathBuf {
        path.map(Path::to_path_buf).unwrap_or_else(|| self.dir.join(name))
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        write_atomic(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputEntry { path: path.to_path_buf(), bytes: contents.len(), sha256: sha256_hex(contents.as_bytes()) });
        Ok(())
    }

    pub fn write_table(&mut self, path: &Path, table: Table) -> Result<()> {
        let s = table.into_string()?;
        self.write(path, &s)
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(path, &s)
    }

    pub fn finish(self, experiment: &str, config: &crate::config::RunConfig) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: "cglpulse",
            version: env!("CARGO_PKG_VERSION"),
            experiment: experiment.to_string(),
            config: config.clone(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            stages: self.stages,
            cache: self.cache,
            residuals: self.residuals,
            outputs: self.outputs,
        };
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        write_atomic(&self.dir.join(MANIFEST), &s)?;
        Ok(manifest)
    }

    pub fn fail(&self, experiment: &str, err: &anyhow::Error) {
        let marker = FailureMarker {
            tool: "cglpulse",
            version: env!("CARGO_PKG_VERSION"),
            experiment: experiment.to_string(),
            stage: self.stage.clone(),
            error: format!("{err:#}"),
            outputs: self.outputs.clone(),
        };
        if let Ok(mut s) = serde_json::to_string_pretty(&marker) {
            s.push('\n');
            let _ = write_atomic(&self.dir.join(FAILURE_MARKER), &s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -13.221834412345678, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn table_renders_header_and_rows() {
        let mut t = Table::new(["a", "b"]).unwrap();
        t.row([num(1.0), opt(None)]).unwrap();
        assert_eq!(t.into_string().unwrap(), "a,b\n1.0000000000000000e0,\n");
    }
}
