use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use afc_core::io::Meta;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

/// Per-stage seed: the first eight bytes of SHA-256 over `(seed, stage)`.
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Profile,
    Pulse,
    Histogram,
    Fringe,
    Trace,
    Report,
    Table,
    Plot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub kind: ArtifactKind,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub kind: ArtifactKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::schema("", format!("manifest: {e}")))
    }
}

/// Shared state of one scenario execution.
pub struct RunContext<'a> {
    pub config: &'a ScenarioConfig,
    pub config_hash: String,
    pub stages: Vec<StageTiming>,
    pub artifacts: Vec<Artifact>,
}

impl<'a> RunContext<'a> {
    pub fn new(config: &'a ScenarioConfig) -> Self {
        Self {
            config,
            config_hash: config.hash(),
            stages: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn seed(&self, stage: &str) -> u64 {
        derive_seed(self.config.seed, stage)
    }

    /// Runs `f` as stage `name`, recording its wall time and tagging its error.
    pub fn stage<T, E, F>(&mut self, name: &str, f: F) -> Result<T>
    where
        E: std::error::Error + Send + Sync + 'static,
        F: FnOnce() -> std::result::Result<T, E>,
    {
        let start = Instant::now();
        let out = f().map_err(|e| HarnessError::stage(name, e));
        let seconds = start.elapsed().as_secs_f64();
        match self.stages.iter_mut().find(|s| s.name == name) {
            Some(s) => s.seconds += seconds,
            None => self.stages.push(StageTiming {
                name: name.into(),
                seconds,
            }),
        }
        out
    }

    /// Metadata lines for CSV headers.
    pub fn meta(&self, title: &str) -> Meta {
        let mut m = Meta::new();
        m.insert("config_hash".into(), self.config_hash.clone());
        m.insert("scenario".into(), self.config.scenario.name().into());
        m.insert("title".into(), title.into());
        m
    }

    pub fn add_csv<F>(&mut self, file_name: &str, kind: ArtifactKind, title: &str, write: F)
    where
        F: FnOnce(&mut Vec<u8>, &Meta) -> std::io::Result<()>,
    {
        let mut bytes = Vec::new();
        write(&mut bytes, &self.meta(title)).expect("writing to memory cannot fail");
        self.artifacts.push(Artifact {
            file_name: file_name.into(),
            kind,
            bytes,
        });
    }

    /// JSON report with the config hash as its first field.
    pub fn add_report<S: Serialize>(&mut self, file_name: &str, report: &S) {
        let body = serde_json::to_value(report).expect("reports serialize");
        let mut doc = serde_json::Map::new();
        doc.insert("config_hash".into(), self.config_hash.clone().into());
        doc.insert("scenario".into(), self.config.scenario.name().into());
        match body {
            serde_json::Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("report".into(), other);
            }
        }
        let mut bytes =
            serde_json::to_vec_pretty(&serde_json::Value::Object(doc)).expect("reports serialize");
        bytes.push(b'\n');
        self.artifacts.push(Artifact {
            file_name: file_name.into(),
            kind: ArtifactKind::Report,
            bytes,
        });
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(bytes)
        .map_err(|e| HarnessError::io(path, e))?;
    tmp.flush().map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

/// Writes every artifact and then the manifest into `dir`.
pub fn persist(dir: &Path, ctx: RunContext<'_>) -> Result<(RunManifest, PathBuf)> {
    let mut outputs = Vec::with_capacity(ctx.artifacts.len());
    for a in &ctx.artifacts {
        write_atomic(&dir.join(&a.file_name), &a.bytes)?;
        outputs.push(OutputEntry {
            path: a.file_name.clone(),
            kind: a.kind,
        });
    }
    let manifest = RunManifest {
        scenario: ctx.config.scenario.name().into(),
        config_hash: ctx.config_hash,
        seed: ctx.config.seed,
        tool_version: TOOL_VERSION.into(),
        stages: ctx.stages,
        outputs,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;
    Ok((manifest, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(7, "detect"), derive_seed(7, "detect"));
        assert_ne!(derive_seed(7, "detect"), derive_seed(7, "synthesize"));
        assert_ne!(derive_seed(7, "detect"), derive_seed(8, "detect"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
