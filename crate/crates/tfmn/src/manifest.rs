//! Stage directories and content-hash manifests.
//!
//! Each stage owns `<output>/<stage>/` and finishes by writing
//! `MANIFEST.json` there: sha256 of every input it read and every file it
//! wrote. `<output>/manifest.json` lists the stage manifests by hash. No
//! timestamps or absolute paths are recorded, so identical inputs and
//! settings give byte-identical manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formats::write_json;

pub const STAGE_MANIFEST: &str = "MANIFEST.json";
pub const RUN_MANIFEST: &str = "manifest.json";
const FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub format: u32,
    pub stage: String,
    /// Hash of the result-shaping settings.
    pub settings_sha256: String,
    /// Logical input name to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Path relative to the stage directory to content hash.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: u32,
    pub settings_sha256: String,
    /// Stage name to hash of its `MANIFEST.json`.
    pub stages: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Files below `dir`, as sorted `/`-separated relative paths.
pub fn list_files(dir: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).expect("below root");
                out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

/// Output directory of one stage, emptied when opened.
pub struct StageDir {
    root: PathBuf,
    name: &'static str,
    dir: PathBuf,
    inputs: BTreeMap<String, String>,
}

impl StageDir {
    pub fn open(root: &Path, name: &'static str) -> Result<StageDir> {
        let dir = root.join(name);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(StageDir { root: root.to_path_buf(), name, dir, inputs: BTreeMap::new() })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Absolute path of `rel`, creating parent directories.
    pub fn path(&self, rel: &str) -> Result<PathBuf> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(p)
    }

    pub fn write(&self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let p = self.path(rel)?;
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        write_json(&self.path(rel)?, value)
    }

    /// Record an external input file under a logical name.
    pub fn input_file(&mut self, label: impl Into<String>, path: &Path) -> Result<()> {
        let h = sha256_file(path)?;
        self.inputs.insert(label.into(), h);
        Ok(())
    }

    /// Record an input by a precomputed content hash.
    pub fn input_file_hash(&mut self, label: impl Into<String>, sha256: String) {
        self.inputs.insert(label.into(), sha256);
    }

    /// Record an upstream stage by the hash of its manifest.
    pub fn input_stage(&mut self, stage: &str) -> Result<()> {
        let p = self.root.join(stage).join(STAGE_MANIFEST);
        let h = sha256_file(&p)?;
        self.inputs.insert(format!("{stage}/{STAGE_MANIFEST}"), h);
        Ok(())
    }

    /// Hash everything written and record the stage in the run manifest.
    /// Later stages listed in `downstream` are dropped from the run
    /// manifest, since they no longer match this stage's outputs.
    pub fn finish(self, settings_sha256: &str, downstream: &[&str]) -> Result<StageManifest> {
        let mut outputs = BTreeMap::new();
        for rel in list_files(&self.dir)? {
            if rel == STAGE_MANIFEST {
                continue;
            }
            outputs.insert(rel.clone(), sha256_file(&self.dir.join(&rel))?);
        }
        let m = StageManifest {
            format: FORMAT,
            stage: self.name.to_string(),
            settings_sha256: settings_sha256.to_string(),
            inputs: self.inputs,
            outputs,
        };
        let mp = self.dir.join(STAGE_MANIFEST);
        write_json(&mp, &m)?;
        let run_path = self.root.join(RUN_MANIFEST);
        let mut run: RunManifest = if run_path.is_file() {
            crate::formats::read_json(&run_path)?
        } else {
            RunManifest::default()
        };
        if run.settings_sha256 != settings_sha256 {
            run.stages.clear();
        }
        run.format = FORMAT;
        run.settings_sha256 = settings_sha256.to_string();
        for d in downstream {
            run.stages.remove(*d);
        }
        run.stages.insert(self.name.to_string(), sha256_file(&mp)?);
        write_json(&run_path, &run)?;
        Ok(m)
    }
}

/// Fail with [`Error::MissingUpstreamArtifact`] unless `stage` completed.
pub fn require_stage(root: &Path, stage: &'static str) -> Result<()> {
    let manifest = root.join(stage).join(STAGE_MANIFEST);
    if manifest.is_file() {
        Ok(())
    } else {
        Err(Error::MissingUpstreamArtifact { stage, artifact: manifest })
    }
}

/// Path of an upstream stage's artifact, failing with
/// [`Error::MissingUpstreamArtifact`] unless that stage has completed.
pub fn upstream(root: &Path, stage: &'static str, rel: &str) -> Result<PathBuf> {
    require_stage(root, stage)?;
    let p = root.join(stage).join(rel);
    if !p.is_file() {
        return Err(Error::MissingUpstreamArtifact { stage, artifact: p });
    }
    Ok(p)
}
