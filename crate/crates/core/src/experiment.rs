//! Run records: which files a command emitted, with content hashes, so a
//! later `check-manifest` can confirm nothing changed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::write_json;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: RunConfig,
    pub command: Vec<String>,
    pub wall_time_s: f64,
    pub files: Vec<ManifestEntry>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl ExperimentRecord {
    pub fn new(config: RunConfig, command: Vec<String>) -> Self {
        Self { config, command, wall_time_s: 0.0, files: Vec::new(), checks: Vec::new(), passed: true }
    }

    /// Hashes `path`, which must live under `root`.
    pub fn add_file(&mut self, root: &Path, path: &Path) -> Result<()> {
        let rel = path
            .strip_prefix(root)
            .map_err(|_| Error::InvalidValue(format!("{} is outside {}", path.display(), root.display())))?
            .to_path_buf();
        let bytes = fs::metadata(path)?.len();
        self.files.retain(|e| e.path != rel);
        self.files.push(ManifestEntry { path: rel, sha256: sha256_file(path)?, bytes });
        Ok(())
    }

    pub fn add_check(&mut self, name: impl Into<String>, passed: bool, value: f64) {
        self.passed &= passed;
        self.checks.push(CheckOutcome { name: name.into(), passed, value });
    }

    /// Writes `manifest.json` into `root`.
    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        let path = root.join(MANIFEST);
        write_json(&path, self)?;
        Ok(path)
    }
}

/// Why a manifest entry no longer matches the disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMismatch {
    pub path: PathBuf,
    pub reason: String,
}

/// Re-hashes every file listed in `root/manifest.json`.
pub fn check_manifest(root: &Path) -> Result<Vec<ManifestMismatch>> {
    let record: ExperimentRecord = crate::io::read_json(&root.join(MANIFEST))?;
    let mut bad = Vec::new();
    for e in &record.files {
        let full = root.join(&e.path);
        match sha256_file(&full) {
            Ok(h) if h == e.sha256 => {}
            Ok(h) => bad.push(ManifestMismatch { path: e.path.clone(), reason: format!("sha256 {h} != {}", e.sha256) }),
            Err(err) => bad.push(ManifestMismatch { path: e.path.clone(), reason: err.to_string() }),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_detects_changes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        fs::write(&a, "hello").unwrap();
        let mut rec = ExperimentRecord::new(RunConfig::default(), vec!["state".into()]);
        rec.add_file(dir.path(), &a).unwrap();
        rec.add_check("x", true, 0.0);
        rec.write(dir.path()).unwrap();
        assert!(check_manifest(dir.path()).unwrap().is_empty());
        assert_eq!(rec.files[0].sha256, "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");

        fs::write(&a, "hellO").unwrap();
        assert_eq!(check_manifest(dir.path()).unwrap().len(), 1);
        fs::remove_file(&a).unwrap();
        assert_eq!(check_manifest(dir.path()).unwrap().len(), 1);
    }

    #[test]
    fn files_outside_root_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let other = tempfile::NamedTempFile::new().unwrap();
        let mut rec = ExperimentRecord::new(RunConfig::default(), vec![]);
        assert!(rec.add_file(dir.path(), other.path()).is_err());
    }
}
