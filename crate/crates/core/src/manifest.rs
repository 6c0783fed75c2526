//! Per-run provenance: what was run, on which bytes, producing which bytes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    /// Effective settings of the run, flags and defaults alike.
    pub config: serde_json::Value,
    pub config_digest: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// `<out>.manifest.json` next to the primary output.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects a manifest while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    command: Vec<String>,
    config: serde_json::Value,
    inputs: Vec<PathBuf>,
    started_at: String,
}

impl RunManifest {
    pub fn begin(command: &[OsString], config: serde_json::Value) -> ManifestBuilder {
        ManifestBuilder {
            command: command.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            config,
            inputs: Vec::new(),
            started_at: now(),
        }
    }

    pub fn read_file(path: &Path) -> io::Result<RunManifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

impl ManifestBuilder {
    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    /// Digests inputs and outputs and writes the manifest beside `primary`.
    pub fn finish(&self, primary: &Path, outputs: &[&Path]) -> io::Result<RunManifest> {
        let digest_all = |paths: &mut dyn Iterator<Item = &Path>| -> io::Result<BTreeMap<String, String>> {
            paths
                .map(|p| Ok((p.display().to_string(), file_digest(p)?)))
                .collect()
        };
        let config_bytes = serde_json::to_vec(&self.config).expect("json values serialize");
        let manifest = RunManifest {
            command: self.command.clone(),
            config_digest: sha256_hex(&config_bytes),
            config: self.config.clone(),
            inputs: digest_all(&mut self.inputs.iter().map(PathBuf::as_path))?,
            outputs: digest_all(&mut outputs.iter().copied())?,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at.clone(),
            finished_at: now(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(manifest_path(primary), text + "\n")?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_digests() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        let out = dir.path().join("out.tsv");
        fs::write(&input, "abc").unwrap();
        fs::write(&out, "").unwrap();
        let mut b = RunManifest::begin(&["cdec".into(), "x".into()], serde_json::json!({"k": 10}));
        b.input(&input);
        let m = b.finish(&out, &[&out]).unwrap();
        assert_eq!(
            m.inputs[&input.display().to_string()],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            m.outputs[&out.display().to_string()],
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        let back = RunManifest::read_file(&manifest_path(&out)).unwrap();
        assert_eq!(back, m);
        assert!(manifest_path(&out).ends_with("out.tsv.manifest.json"));
    }
}
