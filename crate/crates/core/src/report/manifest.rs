//! Run manifests: the exact command line, seed and digests of every file read
//! or written, enough to repeat a run and check its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;
pub const FILE_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl ExperimentManifest {
    pub fn start(command: &str, args: Vec<String>, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            args,
            seed,
            started_unix: now(),
            finished_unix: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Records `path` under its name relative to the output directory.
    pub fn record_output(&mut self, out_dir: &Path, path: &Path) -> Result<()> {
        let key = path.strip_prefix(out_dir).unwrap_or(path).display().to_string();
        self.outputs.insert(key, sha256_file(path)?);
        Ok(())
    }

    pub fn finish(mut self, out_dir: &Path) -> Result<()> {
        self.finished_unix = Some(now());
        fs::write(out_dir.join(FILE_NAME), serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.bin");
        fs::write(&out, [1u8, 2, 3]).unwrap();
        let mut m = ExperimentManifest::start("phantom", vec!["--n".into(), "8".into()], 3);
        m.record_output(dir.path(), &out).unwrap();
        m.clone().finish(dir.path()).unwrap();
        let back = ExperimentManifest::read(&dir.path().join(FILE_NAME)).unwrap();
        assert_eq!(back.outputs, m.outputs);
        assert!(back.outputs.contains_key("x.bin"));
        assert!(back.finished_unix.is_some());
    }
}
