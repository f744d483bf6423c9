use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Error;

/// Bumped whenever a stage's output format or semantics change.
pub const STAGE_VERSIONS: [(&str, &str); 7] = [
    ("simulate", "1"),
    ("label", "1"),
    ("features", "1"),
    ("train", "1"),
    ("detect", "1"),
    ("aggregate", "1"),
    ("report", "1"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub wall_ms: u128,
    /// File name to SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub seed: u64,
    pub stage_versions: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
    pub completed: bool,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(config_text: &str, seed: u64) -> Self {
        Self {
            config_digest: digest_bytes(config_text.as_bytes()),
            seed,
            stage_versions: STAGE_VERSIONS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            stages: Vec::new(),
            completed: false,
            error: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Output digests of every stage, keyed by file name.
    pub fn output_digests(&self) -> BTreeMap<String, String> {
        self.stages
            .iter()
            .flat_map(|s| s.outputs.iter().map(|(k, v)| (k.clone(), v.clone())))
            .collect()
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<String, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digests keyed by file name.
pub fn digest_files(paths: &[&Path]) -> Result<BTreeMap<String, String>, Error> {
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((name, digest_file(p)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            digest_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn file_digest_matches_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert_eq!(digest_file(&p).unwrap(), digest_bytes(b"a,b\n1,2\n"));
        let m = digest_files(&[&p]).unwrap();
        assert!(m.contains_key("x.csv"));
    }
}
