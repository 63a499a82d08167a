use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Artifacts written under one output directory with their SHA-256 hashes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Writes `bytes` to `dir/name` and records its hash.
    pub fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.record(name, bytes);
        Ok(path)
    }

    /// Records a file already on disk.
    pub fn add_file(&mut self, dir: &Path, name: &str) -> Result<()> {
        let bytes = std::fs::read(dir.join(name))?;
        self.record(name, &bytes);
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        let hash = sha256_hex(bytes);
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(e) => e.1 = hash,
            None => self.entries.push((name.to_string(), hash)),
        }
    }

    /// One `hash  path` line per artifact.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(n, h)| format!("{h}  {n}\n"))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (hash, name) = line
                .split_once("  ")
                .ok_or_else(|| Error::Format(format!("bad manifest line '{line}'")))?;
            if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(Error::Format(format!("bad hash in manifest line '{line}'")));
            }
            entries.push((name.to_string(), hash.to_string()));
        }
        Ok(Self { entries })
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, self.to_text())?;
        Ok(path)
    }

    /// Names of artifacts whose current content no longer matches.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (name, hash) in &self.entries {
            match std::fs::read(dir.join(name)) {
                Ok(bytes) if sha256_hex(&bytes) == *hash => {}
                _ => bad.push(name.clone()),
            }
        }
        Ok(bad)
    }
}
