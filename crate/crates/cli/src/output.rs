use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_SCHEMA: u32 = 1;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub multibeta: &'static str,
    pub cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub subcommand: String,
    /// SHA-256 of the effective configuration (plus the grid file bytes).
    pub config_sha256: String,
    pub seed: u64,
    pub versions: Versions,
    pub outputs: Vec<OutputEntry>,
}

/// Collects the artifacts of one run and writes them with a manifest.
pub struct Artifacts {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
}

impl Artifacts {
    pub fn new(dir: PathBuf) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, outputs: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.outputs.push(OutputEntry {
            file: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len(),
        });
        Ok(path)
    }

    pub fn finish(mut self, subcommand: &str, config_hash: String, seed: u64) -> io::Result<PathBuf> {
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA,
            subcommand: subcommand.to_string(),
            config_sha256: config_hash,
            seed,
            versions: Versions { multibeta: multibeta::VERSION, cli: env!("CARGO_PKG_VERSION") },
            outputs: std::mem::take(&mut self.outputs),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Hash of the canonical configuration and, when present, the grid bytes.
pub fn config_hash(canonical: &str, grid: Option<&[u8]>) -> String {
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    if let Some(g) = grid {
        h.update([0u8]);
        h.update(g);
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn hash_depends_on_grid_bytes() {
        assert_ne!(config_hash("{}", Some(b"1")), config_hash("{}", Some(b"2")));
        assert_eq!(config_hash("{}", None), config_hash("{}", None));
    }
}
