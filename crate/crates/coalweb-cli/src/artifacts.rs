//! Output plumbing shared by every command: atomic file writes, content
//! digests, the stored-family format, and the run manifest that ties an
//! invocation to its artifacts.

use crate::CliResult;
use coalweb::PathFamily;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Stored path-family format: a schema tag plus the path array.
#[derive(Serialize, Deserialize)]
pub struct FamilyFile {
    pub schema: u32,
    pub paths: PathFamily,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct RunManifest {
    schema: u32,
    command_line: Vec<String>,
    config_digest: String,
    seed: Option<u64>,
    tool_version: String,
    started_unix_ms: u64,
    finished_unix_ms: u64,
    outputs: Vec<ManifestEntry>,
}

/// Collects the output files of one command run. Every write is atomic
/// (temp file, then rename), and [`Writer::finish`] stores the whole set in
/// `manifest.json`, written last — a complete manifest certifies complete
/// artifacts.
pub struct Writer {
    out_dir: PathBuf,
    started_ms: u64,
    outputs: Vec<ManifestEntry>,
}

impl Writer {
    pub fn create(out_dir: &Path) -> CliResult<Writer> {
        fs::create_dir_all(out_dir)?;
        Ok(Writer {
            out_dir: out_dir.to_path_buf(),
            started_ms: now_ms(),
            outputs: Vec::new(),
        })
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let tmp = self.out_dir.join(format!("{name}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, self.out_dir.join(name))?;
        Ok(())
    }

    /// Write one artifact and record its digest for the manifest.
    pub fn put(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        self.write_atomic(name, bytes)?;
        self.outputs.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Write `manifest.json`. Consumes the writer: nothing may follow the
    /// manifest.
    pub fn finish(mut self, config_digest: &str, seed: Option<u64>) -> CliResult<()> {
        let manifest = RunManifest {
            schema: 1,
            command_line: std::env::args().collect(),
            config_digest: config_digest.to_string(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms: self.started_ms,
            finished_unix_ms: now_ms(),
            outputs: std::mem::take(&mut self.outputs),
        };
        let body = format!(
            "{}\n",
            serde_json::to_string_pretty(&manifest).expect("manifest serializes")
        );
        self.write_atomic("manifest.json", body.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_lists_outputs_with_recomputable_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = Writer::create(dir.path()).unwrap();
        w.put("a.txt", b"alpha").unwrap();
        w.put("b.csv", b"x,y\n1,2\n").unwrap();
        w.finish("cfg123", Some(7)).unwrap();

        let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let m: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(m.schema, 1);
        assert_eq!(m.seed, Some(7));
        assert_eq!(m.config_digest, "cfg123");
        assert_eq!(m.outputs.len(), 2);
        for entry in &m.outputs {
            let bytes = fs::read(dir.path().join(&entry.file)).unwrap();
            assert_eq!(entry.sha256, sha256_hex(&bytes), "{}", entry.file);
        }
        assert!(m.finished_unix_ms >= m.started_unix_ms);
        // no stray temp files survive the atomic writes
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .ends_with(".tmp")
            })
            .collect();
        assert!(leftovers.is_empty());
    }
}
