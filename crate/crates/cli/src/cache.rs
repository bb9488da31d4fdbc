//! Content-keyed JSON artifact cache. Keys hash the artifact kind, the
//! crate version, and the producing parameters; hits are byte-identical to
//! misses because the stored document is exactly what the producer returns.

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Stamp mixed into every key so schema changes invalidate old artifacts.
fn version_stamp() -> String {
    format!(
        "v{}+schema{}",
        env!("CARGO_PKG_VERSION"),
        starpulse_core::validation::SCHEMA_VERSION
    )
}

pub fn cache_path(dir: &Path, kind: &str, key_material: &str) -> PathBuf {
    let mut hasher = Sha256::new();
    hasher.update(version_stamp().as_bytes());
    hasher.update(b"|");
    hasher.update(kind.as_bytes());
    hasher.update(b"|");
    hasher.update(key_material.as_bytes());
    let digest = hasher.finalize();
    let hex: String = digest.iter().take(12).map(|b| format!("{b:02x}")).collect();
    dir.join(format!("starpulse-{kind}-{hex}.json"))
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Returns the cached document for the key, or produces, stores, and returns
/// it. A schema mismatch or unreadable file triggers a warning and a
/// recompute. The boolean is `true` on a cache hit.
pub fn cached<D, F>(
    dir: &Path,
    kind: &str,
    key_material: &str,
    produce: F,
) -> Result<(D, bool), CliError>
where
    D: Serialize + DeserializeOwned + HasSchema,
    F: FnOnce() -> Result<D, CliError>,
{
    let path = cache_path(dir, kind, key_material);
    if let Ok(bytes) = fs::read(&path) {
        match serde_json::from_slice::<D>(&bytes) {
            Ok(doc) if doc.schema() == starpulse_core::validation::SCHEMA_VERSION => {
                return Ok((doc, true));
            }
            Ok(_) => {
                eprintln!(
                    "warning: CacheCorrupt: schema version mismatch in {}; recomputing",
                    path.display()
                );
            }
            Err(err) => {
                eprintln!(
                    "warning: CacheCorrupt: unreadable artifact {} ({err}); recomputing",
                    path.display()
                );
            }
        }
    }
    let doc = produce()?;
    let bytes = serde_json::to_vec_pretty(&doc)?;
    write_atomic(&path, &bytes)?;
    Ok((doc, false))
}

/// Documents eligible for caching expose their schema stamp.
pub trait HasSchema {
    fn schema(&self) -> u32;
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Clone, PartialEq, Debug)]
    struct Doc {
        schema: u32,
        value: f64,
    }
    impl HasSchema for Doc {
        fn schema(&self) -> u32 {
            self.schema
        }
    }

    #[test]
    fn miss_then_hit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let make = || {
            Ok(Doc {
                schema: starpulse_core::validation::SCHEMA_VERSION,
                value: 1.25,
            })
        };
        let (a, hit_a) = cached(dir.path(), "t", "k=1", make).unwrap();
        assert!(!hit_a);
        let (b, hit_b) = cached(dir.path(), "t", "k=1", || unreachable!()).unwrap();
        assert!(hit_b);
        assert_eq!(a, b);
        // distinct key does not collide
        let (_, hit_c) = cached(dir.path(), "t", "k=2", make).unwrap();
        assert!(!hit_c);
    }

    #[test]
    fn corrupt_file_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let path = cache_path(dir.path(), "t", "k");
        fs::create_dir_all(dir.path()).unwrap();
        fs::write(&path, b"{ not json").unwrap();
        let (doc, hit) = cached(dir.path(), "t", "k", || {
            Ok(Doc {
                schema: starpulse_core::validation::SCHEMA_VERSION,
                value: 2.0,
            })
        })
        .unwrap();
        assert!(!hit);
        assert_eq!(doc.value, 2.0);
        // bad schema version also recomputes
        fs::write(&path, br#"{"schema": 999, "value": 3.0}"#).unwrap();
        let (doc, hit) = cached(dir.path(), "t", "k", || {
            Ok(Doc {
                schema: starpulse_core::validation::SCHEMA_VERSION,
                value: 4.0,
            })
        })
        .unwrap();
        assert!(!hit);
        assert_eq!(doc.value, 4.0);
    }
}
