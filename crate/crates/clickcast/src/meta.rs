//! Artifact sidecars and fingerprints.
//!
//! Every artifact `foo.ext` gets a `foo.ext.meta.json` next to it recording
//! the producing stage, its fingerprint, the stage config and the
//! fingerprints of its inputs. A sidecar is written after its artifact, with
//! `complete: false` until the artifact itself is in place, so an
//! interrupted stage never looks finished.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};
use crate::jsonl::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub stage: String,
    pub fingerprint: String,
    pub config: Value,
    /// Input artifact name to its fingerprint.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    pub complete: bool,
}

/// Canonical JSON: object keys sorted, no whitespace.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // `serde_json::Value` keeps objects in a BTreeMap, so a round trip
    // through it sorts every key.
    let v = serde_json::to_value(value).map_err(|e| Error::Config(e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| Error::Config(e.to_string()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a stage config together with the fingerprints it depends on.
pub fn stage_fingerprint<T: Serialize>(
    stage: &str,
    config: &T,
    inputs: &BTreeMap<String, String>,
) -> Result<String> {
    let body = serde_json::json!({
        "stage": stage,
        "config": serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?,
        "inputs": inputs,
    });
    Ok(sha256_hex(canonical_json(&body)?.as_bytes()))
}

pub fn meta_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_meta(artifact: &Path, meta: &ArtifactMeta) -> Result<()> {
    let path = meta_path(artifact);
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&path, |w| writeln!(w, "{text}"))
}

/// Reads the sidecar of `artifact`, if there is one.
pub fn read_meta(artifact: &Path) -> Result<Option<ArtifactMeta>> {
    let path = meta_path(artifact);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|source| Error::Json {
            path,
            line: 0,
            source,
        })
}

/// Marks an existing sidecar incomplete; used when a stage fails midway.
pub fn mark_incomplete(artifact: &Path) -> Result<()> {
    if let Some(mut m) = read_meta(artifact)? {
        m.complete = false;
        write_meta(artifact, &m)?;
    }
    Ok(())
}

/// Fingerprint recorded for `artifact`; errors if the sidecar is missing or
/// the artifact is incomplete.
pub fn artifact_fingerprint(artifact: &Path) -> Result<String> {
    match read_meta(artifact)? {
        Some(m) if m.complete => Ok(m.fingerprint),
        Some(_) => Err(Error::Format {
            path: artifact.to_path_buf(),
            msg: "artifact is marked incomplete".into(),
        }),
        None => Err(Error::Format {
            path: artifact.to_path_buf(),
            msg: "artifact has no metadata sidecar".into(),
        }),
    }
}

/// Fingerprint of `artifact` if it has a complete sidecar, otherwise the
/// hash of its bytes. Lets hand-made inputs flow through the subcommands.
pub fn input_fingerprint(artifact: &Path) -> Result<String> {
    match read_meta(artifact)? {
        Some(m) if m.complete => Ok(m.fingerprint),
        _ => {
            let bytes = fs::read(artifact).map_err(io_err(artifact))?;
            Ok(sha256_hex(&bytes))
        }
    }
}
