//! Binary model files.
//!
//! Layout: the 8-byte magic `CLKCAST\0`, a little-endian `u32` format
//! version, a little-endian `u64` header length, the UTF-8 JSON header, then
//! `param_count` little-endian `f64` parameters.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use clickcast_core::embedding::EmbedderIdentity;
use clickcast_core::forecaster::{EmbeddingNorm, FusionForecaster, Mode, TsfConfig};

use crate::error::{io_err, Error, Result};
use crate::jsonl::write_atomic;

pub const MAGIC: &[u8; 8] = b"CLKCAST\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub config: TsfConfig,
    pub mode: Mode,
    /// Evaluation method the model was trained for, e.g. `Multi+Summary`.
    pub method: String,
    pub embedder: Option<EmbedderIdentity>,
    pub embedding_norm: Option<EmbeddingNorm>,
    /// Fingerprint of the training stage that produced the model.
    pub fingerprint: String,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    pub param_count: usize,
}

pub fn save_model(
    path: &Path,
    model: &FusionForecaster,
    method: &str,
    fingerprint: &str,
    inputs: BTreeMap<String, String>,
) -> Result<()> {
    let header = ModelHeader {
        config: model.config().clone(),
        mode: model.mode(),
        method: method.to_string(),
        embedder: model.embedder().cloned(),
        embedding_norm: model.embedding_norm().cloned(),
        fingerprint: fingerprint.to_string(),
        inputs,
        param_count: model.num_params(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(path, |w| {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for p in model.params() {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    })
}

pub fn load_model(path: &Path) -> Result<(FusionForecaster, ModelHeader)> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = |msg: &str| Error::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(bad("not a clickcast model file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported model format version {version}")));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|n| n.checked_add(20))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("truncated header"))?;
    let header: ModelHeader =
        serde_json::from_slice(&bytes[20..header_end]).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;
    let body = &bytes[header_end..];
    if body.len() != header.param_count * 8 {
        return Err(bad(&format!(
            "expected {} parameters, file holds {} bytes",
            header.param_count,
            body.len()
        )));
    }
    let params = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let model = FusionForecaster::from_parts(
        header.config.clone(),
        header.mode,
        header.embedder.clone(),
        header.embedding_norm.clone(),
        params,
    )?;
    Ok((model, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TsfConfig {
        TsfConfig {
            hidden: 4,
            ff_hidden: 4,
            layers: 1,
            heads: 2,
            embed_dim: 8,
            mlp_hidden: vec![4],
            ..TsfConfig::default()
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let id = EmbedderIdentity {
            name: "e".into(),
            version: "1".into(),
            seed: Some(3),
            dim: 8,
        };
        let m = FusionForecaster::new(small(), Mode::Multi, Some(id)).unwrap();
        save_model(&p, &m, "Multi+Summary", "fp", BTreeMap::new()).unwrap();
        let (back, header) = load_model(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(header.method, "Multi+Summary");
        assert_eq!(header.param_count, m.num_params());
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = FusionForecaster::new(small(), Mode::Uni, None).unwrap();
        save_model(&p, &m, "Uni", "fp", BTreeMap::new()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, &bytes).unwrap();
        assert!(load_model(&p).is_err());
        fs::write(&p, b"nonsense nonsense nonsense").unwrap();
        assert!(load_model(&p).is_err());
    }
}
