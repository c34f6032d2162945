//! Fixed-width text embeddings.
//!
//! The hermetic [`HashingEmbedder`] maps every distinct token to a seeded
//! pseudo-random 768-vector, scales it by `1 + ln(count)`, max-pools the token
//! vectors per dimension and normalises the result to unit length. External
//! encoders implement [`TextEmbedder`] in the `clickcast` crate.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::reward::tokenize;
use crate::rng::{self, stream};

pub const EMBEDDING_DIM: usize = 768;

#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbedding {
    pub vector: Vec<f32>,
    pub source_text_hash: String,
}

impl TextEmbedding {
    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(
            self.vector
                .iter()
                .map(|v| f64::from(*v) * f64::from(*v))
                .sum(),
        )
    }

    pub fn cosine(&self, other: &TextEmbedding) -> f64 {
        let dot: f64 = self
            .vector
            .iter()
            .zip(&other.vector)
            .map(|(a, b)| f64::from(*a) * f64::from(*b))
            .sum();
        dot / (self.norm() * other.norm())
    }
}

/// Identity of an embedding space. Models record it and refuse to run with a
/// different embedder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderIdentity {
    pub name: String,
    pub version: String,
    pub seed: Option<u64>,
    pub dim: usize,
}

impl fmt::Display for EmbedderIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}/{}d", self.name, self.version, self.dim)?;
        if let Some(s) = self.seed {
            write!(f, "#{s}")?;
        }
        Ok(())
    }
}

pub trait TextEmbedder {
    fn identity(&self) -> EmbedderIdentity;
    fn embed(&self, text: &str) -> Result<TextEmbedding>;
}

/// Lowercase hex SHA-256 of the UTF-8 text.
pub fn text_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashingEmbedder {
    pub seed: u64,
    pub dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self {
            seed: 0x5EED,
            dim: EMBEDDING_DIM,
        }
    }
}

impl HashingEmbedder {
    pub const NAME: &'static str = "hashing-maxpool";
    pub const VERSION: &'static str = "1";

    pub fn with_dim(seed: u64, dim: usize) -> Self {
        Self { seed, dim }
    }

    fn token_key(token: &str) -> u64 {
        let d = Sha256::digest(token.as_bytes());
        let mut b = [0u8; 8];
        b.copy_from_slice(&d[..8]);
        u64::from_le_bytes(b)
    }
}

impl TextEmbedder for HashingEmbedder {
    fn identity(&self) -> EmbedderIdentity {
        EmbedderIdentity {
            name: Self::NAME.to_string(),
            version: Self::VERSION.to_string(),
            seed: Some(self.seed),
            dim: self.dim,
        }
    }

    fn embed(&self, text: &str) -> Result<TextEmbedding> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(invalid!("cannot embed empty text"));
        }
        if self.dim == 0 {
            return Err(invalid!("embedding dimension must be positive"));
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for t in tokenize(trimmed) {
            *counts.entry(t).or_default() += 1;
        }
        if counts.is_empty() {
            // Punctuation-only text: treat it as one token.
            counts.insert(trimmed.to_string(), 1);
        }
        let mut pooled = alloc::vec![f64::NEG_INFINITY; self.dim];
        for (token, count) in &counts {
            let weight = 1.0 + libm::log(*count as f64);
            let mut r = rng::stream_rng(self.seed, &[stream::EMBED, Self::token_key(token)]);
            for p in pooled.iter_mut() {
                let v = weight * rng::uniform_range(&mut r, -1.0, 1.0);
                if v > *p {
                    *p = v;
                }
            }
        }
        let norm = libm::sqrt(pooled.iter().map(|v| v * v).sum());
        let vector = if norm > 0.0 {
            pooled.iter().map(|v| (v / norm) as f32).collect()
        } else {
            alloc::vec![0.0; self.dim]
        };
        Ok(TextEmbedding {
            vector,
            source_text_hash: text_hash(text),
        })
    }
}

/// Embeds `texts`, reusing the vector of repeated strings.
pub fn embed_all<'a, I>(embedder: &dyn TextEmbedder, texts: I) -> Result<Vec<TextEmbedding>>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut memo: BTreeMap<&'a str, TextEmbedding> = BTreeMap::new();
    let mut out = Vec::new();
    for t in texts {
        if let Some(e) = memo.get(t) {
            out.push(e.clone());
            continue;
        }
        let e = embedder.embed(t)?;
        memo.insert(t, e.clone());
        out.push(e);
    }
    Ok(out)
}

/// Ensures `found` can be used with a model trained under `expected`.
pub fn check_identity(expected: &EmbedderIdentity, found: &EmbedderIdentity) -> Result<()> {
    if expected != found {
        return Err(crate::Error::EmbedderMismatch {
            expected: format!("{expected}"),
            found: format!("{found}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_unit_norm_768() {
        let e = HashingEmbedder::default();
        let a = e.embed("removed 113 phrase match keywords").unwrap();
        let b = e.embed("removed 113 phrase match keywords").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), EMBEDDING_DIM);
        assert!((a.norm() - 1.0).abs() < 1e-6);
        assert!(a.vector.iter().all(|v| v.is_finite()));
        assert_eq!(
            a.source_text_hash,
            text_hash("removed 113 phrase match keywords")
        );
    }

    #[test]
    fn distinct_texts_embed_distinctly() {
        let e = HashingEmbedder::default();
        let a = e.embed("no changes").unwrap();
        let b = e.embed("removed 113 phrase match keywords").unwrap();
        assert!(a.cosine(&b) < 0.99, "{}", a.cosine(&b));
    }

    #[test]
    fn dimension_independent_of_length() {
        let e = HashingEmbedder::default();
        let long = "word ".repeat(500);
        assert_eq!(e.embed(&long).unwrap().dim(), EMBEDDING_DIM);
        assert_eq!(e.embed("!!").unwrap().dim(), EMBEDDING_DIM);
        assert!(e.embed("   ").is_err());
    }

    #[test]
    fn identity_mismatch_is_an_error() {
        let a = HashingEmbedder::default().identity();
        let b = HashingEmbedder::with_dim(1, EMBEDDING_DIM).identity();
        assert!(check_identity(&a, &a).is_ok());
        assert!(check_identity(&a, &b).is_err());
    }

    #[test]
    fn embed_all_reuses_repeats() {
        let e = HashingEmbedder::default();
        let out = embed_all(&e, ["a b", "c", "a b"]).unwrap();
        assert_eq!(out[0], out[2]);
        assert_ne!(out[0], out[1]);
    }
}
