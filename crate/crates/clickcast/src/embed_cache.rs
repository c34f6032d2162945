//! On-disk embedding cache.
//!
//! `<root>/<embedder-key>/<text-hash>` holds the raw vector as little-endian
//! `f32`s. The embedder key is derived from the embedder identity, so two
//! embedders never share entries.

use std::cell::Cell;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clickcast_core::embedding::{text_hash, EmbedderIdentity, TextEmbedder, TextEmbedding};

use crate::jsonl::write_atomic;
use crate::meta::sha256_hex;

pub struct CachedEmbedder<E> {
    inner: E,
    dir: PathBuf,
    hits: Cell<usize>,
    misses: Cell<usize>,
}

impl<E: TextEmbedder> CachedEmbedder<E> {
    pub fn new(inner: E, root: &Path) -> Self {
        let id = inner.identity();
        let key = &sha256_hex(id.to_string().as_bytes())[..16];
        Self {
            inner,
            dir: root.join(key),
            hits: Cell::new(0),
            misses: Cell::new(0),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Lookups served from disk.
    pub fn hits(&self) -> usize {
        self.hits.get()
    }

    /// Lookups that went to the wrapped embedder.
    pub fn misses(&self) -> usize {
        self.misses.get()
    }

    fn load(&self, path: &Path, dim: usize) -> Option<Vec<f32>> {
        let bytes = fs::read(path).ok()?;
        if bytes.len() != dim * 4 {
            log::warn!(
                "ignoring cache entry {} with {} bytes",
                path.display(),
                bytes.len()
            );
            return None;
        }
        Some(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    }
}

impl<E: TextEmbedder> TextEmbedder for CachedEmbedder<E> {
    fn identity(&self) -> EmbedderIdentity {
        self.inner.identity()
    }

    fn embed(&self, text: &str) -> clickcast_core::Result<TextEmbedding> {
        let hash = text_hash(text);
        let path = self.dir.join(&hash);
        let dim = self.inner.identity().dim;
        if let Some(vector) = self.load(&path, dim) {
            self.hits.set(self.hits.get() + 1);
            return Ok(TextEmbedding {
                vector,
                source_text_hash: hash,
            });
        }
        self.misses.set(self.misses.get() + 1);
        let e = self.inner.embed(text)?;
        // A failed cache write only costs a recomputation later.
        let written = write_atomic(&path, |w| {
            for v in &e.vector {
                w.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        });
        if let Err(err) = written {
            log::warn!("could not cache embedding: {err}");
        }
        Ok(e)
    }
}
