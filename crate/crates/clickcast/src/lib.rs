//! File formats, external service adapters and the staged pipeline around
//! [`clickcast_core`].
//!
//! Artifacts are JSON-lines, CSV or the binary model format, each with a
//! `.meta.json` sidecar carrying its fingerprint. [`pipeline::run_pipeline`]
//! runs the whole workflow and skips stages whose fingerprints are
//! unchanged.

pub mod config;
pub mod embed_cache;
pub mod error;
pub mod http;
pub mod jsonl;
pub mod meta;
pub mod model_file;
pub mod pipeline;
pub mod report;
pub mod stages;

pub use clickcast_core as core;
pub use error::{Error, Result};
