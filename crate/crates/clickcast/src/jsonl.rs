//! JSON-lines files and the record types stored in them.
//!
//! Every writer goes through [`write_atomic`]: the file is written next to
//! its destination and renamed into place, so readers never see half a file.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use clickcast_core::data::{CampaignRecord, RawCampaign, TrendLabel};
use clickcast_core::reward::RewardBreakdown;

use crate::error::{io_err, Error, Result};

/// Writes `path` through a sibling temporary file and a rename.
pub fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let file = File::create(&tmp).map_err(io_err(&tmp))?;
    let mut w = BufWriter::new(file);
    write(&mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&tmp))?;
    drop(w);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut lines = Vec::with_capacity(items.len());
    for item in items {
        lines.push(serde_json::to_string(item).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: lines.len() + 1,
            source,
        })?);
    }
    write_atomic(path, |w| {
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

pub fn load_raw_campaigns(path: &Path) -> Result<Vec<RawCampaign>> {
    read_jsonl(path)
}

/// Reads a dataset and derives the rolling-average series.
pub fn load_campaigns(path: &Path, rolling_window: usize) -> Result<Vec<CampaignRecord>> {
    let raw = load_raw_campaigns(path)?;
    if raw.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: "dataset has no campaigns".into(),
        });
    }
    raw.into_iter()
        .map(|r| CampaignRecord::from_raw(r, rolling_window).map_err(Error::from))
        .collect()
}

pub fn save_campaigns(path: &Path, campaigns: &[CampaignRecord]) -> Result<()> {
    let raw: Vec<RawCampaign> = campaigns.iter().map(CampaignRecord::to_raw).collect();
    write_jsonl(path, &raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub sample_id: String,
    pub prompt: String,
    pub label: TrendLabel,
}

/// A response to score. Summary files can be read directly: their
/// `response_text` field is accepted as `response`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub sample_id: String,
    #[serde(alias = "response_text")]
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sample_id: String,
    #[serde(flatten)]
    pub breakdown: RewardBreakdown,
}

/// Last line of a scores file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreAggregate {
    pub aggregate: bool,
    pub count: usize,
    pub mean_total: f64,
    pub mean_prediction_match: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScoreLine {
    Aggregate(ScoreAggregate),
    Sample(ScoreRecord),
}
