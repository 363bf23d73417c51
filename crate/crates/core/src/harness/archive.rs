//! Transcript archives: a `manifest.json` describing the batch and a
//! `games.jsonl` file with one serialized `GameRecord` per line, in game
//! index order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AgentSpec, HarnessError};
use crate::game::GameConfig;
use crate::prompts::CatalogueStamp;
use crate::referee::GameRecord;

pub const ARCHIVE_FORMAT: &str = "whospy-archive/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GAMES_FILE: &str = "games.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub groups: usize,
    pub declared_theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub master_seed: u64,
    pub n_games: usize,
    /// Config shared by every game; each game's `rng_seed` is derived from `master_seed`.
    pub config: GameConfig,
    pub agents: AgentSpec,
    pub dataset: DatasetInfo,
    pub prompt_catalogues: Vec<CatalogueStamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<String>,
}

/// Appends game records to an archive directory. Only one writer per archive.
pub struct ArchiveWriter {
    dir: PathBuf,
    games: BufWriter<File>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl ArchiveWriter {
    pub fn create(dir: &Path, manifest: &Manifest) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        json.push('\n');
        std::fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
        let games_path = dir.join(GAMES_FILE);
        let games = File::create(&games_path).map_err(io_err(&games_path))?;
        Ok(ArchiveWriter {
            dir: dir.to_path_buf(),
            games: BufWriter::new(games),
        })
    }

    pub fn append(&mut self, record: &GameRecord) -> Result<(), HarnessError> {
        let path = self.dir.join(GAMES_FILE);
        let line = serde_json::to_string(record).expect("record serializes");
        self.games.write_all(line.as_bytes()).map_err(io_err(&path))?;
        self.games.write_all(b"\n").map_err(io_err(&path))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join(GAMES_FILE);
        self.games.flush().map_err(io_err(&path))?;
        Ok(self.dir)
    }
}

/// Hex SHA-256 over the manifest and the game lines.
pub fn archive_digest(dir: &Path) -> Result<String, HarnessError> {
    let mut h = Sha256::new();
    for name in [MANIFEST_FILE, GAMES_FILE] {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(io_err(&path))?;
        h.update(name.as_bytes());
        h.update([0]);
        h.update(&bytes);
        h.update([0]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, HarnessError> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| HarnessError::Archive {
        path: path.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    if manifest.format != ARCHIVE_FORMAT {
        return Err(HarnessError::Archive {
            path,
            line: 0,
            message: format!("unsupported archive format `{}`", manifest.format),
        });
    }
    Ok(manifest)
}

pub fn read_records(dir: &Path) -> Result<Vec<GameRecord>, HarnessError> {
    let path = dir.join(GAMES_FILE);
    let file = File::open(&path).map_err(io_err(&path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| HarnessError::Archive {
            path: path.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
