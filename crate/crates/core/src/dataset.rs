//! Word-group datasets.
//!
//! The file format is JSON Lines. Each line is one group:
//!
//! ```text
//! {"id": "en-001", "civilian_word": "bear", "spy_word": "lion", "category": "forest animals"}
//! ```
//!
//! The first line may instead be a header object without an `id` field,
//! carrying `declared_theta` (the similarity threshold the groups were built
//! for; stored, not enforced) and free-form provenance notes. Blank lines are
//! ignored.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::WordGroup;
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, row {row}: {message}")]
    Row { path: PathBuf, row: usize, message: String },
    #[error("{path}, row {row}: duplicate group id `{id}`")]
    DuplicateId { path: PathBuf, row: usize, id: String },
    #[error("{path} has no word groups")]
    Empty { path: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Header {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reconstruction: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    groups: Vec<WordGroup>,
    source: PathBuf,
    declared_theta: Option<f64>,
    header: Header,
}

impl Dataset {
    pub fn new(groups: Vec<WordGroup>, source: impl Into<PathBuf>) -> Result<Self, DatasetError> {
        let source = source.into();
        if groups.is_empty() {
            return Err(DatasetError::Empty { path: source });
        }
        let mut seen = HashSet::new();
        for (i, g) in groups.iter().enumerate() {
            if !seen.insert(g.id().to_string()) {
                return Err(DatasetError::DuplicateId {
                    path: source,
                    row: i + 1,
                    id: g.id().to_string(),
                });
            }
        }
        Ok(Dataset {
            groups,
            source,
            declared_theta: None,
            header: Header::default(),
        })
    }

    pub fn with_declared_theta(mut self, theta: Option<f64>) -> Self {
        self.declared_theta = theta;
        self.header.declared_theta = theta;
        self
    }

    pub fn groups(&self) -> &[WordGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    pub fn declared_theta(&self) -> Option<f64> {
        self.declared_theta
    }

    /// Group for game `index` of a batch; wraps around the dataset.
    pub fn group_for_game(&self, index: usize) -> &WordGroup {
        &self.groups[index % self.groups.len()]
    }

    pub fn get(&self, id: &str) -> Option<&WordGroup> {
        self.groups.iter().find(|g| g.id() == id)
    }

    /// Uniform, seed-deterministic pick.
    pub fn sample_group(&self, seed: u64) -> &WordGroup {
        let mut rng = seed::rng(seed::derive(seed, "sample_group", 0));
        &self.groups[rng.random_range(0..self.groups.len())]
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        if self.header != Header::default() {
            out.push_str(&serde_json::to_string(&self.header).expect("header serializes"));
            out.push('\n');
        }
        for g in &self.groups {
            out.push_str(&serde_json::to_string(g).expect("group serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let io = |source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(io)?;
        Ok(())
    }

    pub fn parse(content: &str, source: impl Into<PathBuf>) -> Result<Self, DatasetError> {
        let source = source.into();
        let mut header = Header::default();
        let mut groups = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let row = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row_err = |message: String| DatasetError::Row {
                path: source.clone(),
                row,
                message,
            };
            let value: serde_json::Value = serde_json::from_str(line).map_err(|e| row_err(e.to_string()))?;
            if value.get("id").is_none() {
                if !groups.is_empty() || header != Header::default() {
                    return Err(row_err("header object must be the first record".into()));
                }
                header = serde_json::from_value(value).map_err(|e| row_err(format!("bad header: {e}")))?;
                continue;
            }
            let g: WordGroup = serde_json::from_value(value).map_err(|e| row_err(e.to_string()))?;
            groups.push(g);
            rows.push(row);
        }
        let mut seen = HashSet::new();
        for (g, row) in groups.iter().zip(&rows) {
            if !seen.insert(g.id()) {
                return Err(DatasetError::DuplicateId {
                    path: source.clone(),
                    row: *row,
                    id: g.id().to_string(),
                });
            }
        }
        if groups.is_empty() {
            return Err(DatasetError::Empty { path: source });
        }
        Ok(Dataset {
            groups,
            source,
            declared_theta: header.declared_theta,
            header,
        })
    }
}

pub fn load_groups(path: &Path) -> Result<Dataset, DatasetError> {
    let content = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Dataset::parse(&content, path)
}

/// The bundled 100-group English fixture.
pub fn builtin_en() -> Dataset {
    Dataset::parse(include_str!("../data/word_groups.en.jsonl"), "builtin:word_groups.en.jsonl")
        .expect("bundled dataset is valid")
}

/// Chinese translation of [`builtin_en`].
pub fn builtin_zh() -> Dataset {
    Dataset::parse(include_str!("../data/word_groups.zh.jsonl"), "builtin:word_groups.zh.jsonl")
        .expect("bundled dataset is valid")
}
