//! Utterance records and their JSONL form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, shape, Error, Result};
use crate::features::GroupingConfig;
use crate::space::PaCoordinate;

/// One utterance: its per-path feature vectors, an optional label and
/// where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceRecord {
    pub id: String,
    pub groups: Vec<Vec<f64>>,
    #[serde(default)]
    pub label: Option<PaCoordinate>,
    #[serde(default)]
    pub teacher: Option<String>,
    #[serde(default)]
    pub course: Option<String>,
    #[serde(default)]
    pub lesson: Option<String>,
    /// Seconds since the start of the lesson.
    #[serde(default)]
    pub time: Option<f64>,
}

impl UtteranceRecord {
    pub fn check_against(&self, cfg: &GroupingConfig) -> Result<()> {
        let dims = cfg.path_dims();
        if self.groups.len() != dims.len() {
            return Err(shape(format!(
                "record {}: {} groups, grouping has {} paths",
                self.id,
                self.groups.len(),
                dims.len()
            )));
        }
        for (i, (g, &d)) in self.groups.iter().zip(&dims).enumerate() {
            if g.len() != d {
                return Err(shape(format!(
                    "record {}: group {i} has {} values, expected {d}",
                    self.id,
                    g.len()
                )));
            }
            ensure_finite(g, &format!("record {} group {i}", self.id))?;
        }
        if let Some(l) = &self.label {
            l.validate()?;
        }
        Ok(())
    }

    pub fn require_label(&self) -> Result<PaCoordinate> {
        self.label
            .ok_or_else(|| invalid(format!("record {} is unlabeled", self.id)))
    }
}

pub fn read_jsonl(path: &Path) -> Result<Vec<UtteranceRecord>> {
    crate::io::read_jsonl(path, "dataset")
}

pub fn write_jsonl(path: &Path, records: &[UtteranceRecord]) -> Result<()> {
    crate::io::write_jsonl(path, records)
}

pub fn to_jsonl(records: &[UtteranceRecord]) -> String {
    crate::io::jsonl_string(records)
}

pub fn from_jsonl(text: &str) -> Result<Vec<UtteranceRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                context: format!("dataset line {}", i + 1),
                source,
            })
        })
        .collect()
}
