//! File helpers shared by every on-disk format.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::features::{functionals, LldSequence, Modality};
use crate::space::PaCoordinate;

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|source| Error::Json {
        context: format!("{what} ({})", path.display()),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

pub fn jsonl_string<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path, what: &str) -> Result<Vec<T>> {
    read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                context: format!("{what} {}:{}", path.display(), i + 1),
                source,
            })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_bytes(path, jsonl_string(items).as_bytes())
}

/// Serialize rows to CSV text with the given header.
pub fn csv_string<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    write_bytes(path, csv_string(rows)?.as_bytes())
}

#[derive(Debug, serde::Deserialize, Serialize)]
struct LabelRow {
    utterance_id: String,
    pleasure: f64,
    arousal: f64,
}

/// Labels as CSV with columns `utterance_id, pleasure, arousal`.
pub fn labels_csv(labels: &BTreeMap<String, PaCoordinate>) -> Result<String> {
    let rows: Vec<LabelRow> = labels
        .iter()
        .map(|(id, c)| LabelRow {
            utterance_id: id.clone(),
            pleasure: c.pleasure,
            arousal: c.arousal,
        })
        .collect();
    csv_string(&rows)
}

pub fn read_labels_csv(path: &Path) -> Result<BTreeMap<String, PaCoordinate>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for row in r.deserialize() {
        let row: LabelRow = row?;
        let c = PaCoordinate::new(row.pleasure, row.arousal)?;
        if out.insert(row.utterance_id.clone(), c).is_some() {
            return Err(invalid(format!("duplicate label for {}", row.utterance_id)));
        }
    }
    Ok(out)
}

/// One line of a frame-level feature file.
#[derive(Debug, Clone, serde::Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FrameLine {
    pub utterance_id: String,
    pub modality: Modality,
    pub frames: Vec<Vec<f64>>,
}

/// Per-utterance modality vectors: frame lines are summarized with
/// functionals; modalities must not repeat for an utterance.
pub type ModalityVectors = BTreeMap<String, BTreeMap<Modality, Vec<f64>>>;

pub fn vectors_from_frames(lines: Vec<FrameLine>) -> Result<ModalityVectors> {
    let mut out = ModalityVectors::new();
    for l in lines {
        let seq = LldSequence::new(l.modality, l.frames)?;
        let v = functionals(&seq)?;
        if out
            .entry(l.utterance_id.clone())
            .or_default()
            .insert(l.modality, v)
            .is_some()
        {
            return Err(invalid(format!(
                "{} given twice for {}",
                l.modality, l.utterance_id
            )));
        }
    }
    Ok(out)
}

/// Precomputed vectors as CSV rows: `utterance_id, modality, v0, v1, ...`
/// (rows may have different lengths per modality).
pub fn vectors_from_csv(path: &Path) -> Result<ModalityVectors> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut out = ModalityVectors::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(invalid(format!(
                "{}:{}: too few columns",
                path.display(),
                i + 1
            )));
        }
        if i == 0 && &rec[0] == "utterance_id" {
            continue;
        }
        let modality: Modality = rec[1].parse()?;
        let values = rec
            .iter()
            .skip(2)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("{}:{}: {e}", path.display(), i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        crate::error::ensure_finite(&values, &rec[0])?;
        if out
            .entry(rec[0].to_string())
            .or_default()
            .insert(modality, values)
            .is_some()
        {
            return Err(invalid(format!("{modality} given twice for {}", &rec[0])));
        }
    }
    Ok(out)
}
