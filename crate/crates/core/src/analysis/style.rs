use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::space::{centroid, nearest_adjectives, AdjectiveLexicon, PaCoordinate};

pub const DEFAULT_SEGMENTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleWord {
    pub id: u32,
    pub label: String,
    pub distance: f64,
}

/// Where a set of predictions sits in the space and the three adjectives
/// closest to that point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleSummary {
    pub centroid: PaCoordinate,
    pub top3: Vec<StyleWord>,
}

pub fn teacher_style(
    predictions: &[PaCoordinate],
    lexicon: &AdjectiveLexicon,
) -> Result<StyleSummary> {
    if predictions.is_empty() {
        return Err(invalid("no predictions to summarize"));
    }
    let c = centroid(predictions)?;
    let k = lexicon.len().min(3);
    let top3 = nearest_adjectives(c, lexicon, k.max(1))?
        .into_iter()
        .map(|(e, distance)| StyleWord {
            id: e.id,
            label: e.label,
            distance,
        })
        .collect();
    Ok(StyleSummary { centroid: c, top3 })
}

/// Group predictions by key (a teacher or course id) and summarize each group.
pub fn style_by_key(
    items: &[(String, PaCoordinate)],
    lexicon: &AdjectiveLexicon,
) -> Result<BTreeMap<String, StyleSummary>> {
    let mut groups: BTreeMap<&str, Vec<PaCoordinate>> = BTreeMap::new();
    for (k, c) in items {
        groups.entry(k.as_str()).or_default().push(*c);
    }
    groups
        .into_iter()
        .map(|(k, cs)| Ok((k.to_string(), teacher_style(&cs, lexicon)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedPrediction {
    pub id: String,
    pub time: Option<f64>,
    pub coord: PaCoordinate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub members: Vec<String>,
    pub centroid: Option<PaCoordinate>,
}

/// Split a lesson into `segments` equal time intervals and average the
/// predictions inside each. Intervals are half-open except the last, which
/// includes the end of the lesson. `span` defaults to the earliest and
/// latest timestamp.
pub fn segment_course(
    items: &[TimedPrediction],
    segments: usize,
    span: Option<(f64, f64)>,
) -> Result<Vec<Segment>> {
    if segments == 0 {
        return Err(invalid("segment count must be positive"));
    }
    let mut times = Vec::with_capacity(items.len());
    for it in items {
        match it.time {
            Some(t) if t.is_finite() => times.push(t),
            _ => return Err(invalid(format!("utterance {} has no timestamp", it.id))),
        }
    }
    let (t0, t1) = match span {
        Some(s) => s,
        None => {
            if times.is_empty() {
                return Err(invalid("no utterances to segment"));
            }
            let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    if (t1 - t0).partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(invalid(format!(
            "class duration must be positive (span {t0}..{t1})"
        )));
    }
    let width = (t1 - t0) / segments as f64;
    let bound = |i: usize| {
        if i == segments {
            t1
        } else {
            t0 + i as f64 * width
        }
    };
    let mut out: Vec<Segment> = (0..segments)
        .map(|i| Segment {
            index: i,
            start: bound(i),
            end: bound(i + 1),
            members: Vec::new(),
            centroid: None,
        })
        .collect();
    let mut coords: Vec<Vec<PaCoordinate>> = vec![Vec::new(); segments];
    for (it, &t) in items.iter().zip(&times) {
        if t < t0 || t > t1 {
            return Err(invalid(format!(
                "utterance {} at {t} lies outside {t0}..{t1}",
                it.id
            )));
        }
        let i = (0..segments)
            .find(|&i| t < out[i].end)
            .unwrap_or(segments - 1);
        out[i].members.push(it.id.clone());
        coords[i].push(it.coord);
    }
    for (seg, cs) in out.iter_mut().zip(&coords) {
        if !cs.is_empty() {
            seg.centroid = Some(centroid(cs)?);
        }
    }
    Ok(out)
}
