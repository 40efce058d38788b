//! From questionnaire answers to normalized pleasure–arousal labels, rater
//! reliability and the adjective lexicon.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::space::{
    adjective_catalog, centroid, AdjectiveEntry, AdjectiveInfo, AdjectiveLexicon, MajorCategory,
    PaCoordinate,
};

/// Answers to the four questions, each in −2..=2. Questions 2 and 3 probe
/// pleasure, 1 and 4 probe arousal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireResponse {
    pub q1: i8,
    pub q2: i8,
    pub q3: i8,
    pub q4: i8,
}

impl QuestionnaireResponse {
    pub fn new(q1: i8, q2: i8, q3: i8, q4: i8) -> Result<Self> {
        let r = Self { q1, q2, q3, q4 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, q) in [
            ("q1", self.q1),
            ("q2", self.q2),
            ("q3", self.q3),
            ("q4", self.q4),
        ] {
            if !(-2..=2).contains(&q) {
                return Err(invalid(format!("{name} = {q} is outside -2..=2")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub utterance_id: String,
    pub annotator_id: String,
    pub response: QuestionnaireResponse,
    #[serde(default)]
    pub adjective_votes: BTreeSet<u32>,
}

/// Raw (pleasure, arousal) scores, each in −4..=4.
pub fn score_response(r: &QuestionnaireResponse) -> Result<(f64, f64)> {
    r.validate()?;
    let p = -i32::from(r.q2) + i32::from(r.q3);
    let a = -i32::from(r.q1) + i32::from(r.q4);
    Ok((f64::from(p), f64::from(a)))
}

/// Standardize to mean 0 and population variance 1, preserving order.
pub fn zscore_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(invalid("z-score needs at least two values"));
    }
    crate::error::ensure_finite(values, "values")?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 || values.iter().all(|&v| v == values[0]) {
        return Err(Error::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Average each utterance's annotators, then z-score pleasure and arousal
/// separately across all utterances. Keys come back sorted.
pub fn aggregate_labels(records: &[AnnotationRecord]) -> Result<BTreeMap<String, PaCoordinate>> {
    if records.is_empty() {
        return Err(invalid("no annotation records"));
    }
    let mut seen = HashSet::new();
    let mut sums: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for r in records {
        if !seen.insert((r.utterance_id.as_str(), r.annotator_id.as_str())) {
            return Err(invalid(format!(
                "duplicate annotation of {} by {}",
                r.utterance_id, r.annotator_id
            )));
        }
        let (p, a) = score_response(&r.response)?;
        let slot = sums.entry(r.utterance_id.as_str()).or_insert((0.0, 0.0, 0));
        slot.0 += p;
        slot.1 += a;
        slot.2 += 1;
    }
    let raw_p: Vec<f64> = sums.values().map(|s| s.0 / s.2 as f64).collect();
    let raw_a: Vec<f64> = sums.values().map(|s| s.1 / s.2 as f64).collect();
    let p = zscore_normalize(&raw_p)?;
    let a = zscore_normalize(&raw_a)?;
    Ok(sums
        .keys()
        .zip(p.into_iter().zip(a))
        .map(|(id, (pleasure, arousal))| (id.to_string(), PaCoordinate { pleasure, arousal }))
        .collect())
}

/// Cronbach's alpha over an items × raters matrix, population variances.
pub fn cronbach_alpha(ratings: &[Vec<f64>]) -> Result<f64> {
    let items = ratings.len();
    if items < 2 {
        return Err(invalid("cronbach alpha needs at least two items"));
    }
    let raters = ratings[0].len();
    if raters < 2 {
        return Err(invalid("cronbach alpha needs at least two raters"));
    }
    if let Some(i) = ratings.iter().position(|row| row.len() != raters) {
        return Err(crate::error::shape(format!(
            "item {i} has {} ratings, expected {raters}",
            ratings[i].len()
        )));
    }
    for row in ratings {
        crate::error::ensure_finite(row, "ratings")?;
    }
    let pop_var = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    let item_var_sum: f64 = (0..raters)
        .map(|j| pop_var(&mut ratings.iter().map(|row| row[j])))
        .sum();
    let total_var = pop_var(&mut ratings.iter().map(|row| row.iter().sum::<f64>()));
    if total_var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let k = raters as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var_sum / total_var))
}

/// Agreement rule used when mapping utterances to adjectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexiconOptions {
    /// An utterance maps to an adjective when at least this many
    /// annotators voted for it. 3 is the majority-of-five reading; use 4
    /// for the strict "more than three" reading.
    pub agreement_threshold: usize,
    pub annotators_per_utterance: usize,
}

impl Default for LexiconOptions {
    fn default() -> Self {
        Self {
            agreement_threshold: 3,
            annotators_per_utterance: 5,
        }
    }
}

impl LexiconOptions {
    pub const STRICT_THRESHOLD: usize = 4;
}

/// Place each adjective at the centroid of the utterances that enough
/// annotators tagged with it. Adjectives with no such utterance are left
/// out.
pub fn build_lexicon(
    records: &[AnnotationRecord],
    labels: &BTreeMap<String, PaCoordinate>,
    catalog: &[AdjectiveInfo],
    opts: LexiconOptions,
) -> Result<AdjectiveLexicon> {
    if opts.agreement_threshold == 0 || opts.agreement_threshold > opts.annotators_per_utterance {
        return Err(invalid(format!(
            "agreement threshold {} must be in 1..={}",
            opts.agreement_threshold, opts.annotators_per_utterance
        )));
    }
    let known: BTreeMap<u32, &AdjectiveInfo> = catalog.iter().map(|a| (a.id, a)).collect();

    let mut annotators: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut votes: BTreeMap<(&str, u32), usize> = BTreeMap::new();
    for r in records {
        if !annotators
            .entry(r.utterance_id.as_str())
            .or_default()
            .insert(r.annotator_id.as_str())
        {
            return Err(invalid(format!(
                "duplicate annotation of {} by {}",
                r.utterance_id, r.annotator_id
            )));
        }
        for &adj in &r.adjective_votes {
            if !known.contains_key(&adj) {
                return Err(invalid(format!("vote for unknown adjective {adj}")));
            }
            *votes.entry((r.utterance_id.as_str(), adj)).or_default() += 1;
        }
    }
    if let Some((u, set)) = annotators
        .iter()
        .find(|(_, s)| s.len() > opts.annotators_per_utterance)
    {
        return Err(invalid(format!(
            "utterance {u} has {} annotators, more than {}",
            set.len(),
            opts.annotators_per_utterance
        )));
    }

    let mut members: BTreeMap<u32, Vec<PaCoordinate>> = BTreeMap::new();
    for (&(utt, adj), &count) in &votes {
        if count >= opts.agreement_threshold {
            let label = labels
                .get(utt)
                .ok_or_else(|| invalid(format!("no label for utterance {utt}")))?;
            members.entry(adj).or_default().push(*label);
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    let entries = members
        .into_iter()
        .map(|(id, coords)| {
            let info = known[&id];
            Ok(AdjectiveEntry {
                id,
                label: info.label.clone(),
                category: info.category,
                coord: centroid(&coords)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AdjectiveLexicon::new(entries)
}

/// Synthetic annotation campaign: every adjective gets a planted raw
/// position in its category's quadrant, `utterances_per_adjective`
/// utterances are scattered around it, and five annotators answer the
/// questionnaire and vote.
pub fn synth_annotations(
    catalog: &[AdjectiveInfo],
    utterances_per_adjective: usize,
    seed: u64,
) -> Vec<AnnotationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = Normal::new(0.0, 0.35).expect("valid sd");
    let answer_noise = Normal::new(0.0, 0.4).expect("valid sd");
    let mut out = Vec::new();
    for adj in catalog {
        let (sp, sa) = match adj.category {
            MajorCategory::Enthusiastic => (1.0, 1.0),
            MajorCategory::Amiable => (1.0, -1.0),
            MajorCategory::Rigorous => (-1.0, 1.0),
            MajorCategory::Reserved => (-1.0, -1.0),
        };
        let center = (sp * rng.gen_range(0.6..3.0), sa * rng.gen_range(0.6..3.0));
        for u in 0..utterances_per_adjective {
            let utterance_id = format!("u{:03}-{u:02}", adj.id);
            let p = center.0 + spread.sample(&mut rng);
            let a = center.1 + spread.sample(&mut rng);
            for k in 0..5 {
                let mut q = |target: f64| -> i8 {
                    (target / 2.0 + answer_noise.sample(&mut rng))
                        .round()
                        .clamp(-2.0, 2.0) as i8
                };
                let response = QuestionnaireResponse {
                    q1: q(-a),
                    q2: q(-p),
                    q3: q(p),
                    q4: q(a),
                };
                let mut adjective_votes = BTreeSet::new();
                if rng.gen_bool(0.8) {
                    adjective_votes.insert(adj.id);
                }
                if rng.gen_bool(0.2) {
                    adjective_votes.insert(catalog[rng.gen_range(0..catalog.len())].id);
                }
                out.push(AnnotationRecord {
                    utterance_id: utterance_id.clone(),
                    annotator_id: format!("r{k}"),
                    response,
                    adjective_votes,
                });
            }
        }
    }
    out
}

pub const DEFAULT_LEXICON_SEED: u64 = 20190;
pub const DEFAULT_LEXICON_UTTERANCES: usize = 6;

/// Rebuild the bundled lexicon from its synthetic annotation campaign.
pub fn regenerate_default_lexicon() -> Result<AdjectiveLexicon> {
    let catalog = adjective_catalog();
    let records = synth_annotations(&catalog, DEFAULT_LEXICON_UTTERANCES, DEFAULT_LEXICON_SEED);
    let labels = aggregate_labels(&records)?;
    build_lexicon(&records, &labels, &catalog, LexiconOptions::default())
}
