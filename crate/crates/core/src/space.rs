//! The two-dimensional pleasure–arousal plane and the adjective lexicon
//! that lives in it.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point in pleasure–arousal space. Both axes are z-scored and
/// dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaCoordinate {
    pub pleasure: f64,
    pub arousal: f64,
}

impl PaCoordinate {
    pub fn new(pleasure: f64, arousal: f64) -> Result<Self> {
        let c = Self { pleasure, arousal };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pleasure.is_finite() && self.arousal.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(format!(
                "coordinate ({}, {})",
                self.pleasure, self.arousal
            )))
        }
    }

    pub fn distance(&self, other: &PaCoordinate) -> f64 {
        (self.pleasure - other.pleasure).hypot(self.arousal - other.arousal)
    }

    pub fn get(&self, task: crate::Task) -> f64 {
        match task {
            crate::Task::Pleasure => self.pleasure,
            crate::Task::Arousal => self.arousal,
        }
    }
}

/// The four major groups the 41 adjectives are sorted into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MajorCategory {
    Enthusiastic,
    Amiable,
    Rigorous,
    Reserved,
}

impl MajorCategory {
    pub const ALL: [MajorCategory; 4] = [
        MajorCategory::Enthusiastic,
        MajorCategory::Amiable,
        MajorCategory::Rigorous,
        MajorCategory::Reserved,
    ];
}

impl fmt::Display for MajorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MajorCategory::Enthusiastic => "enthusiastic",
            MajorCategory::Amiable => "amiable",
            MajorCategory::Rigorous => "rigorous",
            MajorCategory::Reserved => "reserved",
        };
        f.write_str(s)
    }
}

impl FromStr for MajorCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MajorCategory::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| invalid(format!("unknown category {s:?}")))
    }
}

/// Identity of an adjective without a position: what a vote refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjectiveInfo {
    pub id: u32,
    pub label: String,
    pub category: MajorCategory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjectiveEntry {
    pub id: u32,
    pub label: String,
    pub category: MajorCategory,
    pub coord: PaCoordinate,
}

/// Flat on-disk form of one lexicon entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    id: u32,
    label: String,
    category: MajorCategory,
    pleasure: f64,
    arousal: f64,
}

/// Ordered, non-empty list of adjectives with strictly increasing ids.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjectiveLexicon {
    entries: Vec<AdjectiveEntry>,
}

impl AdjectiveLexicon {
    pub fn new(entries: Vec<AdjectiveEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        for e in &entries {
            if e.label.trim().is_empty() {
                return Err(invalid(format!("adjective {} has an empty label", e.id)));
            }
            e.coord.validate()?;
        }
        if let Some(w) = entries.windows(2).find(|w| w[0].id >= w[1].id) {
            return Err(invalid(format!(
                "lexicon ids must be strictly increasing ({} then {})",
                w[0].id, w[1].id
            )));
        }
        Ok(Self { entries })
    }

    /// Sorts `entries` by id before validating.
    pub fn from_unordered(mut entries: Vec<AdjectiveEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.id);
        Self::new(entries)
    }

    pub fn entries(&self) -> &[AdjectiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&AdjectiveEntry> {
        self.entries
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// The lexicon shipped with the crate (41 adjectives, placeholder
    /// coordinates produced from synthetic annotations).
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_LEXICON_JSON).expect("bundled lexicon is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<EntryRecord> =
            serde_json::from_str(text).map_err(|source| Error::Json {
                context: "lexicon".into(),
                source,
            })?;
        let entries = records
            .into_iter()
            .map(|r| AdjectiveEntry {
                id: r.id,
                label: r.label,
                category: r.category,
                coord: PaCoordinate {
                    pleasure: r.pleasure,
                    arousal: r.arousal,
                },
            })
            .collect();
        Self::new(entries)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<EntryRecord> = self
            .entries
            .iter()
            .map(|e| EntryRecord {
                id: e.id,
                label: e.label.clone(),
                category: e.category,
                pleasure: e.coord.pleasure,
                arousal: e.coord.arousal,
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&records).expect("lexicon serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::io::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_bytes(path, self.to_json().as_bytes())
    }
}

pub(crate) const DEFAULT_LEXICON_JSON: &str = include_str!("../data/default_lexicon.json");

/// Labels and major categories of the 41 teaching-style adjectives.
pub fn adjective_catalog() -> Vec<AdjectiveInfo> {
    use MajorCategory::*;
    const TABLE: [(&str, MajorCategory); 41] = [
        ("passionate", Enthusiastic),
        ("lively", Enthusiastic),
        ("humorous", Enthusiastic),
        ("energetic", Enthusiastic),
        ("vivid", Enthusiastic),
        ("inspiring", Enthusiastic),
        ("expressive", Enthusiastic),
        ("cheerful", Enthusiastic),
        ("enthusiastic", Enthusiastic),
        ("dynamic", Enthusiastic),
        ("confident", Enthusiastic),
        ("friendly", Amiable),
        ("gentle", Amiable),
        ("patient", Amiable),
        ("kind", Amiable),
        ("warm", Amiable),
        ("approachable", Amiable),
        ("calm", Amiable),
        ("encouraging", Amiable),
        ("caring", Amiable),
        ("relaxed", Amiable),
        ("soft-spoken", Amiable),
        ("severe", Rigorous),
        ("strict", Rigorous),
        ("serious", Rigorous),
        ("rigorous", Rigorous),
        ("demanding", Rigorous),
        ("impatient", Rigorous),
        ("stern", Rigorous),
        ("harsh", Rigorous),
        ("authoritative", Rigorous),
        ("meticulous", Rigorous),
        ("rigid", Reserved),
        ("stiff", Reserved),
        ("dull", Reserved),
        ("monotonous", Reserved),
        ("boring", Reserved),
        ("flat", Reserved),
        ("indifferent", Reserved),
        ("sluggish", Reserved),
        ("tired", Reserved),
    ];
    TABLE
        .iter()
        .enumerate()
        .map(|(i, (label, category))| AdjectiveInfo {
            id: i as u32 + 1,
            label: (*label).to_string(),
            category: *category,
        })
        .collect()
}

/// The `k` adjectives closest to `coord`, nearest first. Equal distances
/// are ordered by ascending id.
pub fn nearest_adjectives(
    coord: PaCoordinate,
    lexicon: &AdjectiveLexicon,
    k: usize,
) -> Result<Vec<(AdjectiveEntry, f64)>> {
    if lexicon.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    coord.validate()?;
    if k == 0 || k > lexicon.len() {
        return Err(invalid(format!(
            "k must be in 1..={} (got {k})",
            lexicon.len()
        )));
    }
    let mut scored: Vec<(&AdjectiveEntry, f64)> = lexicon
        .entries()
        .iter()
        .map(|e| (e, e.coord.distance(&coord)))
        .collect();
    scored.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.id.cmp(&b.0.id))
    });
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(e, d)| (e.clone(), d))
        .collect())
}

/// Component-wise arithmetic mean.
pub fn centroid(coords: &[PaCoordinate]) -> Result<PaCoordinate> {
    if coords.is_empty() {
        return Err(invalid("centroid of an empty set"));
    }
    let mut p = 0.0;
    let mut a = 0.0;
    for c in coords {
        c.validate()?;
        p += c.pleasure;
        a += c.arousal;
    }
    let n = coords.len() as f64;
    Ok(PaCoordinate {
        pleasure: p / n,
        arousal: a / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pa(p: f64, a: f64) -> PaCoordinate {
        PaCoordinate {
            pleasure: p,
            arousal: a,
        }
    }

    fn lexicon_at(points: &[(u32, f64, f64)]) -> AdjectiveLexicon {
        AdjectiveLexicon::new(
            points
                .iter()
                .map(|&(id, p, a)| AdjectiveEntry {
                    id,
                    label: format!("adj{id}"),
                    category: MajorCategory::Amiable,
                    coord: pa(p, a),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn builtin_lexicon_has_41_entries() {
        let lex = AdjectiveLexicon::builtin();
        assert_eq!(lex.len(), 41);
        let catalog = adjective_catalog();
        for (e, info) in lex.entries().iter().zip(&catalog) {
            assert_eq!(e.id, info.id);
            assert_eq!(e.label, info.label);
            assert_eq!(e.category, info.category);
        }
    }

    #[test]
    fn exact_coordinate_returns_entry_with_zero_distance() {
        let lex = AdjectiveLexicon::builtin();
        let seventh = lex.get(7).unwrap().clone();
        let hits = nearest_adjectives(seventh.coord, &lex, 1).unwrap();
        assert_eq!(hits[0].0.id, 7);
        assert_eq!(hits[0].1, 0.0);
    }

    #[test]
    fn ties_go_to_lower_id() {
        let lex = lexicon_at(&[(3, 1.0, 0.0), (5, -1.0, 0.0), (9, 0.0, 3.0)]);
        let hits = nearest_adjectives(pa(0.0, 0.0), &lex, 2).unwrap();
        assert_eq!(hits[0].0.id, 3);
        assert_eq!(hits[1].0.id, 5);
        assert_eq!(hits[0].1, hits[1].1);
    }

    #[test]
    fn k_out_of_range_is_rejected() {
        let lex = lexicon_at(&[(1, 0.0, 0.0)]);
        assert!(nearest_adjectives(pa(0.0, 0.0), &lex, 2).is_err());
        assert!(nearest_adjectives(pa(0.0, 0.0), &lex, 0).is_err());
    }

    #[test]
    fn empty_lexicon_is_rejected() {
        assert!(matches!(
            AdjectiveLexicon::new(vec![]),
            Err(Error::EmptyLexicon)
        ));
    }

    #[test]
    fn non_increasing_ids_are_rejected() {
        let entries = vec![
            AdjectiveEntry {
                id: 2,
                label: "a".into(),
                category: MajorCategory::Amiable,
                coord: pa(0.0, 0.0),
            },
            AdjectiveEntry {
                id: 2,
                label: "b".into(),
                category: MajorCategory::Amiable,
                coord: pa(0.0, 0.0),
            },
        ];
        assert!(AdjectiveLexicon::new(entries).is_err());
    }

    #[test]
    fn lexicon_json_rejects_unknown_fields() {
        let text =
            r#"[{"id":1,"label":"x","category":"amiable","pleasure":0,"arousal":0,"extra":1}]"#;
        assert!(AdjectiveLexicon::from_json(text).is_err());
        let ok = r#"[{"id":1,"label":"x","category":"amiable","pleasure":0.5,"arousal":-1}]"#;
        let lex = AdjectiveLexicon::from_json(ok).unwrap();
        assert_eq!(AdjectiveLexicon::from_json(&lex.to_json()).unwrap(), lex);
    }

    #[test]
    fn random_queries_match_exhaustive_scan() {
        let lex = AdjectiveLexicon::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let q = pa(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let got: Vec<u32> = nearest_adjectives(q, &lex, 3)
                .unwrap()
                .iter()
                .map(|(e, _)| e.id)
                .collect();
            // selection by repeated minimum
            let mut remaining: Vec<&AdjectiveEntry> = lex.entries().iter().collect();
            let mut want = Vec::new();
            for _ in 0..3 {
                let mut best = 0;
                for i in 1..remaining.len() {
                    let di = remaining[i].coord.distance(&q);
                    let db = remaining[best].coord.distance(&q);
                    if di < db || (di == db && remaining[i].id < remaining[best].id) {
                        best = i;
                    }
                }
                want.push(remaining.remove(best).id);
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&[pa(1.0, 1.0)]).unwrap(), pa(1.0, 1.0));
        assert_eq!(
            centroid(&[pa(-1.0, 0.0), pa(1.0, 0.0)]).unwrap(),
            pa(0.0, 0.0)
        );
        assert!(centroid(&[]).is_err());
        assert!(centroid(&[pa(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn centroid_matches_independent_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<PaCoordinate> = (0..100)
            .map(|_| pa(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect();
        let c = centroid(&pts).unwrap();
        // reverse-order pairwise sums
        let (sp, sa) = pts
            .iter()
            .rev()
            .fold((0.0, 0.0), |(p, a), c| (p + c.pleasure, a + c.arousal));
        assert!((c.pleasure - sp / 100.0).abs() < 1e-12);
        assert!((c.arousal - sa / 100.0).abs() < 1e-12);
    }

    fn coord_strategy() -> impl Strategy<Value = PaCoordinate> {
        (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(p, a)| pa(p, a))
    }

    proptest! {
        #[test]
        fn full_ranking_is_sorted_permutation(q in coord_strategy()) {
            let lex = AdjectiveLexicon::builtin();
            let hits = nearest_adjectives(q, &lex, lex.len()).unwrap();
            let mut ids: Vec<u32> = hits.iter().map(|(e, _)| e.id).collect();
            prop_assert!(hits.windows(2).all(|w| w[0].1 <= w[1].1));
            ids.sort_unstable();
            prop_assert_eq!(ids, (1..=41).collect::<Vec<u32>>());
        }

        #[test]
        fn centroid_is_translation_equivariant(
            pts in prop::collection::vec(coord_strategy(), 1..30),
            t in coord_strategy(),
        ) {
            let shifted: Vec<_> = pts.iter().map(|c| pa(c.pleasure + t.pleasure, c.arousal + t.arousal)).collect();
            let a = centroid(&pts).unwrap();
            let b = centroid(&shifted).unwrap();
            prop_assert!((b.pleasure - a.pleasure - t.pleasure).abs() < 1e-9);
            prop_assert!((b.arousal - a.arousal - t.arousal).abs() < 1e-9);
        }

        #[test]
        fn ranking_ignores_entry_order(q in coord_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let lex = AdjectiveLexicon::builtin();
            let mut entries = lex.entries().to_vec();
            entries.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let shuffled = AdjectiveLexicon::from_unordered(entries).unwrap();
            let rank = |l: &AdjectiveLexicon| -> Vec<u32> {
                nearest_adjectives(q, l, 5).unwrap().iter().map(|(e, _)| e.id).collect()
            };
            let got = rank(&shuffled);
            let want = rank(&lex);
            prop_assert_eq!(got, want);
        }
    }
}
