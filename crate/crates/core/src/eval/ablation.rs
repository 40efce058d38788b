use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::cv::{cross_validate, CvOptions};
use crate::dataset::UtteranceRecord;
use crate::error::{invalid, Error, Result};
use crate::features::{GroupingConfig, Modality};
use crate::model::{ModelConfig, Variant};

/// Feature configurations compared by the contribution analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    A,
    AV,
    AVT,
    /// All modalities with attention fusion.
    AVTAtt,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::A,
        FeatureSet::AV,
        FeatureSet::AVT,
        FeatureSet::AVTAtt,
    ];

    pub fn modalities(self) -> &'static [Modality] {
        match self {
            FeatureSet::A => &[Modality::Acoustic],
            FeatureSet::AV => &[Modality::Acoustic, Modality::Visual],
            FeatureSet::AVT | FeatureSet::AVTAtt => {
                &[Modality::Acoustic, Modality::Visual, Modality::Textual]
            }
        }
    }

    /// Multi-task concatenation for the plain sets, attention fusion for the last.
    pub fn variant(self) -> Variant {
        match self {
            FeatureSet::AVTAtt => Variant::Ammdnn,
            _ => Variant::Mmdnn,
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::A => "A",
            FeatureSet::AV => "A+V",
            FeatureSet::AVT => "A+V+T",
            FeatureSet::AVTAtt => "A+V+T+Att",
        })
    }
}

impl FromStr for FeatureSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown feature set {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub feature_set: String,
    pub p_ccc: f64,
    pub a_ccc: f64,
    pub p_rmse: f64,
    pub a_rmse: f64,
}

/// Restrict every record to the paths at `keep`.
pub fn restrict_records(records: &[UtteranceRecord], keep: &[usize]) -> Vec<UtteranceRecord> {
    records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.groups = keep.iter().map(|&i| r.groups[i].clone()).collect();
            r
        })
        .collect()
}

/// Cross-validate each feature set with `base` hyperparameters (the variant
/// is overridden per set). Rows come out in `FeatureSet::ALL` order and
/// report fold-mean metrics.
pub fn ablation(
    dataset: &[UtteranceRecord],
    grouping: &GroupingConfig,
    base: &ModelConfig,
    opts: CvOptions,
) -> Result<Vec<AblationRow>> {
    for m in [Modality::Acoustic, Modality::Visual, Modality::Textual] {
        if !grouping.modalities().contains(&m) {
            return Err(Error::MissingModality(m.to_string()));
        }
    }
    let mut rows = Vec::with_capacity(FeatureSet::ALL.len());
    for set in FeatureSet::ALL {
        let (sub, keep) = grouping.select(set.modalities())?;
        let data = restrict_records(dataset, &keep);
        let config = ModelConfig {
            variant: set.variant(),
            ..base.clone()
        };
        let out = cross_validate(&data, &config, &sub, opts)?;
        let r = &out.report;
        rows.push(AblationRow {
            feature_set: set.to_string(),
            p_ccc: r.mean_pleasure.ccc,
            a_ccc: r.mean_arousal.ccc,
            p_rmse: r.mean_pleasure.rmse,
            a_rmse: r.mean_arousal.rmse,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ModalityDims;

    #[test]
    fn names_round_trip() {
        for f in FeatureSet::ALL {
            assert_eq!(f.to_string().parse::<FeatureSet>().unwrap(), f);
        }
    }

    #[test]
    fn missing_modality_is_named() {
        let g = GroupingConfig::default_paths(
            ModalityDims {
                acoustic: 4,
                visual: 2,
                textual: 0,
            },
            2,
        )
        .unwrap();
        let err = ablation(&[], &g, &ModelConfig::default(), CvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("textual"), "{err}");
    }
}
