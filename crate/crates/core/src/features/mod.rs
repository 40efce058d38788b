//! Utterance-level feature vectors: statistical functionals over frame
//! descriptors, the split of modality vectors into model paths, and the
//! synthetic dataset generator.

mod functionals;
mod grouping;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};

pub use functionals::{functionals, LldSequence, FUNCTIONALS_PER_DIM, FUNCTIONAL_NAMES};
pub use grouping::{group_features, scatter_features, GroupingConfig, ModalityDims, PathSpec};
pub use synth::{generate, synth_dataset, GroundTruth, LabelDependence, SynthOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Acoustic,
    Visual,
    Textual,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Acoustic, Modality::Visual, Modality::Textual];
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Acoustic => "acoustic",
            Modality::Visual => "visual",
            Modality::Textual => "textual",
        })
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Modality::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| invalid(format!("unknown modality {s:?}")))
    }
}
