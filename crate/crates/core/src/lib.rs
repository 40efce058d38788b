//! Dimensional teaching-style modelling.
//!
//! Utterances are placed in a two-dimensional pleasure–arousal plane.
//! The crate covers the whole path from questionnaire annotations to a
//! trained multi-path, multi-task regressor with attention fusion, its
//! cross-validated evaluation, mapping of predictions onto a lexicon of
//! style adjectives, and a gaze-geometry estimate of classroom attention.
//!
//! ```
//! use teaching_style::space::{nearest_adjectives, AdjectiveLexicon, PaCoordinate};
//!
//! let lexicon = AdjectiveLexicon::builtin();
//! let here = PaCoordinate::new(0.8, 0.9).unwrap();
//! let top = nearest_adjectives(here, &lexicon, 3).unwrap();
//! assert_eq!(top.len(), 3);
//! ```

pub mod analysis;
pub mod annotate;
pub mod cli;
pub mod dataset;
mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod model;
pub mod nn;
pub mod space;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// The two regression targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Pleasure,
    Arousal,
}
