use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Modality;
use crate::error::{invalid, shape, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityDims {
    pub acoustic: usize,
    pub visual: usize,
    pub textual: usize,
}

impl ModalityDims {
    pub fn get(&self, m: Modality) -> usize {
        match m {
            Modality::Acoustic => self.acoustic,
            Modality::Visual => self.visual,
            Modality::Textual => self.textual,
        }
    }

    pub fn total(&self) -> usize {
        self.acoustic + self.visual + self.textual
    }

    fn offset(&self, m: Modality) -> usize {
        match m {
            Modality::Acoustic => 0,
            Modality::Visual => self.acoustic,
            Modality::Textual => self.acoustic + self.visual,
        }
    }
}

/// One model path: slices of a single modality's vector, concatenated in
/// the listed order. Ranges are half-open `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub modality: Modality,
    pub ranges: Vec<(usize, usize)>,
}

impl PathSpec {
    pub fn len(&self) -> usize {
        self.ranges.iter().map(|(s, e)| e - s).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How modality vectors are split into the model's paths. Every input
/// dimension lands in exactly one path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawGrouping")]
pub struct GroupingConfig {
    dims: ModalityDims,
    paths: Vec<PathSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrouping {
    dims: ModalityDims,
    paths: Vec<PathSpec>,
}

impl TryFrom<RawGrouping> for GroupingConfig {
    type Error = crate::Error;

    fn try_from(raw: RawGrouping) -> Result<Self> {
        GroupingConfig::new(raw.dims, raw.paths)
    }
}

impl GroupingConfig {
    pub fn new(dims: ModalityDims, paths: Vec<PathSpec>) -> Result<Self> {
        if paths.is_empty() {
            return Err(invalid("grouping needs at least one path"));
        }
        for m in Modality::ALL {
            let mut covered = vec![false; dims.get(m)];
            for (p, path) in paths.iter().enumerate().filter(|(_, p)| p.modality == m) {
                if path.ranges.is_empty() {
                    return Err(invalid(format!("path {p} has no ranges")));
                }
                for &(s, e) in &path.ranges {
                    if s >= e || e > covered.len() {
                        return Err(invalid(format!(
                            "path {p}: range [{s}, {e}) invalid for {m} dimension {}",
                            covered.len()
                        )));
                    }
                    for (i, c) in covered[s..e].iter_mut().enumerate() {
                        if *c {
                            return Err(invalid(format!("{m} index {} is in two paths", s + i)));
                        }
                        *c = true;
                    }
                }
            }
            if let Some(i) = covered.iter().position(|c| !c) {
                return Err(invalid(format!("{m} index {i} is not covered by any path")));
            }
        }
        Ok(Self { dims, paths })
    }

    /// Acoustic split into `acoustic_paths` contiguous near-equal ranges,
    /// one visual path and one textual path (each only when present).
    pub fn default_paths(dims: ModalityDims, acoustic_paths: usize) -> Result<Self> {
        let mut paths = Vec::new();
        if dims.acoustic > 0 {
            if acoustic_paths == 0 || acoustic_paths > dims.acoustic {
                return Err(invalid(format!(
                    "cannot split {} acoustic dims into {acoustic_paths} paths",
                    dims.acoustic
                )));
            }
            let base = dims.acoustic / acoustic_paths;
            let extra = dims.acoustic % acoustic_paths;
            let mut start = 0;
            for i in 0..acoustic_paths {
                let len = base + usize::from(i < extra);
                paths.push(PathSpec {
                    modality: Modality::Acoustic,
                    ranges: vec![(start, start + len)],
                });
                start += len;
            }
        }
        for m in [Modality::Visual, Modality::Textual] {
            if dims.get(m) > 0 {
                paths.push(PathSpec {
                    modality: m,
                    ranges: vec![(0, dims.get(m))],
                });
            }
        }
        Self::new(dims, paths)
    }

    /// Seven paths over 1582 acoustic, 14 visual and 4200 textual values.
    pub fn full_default() -> Self {
        Self::default_paths(
            ModalityDims {
                acoustic: 1582,
                visual: 14,
                textual: 4200,
            },
            5,
        )
        .expect("static config is valid")
    }

    /// Small layout used for synthetic runs: 20 acoustic values in five
    /// paths plus 6 visual and 10 textual values, seven paths in all.
    pub fn desk_default() -> Self {
        Self::default_paths(
            ModalityDims {
                acoustic: 20,
                visual: 6,
                textual: 10,
            },
            5,
        )
        .expect("static config is valid")
    }

    pub fn dims(&self) -> ModalityDims {
        self.dims
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn path_dims(&self) -> Vec<usize> {
        self.paths.iter().map(PathSpec::len).collect()
    }

    pub fn modalities(&self) -> Vec<Modality> {
        Modality::ALL
            .into_iter()
            .filter(|&m| self.dims.get(m) > 0)
            .collect()
    }

    /// Keep only the paths of `keep`; returns the reduced config and the
    /// indices of the retained paths in the original.
    pub fn select(&self, keep: &[Modality]) -> Result<(Self, Vec<usize>)> {
        for &m in keep {
            if self.dims.get(m) == 0 {
                return Err(crate::Error::MissingModality(m.to_string()));
            }
        }
        let idx: Vec<usize> = (0..self.paths.len())
            .filter(|&i| keep.contains(&self.paths[i].modality))
            .collect();
        let dims = ModalityDims {
            acoustic: if keep.contains(&Modality::Acoustic) {
                self.dims.acoustic
            } else {
                0
            },
            visual: if keep.contains(&Modality::Visual) {
                self.dims.visual
            } else {
                0
            },
            textual: if keep.contains(&Modality::Textual) {
                self.dims.textual
            } else {
                0
            },
        };
        let paths = idx.iter().map(|&i| self.paths[i].clone()).collect();
        Ok((Self::new(dims, paths)?, idx))
    }

    /// Stable content hash (hex SHA-256 of the canonical JSON form).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("grouping serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grouping serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| crate::Error::Json {
            context: "grouping config".into(),
            source,
        })
    }

    /// Position of every path element in the concatenation
    /// `[acoustic | visual | textual]`.
    pub(crate) fn flat_indices(&self) -> Vec<Vec<usize>> {
        self.paths
            .iter()
            .map(|p| {
                let off = self.dims.offset(p.modality);
                p.ranges
                    .iter()
                    .flat_map(|&(s, e)| (s + off)..(e + off))
                    .collect()
            })
            .collect()
    }
}

/// Split the three modality vectors into the configured paths.
pub fn group_features(
    acoustic: &[f64],
    visual: &[f64],
    textual: &[f64],
    cfg: &GroupingConfig,
) -> Result<Vec<Vec<f64>>> {
    for (m, v) in Modality::ALL.into_iter().zip([acoustic, visual, textual]) {
        if v.len() != cfg.dims.get(m) {
            return Err(shape(format!(
                "{m} vector has {} values, grouping expects {}",
                v.len(),
                cfg.dims.get(m)
            )));
        }
    }
    Ok(cfg
        .paths
        .iter()
        .map(|p| {
            let src = match p.modality {
                Modality::Acoustic => acoustic,
                Modality::Visual => visual,
                Modality::Textual => textual,
            };
            p.ranges
                .iter()
                .flat_map(|&(s, e)| src[s..e].iter().copied())
                .collect()
        })
        .collect())
}

/// Inverse of [`group_features`]: the concatenation
/// `[acoustic | visual | textual]`.
pub fn scatter_features(groups: &[Vec<f64>], cfg: &GroupingConfig) -> Result<Vec<f64>> {
    if groups.len() != cfg.paths.len() {
        return Err(shape(format!(
            "{} groups for {} paths",
            groups.len(),
            cfg.paths.len()
        )));
    }
    let mut out = vec![0.0; cfg.dims.total()];
    for (p, (g, idx)) in groups.iter().zip(cfg.flat_indices()).enumerate() {
        if g.len() != idx.len() {
            return Err(shape(format!(
                "group {p} has {} values, expected {}",
                g.len(),
                idx.len()
            )));
        }
        for (v, i) in g.iter().zip(idx) {
            out[i] = *v;
        }
    }
    Ok(out)
}
