//! The attention-fused multi-path multi-task regressor and its ablated
//! variants.
//!
//! Every variant is built from the same parts:
//!
//! * one local regressor per feature path (ELU trunk, linear head per task);
//! * the top hidden layers of acoustic paths form `a`, those of visual and
//!   textual paths form `w`;
//! * `[a, w]` (plain variants) or `[a, α⊙w]` (attention variants) feeds the
//!   global regressor;
//! * the loss mixes global and local squared errors with weight `λ`.
//!
//! Multi-task variants share one network across pleasure and arousal;
//! single-task variants train one network per task.

mod attention;
mod checkpoint;
mod loss;
mod network;
mod train;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use crate::Task;
pub use attention::{AttentionFusion, AttentionScale, FusionCache};
pub use checkpoint::{Checkpoint, CHECKPOINT_SCHEMA_VERSION};
pub use loss::{total_loss, LossConfig};
pub use network::{LocalRegressor, Network, NetworkCache, NetworkOutput, Topology};
pub use train::{
    gradient_step, loss_and_gradient, train, train_with_validation, EpochLog, TrainingLog,
};

pub(crate) use loss::batch_loss;

use crate::dataset::UtteranceRecord;
use crate::error::{invalid, shape, Error, Result};
use crate::features::GroupingConfig;
use crate::nn::{AdamConfig, Mode};
use crate::space::PaCoordinate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Single path over all features, one network per task.
    Dnn,
    /// Multi-path, plain concatenation, one network per task.
    Mdnn,
    /// Multi-path, plain concatenation, shared network for both tasks.
    Mmdnn,
    /// Multi-path with attention fusion, one network per task.
    Amdnn,
    /// Multi-path with attention fusion, shared network for both tasks.
    Ammdnn,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Dnn,
        Variant::Mdnn,
        Variant::Mmdnn,
        Variant::Amdnn,
        Variant::Ammdnn,
    ];

    pub fn multi_path(self) -> bool {
        self != Variant::Dnn
    }

    pub fn attention(self) -> bool {
        matches!(self, Variant::Amdnn | Variant::Ammdnn)
    }

    pub fn multi_task(self) -> bool {
        matches!(self, Variant::Mmdnn | Variant::Ammdnn)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Dnn => "dnn",
            Variant::Mdnn => "mdnn",
            Variant::Mmdnn => "mmdnn",
            Variant::Amdnn => "amdnn",
            Variant::Ammdnn => "ammdnn",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| invalid(format!("unknown variant {s:?}")))
    }
}

/// Architecture and optimization settings. Defaults: 2×400 ELU layers,
/// dropout 0.5, λ = 0.5, Adam at 1e-4, 12 epochs of batch 8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    pub hidden: Vec<usize>,
    pub global_hidden: Vec<usize>,
    pub dropout: f64,
    pub lambda: f64,
    pub adam: AdamConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// Standardize each input feature with training-set mean and sd.
    pub standardize: bool,
    #[serde(default)]
    pub attention_scale: AttentionScale,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Ammdnn,
            hidden: vec![400, 400],
            global_hidden: vec![400, 400],
            dropout: 0.5,
            lambda: 0.5,
            adam: AdamConfig::default(),
            epochs: 12,
            batch_size: 8,
            standardize: true,
            attention_scale: AttentionScale::Dimension,
        }
    }
}

impl ModelConfig {
    pub fn with_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(invalid(
                "local hidden layers must be non-empty and non-zero",
            ));
        }
        if self.global_hidden.is_empty() || self.global_hidden.contains(&0) {
            return Err(invalid(
                "global hidden layers must be non-empty and non-zero",
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(invalid(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be >= 1"));
        }
        crate::nn::AdamState::new(self.adam)?;
        Ok(())
    }

    /// Task sets of the networks this variant trains.
    pub fn task_sets(&self) -> Vec<Vec<Task>> {
        if self.variant.multi_task() {
            vec![vec![Task::Pleasure, Task::Arousal]]
        } else {
            vec![vec![Task::Pleasure], vec![Task::Arousal]]
        }
    }

    pub fn loss_config(&self, tasks: Vec<Task>, grouping: &GroupingConfig) -> Result<LossConfig> {
        if self.variant.multi_path() {
            LossConfig::new(self.lambda, tasks, grouping.path_count())
        } else {
            LossConfig::new(0.0, tasks, 0)
        }
    }
}

/// Per-feature affine normalization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardizer {
    pub mean: Vec<Vec<f64>>,
    pub scale: Vec<Vec<f64>>,
}

impl Standardizer {
    pub fn fit(records: &[&UtteranceRecord], path_dims: &[usize]) -> Result<Self> {
        if records.is_empty() {
            return Err(invalid("cannot fit a standardizer on no records"));
        }
        let n = records.len() as f64;
        let mut mean: Vec<Vec<f64>> = path_dims.iter().map(|&d| vec![0.0; d]).collect();
        for r in records {
            for (m, g) in mean.iter_mut().zip(&r.groups) {
                for (mi, x) in m.iter_mut().zip(g) {
                    *mi += x;
                }
            }
        }
        mean.iter_mut().flatten().for_each(|m| *m /= n);
        let mut var: Vec<Vec<f64>> = path_dims.iter().map(|&d| vec![0.0; d]).collect();
        for r in records {
            for ((v, m), g) in var.iter_mut().zip(&mean).zip(&r.groups) {
                for ((vi, mi), x) in v.iter_mut().zip(m).zip(g) {
                    *vi += (x - mi).powi(2);
                }
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                v.into_iter()
                    .map(|s| {
                        let sd = (s / n).sqrt();
                        if sd > 1e-12 {
                            1.0 / sd
                        } else {
                            1.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { mean, scale })
    }

    fn apply(&self, path: usize, values: &[f64], out: &mut [f64]) {
        for (((o, x), m), s) in out
            .iter_mut()
            .zip(values)
            .zip(&self.mean[path])
            .zip(&self.scale[path])
        {
            *o = (x - m) * s;
        }
    }
}

/// Predictions for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPredictions {
    pub global: PaCoordinate,
    pub per_local: Vec<PaCoordinate>,
    /// Attention weights of the (first) network, when it has fusion.
    pub alpha: Option<Vec<f64>>,
}

/// A trained (or freshly initialized) model: one network for multi-task
/// variants, a pleasure network and an arousal network otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct AmmdnnModel {
    pub config: ModelConfig,
    pub grouping: GroupingConfig,
    pub standardizer: Option<Standardizer>,
    pub networks: Vec<Network>,
}

impl AmmdnnModel {
    /// Fresh weights for every network; `seed` fixes initialization.
    pub fn init(config: &ModelConfig, grouping: &GroupingConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let dims = grouping.path_dims();
        let modalities: Vec<_> = grouping.paths().iter().map(|p| p.modality).collect();
        let networks = config
            .task_sets()
            .into_iter()
            .enumerate()
            .map(|(k, tasks)| {
                let topo = Topology {
                    variant: config.variant,
                    tasks,
                    path_dims: &dims,
                    path_modalities: &modalities,
                    hidden: &config.hidden,
                    global_hidden: &config.global_hidden,
                    dropout: config.dropout,
                    attention_scale: config.attention_scale,
                };
                Network::init(&topo, &mut crate::nn::seeded_rng(seed, 100 + k as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            grouping: grouping.clone(),
            standardizer: None,
            networks,
        })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn grouping_hash(&self) -> String {
        self.grouping.hash()
    }

    /// Stack records into per-path matrices, standardized when the model
    /// carries a standardizer.
    pub fn batch_inputs(&self, records: &[&UtteranceRecord]) -> Result<Vec<Array2<f64>>> {
        let dims = self.grouping.path_dims();
        let mut mats: Vec<Array2<f64>> = dims
            .iter()
            .map(|&d| Array2::zeros((records.len(), d)))
            .collect();
        for (row, r) in records.iter().enumerate() {
            r.check_against(&self.grouping)?;
            for (p, g) in r.groups.iter().enumerate() {
                let mut dst = mats[p].row_mut(row);
                let dst = dst.as_slice_mut().expect("row of standard layout");
                match &self.standardizer {
                    Some(s) => s.apply(p, g, dst),
                    None => dst.copy_from_slice(g),
                }
            }
        }
        Ok(mats)
    }

    /// Forward pass for one record's groups. Infer mode ignores `rng`.
    pub fn forward_record<R: rand::Rng>(
        &self,
        record: &UtteranceRecord,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ModelPredictions> {
        let inputs = self.batch_inputs(&[record])?;
        let mut global = PaCoordinate {
            pleasure: 0.0,
            arousal: 0.0,
        };
        let paths = if self.variant().multi_path() {
            self.grouping.path_count()
        } else {
            0
        };
        let mut per_local = vec![
            PaCoordinate {
                pleasure: 0.0,
                arousal: 0.0
            };
            paths
        ];
        let mut alpha = None;
        for net in &self.networks {
            let (out, _) = net.forward(&inputs, mode, rng)?;
            for (k, &t) in net.tasks.iter().enumerate() {
                set(&mut global, t, out.global[[0, k]]);
                for (p, l) in per_local.iter_mut().zip(&out.locals) {
                    set(p, t, l[[0, k]]);
                }
            }
            if alpha.is_none() {
                alpha = out.alpha.map(|a| a.row(0).to_vec());
            }
        }
        Ok(ModelPredictions {
            global,
            per_local,
            alpha,
        })
    }

    /// Global-head prediction in inference mode.
    pub fn predict(&self, record: &UtteranceRecord) -> Result<PaCoordinate> {
        Ok(self.predict_many(&[record])?.remove(0))
    }

    pub fn predict_many(&self, records: &[&UtteranceRecord]) -> Result<Vec<PaCoordinate>> {
        let mut out = Vec::with_capacity(records.len());
        // inference never draws from the generator
        let mut rng = crate::nn::seeded_rng(0, 0);
        for chunk in records.chunks(256) {
            let inputs = self.batch_inputs(chunk)?;
            let mut coords = vec![
                PaCoordinate {
                    pleasure: 0.0,
                    arousal: 0.0
                };
                chunk.len()
            ];
            for net in &self.networks {
                let (o, _) = net.forward(&inputs, Mode::Infer, &mut rng)?;
                for (k, &t) in net.tasks.iter().enumerate() {
                    for (i, c) in coords.iter_mut().enumerate() {
                        set(c, t, o.global[[i, k]]);
                    }
                }
            }
            out.extend(coords);
        }
        Ok(out)
    }

    /// Like [`predict_many`](Self::predict_many) but refuses data produced
    /// under a different grouping.
    pub fn predict_checked(
        &self,
        records: &[&UtteranceRecord],
        data_hash: &str,
    ) -> Result<Vec<PaCoordinate>> {
        let expected = self.grouping_hash();
        if expected != data_hash {
            return Err(Error::GroupingMismatch {
                expected,
                found: data_hash.to_string(),
            });
        }
        self.predict_many(records)
    }

    pub fn network_for(&self, task: Task) -> Result<&Network> {
        self.networks
            .iter()
            .find(|n| n.task_index(task).is_some())
            .ok_or_else(|| shape(format!("no network predicts {task:?}")))
    }
}

fn set(c: &mut PaCoordinate, t: Task, v: f64) {
    match t {
        Task::Pleasure => c.pleasure = v,
        Task::Arousal => c.arousal = v,
    }
}
