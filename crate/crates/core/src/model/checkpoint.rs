use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{
    AmmdnnModel, AttentionFusion, LocalRegressor, ModelConfig, Network, Standardizer, Task, Variant,
};
use crate::error::{invalid, shape, Error, Result};
use crate::features::{GroupingConfig, Modality};
use crate::nn::{Activation, DenseLayer, Mlp};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;
const CHECKPOINT_KIND: &str = "teaching-style-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    /// Row-major `inputs × outputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpRecord {
    dropout_rate: f64,
    activations: Vec<Activation>,
    layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocalRecord {
    modality: Modality,
    trunk: MlpRecord,
    head: LayerRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FusionRecord {
    attended_dim: usize,
    scoring: LayerRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkRecord {
    tasks: Vec<Task>,
    locals: Vec<LocalRecord>,
    fusion: Option<FusionRecord>,
    global: MlpRecord,
    global_head: LayerRecord,
}

/// Versioned on-disk model: a header (schema version, variant, grouping
/// hash, hyperparameters) followed by every parameter array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub kind: String,
    pub variant: Variant,
    pub grouping_hash: String,
    pub hyperparameters: ModelConfig,
    pub grouping: GroupingConfig,
    pub standardizer: Option<Standardizer>,
    networks: Vec<NetworkRecord>,
}

fn layer_record(l: &DenseLayer) -> LayerRecord {
    LayerRecord {
        inputs: l.inputs(),
        outputs: l.outputs(),
        weights: l.weights.iter().copied().collect(),
        bias: l.bias.to_vec(),
    }
}

fn layer_from(r: LayerRecord) -> Result<DenseLayer> {
    let w = Array2::from_shape_vec((r.inputs, r.outputs), r.weights)
        .map_err(|e| shape(format!("checkpoint layer {}x{}: {e}", r.inputs, r.outputs)))?;
    DenseLayer::new(w, Array1::from_vec(r.bias))
}

fn mlp_record(m: &Mlp) -> MlpRecord {
    MlpRecord {
        dropout_rate: m.dropout_rate,
        activations: m.activations.clone(),
        layers: m.layers.iter().map(layer_record).collect(),
    }
}

fn mlp_from(r: MlpRecord) -> Result<Mlp> {
    let layers = r
        .layers
        .into_iter()
        .map(layer_from)
        .collect::<Result<Vec<_>>>()?;
    Mlp::new(layers, r.activations, r.dropout_rate)
}

impl Checkpoint {
    pub fn from_model(model: &AmmdnnModel) -> Self {
        let networks = model
            .networks
            .iter()
            .map(|n| NetworkRecord {
                tasks: n.tasks.clone(),
                locals: n
                    .locals
                    .iter()
                    .map(|l| LocalRecord {
                        modality: l.modality,
                        trunk: mlp_record(&l.trunk),
                        head: layer_record(&l.head),
                    })
                    .collect(),
                fusion: n.fusion.as_ref().map(|f| FusionRecord {
                    attended_dim: f.attended_dim,
                    scoring: layer_record(&f.scoring),
                }),
                global: mlp_record(&n.global),
                global_head: layer_record(&n.global_head),
            })
            .collect();
        Self {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            kind: CHECKPOINT_KIND.to_string(),
            variant: model.config.variant,
            grouping_hash: model.grouping.hash(),
            hyperparameters: model.config.clone(),
            grouping: model.grouping.clone(),
            standardizer: model.standardizer.clone(),
            networks,
        }
    }

    pub fn into_model(self) -> Result<AmmdnnModel> {
        if self.schema_version != CHECKPOINT_SCHEMA_VERSION || self.kind != CHECKPOINT_KIND {
            return Err(invalid(format!(
                "unsupported checkpoint {} v{} (expected {CHECKPOINT_KIND} v{CHECKPOINT_SCHEMA_VERSION})",
                self.kind, self.schema_version
            )));
        }
        let actual = self.grouping.hash();
        if actual != self.grouping_hash {
            return Err(Error::GroupingMismatch {
                expected: self.grouping_hash,
                found: actual,
            });
        }
        if self.variant != self.hyperparameters.variant {
            return Err(invalid(
                "checkpoint variant disagrees with its hyperparameters",
            ));
        }
        let scale = self.hyperparameters.attention_scale;
        let networks = self
            .networks
            .into_iter()
            .map(|n| {
                let locals = n
                    .locals
                    .into_iter()
                    .map(|l| {
                        Ok(LocalRegressor {
                            modality: l.modality,
                            trunk: mlp_from(l.trunk)?,
                            head: layer_from(l.head)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let fusion = n
                    .fusion
                    .map(|f| {
                        AttentionFusion::from_scoring(layer_from(f.scoring)?, f.attended_dim, scale)
                    })
                    .transpose()?;
                Ok(Network {
                    tasks: n.tasks,
                    locals,
                    fusion,
                    global: mlp_from(n.global)?,
                    global_head: layer_from(n.global_head)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = AmmdnnModel {
            config: self.hyperparameters,
            grouping: self.grouping,
            standardizer: self.standardizer,
            networks,
        };
        let expected = AmmdnnModel::init(&model.config, &model.grouping, 0)?;
        let same_shape = expected.networks.len() == model.networks.len()
            && expected.networks.iter().zip(&model.networks).all(|(a, b)| {
                a.tasks == b.tasks
                    && a.input_dims() == b.input_dims()
                    && a.locals.len() == b.locals.len()
            });
        if !same_shape {
            return Err(shape("checkpoint networks do not match its configuration"));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "checkpoint".into(),
            source,
        })
    }
}

impl AmmdnnModel {
    pub fn to_checkpoint_json(&self) -> String {
        Checkpoint::from_model(self).to_json()
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        Checkpoint::from_json(text)?.into_model()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_bytes(path, self.to_checkpoint_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint_json(&crate::io::read_to_string(path)?)
    }
}
