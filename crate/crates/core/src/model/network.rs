use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;

use super::attention::{AttentionFusion, AttentionScale, FusionCache};
use super::{Task, Variant};
use crate::error::{invalid, shape, Result};
use crate::features::Modality;
use crate::nn::{DenseLayer, Mlp, MlpCache, Mode, Parameters};

/// One path's regressor: an ELU trunk plus a linear head per task.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRegressor {
    pub modality: Modality,
    pub trunk: Mlp,
    pub head: DenseLayer,
}

/// A trainable network predicting a fixed set of tasks. With no local
/// regressors the global regressor reads the raw concatenated features
/// (the single-path baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub tasks: Vec<Task>,
    pub locals: Vec<LocalRegressor>,
    pub fusion: Option<AttentionFusion>,
    pub global: Mlp,
    pub global_head: DenseLayer,
}

/// Per-sample outputs of a batched pass; every matrix is `B × tasks`.
#[derive(Debug, Clone)]
pub struct NetworkOutput {
    pub global: Array2<f64>,
    pub locals: Vec<Array2<f64>>,
    pub alpha: Option<Array2<f64>>,
}

#[derive(Debug, Clone)]
pub struct NetworkCache {
    local: Vec<MlpCache>,
    local_top: Vec<Array2<f64>>,
    fusion: Option<FusionCache>,
    global: MlpCache,
    global_top: Array2<f64>,
    batch: usize,
}

/// Shape of a network, enough to rebuild it with fresh weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<'a> {
    pub variant: Variant,
    pub tasks: Vec<Task>,
    pub path_dims: &'a [usize],
    pub path_modalities: &'a [Modality],
    pub hidden: &'a [usize],
    pub global_hidden: &'a [usize],
    pub dropout: f64,
    pub attention_scale: AttentionScale,
}

impl Network {
    pub fn init<R: Rng>(topo: &Topology<'_>, rng: &mut R) -> Result<Self> {
        if topo.tasks.is_empty() {
            return Err(invalid("a network needs at least one task"));
        }
        if topo.hidden.is_empty() || topo.global_hidden.is_empty() {
            return Err(invalid("hidden layer lists must be non-empty"));
        }
        if topo.path_dims.len() != topo.path_modalities.len() || topo.path_dims.is_empty() {
            return Err(shape("path dims and modalities disagree"));
        }
        let t = topo.tasks.len();
        let (locals, global_in, fusion) = if topo.variant.multi_path() {
            let top = *topo.hidden.last().expect("non-empty");
            let mut locals = Vec::with_capacity(topo.path_dims.len());
            for (&d, &m) in topo.path_dims.iter().zip(topo.path_modalities) {
                locals.push(LocalRegressor {
                    modality: m,
                    trunk: Mlp::elu_stack(d, topo.hidden, topo.dropout, rng)?,
                    head: DenseLayer::xavier(top, t, rng),
                });
            }
            let acoustic = topo
                .path_modalities
                .iter()
                .filter(|&&m| m == Modality::Acoustic)
                .count();
            let others = topo.path_modalities.len() - acoustic;
            let fusion = if topo.variant.attention() {
                if acoustic == 0 || others == 0 {
                    return Err(invalid(format!(
                        "{} needs acoustic and visual/textual paths",
                        topo.variant
                    )));
                }
                Some(AttentionFusion::new(
                    acoustic * top,
                    others * top,
                    topo.attention_scale,
                    rng,
                ))
            } else {
                None
            };
            (locals, top * topo.path_dims.len(), fusion)
        } else {
            (Vec::new(), topo.path_dims.iter().sum(), None)
        };
        let global = Mlp::elu_stack(global_in, topo.global_hidden, topo.dropout, rng)?;
        let global_head =
            DenseLayer::xavier(*topo.global_hidden.last().expect("non-empty"), t, rng);
        Ok(Self {
            tasks: topo.tasks.clone(),
            locals,
            fusion,
            global,
            global_head,
        })
    }

    pub fn task_index(&self, task: Task) -> Option<usize> {
        self.tasks.iter().position(|&t| t == task)
    }

    fn acoustic_paths(&self) -> Vec<usize> {
        (0..self.locals.len())
            .filter(|&i| self.locals[i].modality == Modality::Acoustic)
            .collect()
    }

    fn other_paths(&self) -> Vec<usize> {
        (0..self.locals.len())
            .filter(|&i| self.locals[i].modality != Modality::Acoustic)
            .collect()
    }

    /// Batched forward over per-path input matrices (rows are samples).
    pub fn forward<R: Rng>(
        &self,
        inputs: &[Array2<f64>],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(NetworkOutput, NetworkCache)> {
        let batch = inputs.first().map(|x| x.nrows()).unwrap_or(0);
        if inputs.iter().any(|x| x.nrows() != batch) {
            return Err(shape("path inputs have different batch sizes"));
        }
        if self.locals.is_empty() {
            let views: Vec<ArrayView2<f64>> = inputs.iter().map(|x| x.view()).collect();
            let x = concatenate(Axis(1), &views).map_err(|e| shape(e.to_string()))?;
            let (top, gcache) = self.global.forward(&x, mode, rng)?;
            let global = self.global_head.forward(&top)?;
            return Ok((
                NetworkOutput {
                    global,
                    locals: Vec::new(),
                    alpha: None,
                },
                NetworkCache {
                    local: Vec::new(),
                    local_top: Vec::new(),
                    fusion: None,
                    global: gcache,
                    global_top: top,
                    batch,
                },
            ));
        }
        if inputs.len() != self.locals.len() {
            return Err(shape(format!(
                "{} path inputs for {} local regressors",
                inputs.len(),
                self.locals.len()
            )));
        }
        let mut local_caches = Vec::with_capacity(self.locals.len());
        let mut tops = Vec::with_capacity(self.locals.len());
        let mut local_out = Vec::with_capacity(self.locals.len());
        for (lr, x) in self.locals.iter().zip(inputs) {
            let (top, cache) = lr.trunk.forward(x, mode, rng)?;
            local_out.push(lr.head.forward(&top)?);
            tops.push(top);
            local_caches.push(cache);
        }
        let gather = |idx: &[usize]| -> Array2<f64> {
            let views: Vec<ArrayView2<f64>> = idx.iter().map(|&i| tops[i].view()).collect();
            concatenate(Axis(1), &views).expect("equal batch sizes")
        };
        let a = gather(&self.acoustic_paths());
        let others = self.other_paths();
        let (x, fusion_cache) = match &self.fusion {
            Some(f) => {
                let (x, c) = f.forward(&a, &gather(&others))?;
                (x, Some(c))
            }
            None if others.is_empty() => (a, None),
            None => {
                let w = gather(&others);
                (
                    concatenate(Axis(1), &[a.view(), w.view()]).expect("equal batch sizes"),
                    None,
                )
            }
        };
        let (gtop, gcache) = self.global.forward(&x, mode, rng)?;
        let global = self.global_head.forward(&gtop)?;
        let alpha = fusion_cache.as_ref().map(|c| c.alpha.clone());
        Ok((
            NetworkOutput {
                global,
                locals: local_out,
                alpha,
            },
            NetworkCache {
                local: local_caches,
                local_top: tops,
                fusion: fusion_cache,
                global: gcache,
                global_top: gtop,
                batch,
            },
        ))
    }

    /// Backpropagate gradients given at the global and local heads (each
    /// `B × tasks`). Returns a gradient shaped like `self`.
    pub fn backward(
        &self,
        cache: &NetworkCache,
        d_global: &Array2<f64>,
        d_locals: &[Array2<f64>],
    ) -> Result<Network> {
        let mut grad = self.zeros_like();
        self.backward_into(cache, d_global, d_locals, &mut grad)?;
        Ok(grad)
    }

    /// Like [`Network::backward`], overwriting a gradient buffer obtained
    /// from [`Network::zeros_like`].
    pub fn backward_into(
        &self,
        cache: &NetworkCache,
        d_global: &Array2<f64>,
        d_locals: &[Array2<f64>],
        grad: &mut Network,
    ) -> Result<()> {
        let t = self.tasks.len();
        if d_global.dim() != (cache.batch, t) || d_locals.len() != self.locals.len() {
            return Err(shape("head gradients do not match the forward pass"));
        }
        if cache.local.len() != self.locals.len() {
            return Err(shape("forward cache does not match this network"));
        }
        if grad.locals.len() != self.locals.len() || grad.fusion.is_some() != self.fusion.is_some()
        {
            return Err(shape("gradient buffer does not match this network"));
        }
        let dtop = self.global_head.backward_into(
            &cache.global_top,
            d_global,
            &mut grad.global_head,
            true,
        )?;
        let need_dx = !self.locals.is_empty();
        let dx = self.global.backward_into(
            &cache.global,
            &dtop.expect("requested"),
            &mut grad.global.layers,
            need_dx,
        )?;
        let Some(dx) = dx else {
            return Ok(());
        };

        let acoustic = self.acoustic_paths();
        let others = self.other_paths();
        let top = self.locals[0].trunk.outputs();
        let a_dim = acoustic.len() * top;
        let (da, dw) = match (&self.fusion, &cache.fusion) {
            (Some(f), Some(fc)) => {
                let (gs, da, dw) = f.backward(fc, &dx)?;
                grad.fusion.as_mut().expect("checked above").scoring = gs;
                (da, dw)
            }
            (None, None) => (
                dx.slice(s![.., ..a_dim]).to_owned(),
                dx.slice(s![.., a_dim..]).to_owned(),
            ),
            _ => return Err(shape("forward cache does not match this network")),
        };
        let mut d_tops: Vec<Option<Array2<f64>>> = vec![None; self.locals.len()];
        for (k, &i) in acoustic.iter().enumerate() {
            d_tops[i] = Some(da.slice(s![.., k * top..(k + 1) * top]).to_owned());
        }
        for (k, &i) in others.iter().enumerate() {
            d_tops[i] = Some(dw.slice(s![.., k * top..(k + 1) * top]).to_owned());
        }
        for (i, lr) in self.locals.iter().enumerate() {
            if d_locals[i].dim() != (cache.batch, t) {
                return Err(shape(format!("local head {i} gradient has wrong shape")));
            }
            let g = &mut grad.locals[i];
            let dtop =
                lr.head
                    .backward_into(&cache.local_top[i], &d_locals[i], &mut g.head, true)?;
            let mut dtop_total = d_tops[i].take().expect("every path is acoustic or not");
            dtop_total += &dtop.expect("requested");
            lr.trunk
                .backward_into(&cache.local[i], &dtop_total, &mut g.trunk.layers, false)?;
        }
        Ok(())
    }

    /// Same topology, every parameter zero.
    pub fn zeros_like(&self) -> Network {
        let zero_mlp = |m: &Mlp| Mlp {
            layers: m.zeros_like(),
            activations: m.activations.clone(),
            dropout_rate: m.dropout_rate,
        };
        Network {
            tasks: self.tasks.clone(),
            locals: self
                .locals
                .iter()
                .map(|l| LocalRegressor {
                    modality: l.modality,
                    trunk: zero_mlp(&l.trunk),
                    head: DenseLayer::zeros(l.head.inputs(), l.head.outputs()),
                })
                .collect(),
            fusion: self.fusion.as_ref().map(|f| AttentionFusion {
                scoring: DenseLayer::zeros(f.scoring.inputs(), 1),
                attended_dim: f.attended_dim,
                scale: f.scale,
            }),
            global: zero_mlp(&self.global),
            global_head: DenseLayer::zeros(self.global_head.inputs(), self.global_head.outputs()),
        }
    }

    pub fn input_dims(&self) -> Vec<usize> {
        if self.locals.is_empty() {
            vec![self.global.inputs()]
        } else {
            self.locals.iter().map(|l| l.trunk.inputs()).collect()
        }
    }
}

impl Parameters for Network {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.locals {
            out.extend(l.trunk.param_slices());
            out.extend(l.head.param_slices());
        }
        if let Some(f) = &self.fusion {
            out.extend(f.param_slices());
        }
        out.extend(self.global.param_slices());
        out.extend(self.global_head.param_slices());
        out
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in &mut self.locals {
            out.extend(l.trunk.param_slices_mut());
            out.extend(l.head.param_slices_mut());
        }
        if let Some(f) = &mut self.fusion {
            out.extend(f.param_slices_mut());
        }
        out.extend(self.global.param_slices_mut());
        out.extend(self.global_head.param_slices_mut());
        out
    }
}
