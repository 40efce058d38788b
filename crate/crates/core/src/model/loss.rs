use ndarray::Array2;

use super::network::NetworkOutput;
use super::{ModelPredictions, Task};
use crate::error::{invalid, shape, Result};
use crate::space::PaCoordinate;

/// Weighting of the joint objective
/// `Σₜ [(1−λ)·Lₜ,global + λ·Σₙ Lₜ,local,n]`, each term a squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub lambda: f64,
    pub tasks: Vec<Task>,
    /// Number of local regressors contributing local terms.
    pub paths: usize,
}

impl LossConfig {
    pub fn new(lambda: f64, tasks: Vec<Task>, paths: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(invalid(format!("lambda {lambda} outside [0, 1]")));
        }
        if tasks.is_empty() {
            return Err(invalid("loss needs at least one task"));
        }
        Ok(Self {
            lambda,
            tasks,
            paths,
        })
    }
}

/// Joint loss of one sample's predictions against its label.
pub fn total_loss(preds: &ModelPredictions, label: &PaCoordinate, cfg: &LossConfig) -> Result<f64> {
    if preds.per_local.len() != cfg.paths {
        return Err(invalid(format!(
            "loss expects {} local predictions, got {}",
            cfg.paths,
            preds.per_local.len()
        )));
    }
    let mut total = 0.0;
    for &t in &cfg.tasks {
        let y = label.get(t);
        let global = (preds.global.get(t) - y).powi(2);
        let local: f64 = preds.per_local.iter().map(|p| (p.get(t) - y).powi(2)).sum();
        total += (1.0 - cfg.lambda) * global + cfg.lambda * local;
    }
    Ok(total)
}

/// Batch-mean joint loss of a network pass plus the gradients at every
/// head. `targets` is `B × tasks`; `task_weights` scales each task's terms
/// (all ones for the ordinary objective, zero silences a task).
pub(crate) fn batch_loss(
    out: &NetworkOutput,
    targets: &Array2<f64>,
    lambda: f64,
    task_weights: &[f64],
) -> Result<(f64, Array2<f64>, Vec<Array2<f64>>)> {
    if out.global.dim() != targets.dim() || task_weights.len() != targets.ncols() {
        return Err(shape(format!(
            "predictions {:?} vs targets {:?}",
            out.global.dim(),
            targets.dim()
        )));
    }
    let b = targets.nrows() as f64;
    let (wg, wl) = if out.locals.is_empty() {
        (1.0, 0.0)
    } else {
        (1.0 - lambda, lambda)
    };
    let mut loss = 0.0;
    let mut grad_of = |pred: &Array2<f64>, weight: f64| -> Array2<f64> {
        let mut g = pred - targets;
        for ((_, c), v) in g.indexed_iter_mut() {
            let tw = task_weights[c] * weight;
            loss += tw * (*v) * (*v);
            *v *= 2.0 * tw / b;
        }
        g
    };
    let d_global = grad_of(&out.global, wg);
    let d_locals: Vec<Array2<f64>> = out.locals.iter().map(|l| grad_of(l, wl)).collect();
    Ok((loss / b, d_global, d_locals))
}
