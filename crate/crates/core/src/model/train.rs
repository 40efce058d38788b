use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{batch_loss, AmmdnnModel, ModelConfig, Network, Standardizer};
use crate::dataset::UtteranceRecord;
use crate::error::{invalid, Error, Result};
use crate::eval::{ccc, rmse};
use crate::features::GroupingConfig;
use crate::nn::{seeded_rng, AdamState, Mode, Parameters};

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_p_rmse: Option<f64>,
    pub val_p_ccc: Option<f64>,
    pub val_a_rmse: Option<f64>,
    pub val_a_ccc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> Result<String> {
        crate::io::csv_string(&self.epochs)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }
}

/// Batch-mean loss and its exact gradient (shaped like `net`) under the
/// dropout masks drawn from `rng`.
pub fn loss_and_gradient<R: Rng>(
    net: &Network,
    inputs: &[Array2<f64>],
    targets: &Array2<f64>,
    lambda: f64,
    task_weights: &[f64],
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, Network)> {
    let mut grad = net.zeros_like();
    let loss = loss_and_gradient_into(
        net,
        inputs,
        targets,
        lambda,
        task_weights,
        mode,
        rng,
        &mut grad,
    )?;
    Ok((loss, grad))
}

#[allow(clippy::too_many_arguments)]
fn loss_and_gradient_into<R: Rng>(
    net: &Network,
    inputs: &[Array2<f64>],
    targets: &Array2<f64>,
    lambda: f64,
    task_weights: &[f64],
    mode: Mode,
    rng: &mut R,
    grad: &mut Network,
) -> Result<f64> {
    let (out, cache) = net.forward(inputs, mode, rng)?;
    let (loss, d_global, d_locals) = batch_loss(&out, targets, lambda, task_weights)?;
    net.backward_into(&cache, &d_global, &d_locals, grad)?;
    Ok(loss)
}

/// One Adam step on a batch. Returns the batch loss before the update.
#[allow(clippy::too_many_arguments)]
pub fn gradient_step<R: Rng>(
    net: &mut Network,
    adam: &mut AdamState,
    inputs: &[Array2<f64>],
    targets: &Array2<f64>,
    lambda: f64,
    task_weights: &[f64],
    rng: &mut R,
) -> Result<f64> {
    let mut grad = net.zeros_like();
    step_with(
        net,
        adam,
        &mut grad,
        inputs,
        targets,
        lambda,
        task_weights,
        rng,
    )
}

#[allow(clippy::too_many_arguments)]
fn step_with<R: Rng>(
    net: &mut Network,
    adam: &mut AdamState,
    grad: &mut Network,
    inputs: &[Array2<f64>],
    targets: &Array2<f64>,
    lambda: f64,
    task_weights: &[f64],
    rng: &mut R,
) -> Result<f64> {
    let loss = loss_and_gradient_into(
        net,
        inputs,
        targets,
        lambda,
        task_weights,
        Mode::Train,
        rng,
        grad,
    )?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("training loss {loss}")));
    }
    adam.step(net.param_slices_mut(), grad.param_slices())?;
    Ok(loss)
}

fn targets_for(records: &[&UtteranceRecord], net: &Network) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((records.len(), net.tasks.len()));
    for (i, r) in records.iter().enumerate() {
        let label = r.require_label()?;
        for (k, &task) in net.tasks.iter().enumerate() {
            t[[i, k]] = label.get(task);
        }
    }
    Ok(t)
}

/// Fit a model on labelled records. Initialization, shuffling and
/// dropout all derive from `seed`.
pub fn train(
    dataset: &[UtteranceRecord],
    config: &ModelConfig,
    grouping: &GroupingConfig,
    seed: u64,
) -> Result<(AmmdnnModel, TrainingLog)> {
    train_with_validation(dataset, None, config, grouping, seed)
}

pub fn train_with_validation(
    dataset: &[UtteranceRecord],
    validation: Option<&[UtteranceRecord]>,
    config: &ModelConfig,
    grouping: &GroupingConfig,
    seed: u64,
) -> Result<(AmmdnnModel, TrainingLog)> {
    if dataset.is_empty() {
        return Err(invalid("empty training set"));
    }
    let refs: Vec<&UtteranceRecord> = dataset.iter().collect();
    for r in &refs {
        r.check_against(grouping)?;
        r.require_label()?;
    }
    let mut model = AmmdnnModel::init(config, grouping, seed)?;
    if config.standardize {
        model.standardizer = Some(Standardizer::fit(&refs, &grouping.path_dims())?);
    }
    let inputs = model.batch_inputs(&refs)?;
    let lambda = config
        .loss_config(vec![crate::Task::Pleasure], grouping)?
        .lambda;

    struct Slot {
        targets: Array2<f64>,
        adam: AdamState,
        shuffle: rand_chacha::ChaCha8Rng,
        dropout: rand_chacha::ChaCha8Rng,
        weights: Vec<f64>,
        grad: Network,
    }
    let mut slots = model
        .networks
        .iter()
        .enumerate()
        .map(|(k, net)| {
            Ok(Slot {
                targets: targets_for(&refs, net)?,
                adam: AdamState::new(config.adam)?,
                shuffle: seeded_rng(seed, 200 + k as u64),
                dropout: seeded_rng(seed, 300 + k as u64),
                weights: vec![1.0; net.tasks.len()],
                grad: net.zeros_like(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let val_refs: Option<Vec<&UtteranceRecord>> = validation.map(|v| v.iter().collect());
    let mut log = TrainingLog::default();
    let mut order: Vec<usize> = (0..refs.len()).collect();
    for epoch in 1..=config.epochs {
        let mut epoch_loss = 0.0;
        for (net, slot) in model.networks.iter_mut().zip(&mut slots) {
            order.sort_unstable();
            order.shuffle(&mut slot.shuffle);
            let mut sum = 0.0;
            for (b, chunk) in order.chunks(config.batch_size).enumerate() {
                let batch: Vec<Array2<f64>> =
                    inputs.iter().map(|m| m.select(Axis(0), chunk)).collect();
                let targets = slot.targets.select(Axis(0), chunk);
                let loss = step_with(
                    net,
                    &mut slot.adam,
                    &mut slot.grad,
                    &batch,
                    &targets,
                    lambda,
                    &slot.weights,
                    &mut slot.dropout,
                )
                .map_err(|e| match e {
                    Error::NonFinite(msg) => {
                        Error::NonFinite(format!("epoch {epoch} batch {b}: {msg}"))
                    }
                    other => other,
                })?;
                sum += loss * chunk.len() as f64;
            }
            epoch_loss += sum / refs.len() as f64;
        }
        let mut row = EpochLog {
            epoch,
            train_loss: epoch_loss,
            val_p_rmse: None,
            val_p_ccc: None,
            val_a_rmse: None,
            val_a_ccc: None,
        };
        if let Some(v) = &val_refs {
            let preds = model.predict_many(v)?;
            let truth = v
                .iter()
                .map(|r| r.require_label())
                .collect::<Result<Vec<_>>>()?;
            let p: (Vec<f64>, Vec<f64>) = truth
                .iter()
                .zip(&preds)
                .map(|(t, p)| (t.pleasure, p.pleasure))
                .unzip();
            let a: (Vec<f64>, Vec<f64>) = truth
                .iter()
                .zip(&preds)
                .map(|(t, p)| (t.arousal, p.arousal))
                .unzip();
            row.val_p_rmse = Some(rmse(&p.0, &p.1)?);
            row.val_a_rmse = Some(rmse(&a.0, &a.1)?);
            if v.len() >= 2 {
                row.val_p_ccc = Some(ccc(&p.0, &p.1)?);
                row.val_a_ccc = Some(ccc(&a.0, &a.1)?);
            }
        }
        log.epochs.push(row);
    }
    Ok((model, log))
}
