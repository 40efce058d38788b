//! Helpers shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teaching_style::features::{GroupingConfig, Modality, ModalityDims};
use teaching_style::model::{loss_and_gradient, AttentionScale, Network, Topology, Variant};
use teaching_style::nn::{Mode, Parameters};
use teaching_style::Task;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two paths: 5 acoustic values and 4 visual values.
pub fn tiny_grouping() -> GroupingConfig {
    GroupingConfig::default_paths(
        ModalityDims {
            acoustic: 5,
            visual: 4,
            textual: 0,
        },
        1,
    )
    .unwrap()
}

pub fn tiny_network(
    variant: Variant,
    tasks: Vec<Task>,
    scale: AttentionScale,
    seed: u64,
) -> Network {
    let g = tiny_grouping();
    let dims = g.path_dims();
    let mods: Vec<Modality> = g.paths().iter().map(|p| p.modality).collect();
    let topo = Topology {
        variant,
        tasks,
        path_dims: &dims,
        path_modalities: &mods,
        hidden: &[8, 6],
        global_hidden: &[7, 5],
        dropout: 0.5,
        attention_scale: scale,
    };
    Network::init(&topo, &mut rng(seed)).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| r.gen_range(-1.5..1.5))
}

/// Per-path inputs for a batch drawn from `r`.
pub fn batch(net: &Network, size: usize, r: &mut ChaCha8Rng) -> Vec<Array2<f64>> {
    net.input_dims()
        .iter()
        .map(|&d| random_matrix(size, d, r))
        .collect()
}

/// Largest relative disagreement between the analytic gradient and central
/// differences over every parameter. Dropout masks are fixed by reseeding
/// the generator for each evaluation. Differences below `floor` in
/// absolute terms count as agreement (gradients that are zero up to
/// rounding).
pub fn gradient_check(
    net: &Network,
    inputs: &[Array2<f64>],
    targets: &Array2<f64>,
    lambda: f64,
    h: f64,
    floor: f64,
) -> GradientReport {
    let weights = vec![1.0; targets.ncols()];
    let (_, grad) = loss_and_gradient(
        net,
        inputs,
        targets,
        lambda,
        &weights,
        Mode::Train,
        &mut rng(99),
    )
    .unwrap();
    let analytic: Vec<f64> = grad.param_slices().concat();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    let buffers = probe
        .param_slices()
        .iter()
        .map(|s| s.len())
        .collect::<Vec<_>>();
    for (b, len) in buffers.into_iter().enumerate() {
        for i in 0..len {
            let original = probe.param_slices()[b][i];
            let mut eval = |v: f64| {
                probe.param_slices_mut()[b][i] = v;
                loss_and_gradient(
                    &probe,
                    inputs,
                    targets,
                    lambda,
                    &weights,
                    Mode::Train,
                    &mut rng(99),
                )
                .unwrap()
                .0
            };
            let numeric = (eval(original + h) - eval(original - h)) / (2.0 * h);
            probe.param_slices_mut()[b][i] = original;
            let a = analytic[k];
            let diff = (a - numeric).abs();
            if diff > floor {
                worst = worst.max(diff / a.abs().max(numeric.abs()));
            }
            k += 1;
        }
    }
    GradientReport {
        worst_relative: worst,
        checked: k,
        nonzero: analytic.iter().filter(|g| g.abs() > 1e-6).count(),
    }
}

pub struct GradientReport {
    pub worst_relative: f64,
    pub checked: usize,
    /// Parameters whose analytic gradient exceeds 1e-6 in magnitude.
    pub nonzero: usize,
}
