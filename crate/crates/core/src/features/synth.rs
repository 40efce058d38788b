use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{group_features, scatter_features, GroupingConfig, Modality};
use crate::dataset::UtteranceRecord;
use crate::error::{invalid, Result};
use crate::space::PaCoordinate;

/// Which modalities the planted labels are a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelDependence {
    #[default]
    AllModalities,
    AcousticOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub n: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub dependence: LabelDependence,
    /// Rank of the shared latent map feeding both tasks.
    pub latent_rank: usize,
    /// Standard deviation of each latent pre-activation. Around 1 the tanh
    /// saturates noticeably; smaller values make the map closer to linear.
    pub latent_scale: f64,
}

impl SynthOptions {
    pub fn new(n: usize, noise_sd: f64, seed: u64) -> Self {
        Self {
            n,
            noise_sd,
            seed,
            dependence: LabelDependence::AllModalities,
            latent_rank: 4,
            latent_scale: DEFAULT_LATENT_SCALE,
        }
    }
}

/// The planted map from features to labels:
/// `h = tanh(P·x)`, `pleasure = wₚ·h`, `arousal = wₐ·h`, with `x` the
/// concatenation `[acoustic | visual | textual]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub grouping: GroupingConfig,
    pub dependence: LabelDependence,
    pub projection: Vec<Vec<f64>>,
    pub pleasure_weights: Vec<f64>,
    pub arousal_weights: Vec<f64>,
}

impl GroundTruth {
    pub fn apply(&self, flat: &[f64]) -> Result<PaCoordinate> {
        if flat.len() != self.grouping.dims().total() {
            return Err(crate::error::shape(format!(
                "ground truth expects {} features, got {}",
                self.grouping.dims().total(),
                flat.len()
            )));
        }
        let h: Vec<f64> = self
            .projection
            .iter()
            .map(|row| row.iter().zip(flat).map(|(w, x)| w * x).sum::<f64>().tanh())
            .collect();
        let dot = |w: &[f64]| w.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
        Ok(PaCoordinate {
            pleasure: dot(&self.pleasure_weights),
            arousal: dot(&self.arousal_weights),
        })
    }

    pub fn apply_groups(&self, groups: &[Vec<f64>]) -> Result<PaCoordinate> {
        self.apply(&scatter_features(groups, &self.grouping)?)
    }
}

pub const DEFAULT_LATENT_SCALE: f64 = 0.75;

/// Var(tanh(s·Z)) for standard normal Z, by the trapezoid rule.
fn tanh_variance(s: f64) -> f64 {
    let steps = 4000;
    let (lo, hi) = (-8.0, 8.0);
    let h = (hi - lo) / steps as f64;
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (0..=steps)
        .map(|i| {
            let z = lo + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * (s * z).tanh().powi(2) * density(z)
        })
        .sum::<f64>()
        * h
}

fn planted_map(cfg: &GroupingConfig, opts: &SynthOptions, rng: &mut ChaCha8Rng) -> GroundTruth {
    let dims = cfg.dims();
    let active: Vec<Modality> = cfg
        .modalities()
        .into_iter()
        .filter(|&m| opts.dependence == LabelDependence::AllModalities || m == Modality::Acoustic)
        .collect();
    let total = dims.total();
    let mut projection = vec![vec![0.0; total]; opts.latent_rank];
    let mut offset = 0;
    for m in Modality::ALL {
        let d = dims.get(m);
        if active.contains(&m) {
            // each active modality contributes equal latent variance; blocks
            // are orthogonalized across latents (while d allows) so the
            // latents are independent
            let target = opts.latent_scale / (active.len() as f64).sqrt();
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for row in projection.iter_mut() {
                let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
                if basis.len() < d {
                    for b in &basis {
                        let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                        v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
                    }
                }
                let norm = v.iter().map(|w| w * w).sum::<f64>().sqrt();
                v.iter_mut().for_each(|w| *w /= norm);
                if basis.len() < d {
                    basis.push(v.clone());
                }
                for (w, u) in row[offset..offset + d].iter_mut().zip(&v) {
                    *w = target * u;
                }
            }
        }
        offset += d;
    }
    // unit-variance labels (latents are independent with unit-norm heads)
    let head_scale = 1.0 / tanh_variance(opts.latent_scale).sqrt();
    let mut head = || {
        let w: Vec<f64> = (0..opts.latent_rank)
            .map(|_| StandardNormal.sample(&mut *rng))
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.into_iter()
            .map(|x| head_scale * x / norm)
            .collect::<Vec<f64>>()
    };
    let pleasure_weights = head();
    let arousal_weights = head();
    GroundTruth {
        grouping: cfg.clone(),
        dependence: opts.dependence,
        projection,
        pleasure_weights,
        arousal_weights,
    }
}

/// Seeded synthetic dataset plus the map that generated its labels.
/// Identical options give bit-identical output.
pub fn generate(
    cfg: &GroupingConfig,
    opts: &SynthOptions,
) -> Result<(Vec<UtteranceRecord>, GroundTruth)> {
    if opts.n == 0 {
        return Err(invalid("synthetic dataset needs n >= 1"));
    }
    if !(opts.noise_sd >= 0.0 && opts.noise_sd.is_finite()) {
        return Err(invalid(format!(
            "noise sd must be >= 0 (got {})",
            opts.noise_sd
        )));
    }
    if !(opts.latent_scale > 0.0 && opts.latent_scale.is_finite()) {
        return Err(invalid(format!(
            "latent scale must be positive (got {})",
            opts.latent_scale
        )));
    }
    if opts.latent_rank == 0 {
        return Err(invalid("latent rank must be >= 1"));
    }
    // independent streams: the planted map does not depend on n
    let mut map_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    map_rng.set_stream(1);
    let mut data_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    data_rng.set_stream(2);

    let truth = planted_map(cfg, opts, &mut map_rng);
    let noise = Normal::new(0.0, opts.noise_sd).map_err(|e| invalid(e.to_string()))?;
    let dims = cfg.dims();
    let mut records = Vec::with_capacity(opts.n);
    for i in 0..opts.n {
        let mut draw = |d: usize| -> Vec<f64> {
            (0..d)
                .map(|_| StandardNormal.sample(&mut data_rng))
                .collect()
        };
        let a = draw(dims.acoustic);
        let v = draw(dims.visual);
        let t = draw(dims.textual);
        let mut flat = a.clone();
        flat.extend_from_slice(&v);
        flat.extend_from_slice(&t);
        let clean = truth.apply(&flat)?;
        let label = if opts.noise_sd > 0.0 {
            PaCoordinate {
                pleasure: clean.pleasure + noise.sample(&mut data_rng),
                arousal: clean.arousal + noise.sample(&mut data_rng),
            }
        } else {
            clean
        };
        let lesson = i / 60;
        records.push(UtteranceRecord {
            id: format!("syn{i:05}"),
            groups: group_features(&a, &v, &t, cfg)?,
            label: Some(label),
            teacher: Some(format!("teacher{}", lesson % 4)),
            course: Some(format!("course{}", data_rng.gen_range(0..3))),
            lesson: Some(format!("lesson{lesson}")),
            time: Some((i % 60) as f64 * 10.0),
        });
    }
    Ok((records, truth))
}

/// Seeded synthetic dataset whose labels depend on every modality.
pub fn synth_dataset(
    n: usize,
    cfg: &GroupingConfig,
    noise_sd: f64,
    seed: u64,
) -> Result<Vec<UtteranceRecord>> {
    generate(cfg, &SynthOptions::new(n, noise_sd, seed)).map(|(r, _)| r)
}
