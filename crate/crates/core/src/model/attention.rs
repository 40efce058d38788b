use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;

use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};
use crate::nn::{elu, elu_derivative, DenseLayer, Parameters};

/// Multiplier on the attended feature `v`.
///
/// `Unit` is `vᵢ = αᵢ·wᵢ` as written. Since `α` sums to one over all `m`
/// dimensions, that shrinks `v` to about `w/m`; with hundreds of hidden
/// units the visual and textual evidence barely reaches the global
/// regressor. `Dimension` uses `vᵢ = m·αᵢ·wᵢ`, so uniform attention passes
/// `w` through unchanged and the weights only redistribute emphasis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionScale {
    Unit,
    #[default]
    Dimension,
}

/// Acoustic-guided attention over the visual+textual feature `w`.
///
/// For every dimension `i` of `w` the score is `uᵢ = ELU(c·wᵢ + d·a + b)`,
/// one affine map on `[wᵢ, a]` shared by all `i`. The weights are
/// `α = softmax(u)`, the attended feature is `vᵢ = g·αᵢ·wᵢ` with `g` set
/// by [`AttentionScale`], and the fused representation is `x = [a, v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionFusion {
    /// `1 + dim(a)` inputs → one score. Row 0 multiplies `wᵢ`.
    pub scoring: DenseLayer,
    /// Dimension `m` of `w`.
    pub attended_dim: usize,
    pub scale: AttentionScale,
}

/// Intermediates of one batched fusion pass.
#[derive(Debug, Clone)]
pub struct FusionCache {
    pub a: Array2<f64>,
    pub w: Array2<f64>,
    pub pre: Array2<f64>,
    pub u: Array2<f64>,
    pub alpha: Array2<f64>,
    pub v: Array2<f64>,
}

impl AttentionFusion {
    pub fn new<R: Rng>(
        acoustic_dim: usize,
        attended_dim: usize,
        scale: AttentionScale,
        rng: &mut R,
    ) -> Self {
        Self {
            scoring: DenseLayer::xavier(1 + acoustic_dim, 1, rng),
            attended_dim,
            scale,
        }
    }

    pub fn from_scoring(
        scoring: DenseLayer,
        attended_dim: usize,
        scale: AttentionScale,
    ) -> Result<Self> {
        if scoring.outputs() != 1 || scoring.inputs() < 1 {
            return Err(shape(format!(
                "attention scoring must map 1+dim(a) inputs to 1 output, got {}→{}",
                scoring.inputs(),
                scoring.outputs()
            )));
        }
        Ok(Self {
            scoring,
            attended_dim,
            scale,
        })
    }

    /// The factor `g` in `vᵢ = g·αᵢ·wᵢ`.
    pub fn gain(&self) -> f64 {
        match self.scale {
            AttentionScale::Unit => 1.0,
            AttentionScale::Dimension => self.attended_dim as f64,
        }
    }

    pub fn acoustic_dim(&self) -> usize {
        self.scoring.inputs() - 1
    }

    pub fn output_dim(&self) -> usize {
        self.acoustic_dim() + self.attended_dim
    }

    /// Batched fusion: rows of `a` and `w` are samples. Returns `x = [a, v]`.
    pub fn forward(&self, a: &Array2<f64>, w: &Array2<f64>) -> Result<(Array2<f64>, FusionCache)> {
        if a.ncols() != self.acoustic_dim()
            || w.ncols() != self.attended_dim
            || a.nrows() != w.nrows()
        {
            return Err(shape(format!(
                "fusion expects a: (B, {}) and w: (B, {}), got {:?} and {:?}",
                self.acoustic_dim(),
                self.attended_dim,
                a.dim(),
                w.dim()
            )));
        }
        let c = self.scoring.weights[[0, 0]];
        let d = self.scoring.weights.slice(s![1.., 0]);
        let b = self.scoring.bias[0];
        let shift: Array1<f64> = a.dot(&d) + b;
        let mut pre = w * c;
        pre += &shift.insert_axis(Axis(1));
        let u = pre.mapv(elu);
        let mut alpha = u.clone();
        for mut row in alpha.rows_mut() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|x| (x - max).exp());
            let sum = row.sum();
            row /= sum;
        }
        let v = &alpha * w * self.gain();
        let x = concatenate(Axis(1), &[a.view(), v.view()]).expect("same row count");
        Ok((
            x,
            FusionCache {
                a: a.to_owned(),
                w: w.to_owned(),
                pre,
                u,
                alpha,
                v,
            },
        ))
    }

    /// Backpropagate a gradient at `x = [a, v]`. Returns the scoring-layer
    /// gradient and the gradients at `a` and `w`.
    pub fn backward(
        &self,
        cache: &FusionCache,
        dx: &Array2<f64>,
    ) -> Result<(DenseLayer, Array2<f64>, Array2<f64>)> {
        let ad = self.acoustic_dim();
        if dx.dim() != (cache.a.nrows(), self.output_dim()) {
            return Err(shape(format!(
                "fusion gradient {:?}, expected ({}, {})",
                dx.dim(),
                cache.a.nrows(),
                self.output_dim()
            )));
        }
        let mut da = dx.slice(s![.., ..ad]).to_owned();
        let dv = &dx.slice(s![.., ad..]) * self.gain();
        // v = g·α ⊙ w
        let dalpha = &dv * &cache.w;
        let mut dw = &dv * &cache.alpha;
        // softmax: du = α ⊙ (dα − Σ α·dα)
        let dot = (&dalpha * &cache.alpha).sum_axis(Axis(1));
        let mut dpre = &dalpha - &dot.insert_axis(Axis(1));
        dpre *= &cache.alpha;
        dpre.zip_mut_with(&cache.pre, |g, &z| *g *= elu_derivative(z));

        let c = self.scoring.weights[[0, 0]];
        let d = self.scoring.weights.slice(s![1.., 0]);
        let dshift = dpre.sum_axis(Axis(1));
        let mut grad = DenseLayer::zeros(1 + ad, 1);
        grad.weights[[0, 0]] = (&dpre * &cache.w).sum();
        grad.weights
            .slice_mut(s![1.., 0])
            .assign(&cache.a.t().dot(&dshift));
        grad.bias[0] = dshift.sum();
        dw.scaled_add(c, &dpre);
        let dshift_col = dshift.insert_axis(Axis(1));
        da += &(&dshift_col * &d.insert_axis(Axis(0)));
        Ok((grad, da, dw))
    }
}

impl Parameters for AttentionFusion {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.scoring.param_slices()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.scoring.param_slices_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::seeded_rng;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = seeded_rng(seed, 3);
        Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut rng))
    }

    #[test]
    fn zero_scoring_gives_uniform_weights() {
        let f = AttentionFusion::from_scoring(DenseLayer::zeros(4, 1), 5, AttentionScale::Unit)
            .unwrap();
        let (_, cache) = f.forward(&randn(2, 3, 1), &randn(2, 5, 2)).unwrap();
        for &a in cache.alpha.iter() {
            assert!((a - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_scale_with_uniform_weights_passes_w_through() {
        let f =
            AttentionFusion::from_scoring(DenseLayer::zeros(4, 1), 5, AttentionScale::Dimension)
                .unwrap();
        let w = randn(2, 5, 2);
        let (_, cache) = f.forward(&randn(2, 3, 1), &w).unwrap();
        for (v, w) in cache.v.iter().zip(&w) {
            assert!((v - w).abs() <= 1e-15 * w.abs().max(1.0));
        }
    }

    #[test]
    fn singleton_attention() {
        let f = AttentionFusion::new(2, 1, AttentionScale::Dimension, &mut seeded_rng(3, 0));
        let a = array![[0.3, -1.2]];
        let w = array![[2.5]];
        let (x, cache) = f.forward(&a, &w).unwrap();
        assert_eq!(cache.alpha, array![[1.0]]);
        assert_eq!(cache.v, w);
        assert_eq!(x, array![[0.3, -1.2, 2.5]]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let f = AttentionFusion::new(2, 3, AttentionScale::Unit, &mut seeded_rng(3, 0));
        assert!(f.forward(&randn(1, 2, 0), &randn(1, 4, 0)).is_err());
        assert!(f.forward(&randn(2, 2, 0), &randn(1, 3, 0)).is_err());
    }

    // Per-sample evaluation straight from the definitions.
    fn oracle(f: &AttentionFusion, a: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let u: Vec<f64> = w
            .iter()
            .map(|&wi| {
                let mut input = vec![wi];
                input.extend_from_slice(a);
                let z: f64 = input
                    .iter()
                    .zip(f.scoring.weights.column(0))
                    .map(|(x, k)| x * k)
                    .sum::<f64>()
                    + f.scoring.bias[0];
                if z > 0.0 {
                    z
                } else {
                    z.exp() - 1.0
                }
            })
            .collect();
        let denom: f64 = u.iter().map(|x| x.exp()).sum();
        let alpha: Vec<f64> = u.iter().map(|x| x.exp() / denom).collect();
        let g = match f.scale {
            AttentionScale::Unit => 1.0,
            AttentionScale::Dimension => w.len() as f64,
        };
        let v: Vec<f64> = alpha.iter().zip(w).map(|(al, wi)| g * al * wi).collect();
        let mut x = a.to_vec();
        x.extend_from_slice(&v);
        (alpha, v, x)
    }

    #[test]
    fn matches_direct_formula() {
        for scale in [AttentionScale::Unit, AttentionScale::Dimension] {
            check_formula(scale);
        }
    }

    fn check_formula(scale: AttentionScale) {
        let mut f = AttentionFusion::new(4, 6, scale, &mut seeded_rng(9, 0));
        f.scoring.bias[0] = 0.3;
        let a = randn(5, 4, 10);
        let w = randn(5, 6, 11);
        let (x, cache) = f.forward(&a, &w).unwrap();
        for r in 0..5 {
            let (alpha, v, xr) = oracle(&f, &a.row(r).to_vec(), &w.row(r).to_vec());
            for i in 0..6 {
                assert!((cache.alpha[[r, i]] - alpha[i]).abs() < 1e-12);
                assert!((cache.v[[r, i]] - v[i]).abs() < 1e-12);
            }
            for (k, xv) in xr.iter().enumerate() {
                assert!((x[[r, k]] - xv).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        for scale in [AttentionScale::Unit, AttentionScale::Dimension] {
            check_backward(scale);
        }
    }

    fn check_backward(scale: AttentionScale) {
        let mut f = AttentionFusion::new(3, 4, scale, &mut seeded_rng(4, 0));
        f.scoring.bias[0] = -0.2;
        let a = randn(3, 3, 20);
        let w = randn(3, 4, 21);
        let probe = randn(3, 7, 22);
        let objective = |f: &AttentionFusion, a: &Array2<f64>, w: &Array2<f64>| {
            let (x, _) = f.forward(a, w).unwrap();
            (&x * &probe).sum()
        };
        let (_, cache) = f.forward(&a, &w).unwrap();
        let (grad, da, dw) = f.backward(&cache, &probe).unwrap();
        let h = 1e-5;
        let check = |analytic: f64, numeric: f64| {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7);
            assert!(
                rel < 1e-4 || (analytic - numeric).abs() < 1e-9,
                "{analytic} vs {numeric}"
            );
        };
        for k in 0..4 {
            let mut fp = f.clone();
            fp.scoring.weights[[k, 0]] += h;
            let up = objective(&fp, &a, &w);
            fp.scoring.weights[[k, 0]] -= 2.0 * h;
            let down = objective(&fp, &a, &w);
            check(grad.weights[[k, 0]], (up - down) / (2.0 * h));
        }
        let mut fp = f.clone();
        fp.scoring.bias[0] += h;
        let up = objective(&fp, &a, &w);
        fp.scoring.bias[0] -= 2.0 * h;
        check(grad.bias[0], (up - objective(&fp, &a, &w)) / (2.0 * h));
        for (target, analytic) in [(0, &da), (1, &dw)] {
            let base = if target == 0 { &a } else { &w };
            for idx in ndarray::indices(base.dim()) {
                let mut p = base.clone();
                p[idx] += h;
                let up = if target == 0 {
                    objective(&f, &p, &w)
                } else {
                    objective(&f, &a, &p)
                };
                p[idx] -= 2.0 * h;
                let down = if target == 0 {
                    objective(&f, &p, &w)
                } else {
                    objective(&f, &a, &p)
                };
                check(analytic[idx], (up - down) / (2.0 * h));
            }
        }
    }
}
