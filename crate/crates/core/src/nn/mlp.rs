use ndarray::Array2;
use rand::Rng;

use super::{Activation, DenseLayer, Parameters};
use crate::error::{invalid, shape, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Stack of dense layers. Inverted dropout follows every ELU layer in
/// train mode; identity layers are never dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
    pub activations: Vec<Activation>,
    pub dropout_rate: f64,
}

/// Everything a forward pass leaves behind for [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    /// Kept units hold `1/(1−rate)`, dropped units 0.
    pub masks: Vec<Option<Array2<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl MlpCache {
    /// The input seen by layer `i` (after the previous layer's activation
    /// and dropout).
    pub fn layer_input(&self, i: usize) -> &Array2<f64> {
        &self.inputs[i]
    }
}

impl Mlp {
    pub fn new(
        layers: Vec<DenseLayer>,
        activations: Vec<Activation>,
        dropout_rate: f64,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid("mlp needs at least one layer"));
        }
        if layers.len() != activations.len() {
            return Err(shape(format!(
                "{} layers but {} activations",
                layers.len(),
                activations.len()
            )));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(invalid(format!(
                "dropout rate {dropout_rate} outside [0, 1)"
            )));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].outputs() != w[1].inputs() {
                return Err(shape(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    w[0].outputs(),
                    i + 1,
                    w[1].inputs()
                )));
            }
        }
        Ok(Self {
            layers,
            activations,
            dropout_rate,
        })
    }

    /// ELU layers of the given widths with Xavier-uniform init.
    pub fn elu_stack<R: Rng>(
        inputs: usize,
        widths: &[usize],
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = inputs;
        for &w in widths {
            layers.push(DenseLayer::xavier(prev, w, rng));
            prev = w;
        }
        Self::new(layers, vec![Activation::Elu; widths.len()], dropout_rate)
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn forward<R: Rng>(
        &self,
        x: &Array2<f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Array2<f64>, MlpCache)> {
        if x.ncols() != self.inputs() {
            return Err(shape(format!(
                "mlp expects {} inputs, got {}",
                self.inputs(),
                x.ncols()
            )));
        }
        let n = self.layers.len();
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
            shapes: self.layers.iter().map(|l| l.weights.dim()).collect(),
        };
        let mut h = x.to_owned();
        for (layer, &act) in self.layers.iter().zip(&self.activations) {
            let z = layer.forward(&h)?;
            let mut out = z.clone();
            act.apply(&mut out);
            let mask = if mode == Mode::Train && act == Activation::Elu && self.dropout_rate > 0.0 {
                let keep = 1.0 - self.dropout_rate;
                let scale = 1.0 / keep;
                let m = Array2::from_shape_simple_fn(out.dim(), || {
                    if rng.gen::<f64>() < keep {
                        scale
                    } else {
                        0.0
                    }
                });
                out *= &m;
                Some(m)
            } else {
                None
            };
            cache.inputs.push(std::mem::replace(&mut h, out));
            cache.pre.push(z);
            cache.masks.push(mask);
        }
        Ok((h, cache))
    }

    /// Exact gradients of the forward map that produced `cache` (same
    /// dropout masks). Returns per-layer parameter gradients and the
    /// gradient at the input when requested.
    pub fn backward(
        &self,
        cache: &MlpCache,
        output_grad: &Array2<f64>,
        input_grad: bool,
    ) -> Result<(Vec<DenseLayer>, Option<Array2<f64>>)> {
        let mut grads = self.zeros_like();
        let dx = self.backward_into(cache, output_grad, &mut grads, input_grad)?;
        Ok((grads, dx))
    }

    /// Like [`Mlp::backward`], overwriting preallocated layer gradients.
    pub fn backward_into(
        &self,
        cache: &MlpCache,
        output_grad: &Array2<f64>,
        grads: &mut [DenseLayer],
        input_grad: bool,
    ) -> Result<Option<Array2<f64>>> {
        let stale = cache.shapes.len() != self.layers.len()
            || cache
                .shapes
                .iter()
                .zip(&self.layers)
                .any(|(s, l)| *s != l.weights.dim());
        if stale || grads.len() != self.layers.len() {
            return Err(shape("forward cache does not match this network"));
        }
        let batch = cache.inputs[0].nrows();
        if output_grad.dim() != (batch, self.outputs()) {
            return Err(shape(format!(
                "output gradient {:?}, expected ({batch}, {})",
                output_grad.dim(),
                self.outputs()
            )));
        }
        let mut g = output_grad.to_owned();
        for i in (0..self.layers.len()).rev() {
            if let Some(m) = &cache.masks[i] {
                g *= m;
            }
            let act = self.activations[i];
            if act == Activation::Elu {
                g.zip_mut_with(&cache.pre[i], |gv, &z| *gv *= act.derivative(z));
            }
            let want_dx = i > 0 || input_grad;
            if let Some(dx) =
                self.layers[i].backward_into(&cache.inputs[i], &g, &mut grads[i], want_dx)?
            {
                g = dx;
            }
        }
        Ok(input_grad.then_some(g))
    }

    /// Gradient container shaped like this network, all zeros.
    pub fn zeros_like(&self) -> Vec<DenseLayer> {
        self.layers
            .iter()
            .map(|l| DenseLayer::zeros(l.inputs(), l.outputs()))
            .collect()
    }
}

impl Parameters for Mlp {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.param_slices()).collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.param_slices_mut())
            .collect()
    }
}

impl Parameters for Vec<DenseLayer> {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.iter().flat_map(|l| l.param_slices()).collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.iter_mut().flat_map(|l| l.param_slices_mut()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::seeded_rng;
    use ndarray::Array1;
    use rand_distr::{Distribution, StandardNormal};

    fn random_input(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = seeded_rng(seed, 9);
        Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut rng))
    }

    fn small_net(dropout: f64) -> Mlp {
        let mut rng = seeded_rng(1, 0);
        let mut layers = vec![
            DenseLayer::xavier(4, 6, &mut rng),
            DenseLayer::xavier(6, 5, &mut rng),
            DenseLayer::xavier(5, 2, &mut rng),
        ];
        for l in &mut layers {
            l.bias.mapv_inplace(|_| 0.1);
        }
        Mlp::new(
            layers,
            vec![Activation::Elu, Activation::Elu, Activation::Identity],
            dropout,
        )
        .unwrap()
    }

    #[test]
    fn no_dropout_train_equals_infer() {
        let net = small_net(0.0);
        let x = random_input(3, 4, 2);
        let (a, _) = net.forward(&x, Mode::Train, &mut seeded_rng(5, 0)).unwrap();
        let (b, _) = net.forward(&x, Mode::Infer, &mut seeded_rng(6, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_network() {
        let net = Mlp::new(
            vec![DenseLayer::new(Array2::eye(4), Array1::zeros(4)).unwrap()],
            vec![Activation::Identity],
            0.5,
        )
        .unwrap();
        let x = random_input(2, 4, 3);
        let (y, _) = net.forward(&x, Mode::Train, &mut seeded_rng(0, 0)).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn seeded_masks_are_reproducible() {
        let net = small_net(0.5);
        let x = random_input(4, 4, 4);
        let (a, ca) = net.forward(&x, Mode::Train, &mut seeded_rng(8, 0)).unwrap();
        let (b, cb) = net.forward(&x, Mode::Train, &mut seeded_rng(8, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ca.masks, cb.masks);
        assert!(ca.masks[0].as_ref().unwrap().iter().any(|&m| m == 0.0));
        assert!(ca.masks[2].is_none());
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = small_net(0.3);
        let x = random_input(3, 4, 5);
        let (_, cache) = net.forward(&x, Mode::Train, &mut seeded_rng(1, 1)).unwrap();
        let (grads, dx) = net.backward(&cache, &Array2::zeros((3, 2)), true).unwrap();
        assert!(grads
            .param_slices()
            .iter()
            .all(|s| s.iter().all(|&v| v == 0.0)));
        assert!(dx.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let net = small_net(0.0);
        let other = Mlp::elu_stack(4, &[3], 0.0, &mut seeded_rng(0, 0)).unwrap();
        let x = random_input(1, 4, 6);
        let (_, cache) = other
            .forward(&x, Mode::Infer, &mut seeded_rng(0, 0))
            .unwrap();
        assert!(net.backward(&cache, &Array2::zeros((1, 2)), false).is_err());
    }

    fn loss(net: &Mlp, x: &Array2<f64>, target: &Array2<f64>, seed: u64) -> f64 {
        let (y, _) = net
            .forward(x, Mode::Train, &mut seeded_rng(seed, 0))
            .unwrap();
        (&y - target).mapv(|d| d * d).sum()
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn gradients_match_finite_differences_with_dropout() {
        let net = small_net(0.3);
        let x = random_input(3, 4, 7);
        let target = random_input(3, 2, 8);
        let (y, cache) = net
            .forward(&x, Mode::Train, &mut seeded_rng(42, 0))
            .unwrap();
        let dy = (&y - &target) * 2.0;
        let (grads, dx) = net.backward(&cache, &dy, true).unwrap();
        let h = 1e-5;
        let analytic: Vec<f64> = grads.param_slices().concat();
        let mut probe = net.clone();
        let count = probe.param_count();
        for k in 0..count {
            let read = |p: &mut Mlp, delta: f64| {
                let mut slices = p.param_slices_mut();
                let mut idx = k;
                for s in slices.iter_mut() {
                    if idx < s.len() {
                        s[idx] += delta;
                        return;
                    }
                    idx -= s.len();
                }
            };
            read(&mut probe, h);
            let up = loss(&probe, &x, &target, 42);
            read(&mut probe, -2.0 * h);
            let down = loss(&probe, &x, &target, 42);
            read(&mut probe, h);
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            assert!(
                rel < 1e-4 || (a - numeric).abs() < 1e-9,
                "param {k}: {a} vs {numeric}"
            );
        }
        let dx = dx.unwrap();
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                let mut xp = x.clone();
                xp[[i, j]] += h;
                let up = loss(&net, &xp, &target, 42);
                xp[[i, j]] -= 2.0 * h;
                let down = loss(&net, &xp, &target, 42);
                let numeric = (up - down) / (2.0 * h);
                assert!((dx[[i, j]] - numeric).abs() < 1e-6 * (1.0 + numeric.abs()));
            }
        }
    }

    #[test]
    fn inverted_dropout_preserves_expectation() {
        let net = small_net(0.5);
        let x = random_input(1, 4, 10);
        // expected first-layer output: average over masks vs no dropout
        let (infer, _) = net.forward(&x, Mode::Infer, &mut seeded_rng(0, 0)).unwrap();
        let single = Mlp::new(vec![net.layers[0].clone()], vec![Activation::Elu], 0.5).unwrap();
        let (reference, _) = single
            .forward(&x, Mode::Infer, &mut seeded_rng(0, 0))
            .unwrap();
        let mut acc = Array2::<f64>::zeros(reference.dim());
        let trials = 20_000;
        let mut rng = seeded_rng(77, 0);
        for _ in 0..trials {
            let (y, _) = single.forward(&x, Mode::Train, &mut rng).unwrap();
            acc += &y;
        }
        acc /= trials as f64;
        for (a, r) in acc.iter().zip(reference.iter()) {
            // sd of the mean is |r|/sqrt(trials) for rate 0.5
            assert!((a - r).abs() < 5.0 * r.abs() / (trials as f64).sqrt() + 1e-12);
        }
        assert_eq!(infer.dim(), (1, 2));
    }
}
