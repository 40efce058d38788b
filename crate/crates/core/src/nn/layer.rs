use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{ensure_finite, shape, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Elu,
    Identity,
}

/// ELU with α = 1.
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// Derivative of [`elu`] evaluated at the pre-activation.
pub fn elu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

impl Activation {
    pub(crate) fn apply(self, z: &mut Array2<f64>) {
        if self == Activation::Elu {
            z.mapv_inplace(elu);
        }
    }

    pub(crate) fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Elu => elu_derivative(pre),
            Activation::Identity => 1.0,
        }
    }
}

/// Affine map `y = x·W + b` on row vectors, `W` stored in × out.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weights.ncols() != bias.len() {
            return Err(shape(format!(
                "weights have {} columns but bias has {} entries",
                weights.ncols(),
                bias.len()
            )));
        }
        let weights = weights.as_standard_layout().into_owned();
        ensure_finite(weights.as_slice().expect("standard layout"), "weights")?;
        ensure_finite(bias.as_slice().expect("owned bias is contiguous"), "bias")?;
        Ok(Self { weights, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Xavier-uniform weights, zero bias.
    pub fn xavier<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights =
            Array2::from_shape_simple_fn((inputs, outputs), || rng.gen_range(-limit..=limit));
        Self {
            weights,
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    /// Row-per-sample batch forward: `(B × in) → (B × out)`.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.inputs() {
            return Err(shape(format!(
                "layer expects {} inputs, got {}",
                self.inputs(),
                x.ncols()
            )));
        }
        // (Wᵀ·xᵀ)ᵀ streams the weights contiguously during packing
        let mut z = self.weights.t().dot(&x.t()).reversed_axes();
        if !z.is_standard_layout() {
            z = z.as_standard_layout().into_owned();
        }
        z += &self.bias;
        Ok(z)
    }

    /// Given the layer input and the gradient at its output, returns the
    /// parameter gradient (same shape as the layer) and, when asked, the
    /// gradient at the input.
    pub fn backward(
        &self,
        x: &Array2<f64>,
        dz: &Array2<f64>,
        input_grad: bool,
    ) -> Result<(DenseLayer, Option<Array2<f64>>)> {
        let mut grad = DenseLayer::zeros(self.inputs(), self.outputs());
        let dx = self.backward_into(x, dz, &mut grad, input_grad)?;
        Ok((grad, dx))
    }

    /// Like [`DenseLayer::backward`], overwriting a preallocated gradient.
    pub fn backward_into(
        &self,
        x: &Array2<f64>,
        dz: &Array2<f64>,
        grad: &mut DenseLayer,
        input_grad: bool,
    ) -> Result<Option<Array2<f64>>> {
        if dz.ncols() != self.outputs() || dz.nrows() != x.nrows() || x.ncols() != self.inputs() {
            return Err(shape(format!(
                "backward through {}→{} layer with input {:?} and gradient {:?}",
                self.inputs(),
                self.outputs(),
                x.dim(),
                dz.dim()
            )));
        }
        if grad.weights.dim() != self.weights.dim() || !grad.weights.is_standard_layout() {
            return Err(shape("gradient buffer does not match the layer"));
        }
        general_mat_mul(1.0, &x.t(), dz, 0.0, &mut grad.weights);
        grad.bias.assign(&dz.sum_axis(Axis(0)));
        Ok(input_grad.then(|| dz.dot(&self.weights.t())))
    }
}

impl Parameters for DenseLayer {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![
            self.weights.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("contiguous"),
        ]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.weights.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("contiguous"),
        ]
    }
}
