//! A small dense-network engine: layers, ELU, inverted dropout, exact
//! backpropagation and Adam. Everything is `f64`.

mod adam;
mod layer;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use layer::{elu, elu_derivative, Activation, DenseLayer};
pub use mlp::{Mlp, MlpCache, Mode};

/// Anything made of flat parameter buffers. The slice order must be
/// stable: optimizers and gradients are matched by position.
pub trait Parameters {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }
}

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
