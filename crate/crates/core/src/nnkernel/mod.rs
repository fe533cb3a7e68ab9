//! A small reverse-mode differentiation kernel over dense `f64` tensors,
//! with the Adam optimizer and a flat parameter file format. It covers what
//! the sentence CNN and BiLSTM need and nothing more: no broadcasting beyond
//! bias rows, no batching semantics, no device abstraction.

mod adam;
mod graph;
mod serialize;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use graph::{Grads, Graph, ParamId, Params, Var};
pub use serialize::{decode_params, encode_params, load_params, save_params};
pub use tensor::Tensor;

pub(crate) use graph::softmax_row;

use crate::rng::{self, Rng};

/// Uniform Glorot initialisation for a `[fan_in, fan_out]`-like matrix.
pub fn glorot(rng: &mut Rng, shape: Vec<usize>, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| (2.0 * rng::unit(rng) - 1.0) * limit).collect();
    Tensor::from_vec(shape, data)
}
