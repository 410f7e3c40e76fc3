//! Feed-forward network core: matrices, layers, forward/backward passes and
//! finite-difference gradient checking.

mod gradcheck;
mod layer;
mod matrix;
mod network;

pub use gradcheck::{finite_difference_check, relative_error, GradCheck};
pub use layer::{softmax, Layer, LayerSpec, ParamBlock};
pub use matrix::Matrix;
pub use network::{Gradients, NetworkParams, Trace};
