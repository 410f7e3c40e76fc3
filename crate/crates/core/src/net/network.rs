use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Layer, LayerSpec, Matrix, ParamBlock};
use crate::{Error, Result};

/// Ordered stack of layers whose shapes compose, starting from a fixed
/// `(channels, width)` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    input_shape: (usize, usize),
    layers: Vec<Layer>,
}

/// Per-layer activations from one forward pass: the input followed by
/// every layer's output.
#[derive(Debug, Clone)]
pub struct Trace {
    pub activations: Vec<Matrix>,
}

impl Trace {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("trace is never empty")
    }
}

/// Parameter gradients, one block per layer (empty for parameter-free
/// layers).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<ParamBlock>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Self {
            blocks: params
                .layers
                .iter()
                .map(|l| ParamBlock::zeros_like(&l.params))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.blocks.iter_mut().for_each(|b| b.scale(factor));
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.blocks.iter().flat_map(|b| b.iter())
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl NetworkParams {
    /// Resolves shapes for `specs` on `input_shape`, with zero parameters.
    pub fn zeroed(input_shape: (usize, usize), specs: &[LayerSpec]) -> Result<Self> {
        let mut shape = input_shape;
        let mut layers = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            spec.validate()?;
            let layer = Layer::zeroed(*spec, shape).ok_or_else(|| {
                Error::Config(format!(
                    "layer {i} ({spec:?}) cannot consume input of shape {shape:?}"
                ))
            })?;
            shape = layer.output_shape;
            layers.push(layer);
        }
        Ok(Self {
            input_shape,
            layers,
        })
    }

    /// Resolves shapes and draws Glorot-uniform weights from `rng`.
    pub fn init<R: Rng + ?Sized>(
        input_shape: (usize, usize),
        specs: &[LayerSpec],
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeroed(input_shape, specs)?;
        for layer in &mut net.layers {
            layer.init_uniform(rng);
        }
        Ok(net)
    }

    pub fn input_shape(&self) -> (usize, usize) {
        self.input_shape
    }

    pub fn output_shape(&self) -> (usize, usize) {
        self.layers
            .last()
            .map_or(self.input_shape, |l| l.output_shape)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.params.len()).sum()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &ParamBlock> {
        self.layers.iter().map(|l| &l.params)
    }

    pub fn blocks_mut(&mut self) -> impl Iterator<Item = &mut ParamBlock> {
        self.layers.iter_mut().map(|l| &mut l.params)
    }

    /// Runs every layer, keeping all intermediate activations.
    pub fn forward(&self, input: &Matrix) -> Result<Trace> {
        self.forward_to(input, self.layers.len())
    }

    /// Runs the first `depth` layers only.
    pub fn forward_to(&self, input: &Matrix, depth: usize) -> Result<Trace> {
        let depth = depth.min(self.layers.len());
        let mut activations = Vec::with_capacity(depth + 1);
        activations.push(input.clone());
        for (i, layer) in self.layers[..depth].iter().enumerate() {
            let next = layer.forward(i, &activations[i])?;
            activations.push(next);
        }
        Ok(Trace { activations })
    }

    /// Output of layer `depth - 1` (or the input when `depth == 0`) without
    /// keeping intermediate activations.
    pub fn output_at(&self, input: &Matrix, depth: usize) -> Result<Matrix> {
        let depth = depth.min(self.layers.len());
        let mut x = input.clone();
        for (i, layer) in self.layers[..depth].iter().enumerate() {
            x = layer.forward(i, &x)?;
        }
        Ok(x)
    }

    /// Backpropagates `grad_output` (gradient w.r.t. the final output)
    /// through the whole network.
    pub fn backward(&self, trace: &Trace, grad_output: &Matrix) -> Result<(Gradients, Matrix)> {
        self.backward_from(trace, self.layers.len(), grad_output)
    }

    /// Backpropagates a gradient taken with respect to the output of layer
    /// `depth - 1`; layers at or after `depth` receive zero gradients. Used
    /// to start from logits when a softmax head is fused with its loss.
    pub fn backward_from(
        &self,
        trace: &Trace,
        depth: usize,
        grad_output: &Matrix,
    ) -> Result<(Gradients, Matrix)> {
        if depth > self.layers.len() || trace.activations.len() < depth + 1 {
            return Err(Error::Consistency(format!(
                "trace holds {} activations, need {} for depth {depth} of a {}-layer network",
                trace.activations.len(),
                depth + 1,
                self.layers.len()
            )));
        }
        if trace.activations[0].shape() != self.input_shape {
            return Err(Error::Consistency(format!(
                "trace input shape {:?} differs from network input {:?}",
                trace.activations[0].shape(),
                self.input_shape
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut grad = grad_output.clone();
        for i in (0..depth).rev() {
            let layer = &self.layers[i];
            let (block, grad_in) =
                layer.backward(i, &trace.activations[i], &trace.activations[i + 1], &grad)?;
            if layer.spec.has_params() {
                grads.blocks[i] = block;
            }
            grad = grad_in;
        }
        Ok((grads, grad))
    }
}
