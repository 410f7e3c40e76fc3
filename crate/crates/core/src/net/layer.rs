use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

/// One layer of a feed-forward network.
///
/// Shapes are `(channels, width)`. Convolution and pooling run along the
/// width (time) axis and span every channel. `Affine` and `Softmax` treat
/// their input as one flattened vector and produce a column vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        num_filters: usize,
        filter_width: usize,
    },
    MaxPool {
        pool_width: usize,
    },
    Relu,
    Affine {
        out_dim: usize,
    },
    Softmax,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Conv1d {
                num_filters,
                filter_width,
            } if num_filters == 0 || filter_width == 0 => Err(Error::Config(format!(
                "conv1d needs num_filters >= 1 and filter_width >= 1, got {num_filters}/{filter_width}"
            ))),
            LayerSpec::MaxPool { pool_width: 0 } => {
                Err(Error::Config("max pool width must be >= 1".into()))
            }
            LayerSpec::Affine { out_dim: 0 } => {
                Err(Error::Config("affine out_dim must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Output shape for the given input shape, or `None` when the input cannot
    /// be consumed (a convolution wider than the sequence, a pool with no
    /// complete window).
    pub fn output_shape(&self, (channels, width): (usize, usize)) -> Option<(usize, usize)> {
        match *self {
            LayerSpec::Conv1d {
                num_filters,
                filter_width,
            } => (width >= filter_width).then(|| (num_filters, width - filter_width + 1)),
            LayerSpec::MaxPool { pool_width } => {
                let out = width / pool_width;
                (out >= 1).then_some((channels, out))
            }
            LayerSpec::Relu => Some((channels, width)),
            LayerSpec::Affine { out_dim } => Some((out_dim, 1)),
            LayerSpec::Softmax => Some((channels * width, 1)),
        }
    }

    /// `(weight count, bias count)` for the given input shape.
    pub fn param_counts(&self, (channels, width): (usize, usize)) -> (usize, usize) {
        match *self {
            LayerSpec::Conv1d {
                num_filters,
                filter_width,
            } => (num_filters * channels * filter_width, num_filters),
            LayerSpec::Affine { out_dim } => (out_dim * channels * width, out_dim),
            _ => (0, 0),
        }
    }

    /// `(fan_in, fan_out)` used by the uniform initializer.
    fn fans(&self, (channels, width): (usize, usize)) -> (usize, usize) {
        match *self {
            LayerSpec::Conv1d {
                num_filters,
                filter_width,
            } => (channels * filter_width, num_filters * filter_width),
            LayerSpec::Affine { out_dim } => (channels * width, out_dim),
            _ => (0, 0),
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv1d { .. } | LayerSpec::Affine { .. })
    }
}

/// Weight and bias storage for one layer. Also used for gradients and
/// optimizer accumulators, which mirror the parameter layout exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ParamBlock {
    /// Conv1d: `[filter][channel][tap]`; Affine: `[out][in]`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ParamBlock {
    pub fn zeros(weights: usize, bias: usize) -> Self {
        Self {
            weights: vec![0.0; weights],
            bias: vec![0.0; bias],
        }
    }

    pub fn zeros_like(other: &ParamBlock) -> Self {
        Self::zeros(other.weights.len(), other.bias.len())
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    /// `self += other`, elementwise.
    pub fn add_assign(&mut self, other: &ParamBlock) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += *b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in self.iter_mut() {
            *a *= factor;
        }
    }
}

/// A layer with its resolved shapes and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub spec: LayerSpec,
    pub input_shape: (usize, usize),
    pub output_shape: (usize, usize),
    pub params: ParamBlock,
}

impl Layer {
    /// Builds a layer with zero parameters. Returns `None` if the spec
    /// cannot consume `input_shape`.
    pub fn zeroed(spec: LayerSpec, input_shape: (usize, usize)) -> Option<Self> {
        let output_shape = spec.output_shape(input_shape)?;
        let (w, b) = spec.param_counts(input_shape);
        Some(Self {
            spec,
            input_shape,
            output_shape,
            params: ParamBlock::zeros(w, b),
        })
    }

    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init_uniform<R: rand::Rng + ?Sized>(&mut self, rng: &mut R) {
        let (fan_in, fan_out) = self.spec.fans(self.input_shape);
        if fan_in + fan_out == 0 {
            return;
        }
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in &mut self.params.weights {
            *w = rng.random_range(-bound..bound);
        }
        self.params.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    /// Forward pass. `position` is this layer's index in its network and is
    /// only used in error messages.
    pub fn forward(&self, position: usize, input: &Matrix) -> Result<Matrix> {
        if input.shape() != self.input_shape {
            return Err(Error::Shape {
                layer: position,
                expected: self.input_shape,
                actual: input.shape(),
            });
        }
        Ok(match self.spec {
            LayerSpec::Conv1d {
                num_filters,
                filter_width,
            } => conv_forward(&self.params, num_filters, filter_width, input),
            LayerSpec::MaxPool { pool_width } => pool_forward(pool_width, input),
            LayerSpec::Relu => {
                let data = input.as_slice().iter().map(|&v| v.max(0.0)).collect();
                Matrix::from_vec(input.rows(), input.cols(), data)
            }
            LayerSpec::Affine { out_dim } => affine_forward(&self.params, out_dim, input),
            LayerSpec::Softmax => Matrix::column(softmax(input.as_slice())),
        })
    }

    /// Backward pass given this layer's input, its output and the gradient
    /// of the loss with respect to the output. Returns the parameter
    /// gradient and the gradient with respect to the input.
    pub fn backward(
        &self,
        position: usize,
        input: &Matrix,
        output: &Matrix,
        grad_output: &Matrix,
    ) -> Result<(ParamBlock, Matrix)> {
        if input.shape() != self.input_shape
            || output.shape() != self.output_shape
            || grad_output.shape() != self.output_shape
        {
            return Err(Error::Consistency(format!(
                "layer {position}: expected input {:?} and output {:?}, got input {:?}, output {:?}, gradient {:?}",
                self.input_shape,
                self.output_shape,
                input.shape(),
                output.shape(),
                grad_output.shape()
            )));
        }
        Ok(match self.spec {
            LayerSpec::Conv1d {
                num_filters,
                filter_width,
            } => conv_backward(&self.params, num_filters, filter_width, input, grad_output),
            LayerSpec::MaxPool { pool_width } => (
                ParamBlock::default(),
                pool_backward(pool_width, input, grad_output),
            ),
            LayerSpec::Relu => {
                let data = input
                    .as_slice()
                    .iter()
                    .zip(grad_output.as_slice())
                    .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                    .collect();
                (
                    ParamBlock::default(),
                    Matrix::from_vec(input.rows(), input.cols(), data),
                )
            }
            LayerSpec::Affine { out_dim } => {
                affine_backward(&self.params, out_dim, input, grad_output)
            }
            LayerSpec::Softmax => {
                let s = output.as_slice();
                let g = grad_output.as_slice();
                let dot: f64 = s.iter().zip(g).map(|(a, b)| a * b).sum();
                let data = s.iter().zip(g).map(|(si, gi)| si * (gi - dot)).collect();
                (
                    ParamBlock::default(),
                    Matrix::from_vec(input.rows(), input.cols(), data),
                )
            }
        })
    }
}

/// Numerically stable softmax over a flat vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

fn conv_forward(params: &ParamBlock, filters: usize, width: usize, input: &Matrix) -> Matrix {
    let channels = input.rows();
    let out_width = input.cols() - width + 1;
    let mut out = Matrix::zeros(filters, out_width);
    for f in 0..filters {
        let row = out.row_mut(f);
        row.iter_mut().for_each(|v| *v = params.bias[f]);
        for c in 0..channels {
            let x = input.row(c);
            let base = (f * channels + c) * width;
            for k in 0..width {
                let w = params.weights[base + k];
                for (o, &xv) in row.iter_mut().zip(&x[k..k + out_width]) {
                    *o += w * xv;
                }
            }
        }
    }
    out
}

fn conv_backward(
    params: &ParamBlock,
    filters: usize,
    width: usize,
    input: &Matrix,
    grad_out: &Matrix,
) -> (ParamBlock, Matrix) {
    let channels = input.rows();
    let out_width = grad_out.cols();
    let mut grad = ParamBlock::zeros_like(params);
    let mut grad_in = Matrix::zeros(channels, input.cols());
    for f in 0..filters {
        let g = grad_out.row(f);
        grad.bias[f] = g.iter().sum();
        for c in 0..channels {
            let x = input.row(c);
            let base = (f * channels + c) * width;
            for k in 0..width {
                grad.weights[base + k] = g
                    .iter()
                    .zip(&x[k..k + out_width])
                    .map(|(a, b)| a * b)
                    .sum();
            }
            let gi = grad_in.row_mut(c);
            for k in 0..width {
                let w = params.weights[base + k];
                for (d, &gv) in gi[k..k + out_width].iter_mut().zip(g) {
                    *d += w * gv;
                }
            }
        }
    }
    (grad, grad_in)
}

/// Index of the first maximum within each pooling window.
fn argmax_first(window: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in window.iter().enumerate().skip(1) {
        if v > window[best] {
            best = i;
        }
    }
    best
}

fn pool_forward(pool: usize, input: &Matrix) -> Matrix {
    let out_width = input.cols() / pool;
    let mut out = Matrix::zeros(input.rows(), out_width);
    for c in 0..input.rows() {
        let x = input.row(c);
        for j in 0..out_width {
            let window = &x[j * pool..(j + 1) * pool];
            out.set(c, j, window[argmax_first(window)]);
        }
    }
    out
}

fn pool_backward(pool: usize, input: &Matrix, grad_out: &Matrix) -> Matrix {
    let mut grad_in = Matrix::zeros(input.rows(), input.cols());
    for c in 0..input.rows() {
        let x = input.row(c);
        for j in 0..grad_out.cols() {
            let window = &x[j * pool..(j + 1) * pool];
            let idx = j * pool + argmax_first(window);
            grad_in.set(c, idx, grad_out.get(c, j));
        }
    }
    grad_in
}

fn affine_forward(params: &ParamBlock, out_dim: usize, input: &Matrix) -> Matrix {
    let x = input.as_slice();
    let n = x.len();
    let out = (0..out_dim)
        .map(|o| {
            let w = &params.weights[o * n..(o + 1) * n];
            params.bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    Matrix::column(out)
}

fn affine_backward(
    params: &ParamBlock,
    out_dim: usize,
    input: &Matrix,
    grad_out: &Matrix,
) -> (ParamBlock, Matrix) {
    let x = input.as_slice();
    let n = x.len();
    let g = grad_out.as_slice();
    let mut grad = ParamBlock::zeros_like(params);
    let mut grad_in = vec![0.0; n];
    for o in 0..out_dim {
        let go = g[o];
        grad.bias[o] = go;
        if go == 0.0 {
            continue;
        }
        let w = &params.weights[o * n..(o + 1) * n];
        let dw = &mut grad.weights[o * n..(o + 1) * n];
        for ((d, &xv), (di, &wv)) in dw.iter_mut().zip(x).zip(grad_in.iter_mut().zip(w)) {
            *d = go * xv;
            *di += wv * go;
        }
    }
    (grad, Matrix::from_vec(input.rows(), input.cols(), grad_in))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn conv(filter: Vec<f64>, bias: f64, input_width: usize) -> Layer {
        let spec = LayerSpec::Conv1d {
            num_filters: 1,
            filter_width: filter.len(),
        };
        let mut layer = Layer::zeroed(spec, (1, input_width)).unwrap();
        layer.params.weights = filter;
        layer.params.bias = vec![bias];
        layer
    }

    #[test]
    fn conv_direct_dot_products() {
        let layer = conv(vec![1.0, 1.0], 0.0, 3);
        let out = layer
            .forward(0, &Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]))
            .unwrap();
        assert_eq!(out.as_slice(), &[3.0, 5.0]);
    }

    #[test]
    fn conv_shifted_identity_filter() {
        let layer = conv(vec![1.0, 0.0], 0.0, 4);
        let out = layer
            .forward(0, &Matrix::from_rows(&[vec![4.0, 7.0, 1.0, 9.0]]))
            .unwrap();
        assert_eq!(out.as_slice(), &[4.0, 7.0, 1.0]);
    }

    #[test]
    fn conv_spans_all_channels() {
        let spec = LayerSpec::Conv1d {
            num_filters: 1,
            filter_width: 1,
        };
        let mut layer = Layer::zeroed(spec, (2, 2)).unwrap();
        layer.params.weights = vec![1.0, 10.0];
        layer.params.bias = vec![0.5];
        let input = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let out = layer.forward(0, &input).unwrap();
        assert_eq!(out.as_slice(), &[31.5, 42.5]);
    }

    #[test]
    fn max_pool_discards_remainder() {
        let layer = Layer::zeroed(LayerSpec::MaxPool { pool_width: 3 }, (1, 6)).unwrap();
        let out = layer
            .forward(0, &Matrix::from_rows(&[vec![1.0, 3.0, 2.0, 5.0, 4.0, 0.0]]))
            .unwrap();
        assert_eq!(out.as_slice(), &[3.0, 5.0]);

        let layer = Layer::zeroed(LayerSpec::MaxPool { pool_width: 3 }, (1, 7)).unwrap();
        assert_eq!(layer.output_shape, (1, 2));
    }

    #[test]
    fn max_pool_gradient_goes_to_first_maximum() {
        let layer = Layer::zeroed(LayerSpec::MaxPool { pool_width: 3 }, (1, 3)).unwrap();
        let input = Matrix::from_rows(&[vec![2.0, 2.0, 1.0]]);
        let output = layer.forward(0, &input).unwrap();
        let (_, gi) = layer
            .backward(0, &input, &output, &Matrix::from_rows(&[vec![7.0]]))
            .unwrap();
        assert_eq!(gi.as_slice(), &[7.0, 0.0, 0.0]);
    }

    #[test]
    fn softmax_analytic() {
        let p = softmax(&[0.0, 3f64.ln()]);
        assert_relative_eq!(p[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn relu_backward_masks_nonpositive_inputs() {
        let layer = Layer::zeroed(LayerSpec::Relu, (2, 1)).unwrap();
        let input = Matrix::column(vec![-1.0, 2.0]);
        let output = layer.forward(0, &input).unwrap();
        let (_, gi) = layer
            .backward(0, &input, &output, &Matrix::column(vec![5.0, 5.0]))
            .unwrap();
        assert_eq!(gi.as_slice(), &[0.0, 5.0]);
    }

    #[test]
    fn affine_backward_linear_calculus() {
        let mut layer = Layer::zeroed(LayerSpec::Affine { out_dim: 2 }, (3, 1)).unwrap();
        layer.params.weights = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        layer.params.bias = vec![0.5, -0.5];
        let x = Matrix::column(vec![1.0, -1.0, 2.0]);
        let y = layer.forward(0, &x).unwrap();
        assert_eq!(y.as_slice(), &[5.5, 10.5]);
        let g = Matrix::column(vec![2.0, -1.0]);
        let (grad, dx) = layer.backward(0, &x, &y, &g).unwrap();
        // dW = g xᵀ, db = g, dx = Wᵀ g
        assert_eq!(grad.weights, vec![2.0, -2.0, 4.0, -1.0, 1.0, -2.0]);
        assert_eq!(grad.bias, vec![2.0, -1.0]);
        assert_eq!(dx.as_slice(), &[-2.0, -1.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let layer = Layer::zeroed(LayerSpec::Relu, (2, 3)).unwrap();
        match layer.forward(4, &Matrix::zeros(3, 2)) {
            Err(Error::Shape {
                layer,
                expected,
                actual,
            }) => {
                assert_eq!(layer, 4);
                assert_eq!(expected, (2, 3));
                assert_eq!(actual, (3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(LayerSpec::Conv1d {
            num_filters: 1,
            filter_width: 0
        }
        .validate()
        .is_err());
        assert!(LayerSpec::MaxPool { pool_width: 0 }.validate().is_err());
        assert!(LayerSpec::Affine { out_dim: 0 }.validate().is_err());
        assert!(LayerSpec::Relu.validate().is_ok());
    }

    proptest::proptest! {
        #[test]
        fn output_widths(t in 1usize..60, w in 1usize..12, p in 1usize..8) {
            let conv = LayerSpec::Conv1d { num_filters: 2, filter_width: w };
            match conv.output_shape((3, t)) {
                Some((2, out)) => proptest::prop_assert_eq!(out, t - w + 1),
                None => proptest::prop_assert!(t < w),
                other => proptest::prop_assert!(false, "{:?}", other),
            }
            let pool = LayerSpec::MaxPool { pool_width: p };
            match pool.output_shape((3, t)) {
                Some((3, out)) => proptest::prop_assert_eq!(out, t / p),
                None => proptest::prop_assert!(t < p),
                other => proptest::prop_assert!(false, "{:?}", other),
            }
        }

        #[test]
        fn softmax_is_a_distribution_and_shift_invariant(
            logits in proptest::collection::vec(-30.0f64..30.0, 1..20),
            shift in -50.0f64..50.0,
        ) {
            let p = softmax(&logits);
            proptest::prop_assert!(p.iter().all(|&v| v >= 0.0));
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
            for (a, b) in p.iter().zip(softmax(&shifted)) {
                proptest::prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
