use serde::{Deserialize, Serialize};

use crate::net::{LayerSpec, NetworkParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ClassifierCnn,
    ClassifierDnn,
    SiameseCnn,
}

impl ModelKind {
    pub fn is_classifier(self) -> bool {
        !matches!(self, ModelKind::SiameseCnn)
    }
}

/// Layer widths of a model family, independent of input and head size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    /// `(num_filters, filter_width)` for each convolution; each is followed
    /// by a ReLU and a max pool.
    pub conv: Vec<(usize, usize)>,
    pub pool_width: usize,
    /// Fully connected ReLU layers after the convolutions.
    pub hidden: Vec<usize>,
    /// Make the last max pool span the whole remaining time axis.
    #[serde(default)]
    pub global_pool: bool,
}

impl Architecture {
    /// Full-size layer widths.
    pub fn full(kind: ModelKind) -> Self {
        match kind {
            ModelKind::ClassifierCnn => Self {
                conv: vec![(96, 9), (96, 8)],
                pool_width: 3,
                hidden: vec![1024],
                global_pool: false,
            },
            ModelKind::ClassifierDnn => Self {
                conv: vec![],
                pool_width: 3,
                hidden: vec![2048, 2048],
                global_pool: false,
            },
            ModelKind::SiameseCnn => Self {
                conv: vec![(96, 9), (96, 8)],
                pool_width: 3,
                hidden: vec![2048],
                global_pool: false,
            },
        }
    }

    /// Narrower networks that train in seconds on one CPU core.
    pub fn desk(kind: ModelKind) -> Self {
        match kind {
            ModelKind::ClassifierCnn | ModelKind::SiameseCnn => Self {
                conv: vec![(16, 5), (16, 5)],
                pool_width: 2,
                hidden: vec![128],
                global_pool: true,
            },
            ModelKind::ClassifierDnn => Self {
                conv: vec![],
                pool_width: 3,
                hidden: vec![128, 128],
                global_pool: false,
            },
        }
    }
}

/// Full description of a trainable model: its layer stack on a fixed
/// `b × n_pad` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Feature dimension `b`.
    pub input_dim: usize,
    pub n_pad: usize,
    pub layers: Vec<LayerSpec>,
    /// Linear layer inserted before the softmax (classifiers only).
    pub bottleneck: Option<usize>,
    /// Vocabulary size for classifiers, embedding size for Siamese models.
    pub head_dim: usize,
}

/// Where embeddings are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tap {
    SoftmaxOutput,
    PreSoftmaxLogits,
    Bottleneck,
    FinalLinear,
}

impl ModelSpec {
    pub fn build(
        kind: ModelKind,
        arch: &Architecture,
        input_dim: usize,
        n_pad: usize,
        head_dim: usize,
        bottleneck: Option<usize>,
    ) -> Result<Self> {
        if kind.is_classifier() && head_dim < 2 {
            return Err(Error::Config(format!(
                "classifier needs a vocabulary of at least 2 types, got {head_dim}"
            )));
        }
        if bottleneck.is_some() && !kind.is_classifier() {
            return Err(Error::Config(
                "a bottleneck layer only applies to classifiers".into(),
            ));
        }
        let mut layers = Vec::new();
        if kind != ModelKind::ClassifierDnn {
            let mut width = n_pad;
            for (i, &(num_filters, filter_width)) in arch.conv.iter().enumerate() {
                layers.push(LayerSpec::Conv1d {
                    num_filters,
                    filter_width,
                });
                layers.push(LayerSpec::Relu);
                width = width.saturating_sub(filter_width.saturating_sub(1));
                let pool_width = if arch.global_pool && i + 1 == arch.conv.len() {
                    width.max(1)
                } else {
                    arch.pool_width
                };
                width /= pool_width.max(1);
                layers.push(LayerSpec::MaxPool { pool_width });
            }
        }
        for &h in &arch.hidden {
            layers.push(LayerSpec::Affine { out_dim: h });
            layers.push(LayerSpec::Relu);
        }
        if let Some(width) = bottleneck {
            layers.push(LayerSpec::Affine { out_dim: width });
        }
        layers.push(LayerSpec::Affine { out_dim: head_dim });
        if kind.is_classifier() {
            layers.push(LayerSpec::Softmax);
        }
        let spec = Self {
            kind,
            input_dim,
            n_pad,
            layers,
            bottleneck,
            head_dim,
        };
        spec.check_shapes()?;
        Ok(spec)
    }

    /// Resolves every layer shape on the `b × n_pad` input.
    pub fn check_shapes(&self) -> Result<()> {
        let net = NetworkParams::zeroed(self.input_shape(), &self.layers)?;
        let expected = (self.head_dim, 1);
        if net.output_shape() != expected {
            return Err(Error::Config(format!(
                "network output {:?} does not match head size {}",
                net.output_shape(),
                self.head_dim
            )));
        }
        Ok(())
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.input_dim, self.n_pad)
    }

    /// Number of leading layers to run to reach `tap`.
    pub fn tap_depth(&self, tap: Tap) -> Result<usize> {
        let n = self.layers.len();
        let invalid = || {
            Err(Error::Config(format!(
                "tap {tap:?} is not available for a {:?} model{}",
                self.kind,
                if self.bottleneck.is_none() && tap == Tap::Bottleneck {
                    " without a bottleneck"
                } else {
                    ""
                }
            )))
        };
        match (self.kind.is_classifier(), tap) {
            (true, Tap::SoftmaxOutput) => Ok(n),
            (true, Tap::PreSoftmaxLogits) => Ok(n - 1),
            (true, Tap::Bottleneck) if self.bottleneck.is_some() => Ok(n - 2),
            (false, Tap::FinalLinear) => Ok(n),
            _ => invalid(),
        }
    }

    pub fn default_tap(&self) -> Tap {
        if self.kind.is_classifier() {
            Tap::SoftmaxOutput
        } else {
            Tap::FinalLinear
        }
    }

    pub fn tap_width(&self, tap: Tap) -> Result<usize> {
        let depth = self.tap_depth(tap)?;
        let net = NetworkParams::zeroed(self.input_shape(), &self.layers[..depth])?;
        let (r, c) = net.output_shape();
        Ok(r * c)
    }
}

/// Full-size architecture on 39-dimensional features padded to 200
/// frames. For Siamese models `vocab_size` is ignored and the embedding is
/// 1024-dimensional.
pub fn build_default_spec(kind: ModelKind, vocab_size: usize) -> Result<ModelSpec> {
    let head = if kind.is_classifier() { vocab_size } else { 1024 };
    ModelSpec::build(kind, &Architecture::full(kind), 39, 200, head, None)
}
