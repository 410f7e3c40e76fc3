//! ADADELTA updates.

use serde::{Deserialize, Serialize};

use crate::net::{Gradients, NetworkParams, ParamBlock};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdadeltaConfig {
    /// Decay of both running averages.
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        Self {
            rho: 0.9,
            epsilon: 1e-6,
        }
    }
}

impl AdadeltaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("rho must be in (0,1), got {}", self.rho)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Running averages `E[g²]` and `E[Δx²]`, one pair of blocks per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdadeltaState {
    pub sq_grad: Vec<ParamBlock>,
    pub sq_update: Vec<ParamBlock>,
}

impl AdadeltaState {
    pub fn new(params: &NetworkParams) -> Self {
        let zeros: Vec<ParamBlock> = params.blocks().map(ParamBlock::zeros_like).collect();
        Self {
            sq_grad: zeros.clone(),
            sq_update: zeros,
        }
    }
}

/// Updates a single coordinate in place; returns the applied `Δx`.
#[inline]
pub fn adadelta_scalar(
    x: &mut f64,
    g: f64,
    sq_grad: &mut f64,
    sq_update: &mut f64,
    config: &AdadeltaConfig,
) -> f64 {
    let rho = config.rho;
    *sq_grad = rho * *sq_grad + (1.0 - rho) * g * g;
    let dx = -((*sq_update + config.epsilon).sqrt() / (*sq_grad + config.epsilon).sqrt()) * g;
    *sq_update = rho * *sq_update + (1.0 - rho) * dx * dx;
    *x += dx;
    dx
}

/// One ADADELTA step over every parameter. Nothing is modified when any
/// gradient is non-finite.
pub fn adadelta_step(
    params: &mut NetworkParams,
    grads: &Gradients,
    state: &mut AdadeltaState,
    config: &AdadeltaConfig,
) -> Result<()> {
    let layers = params.layers().len();
    if grads.blocks.len() != layers || state.sq_grad.len() != layers || state.sq_update.len() != layers
    {
        return Err(Error::Consistency(
            "parameters, gradients and optimizer state have different layer counts".into(),
        ));
    }
    for (i, ((p, g), s)) in params
        .blocks()
        .zip(&grads.blocks)
        .zip(&state.sq_grad)
        .enumerate()
    {
        if p.weights.len() != g.weights.len()
            || p.bias.len() != g.bias.len()
            || p.weights.len() != s.weights.len()
            || p.bias.len() != s.bias.len()
        {
            return Err(Error::Consistency(format!(
                "block {i}: parameter, gradient and state shapes differ"
            )));
        }
    }
    if let Some((i, v)) = grads
        .blocks
        .iter()
        .enumerate()
        .find_map(|(i, b)| b.iter().find(|v| !v.is_finite()).map(|v| (i, *v)))
    {
        return Err(Error::Numeric(format!(
            "non-finite gradient {v} in layer {i}; update aborted"
        )));
    }

    for (((p, g), sg), su) in params
        .blocks_mut()
        .zip(&grads.blocks)
        .zip(state.sq_grad.iter_mut())
        .zip(state.sq_update.iter_mut())
    {
        for (((x, &gv), a), b) in p
            .iter_mut()
            .zip(g.iter())
            .zip(sg.iter_mut())
            .zip(su.iter_mut())
        {
            adadelta_scalar(x, gv, a, b, config);
        }
    }
    Ok(())
}
