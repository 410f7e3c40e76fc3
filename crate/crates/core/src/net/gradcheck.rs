//! Central finite-difference verification of analytic parameter gradients.

use super::{Gradients, NetworkParams};
use crate::{Error, Result};

/// Outcome of a finite-difference sweep over every parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// `max |analytic − numeric| / max(1e-12, |analytic| + |numeric|)`
    /// over the checked coordinates.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates where the loss is not smooth within the step (a ReLU,
    /// max-pool or hinge boundary lies closer than `step`).
    pub skipped: usize,
}

/// Relative error used by [`finite_difference_check`].
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12)
}

/// Compares `analytic` against central differences of `loss` with step
/// `step`, perturbing one parameter at a time.
///
/// A coordinate is skipped when the central differences at `step` and
/// `step / 2` disagree by more than `1e-4` relative: the loss then has a
/// kink inside the stencil and the numeric derivative is meaningless.
/// Smooth coordinates agree far below that.
pub fn finite_difference_check<F>(
    params: &NetworkParams,
    analytic: &Gradients,
    step: f64,
    loss: F,
) -> Result<GradCheck>
where
    F: Fn(&NetworkParams) -> Result<f64>,
{
    if analytic.blocks.len() != params.layers().len() {
        return Err(Error::Consistency(
            "gradient blocks do not mirror the network layers".into(),
        ));
    }
    let eval = |p: &NetworkParams| -> Result<f64> {
        let v = loss(p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("loss evaluated to {v}")))
        }
    };
    eval(params)?;

    let mut probe = params.clone();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (li, block) in analytic.blocks.iter().enumerate() {
        if block.len() != params.layers()[li].params.len() {
            return Err(Error::Consistency(format!(
                "gradient block {li} has {} entries, parameters have {}",
                block.len(),
                params.layers()[li].params.len()
            )));
        }
        for (ci, &a) in block.iter().enumerate() {
            let mut central = |h: f64| -> Result<f64> {
                let original = *coordinate(&mut probe, li, ci);
                *coordinate(&mut probe, li, ci) = original + h;
                let plus = eval(&probe)?;
                *coordinate(&mut probe, li, ci) = original - h;
                let minus = eval(&probe)?;
                *coordinate(&mut probe, li, ci) = original;
                Ok((plus - minus) / (2.0 * h))
            };
            let numeric = central(step)?;
            let half = central(step / 2.0)?;
            if relative_error(numeric, half) > 1e-4 {
                report.skipped += 1;
                continue;
            }
            report.checked += 1;
            report.max_rel_error = report.max_rel_error.max(relative_error(a, numeric));
        }
    }
    Ok(report)
}

fn coordinate(params: &mut NetworkParams, layer: usize, index: usize) -> &mut f64 {
    let block = &mut params.layers_mut()[layer].params;
    let nw = block.weights.len();
    if index < nw {
        &mut block.weights[index]
    } else {
        &mut block.bias[index - nw]
    }
}
