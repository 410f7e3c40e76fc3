use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::losses::{
    coscos2_grad, coscos2_loss, cross_entropy_loss, distance, hinge_grad, hinge_loss,
    softmax_cross_entropy_grad, Distance, LossKind,
};
use crate::net::{finite_difference_check, GradCheck, LayerSpec, Matrix, NetworkParams};
use crate::Result;

/// Input shape of the networks in [`gradient_check_suite`].
pub const CHECK_INPUT: (usize, usize) = (5, 20);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckRecord {
    pub network: usize,
    pub loss: LossKind,
    pub num_params: usize,
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

fn random_input<R: Rng>(rng: &mut R) -> Matrix {
    let (b, n) = CHECK_INPUT;
    Matrix::from_vec(b, n, (0..b * n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Random conv → ReLU → max-pool → affine stack, with a softmax head when
/// `softmax` is set.
fn random_stack<R: Rng>(rng: &mut R, softmax: bool) -> Result<NetworkParams> {
    let mut layers = vec![
        LayerSpec::Conv1d {
            num_filters: rng.random_range(2..=4),
            filter_width: rng.random_range(2..=5),
        },
        LayerSpec::Relu,
        LayerSpec::MaxPool {
            pool_width: rng.random_range(2..=3),
        },
        LayerSpec::Affine {
            out_dim: rng.random_range(3..=6),
        },
    ];
    if softmax {
        layers.push(LayerSpec::Softmax);
    }
    let mut params = NetworkParams::init(CHECK_INPUT, &layers, rng)?;
    // non-zero biases so every bias coordinate is exercised
    for block in params.blocks_mut() {
        block
            .bias
            .iter_mut()
            .for_each(|b| *b = rng.random_range(-0.1..0.1));
    }
    Ok(params)
}

fn output(params: &NetworkParams, x: &Matrix) -> Result<Vec<f64>> {
    Ok(params.forward(x)?.output().as_slice().to_vec())
}

/// Checks analytic gradients of `count` random small networks against
/// central differences with step `step`, for each of the three losses.
pub fn gradient_check_suite(count: usize, seed: u64, step: f64) -> Result<Vec<GradCheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(3 * count);
    for network in 0..count {
        for loss in [LossKind::CrossEntropy, LossKind::CosCos2, LossKind::CosHinge] {
            let params = random_stack(&mut rng, loss == LossKind::CrossEntropy)?;
            let x: Vec<Matrix> = (0..3).map(|_| random_input(&mut rng)).collect();
            let report: GradCheck = match loss {
                LossKind::CrossEntropy => {
                    let classes = params.output_shape().0;
                    let target = rng.random_range(0..classes);
                    let trace = params.forward(&x[0])?;
                    let g = softmax_cross_entropy_grad(trace.output().as_slice(), target)?;
                    let depth = params.layers().len() - 1;
                    let (analytic, _) = params.backward_from(&trace, depth, &Matrix::column(g))?;
                    finite_difference_check(&params, &analytic, step, |p| {
                        cross_entropy_loss(&output(p, &x[0])?, target)
                    })?
                }
                LossKind::CosCos2 => {
                    let same = rng.random_bool(0.5);
                    let (ta, tb) = (params.forward(&x[0])?, params.forward(&x[1])?);
                    let (_, ga, gb) =
                        coscos2_grad(ta.output().as_slice(), tb.output().as_slice(), same)?;
                    let (mut analytic, _) = params.backward(&ta, &Matrix::column(ga))?;
                    analytic.add_assign(&params.backward(&tb, &Matrix::column(gb))?.0);
                    finite_difference_check(&params, &analytic, step, |p| {
                        coscos2_loss(&output(p, &x[0])?, &output(p, &x[1])?, same)
                    })?
                }
                LossKind::CosHinge => {
                    let traces: Vec<_> =
                        x.iter().map(|xi| params.forward(xi)).collect::<Result<_>>()?;
                    let outs: Vec<&[f64]> = traces.iter().map(|t| t.output().as_slice()).collect();
                    // keep the hinge active so the check is not vacuous
                    let base = distance(Distance::Cosine, outs[0], outs[1])?
                        - distance(Distance::Cosine, outs[0], outs[2])?;
                    let margin = 0.15f64.max(0.1 - base);
                    let g = hinge_grad(Distance::Cosine, outs[0], outs[1], outs[2], margin)?;
                    let mut analytic = params.backward(&traces[0], &Matrix::column(g.anchor))?.0;
                    analytic.add_assign(&params.backward(&traces[1], &Matrix::column(g.same))?.0);
                    analytic
                        .add_assign(&params.backward(&traces[2], &Matrix::column(g.different))?.0);
                    finite_difference_check(&params, &analytic, step, |p| {
                        hinge_loss(
                            Distance::Cosine,
                            &output(p, &x[0])?,
                            &output(p, &x[1])?,
                            &output(p, &x[2])?,
                            margin,
                        )
                    })?
                }
            };
            records.push(GradCheckRecord {
                network,
                loss,
                num_params: params.num_params(),
                max_rel_error: report.max_rel_error,
                checked: report.checked,
                skipped: report.skipped,
            });
        }
    }
    Ok(records)
}
