//! Cosine distance and the training objectives, with analytic gradients.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Vectors with a smaller norm are rejected as degenerate.
pub const MIN_NORM: f64 = 1e-12;

/// Smallest probability fed to `ln` by the cross-entropy loss.
pub const MIN_PROB: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    #[serde(rename = "coscos2")]
    CosCos2,
    CosHinge,
}

/// Distance used by the hinge loss and by pair scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Hinge margin; present exactly when `kind` is `CosHinge`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default)]
    pub distance: Distance,
}

impl LossConfig {
    pub fn cross_entropy() -> Self {
        Self {
            kind: LossKind::CrossEntropy,
            margin: None,
            distance: Distance::Cosine,
        }
    }

    pub fn coscos2() -> Self {
        Self {
            kind: LossKind::CosCos2,
            margin: None,
            distance: Distance::Cosine,
        }
    }

    pub fn cos_hinge(margin: f64) -> Self {
        Self {
            kind: LossKind::CosHinge,
            margin: Some(margin),
            distance: Distance::Cosine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.margin) {
            (LossKind::CosHinge, Some(m)) if (0.0..=1.0).contains(&m) => Ok(()),
            (LossKind::CosHinge, Some(m)) => {
                Err(Error::Config(format!("margin must lie in [0,1], got {m}")))
            }
            (LossKind::CosHinge, None) => Err(Error::Config("cos-hinge loss needs a margin".into())),
            (_, Some(_)) => Err(Error::Config(format!(
                "margin only applies to the cos-hinge loss, not {:?}",
                self.kind
            ))),
            (_, None) => Ok(()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_pair(x1: &[f64], x2: &[f64]) -> Result<(f64, f64)> {
    if x1.len() != x2.len() {
        return Err(Error::Dimension(format!(
            "vectors of length {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    let (n1, n2) = (norm(x1), norm(x2));
    for n in [n1, n2] {
        if !(n >= MIN_NORM) {
            return Err(Error::Degenerate {
                norm: n,
                context: "in cosine computation".into(),
            });
        }
    }
    Ok((n1, n2))
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_similarity(x1: &[f64], x2: &[f64]) -> Result<f64> {
    let (n1, n2) = check_pair(x1, x2)?;
    Ok((dot(x1, x2) / (n1 * n2)).clamp(-1.0, 1.0))
}

/// `(1 − cos(x1, x2)) / 2`: 0 for parallel, 0.5 for orthogonal, 1 for
/// anti-parallel vectors.
pub fn cosine_distance(x1: &[f64], x2: &[f64]) -> Result<f64> {
    Ok((1.0 - cosine_similarity(x1, x2)?) / 2.0)
}

pub fn euclidean_distance(x1: &[f64], x2: &[f64]) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::Dimension(format!(
            "vectors of length {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    Ok(x1
        .iter()
        .zip(x2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

pub fn distance(kind: Distance, x1: &[f64], x2: &[f64]) -> Result<f64> {
    match kind {
        Distance::Cosine => cosine_distance(x1, x2),
        Distance::Euclidean => euclidean_distance(x1, x2),
    }
}

/// Cosine similarity and its gradients with respect to both arguments.
fn cosine_with_grad(x1: &[f64], x2: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (n1, n2) = check_pair(x1, x2)?;
    let c = dot(x1, x2) / (n1 * n2);
    let g1 = x1
        .iter()
        .zip(x2)
        .map(|(a, b)| b / (n1 * n2) - c * a / (n1 * n1))
        .collect();
    let g2 = x1
        .iter()
        .zip(x2)
        .map(|(a, b)| a / (n1 * n2) - c * b / (n2 * n2))
        .collect();
    Ok((c, g1, g2))
}

/// Distance and its gradients with respect to both arguments.
pub fn distance_with_grad(
    kind: Distance,
    x1: &[f64],
    x2: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    match kind {
        Distance::Cosine => {
            let (c, mut g1, mut g2) = cosine_with_grad(x1, x2)?;
            g1.iter_mut().chain(g2.iter_mut()).for_each(|v| *v *= -0.5);
            Ok(((1.0 - c.clamp(-1.0, 1.0)) / 2.0, g1, g2))
        }
        Distance::Euclidean => {
            let d = euclidean_distance(x1, x2)?;
            if d == 0.0 {
                return Ok((0.0, vec![0.0; x1.len()], vec![0.0; x2.len()]));
            }
            let g1: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| (a - b) / d).collect();
            let g2 = g1.iter().map(|v| -v).collect();
            Ok((d, g1, g2))
        }
    }
}

/// `(1 − cos)/2` for same-type pairs and `cos²` for different-type pairs.
pub fn coscos2_loss(x1: &[f64], x2: &[f64], same: bool) -> Result<f64> {
    let c = cosine_similarity(x1, x2)?;
    Ok(if same { (1.0 - c) / 2.0 } else { c * c })
}

/// Loss value and gradients for [`coscos2_loss`].
pub fn coscos2_grad(x1: &[f64], x2: &[f64], same: bool) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (c, mut g1, mut g2) = cosine_with_grad(x1, x2)?;
    let (loss, factor) = if same {
        ((1.0 - c.clamp(-1.0, 1.0)) / 2.0, -0.5)
    } else {
        (c * c, 2.0 * c)
    };
    g1.iter_mut().chain(g2.iter_mut()).for_each(|v| *v *= factor);
    Ok((loss, g1, g2))
}

/// `max{0, m + d(x1, x2) − d(x1, x3)}` with `x1`/`x2` of the same type and
/// `x1`/`x3` of different types.
pub fn cos_hinge_loss(x1: &[f64], x2: &[f64], x3: &[f64], margin: f64) -> Result<f64> {
    hinge_loss(Distance::Cosine, x1, x2, x3, margin)
}

pub fn hinge_loss(kind: Distance, x1: &[f64], x2: &[f64], x3: &[f64], margin: f64) -> Result<f64> {
    let d12 = distance(kind, x1, x2)?;
    let d13 = distance(kind, x1, x3)?;
    Ok((margin + d12 - d13).max(0.0))
}

/// Gradients of a triplet hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletGrad {
    pub loss: f64,
    pub anchor: Vec<f64>,
    pub same: Vec<f64>,
    pub different: Vec<f64>,
}

/// Loss and gradients of the hinge loss. The gradient is zero whenever the
/// hinge argument is not strictly positive.
pub fn hinge_grad(
    kind: Distance,
    x1: &[f64],
    x2: &[f64],
    x3: &[f64],
    margin: f64,
) -> Result<TripletGrad> {
    let (d12, g1a, g2) = distance_with_grad(kind, x1, x2)?;
    let (d13, g1b, g3) = distance_with_grad(kind, x1, x3)?;
    let arg = margin + d12 - d13;
    if arg <= 0.0 {
        let z = vec![0.0; x1.len()];
        return Ok(TripletGrad {
            loss: 0.0,
            anchor: z.clone(),
            same: z.clone(),
            different: z,
        });
    }
    Ok(TripletGrad {
        loss: arg,
        anchor: g1a.iter().zip(&g1b).map(|(a, b)| a - b).collect(),
        same: g2,
        different: g3.into_iter().map(|v| -v).collect(),
    })
}

/// `−ln p[target]`, with `p[target]` clamped to [`MIN_PROB`].
pub fn cross_entropy_loss(predicted: &[f64], target: usize) -> Result<f64> {
    let p = *predicted.get(target).ok_or_else(|| {
        Error::Dimension(format!(
            "target class {target} out of range for {} outputs",
            predicted.len()
        ))
    })?;
    if p < MIN_PROB {
        log::warn!("predicted probability {p:e} for class {target} clamped to {MIN_PROB:e}");
    }
    Ok(-p.max(MIN_PROB).ln())
}

/// Gradient of cross-entropy composed with softmax, taken with respect to
/// the logits: `p − one_hot(target)`.
pub fn softmax_cross_entropy_grad(predicted: &[f64], target: usize) -> Result<Vec<f64>> {
    if target >= predicted.len() {
        return Err(Error::Dimension(format!(
            "target class {target} out of range for {} outputs",
            predicted.len()
        )));
    }
    let mut g = predicted.to_vec();
    g[target] -= 1.0;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::softmax;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn central_diff<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
        let h = 1e-5;
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    fn assert_grad_close(analytic: &[f64], numeric: &[f64]) {
        for (a, n) in analytic.iter().zip(numeric) {
            let rel = (a - n).abs() / (a.abs() + n.abs()).max(1e-12);
            assert!(rel < 1e-6 || (a - n).abs() < 1e-9, "analytic {a} numeric {n}");
        }
    }

    #[test]
    fn cosine_distance_reference_points() {
        assert_relative_eq!(
            cosine_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_vectors_rejected() {
        assert!(matches!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::Degenerate { .. })
        ));
        assert!(matches!(
            coscos2_loss(&[1.0, 0.0], &[1e-13, 0.0], true),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn coscos2_reference_points() {
        let a = [0.3, -1.2, 2.0];
        assert_relative_eq!(coscos2_loss(&a, &a, true).unwrap(), 0.0, epsilon = 1e-15);
        assert_eq!(coscos2_loss(&[1.0, 0.0], &[0.0, 1.0], false).unwrap(), 0.0);
        assert_relative_eq!(coscos2_loss(&a, &a, false).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(coscos2_loss(&[1.0, 0.0], &[0.0, 1.0], true).unwrap(), 0.5);
    }

    #[test]
    fn hinge_reference_points() {
        let m = 0.15;
        // d12 = 0, d13 = 0.5
        assert_eq!(cos_hinge_loss(&[1.0, 0.0], &[2.0, 0.0], &[0.0, 1.0], m).unwrap(), 0.0);
        // d12 = d13 = 0.5
        assert_relative_eq!(
            cos_hinge_loss(&[1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0], m).unwrap(),
            0.15,
            epsilon = 1e-15
        );
        // d12 = 0.4 (cos = 0.2), d13 = 0.1 (cos = 0.8)
        let x1 = [1.0, 0.0];
        let x2 = [0.2, (1.0f64 - 0.04).sqrt()];
        let x3 = [0.8, 0.6];
        assert_relative_eq!(
            cos_hinge_loss(&x1, &x2, &x3, m).unwrap(),
            0.45,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cross_entropy_reference_points() {
        assert_relative_eq!(
            cross_entropy_loss(&[0.5, 0.5], 0).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_eq!(cross_entropy_loss(&[0.0, 1.0, 0.0], 1).unwrap(), 0.0);
        assert_relative_eq!(
            cross_entropy_loss(&[0.25, 0.75], 1).unwrap(),
            (4.0f64 / 3.0).ln(),
            epsilon = 1e-15
        );
        let clamped = cross_entropy_loss(&[1.0, 0.0], 1).unwrap();
        assert_relative_eq!(clamped, -MIN_PROB.ln());
        assert!(cross_entropy_loss(&[1.0], 3).is_err());
    }

    #[test]
    fn softmax_cross_entropy_gradient_matches_finite_differences() {
        let logits = [0.3, -1.1, 2.0, 0.4];
        let target = 2;
        let p = softmax(&logits);
        let g = softmax_cross_entropy_grad(&p, target).unwrap();
        let numeric = central_diff(|z| cross_entropy_loss(&softmax(z), target).unwrap(), &logits);
        assert_grad_close(&g, &numeric);
    }

    #[test]
    fn inactive_hinge_has_zero_gradient() {
        let g = hinge_grad(Distance::Cosine, &[1.0, 0.0], &[2.0, 0.1], &[-1.0, 0.2], 0.15).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g
            .anchor
            .iter()
            .chain(&g.same)
            .chain(&g.different)
            .all(|&v| v == 0.0));
    }

    #[test]
    fn loss_config_margin_contract() {
        assert!(LossConfig::cos_hinge(0.15).validate().is_ok());
        assert!(LossConfig::cos_hinge(1.5).validate().is_err());
        assert!(LossConfig::coscos2().validate().is_ok());
        let bad = LossConfig {
            kind: LossKind::CosCos2,
            margin: Some(0.1),
            distance: Distance::Cosine,
        };
        assert!(bad.validate().is_err());
        let bad = LossConfig {
            kind: LossKind::CosHinge,
            margin: None,
            distance: Distance::Cosine,
        };
        assert!(bad.validate().is_err());
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0f64..2.0, n).prop_filter("non-degenerate", |v| norm(v) > 0.1)
    }

    proptest! {
        #[test]
        fn cosine_distance_scale_invariant_and_symmetric(
            x in vec_strategy(5), y in vec_strategy(5), a in 0.01f64..100.0, b in 0.01f64..100.0,
        ) {
            let d = cosine_distance(&x, &y).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v * a).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * b).collect();
            prop_assert!((cosine_distance(&xs, &ys).unwrap() - d).abs() < 1e-12);
            prop_assert!((cosine_distance(&y, &x).unwrap() - d).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&d));
            for same in [true, false] {
                let l1 = coscos2_loss(&x, &y, same).unwrap();
                let l2 = coscos2_loss(&y, &x, same).unwrap();
                prop_assert!((l1 - l2).abs() < 1e-15);
                prop_assert!((0.0..=1.0).contains(&l1));
            }
        }

        #[test]
        fn hinge_range_and_monotonicity(d12 in 0.0f64..1.0, d13 in 0.0f64..1.0, step in 0.0f64..0.5) {
            let m = 0.15;
            let value = |a: f64, b: f64| (m + a - b).max(0.0);
            let v = value(d12, d13);
            prop_assert!((0.0..=m + 1.0).contains(&v));
            prop_assert!(value(d12 + step, d13) >= v);
            prop_assert!(value(d12, d13 + step) <= v);
        }

        #[test]
        fn coscos2_gradients_match_finite_differences(
            x in vec_strategy(4), y in vec_strategy(4), same in proptest::bool::ANY,
        ) {
            let (_, g1, g2) = coscos2_grad(&x, &y, same).unwrap();
            assert_grad_close(&g1, &central_diff(|v| coscos2_loss(v, &y, same).unwrap(), &x));
            assert_grad_close(&g2, &central_diff(|v| coscos2_loss(&x, v, same).unwrap(), &y));
        }

        #[test]
        fn hinge_gradients_match_finite_differences(
            x1 in vec_strategy(4), x2 in vec_strategy(4), x3 in vec_strategy(4),
            euclid in proptest::bool::ANY,
        ) {
            let kind = if euclid { Distance::Euclidean } else { Distance::Cosine };
            let m = 0.15;
            let g = hinge_grad(kind, &x1, &x2, &x3, m).unwrap();
            let arg = m + distance(kind, &x1, &x2).unwrap() - distance(kind, &x1, &x3).unwrap();
            prop_assume!(arg.abs() > 1e-4);
            assert_grad_close(&g.anchor, &central_diff(|v| hinge_loss(kind, v, &x2, &x3, m).unwrap(), &x1));
            assert_grad_close(&g.same, &central_diff(|v| hinge_loss(kind, &x1, v, &x3, m).unwrap(), &x2));
            assert_grad_close(&g.different, &central_diff(|v| hinge_loss(kind, &x1, &x2, v, m).unwrap(), &x3));
        }
    }
}
