use serde::Serialize;

use crate::{Error, Result};

/// Distance between two segments and whether they share a word type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredPair {
    pub distance: f64,
    pub same: bool,
}

/// All unordered segment pairs, in `(i, j)`, `i < j` row-major order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredPairList {
    pub num_segments: usize,
    pub pairs: Vec<ScoredPair>,
}

impl ScoredPairList {
    pub fn num_same(&self) -> usize {
        self.pairs.iter().filter(|p| p.same).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision-recall sweep over distance thresholds, one point per distinct
/// distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub ap: f64,
}

/// Area under the precision-recall curve obtained by sweeping a distance
/// threshold upward over all pairs.
///
/// Pairs at identical distances cross the threshold together, so the
/// result does not depend on input order. Each threshold contributes
/// `precision · Δrecall`; with unique distances this is the mean precision
/// at the rank of each same-type pair.
pub fn average_precision(scored: &ScoredPairList) -> Result<PrCurve> {
    let positives = scored.num_same();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    if let Some(p) = scored.pairs.iter().find(|p| !p.distance.is_finite()) {
        return Err(Error::Numeric(format!("non-finite pair distance {}", p.distance)));
    }
    let mut order: Vec<&ScoredPair> = scored.pairs.iter().collect();
    order.sort_by(|a, b| a.distance.total_cmp(&b.distance));

    let total = positives as f64;
    let mut points = Vec::new();
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = order[i].distance;
        while i < order.len() && order[i].distance == threshold {
            tp += usize::from(order[i].same);
            seen += 1;
            i += 1;
        }
        let precision = tp as f64 / seen as f64;
        let recall = tp as f64 / total;
        ap += precision * (recall - prev_recall);
        prev_recall = recall;
        points.push(PrPoint {
            threshold,
            precision,
            recall,
        });
    }
    Ok(PrCurve { points, ap })
}
