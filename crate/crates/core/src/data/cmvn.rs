use std::collections::BTreeMap;

use super::SegmentArchive;

/// Pooled variance below which only the mean is removed.
pub const MIN_VARIANCE: f64 = 1e-8;

/// Per-group mean and variance normalization.
///
/// Frames of all segments sharing a `group_id` are pooled; each feature
/// coordinate is shifted to zero mean and scaled to unit variance
/// (population variance), unless its pooled variance is below
/// [`MIN_VARIANCE`].
pub fn cmvn_normalize(archive: &SegmentArchive) -> SegmentArchive {
    let dim = archive.dim();
    let mut stats: BTreeMap<&str, (usize, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for seg in archive.iter() {
        let entry = stats
            .entry(seg.group_id.as_str())
            .or_insert_with(|| (0, vec![0.0; dim], vec![0.0; dim]));
        for t in 0..seg.num_frames() {
            entry.0 += 1;
            for (m, &v) in entry.1.iter_mut().zip(seg.frames.row(t)) {
                *m += v;
            }
        }
    }
    for (count, sum, _) in stats.values_mut() {
        sum.iter_mut().for_each(|m| *m /= *count as f64);
    }
    // Second pass for the variance around the mean: numerically safer than
    // E[x²] − E[x]².
    for seg in archive.iter() {
        let (_, mean, var) = stats.get_mut(seg.group_id.as_str()).unwrap();
        for t in 0..seg.num_frames() {
            for ((s, &v), &m) in var.iter_mut().zip(seg.frames.row(t)).zip(mean.iter()) {
                *s += (v - m) * (v - m);
            }
        }
    }
    let scales: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = stats
        .iter()
        .map(|(g, (count, mean, var))| {
            let inv_std = var
                .iter()
                .map(|s| {
                    let v = s / *count as f64;
                    if v < MIN_VARIANCE {
                        1.0
                    } else {
                        1.0 / v.sqrt()
                    }
                })
                .collect();
            (*g, (mean.clone(), inv_std))
        })
        .collect();

    let mut out = archive.clone();
    for seg in out.segments_mut() {
        let (mean, inv_std) = &scales[seg.group_id.as_str()];
        for t in 0..seg.num_frames() {
            for ((v, m), s) in seg.frames.row_mut(t).iter_mut().zip(mean).zip(inv_std) {
                *v = (*v - m) * s;
            }
        }
    }
    out
}
