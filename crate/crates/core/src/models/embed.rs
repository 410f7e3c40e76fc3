use rayon::prelude::*;

use super::{Model, Tap};
use crate::data::{pad_segment, PadConfig, SegmentArchive};
use crate::embedding::EmbeddingSet;
use crate::net::Matrix;
use crate::{Error, Result};

/// Embeds already padded inputs; `archive` supplies the labels.
pub(crate) fn embed_padded(
    model: &Model,
    inputs: &[Matrix],
    archive: &SegmentArchive,
    tap: Tap,
) -> Result<EmbeddingSet> {
    let depth = model.spec.tap_depth(tap)?;
    let width = model.spec.tap_width(tap)?;
    let vectors: Vec<Vec<f64>> = inputs
        .par_iter()
        .map(|x| Ok(model.params.output_at(x, depth)?.into_vec()))
        .collect::<Result<_>>()?;
    let labels = archive.iter().map(|s| s.word_label.clone()).collect();
    EmbeddingSet::from_parts(width, vectors, labels)
}

/// Maps every segment of `archive` to a fixed-dimensional vector read at
/// `tap`. Output order follows the archive.
pub fn embed(
    model: &Model,
    archive: &SegmentArchive,
    tap: Tap,
    pad: &PadConfig,
) -> Result<EmbeddingSet> {
    if archive.dim() != model.spec.input_dim || pad.n_pad != model.spec.n_pad {
        return Err(Error::Config(format!(
            "archive is {}-dimensional padded to {}, model expects {} × {}",
            archive.dim(),
            pad.n_pad,
            model.spec.input_dim,
            model.spec.n_pad
        )));
    }
    let inputs: Vec<Matrix> = archive
        .segments()
        .par_iter()
        .map(|s| pad_segment(s, pad))
        .collect::<Result<_>>()?;
    embed_padded(model, &inputs, archive, tap)
}
