use rayon::prelude::*;

use super::{dtw_distance, ScoredPair, ScoredPairList};
use crate::data::SegmentArchive;
use crate::embedding::EmbeddingSet;
use crate::losses::{distance, Distance, MIN_NORM};
use crate::{Error, Result};

/// Scores every unordered pair `(i, j)`, `i < j`, with `score(i, j)`.
/// Rows run in parallel; output order is fixed.
fn score_all<F>(n: usize, same: impl Fn(usize, usize) -> bool + Sync, score: F) -> Result<ScoredPairList>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    if n < 2 {
        return Err(Error::Data(format!(
            "same-different scoring needs at least 2 segments, got {n}"
        )));
    }
    let rows: Vec<Vec<ScoredPair>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    Ok(ScoredPair {
                        distance: score(i, j)?,
                        same: same(i, j),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(ScoredPairList {
        num_segments: n,
        pairs: rows.into_iter().flatten().collect(),
    })
}

/// Embedding-space distances for all pairs (cosine by default).
pub fn score_pairs(embeddings: &EmbeddingSet, kind: Distance) -> Result<ScoredPairList> {
    if kind == Distance::Cosine {
        for (i, v) in embeddings.vectors().iter().enumerate() {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm >= MIN_NORM) {
                return Err(Error::Degenerate {
                    norm,
                    context: format!("for segment {i} ('{}')", embeddings.label(i)),
                });
            }
        }
    }
    score_all(
        embeddings.len(),
        |i, j| embeddings.label(i) == embeddings.label(j),
        |i, j| distance(kind, embeddings.vector(i), embeddings.vector(j)),
    )
}

pub fn score_pairs_cosine(embeddings: &EmbeddingSet) -> Result<ScoredPairList> {
    score_pairs(embeddings, Distance::Cosine)
}

/// Frame-level DTW distances for all pairs of (unpadded) segments.
pub fn score_pairs_dtw(archive: &SegmentArchive) -> Result<ScoredPairList> {
    score_all(
        archive.len(),
        |i, j| archive.get(i).word_label == archive.get(j).word_label,
        |i, j| dtw_distance(&archive.get(i).frames, &archive.get(j).frames),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::extract_same_pairs;
    use crate::data::Segment;
    use crate::eval::average_precision;
    use crate::net::Matrix;

    #[test]
    fn three_segments_three_pairs() {
        let e = EmbeddingSet::from_parts(
            2,
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec!["a".into(), "a".into(), "b".into()],
        )
        .unwrap();
        let scored = score_pairs_cosine(&e).unwrap();
        assert_eq!(scored.pairs.len(), 3);
        assert_eq!(scored.pairs[0], ScoredPair { distance: 0.0, same: true });
        assert!(!scored.pairs[1].same && !scored.pairs[2].same);
    }

    #[test]
    fn same_flags_agree_with_pair_extraction() {
        let labels = ["a", "b", "a", "c", "b", "a", "d"];
        let vectors: Vec<Vec<f64>> = (0..labels.len())
            .map(|i| vec![1.0 + i as f64, (i * i) as f64 * 0.1 - 1.0])
            .collect();
        let e = EmbeddingSet::from_parts(
            2,
            vectors.clone(),
            labels.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        let archive = SegmentArchive::from_segments(
            2,
            vectors
                .into_iter()
                .zip(labels)
                .map(|(v, l)| Segment::new(l, "g", Matrix::from_vec(1, 2, v)))
                .collect(),
        )
        .unwrap();
        assert_eq!(
            score_pairs_cosine(&e).unwrap().num_same(),
            extract_same_pairs(&archive).len()
        );
    }

    #[test]
    fn degenerate_embedding_names_segment() {
        let e = EmbeddingSet::from_parts(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            vec!["a".into(), "zero".into()],
        )
        .unwrap();
        match score_pairs_cosine(&e) {
            Err(Error::Degenerate { context, .. }) => assert!(context.contains("zero")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rescaling_embeddings_keeps_ap() {
        let vectors: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos(), 0.3 * (i % 3) as f64])
            .collect();
        let labels: Vec<String> = (0..12).map(|i| format!("w{}", i % 4)).collect();
        let e = EmbeddingSet::from_parts(3, vectors.clone(), labels.clone()).unwrap();
        let scaled = EmbeddingSet::from_parts(
            3,
            vectors
                .iter()
                .enumerate()
                .map(|(i, v)| v.iter().map(|x| x * (0.5 + i as f64)).collect())
                .collect(),
            labels,
        )
        .unwrap();
        let a = average_precision(&score_pairs_cosine(&e).unwrap()).unwrap().ap;
        let b = average_precision(&score_pairs_cosine(&scaled).unwrap()).unwrap().ap;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dtw_ranks_identical_pair_first() {
        let x = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.5, 0.9], vec![-0.3, 1.0]]);
        let y = Matrix::from_rows(&[vec![-1.0, 0.4], vec![0.1, -0.8]]);
        let archive = SegmentArchive::from_segments(
            2,
            vec![
                Segment::new("a", "g", x.clone()),
                Segment::new("b", "g", y),
                Segment::new("a", "g", x),
            ],
        )
        .unwrap();
        let scored = score_pairs_dtw(&archive).unwrap();
        let best = scored
            .pairs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance.total_cmp(&b.1.distance))
            .unwrap();
        // pair order: (0,1), (0,2), (1,2)
        assert_eq!(best.0, 1);
        assert!(best.1.same);
    }
}
