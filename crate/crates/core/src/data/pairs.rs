use std::collections::BTreeMap;

use rand::Rng;

use super::SegmentArchive;
use crate::{Error, Result};

/// Unordered same-type segment index pairs `(m, n)` with `m < n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSet {
    pub pairs: Vec<(usize, usize)>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks the pair invariants against `archive`.
    pub fn validate(&self, archive: &SegmentArchive) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for &(m, n) in &self.pairs {
            if m >= n || n >= archive.len() {
                return Err(Error::Data(format!("invalid pair ({m}, {n})")));
            }
            if archive.get(m).word_label != archive.get(n).word_label {
                return Err(Error::Data(format!("pair ({m}, {n}) mixes word types")));
            }
            if !seen.insert((m, n)) {
                return Err(Error::Data(format!("duplicate pair ({m}, {n})")));
            }
        }
        Ok(())
    }
}

/// `(anchor, same, different)` segment indices.
pub type Triplet = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TripletBatch {
    pub triplets: Vec<Triplet>,
}

/// Every unordered pair of segments that share a word label, in
/// lexicographic `(m, n)` order.
pub fn extract_same_pairs(archive: &SegmentArchive) -> PairSet {
    let labels = archive.labels();
    let mut pairs = Vec::new();
    for m in 0..labels.len() {
        for n in m + 1..labels.len() {
            if labels[m] == labels[n] {
                pairs.push((m, n));
            }
        }
    }
    PairSet { pairs }
}

/// Indices grouped per label, used to draw negatives by label.
struct NegativeSampler {
    /// Segment indices in archive order.
    all: Vec<usize>,
    /// For each label, the sorted indices carrying it.
    by_label: BTreeMap<String, Vec<usize>>,
}

impl NegativeSampler {
    fn new(archive: &SegmentArchive) -> Self {
        let mut by_label: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in archive.iter().enumerate() {
            by_label.entry(s.word_label.clone()).or_default().push(i);
        }
        Self {
            all: (0..archive.len()).collect(),
            by_label,
        }
    }

    /// Uniform draw from the segments whose label differs from `label`.
    fn draw<R: Rng + ?Sized>(&self, label: &str, rng: &mut R) -> Result<usize> {
        let own = self.by_label.get(label).map_or(&[][..], Vec::as_slice);
        let available = self.all.len() - own.len();
        if available == 0 {
            return Err(Error::Data(format!(
                "no segment with a label other than '{label}' to use as a negative"
            )));
        }
        // k-th index not carrying `label`: walk past the excluded ones.
        let mut k = rng.random_range(0..available);
        for &excluded in own {
            if excluded <= k {
                k += 1;
            } else {
                break;
            }
        }
        Ok(self.all[k])
    }
}

/// One triplet per pair: the pair supplies anchor and same-type segment,
/// the negative is uniform over segments with a different label.
pub fn sample_triplets<R: Rng + ?Sized>(
    pairs: &PairSet,
    archive: &SegmentArchive,
    rng: &mut R,
) -> Result<TripletBatch> {
    let sampler = NegativeSampler::new(archive);
    if sampler.by_label.len() < 2 {
        return Err(Error::Data(
            "at least two word types are needed to draw negatives".into(),
        ));
    }
    let triplets = pairs
        .pairs
        .iter()
        .map(|&(a, s)| {
            let label = &archive.get(a).word_label;
            Ok((a, s, sampler.draw(label, rng)?))
        })
        .collect::<Result<_>>()?;
    Ok(TripletBatch { triplets })
}

/// For each same pair, one different-type pair `(anchor, negative)`.
pub fn sample_different_pairs<R: Rng + ?Sized>(
    pairs: &PairSet,
    archive: &SegmentArchive,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    Ok(sample_triplets(pairs, archive, rng)?
        .triplets
        .into_iter()
        .map(|(a, _, n)| (a, n))
        .collect())
}
