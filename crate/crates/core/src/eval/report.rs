use std::io::Write;

use byteorder::{LittleEndian, WriteBytesExt};

use super::{average_precision, score_pairs, score_pairs_dtw, PrCurve, ScoredPairList};
use crate::data::SegmentArchive;
use crate::embedding::EmbeddingSet;
use crate::losses::Distance;
use crate::Result;

/// What to compare in the same-different task.
#[derive(Debug, Clone, Copy)]
pub enum SameDifferentInput<'a> {
    /// Fixed-dimensional embeddings compared with the given distance.
    Embeddings(&'a EmbeddingSet, Distance),
    /// Raw frame sequences compared with DTW.
    Frames(&'a SegmentArchive),
}

#[derive(Debug, Clone)]
pub struct SameDifferentReport {
    pub mode: &'static str,
    pub scored: ScoredPairList,
    pub curve: PrCurve,
}

impl SameDifferentReport {
    pub fn num_pairs(&self) -> usize {
        self.scored.pairs.len()
    }

    pub fn num_same(&self) -> usize {
        self.scored.num_same()
    }

    pub fn ap(&self) -> f64 {
        self.curve.ap
    }

    pub fn write_summary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mode: {}", self.mode)?;
        writeln!(w, "segments: {}", self.scored.num_segments)?;
        writeln!(w, "pairs: {}", self.num_pairs())?;
        writeln!(w, "same pairs: {}", self.num_same())?;
        writeln!(w, "different pairs: {}", self.num_pairs() - self.num_same())?;
        writeln!(w, "AP = {:.6}", self.ap())?;
        Ok(())
    }

    /// `threshold,precision,recall`, one row per distinct distance.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "threshold,precision,recall")?;
        for p in &self.curve.points {
            writeln!(w, "{},{},{}", p.threshold, p.precision, p.recall)?;
        }
        Ok(())
    }

    /// Binary dump: `u32 n`, then `n(n−1)/2` records of `f64` distance and
    /// `u8` same-type flag, in `(i, j)`, `i < j` order.
    pub fn write_pair_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_u32::<LittleEndian>(self.scored.num_segments as u32)?;
        for p in &self.scored.pairs {
            w.write_f64::<LittleEndian>(p.distance)?;
            w.write_u8(u8::from(p.same))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the same-different task on embeddings or frames.
pub fn same_different_report(input: SameDifferentInput<'_>) -> Result<SameDifferentReport> {
    let (mode, scored) = match input {
        SameDifferentInput::Embeddings(e, Distance::Cosine) => ("cosine", score_pairs(e, Distance::Cosine)?),
        SameDifferentInput::Embeddings(e, Distance::Euclidean) => {
            ("euclidean", score_pairs(e, Distance::Euclidean)?)
        }
        SameDifferentInput::Frames(a) => ("dtw", score_pairs_dtw(a)?),
    };
    let curve = average_precision(&scored)?;
    Ok(SameDifferentReport {
        mode,
        scored,
        curve,
    })
}
