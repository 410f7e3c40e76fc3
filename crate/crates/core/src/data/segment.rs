use crate::net::Matrix;
use crate::{Error, Result};

/// One word token: its word-type label, the recording group it came from,
/// and its `T × b` frames (one row per frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub word_label: String,
    pub group_id: String,
    pub frames: Matrix,
}

impl Segment {
    pub fn new(word_label: impl Into<String>, group_id: impl Into<String>, frames: Matrix) -> Self {
        Self {
            word_label: word_label.into(),
            group_id: group_id.into(),
            frames,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

/// Ordered segments sharing one frame dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentArchive {
    dim: usize,
    segments: Vec<Segment>,
}

impl SegmentArchive {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            segments: Vec::new(),
        }
    }

    pub fn from_segments(dim: usize, segments: Vec<Segment>) -> Result<Self> {
        let mut archive = Self::new(dim);
        for s in segments {
            archive.push(s)?;
        }
        Ok(archive)
    }

    pub fn push(&mut self, segment: Segment) -> Result<()> {
        if segment.dim() != self.dim {
            return Err(Error::Data(format!(
                "segment '{}' has frame dimension {}, archive has {}",
                segment.word_label,
                segment.dim(),
                self.dim
            )));
        }
        if segment.num_frames() == 0 {
            return Err(Error::Data(format!(
                "segment '{}' has no frames",
                segment.word_label
            )));
        }
        if !segment.frames.is_finite() {
            return Err(Error::Data(format!(
                "segment '{}' contains non-finite values",
                segment.word_label
            )));
        }
        self.segments.push(segment);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn get(&self, i: usize) -> &Segment {
        &self.segments[i]
    }

    pub fn labels(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.word_label.as_str()).collect()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Segment> {
        self.segments.iter()
    }

    pub(crate) fn segments_mut(&mut self) -> &mut [Segment] {
        &mut self.segments
    }

    /// Archive holding only the segments at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            segments: indices.iter().map(|&i| self.segments[i].clone()).collect(),
        }
    }
}
