use serde::{Deserialize, Serialize};

use super::Segment;
use crate::net::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    #[default]
    Error,
    /// Keep the middle `n_pad` frames.
    CenterTruncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadConfig {
    pub n_pad: usize,
    #[serde(default)]
    pub overflow: OverflowPolicy,
}

impl Default for PadConfig {
    fn default() -> Self {
        Self {
            n_pad: 200,
            overflow: OverflowPolicy::Error,
        }
    }
}

impl PadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pad == 0 {
            return Err(Error::Config("n_pad must be >= 1".into()));
        }
        Ok(())
    }
}

/// Transposes a segment to `b × n_pad` and zero-fills the columns after
/// its last frame.
pub fn pad_segment(segment: &Segment, config: &PadConfig) -> Result<Matrix> {
    config.validate()?;
    let t = segment.num_frames();
    let n_pad = config.n_pad;
    let start = if t > n_pad {
        match config.overflow {
            OverflowPolicy::Error => {
                return Err(Error::Overflow {
                    label: segment.word_label.clone(),
                    frames: t,
                    n_pad,
                })
            }
            OverflowPolicy::CenterTruncate => (t - n_pad) / 2,
        }
    } else {
        0
    };
    let kept = t.min(n_pad);
    let b = segment.dim();
    let mut out = Matrix::zeros(b, n_pad);
    for j in 0..kept {
        let frame = segment.frames.row(start + j);
        for (c, &v) in frame.iter().enumerate() {
            out.set(c, j, v);
        }
    }
    Ok(out)
}
