//! Binary segment archive.
//!
//! Little-endian layout:
//!
//! ```text
//! "AWE1"                      magic
//! u32                         segment count
//! u32                         frame dimension b
//! per segment:
//!   u16 + UTF-8               word label
//!   u16 + UTF-8               group id
//!   u32                       frame count T
//!   T·b × f32                 frames, frame-major
//! ```
//!
//! Values are widened to `f64` on load and narrowed back to `f32` on write.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Segment, SegmentArchive};
use crate::net::Matrix;
use crate::{Error, Result};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"AWE1";

/// Counts consumed bytes so parse errors can report an offset.
struct Counting<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Read for Counting<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.offset += n as u64;
        Ok(n)
    }
}

impl<R: Read> Counting<R> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.offset,
            message: message.into(),
        })
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        match self.read_u16::<LittleEndian>() {
            Ok(v) => Ok(v),
            Err(_) => self.fail(format!("truncated while reading {what}")),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        match self.read_u32::<LittleEndian>() {
            Ok(v) => Ok(v),
            Err(_) => self.fail(format!("truncated while reading {what}")),
        }
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let start = self.offset;
        let mut bytes = vec![0u8; len];
        if self.read_exact(&mut bytes).is_err() {
            return self.fail(format!("truncated while reading {what}"));
        }
        String::from_utf8(bytes).map_err(|_| Error::Parse {
            offset: start,
            message: format!("{what} is not valid UTF-8"),
        })
    }
}

pub fn read_archive<R: Read>(reader: R) -> Result<SegmentArchive> {
    let mut r = Counting {
        inner: reader,
        offset: 0,
    };
    let mut magic = [0u8; 4];
    if r.read_exact(&mut magic).is_err() {
        return r.fail("truncated magic");
    }
    if &magic != ARCHIVE_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad magic {magic:?}, expected {ARCHIVE_MAGIC:?}"),
        });
    }
    let count = r.u32("segment count")? as usize;
    let dim = r.u32("frame dimension")? as usize;
    let mut archive = SegmentArchive::new(dim);
    for i in 0..count {
        let label = r.string("word label")?;
        let group = r.string("group id")?;
        let frames_at = r.offset;
        let t = r.u32("frame count")? as usize;
        if t == 0 {
            return Err(Error::Parse {
                offset: frames_at,
                message: format!("segment {i} has zero frames"),
            });
        }
        let mut values = vec![0f32; t * dim];
        if r.read_f32_into::<LittleEndian>(&mut values).is_err() {
            return r.fail(format!("truncated frames of segment {i}"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                offset: frames_at,
                message: format!("segment {i} contains non-finite values"),
            });
        }
        let frames = Matrix::from_vec(t, dim, values.into_iter().map(f64::from).collect());
        archive.push(Segment::new(label, group, frames))?;
    }
    let mut trailing = [0u8; 1];
    if matches!(r.read(&mut trailing), Ok(n) if n > 0) {
        return r.fail("trailing bytes after last segment");
    }
    Ok(archive)
}

pub fn write_archive<W: Write>(archive: &SegmentArchive, mut w: W) -> Result<()> {
    let dim = archive.dim();
    w.write_all(ARCHIVE_MAGIC)?;
    w.write_u32::<LittleEndian>(u32_len(archive.len(), "segment count")?)?;
    w.write_u32::<LittleEndian>(u32_len(dim, "frame dimension")?)?;
    for seg in archive.iter() {
        if seg.dim() != dim {
            return Err(Error::Data(format!(
                "segment '{}' has frame dimension {}, archive has {dim}",
                seg.word_label,
                seg.dim()
            )));
        }
        write_str(&mut w, &seg.word_label)?;
        write_str(&mut w, &seg.group_id)?;
        w.write_u32::<LittleEndian>(u32_len(seg.num_frames(), "frame count")?)?;
        for &v in seg.frames.as_slice() {
            w.write_f32::<LittleEndian>(v as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn archive_to_bytes(archive: &SegmentArchive) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_archive(archive, &mut buf)?;
    Ok(buf)
}

pub fn load_archive(path: impl AsRef<std::path::Path>) -> Result<SegmentArchive> {
    let file = std::fs::File::open(path)?;
    read_archive(std::io::BufReader::new(file))
}

pub fn save_archive(archive: &SegmentArchive, path: impl AsRef<std::path::Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_archive(archive, std::io::BufWriter::new(file))
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let len = u16::try_from(s.len())
        .map_err(|_| Error::Data(format!("string of {} bytes exceeds u16 length", s.len())))?;
    w.write_u16::<LittleEndian>(len)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn u32_len(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Data(format!("{what} {n} exceeds u32")))
}
