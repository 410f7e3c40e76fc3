//! Fixed-dimensional embeddings aligned with word labels.
//!
//! File layout (little-endian):
//!
//! ```text
//! "AWEE"            magic
//! u32               count n
//! u32               dimension d
//! per embedding:    u16 + UTF-8 label, then d × f64
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"AWEE";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_parts(dim: usize, vectors: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} vectors but {} labels",
                vectors.len(),
                labels.len()
            )));
        }
        let mut set = Self::new(dim);
        for (v, l) in vectors.into_iter().zip(labels) {
            set.push(v, l)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, vector: Vec<f64>, label: impl Into<String>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension(format!(
                "embedding of length {}, set dimension {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite embedding value".into()));
        }
        self.vectors.push(vector);
        self.labels.push(label.into());
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Applies `f` to every vector, keeping labels. `f` must return vectors
    /// of length `dim`.
    pub fn map(&self, dim: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        Self::from_parts(
            dim,
            self.vectors.iter().map(|v| f(v)).collect(),
            self.labels.clone(),
        )
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(EMBEDDING_MAGIC)?;
        w.write_u32::<LittleEndian>(self.len() as u32)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        for (v, l) in self.vectors.iter().zip(&self.labels) {
            let len = u16::try_from(l.len())
                .map_err(|_| Error::Data(format!("label of {} bytes too long", l.len())))?;
            w.write_u16::<LittleEndian>(len)?;
            w.write_all(l.as_bytes())?;
            for &x in v {
                w.write_f64::<LittleEndian>(x)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let parse = |message: &str| Error::Parse {
            offset: 0,
            message: message.to_string(),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| parse("truncated magic"))?;
        if &magic != EMBEDDING_MAGIC {
            return Err(parse("bad embedding magic"));
        }
        let n = r
            .read_u32::<LittleEndian>()
            .map_err(|_| parse("truncated count"))? as usize;
        let dim = r
            .read_u32::<LittleEndian>()
            .map_err(|_| parse("truncated dimension"))? as usize;
        let mut set = Self::new(dim);
        for i in 0..n {
            let len = r
                .read_u16::<LittleEndian>()
                .map_err(|_| parse("truncated label length"))? as usize;
            let mut bytes = vec![0u8; len];
            r.read_exact(&mut bytes)
                .map_err(|_| parse("truncated label"))?;
            let label = String::from_utf8(bytes).map_err(|_| parse("label is not UTF-8"))?;
            let mut v = vec![0.0; dim];
            r.read_f64_into::<LittleEndian>(&mut v)
                .map_err(|_| Error::Parse {
                    offset: 0,
                    message: format!("truncated vector {i}"),
                })?;
            set.push(v, label)?;
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
