use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{Model, ModelSpec};
use crate::net::NetworkParams;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AWEC";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    spec: ModelSpec,
    vocabulary: Option<Vec<String>>,
}

impl Model {
    /// Magic, `u32` header length, JSON header, then every parameter block
    /// (weights then bias) as little-endian `f64` in layer order.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&Header {
            spec: self.spec.clone(),
            vocabulary: self.vocabulary.clone(),
        })?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_u32::<LittleEndian>(header.len() as u32)?;
        w.write_all(&header)?;
        for block in self.params.blocks() {
            for &v in block.iter() {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Parse {
                offset: 0,
                message: "not a model checkpoint".into(),
            });
        }
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut header = vec![0u8; len];
        r.read_exact(&mut header)?;
        let header: Header = serde_json::from_slice(&header)?;
        header.spec.check_shapes()?;
        let mut params = NetworkParams::zeroed(header.spec.input_shape(), &header.spec.layers)?;
        for block in params.blocks_mut() {
            for v in block.iter_mut() {
                *v = r.read_f64::<LittleEndian>()?;
                if !v.is_finite() {
                    return Err(Error::Numeric("non-finite parameter in checkpoint".into()));
                }
            }
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Parse {
                offset: (8 + len + 8 * params.num_params()) as u64,
                message: format!("{} trailing bytes after parameters", rest.len()),
            });
        }
        Ok(Model {
            spec: header.spec,
            params,
            vocabulary: header.vocabulary,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
