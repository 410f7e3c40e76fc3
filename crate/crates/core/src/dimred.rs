//! Linear discriminant analysis for compacting labelled embeddings.
//!
//! Model file layout (little-endian): `"AWEL"`, `u32 d_in`, `u32 d_out`,
//! `d_in × f64` mean, `d_in·d_out × f64` projection (row-major, one row per
//! input dimension), `d_out × f64` eigenvalues.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::embedding::EmbeddingSet;
use crate::{Error, Result};

pub const LDA_MAGIC: &[u8; 4] = b"AWEL";

/// Default ridge added to the within-class scatter, relative to its mean
/// eigenvalue.
pub const DEFAULT_SHRINKAGE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub d_in: usize,
    pub d_out: usize,
    pub mean: Vec<f64>,
    /// `d_in × d_out`, row-major; column `k` is the `k`-th discriminant.
    pub projection: Vec<f64>,
    /// Generalized eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl LdaModel {
    pub fn projection_column(&self, k: usize) -> Vec<f64> {
        (0..self.d_in)
            .map(|r| self.projection[r * self.d_out + k])
            .collect()
    }

    /// `projectionᵀ (x − mean)`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d_out];
        for (r, (&xv, &m)) in x.iter().zip(&self.mean).enumerate() {
            let c = xv - m;
            let row = &self.projection[r * self.d_out..(r + 1) * self.d_out];
            for (o, &p) in out.iter_mut().zip(row) {
                *o += p * c;
            }
        }
        out
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(LDA_MAGIC)?;
        w.write_u32::<LittleEndian>(self.d_in as u32)?;
        w.write_u32::<LittleEndian>(self.d_out as u32)?;
        for &v in self.mean.iter().chain(&self.projection).chain(&self.eigenvalues) {
            w.write_f64::<LittleEndian>(v)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let parse = |m: &str| Error::Parse {
            offset: 0,
            message: m.to_string(),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| parse("truncated magic"))?;
        if &magic != LDA_MAGIC {
            return Err(parse("bad LDA model magic"));
        }
        let d_in = r.read_u32::<LittleEndian>().map_err(|_| parse("truncated header"))? as usize;
        let d_out = r.read_u32::<LittleEndian>().map_err(|_| parse("truncated header"))? as usize;
        let mut read_vec = |n: usize| -> Result<Vec<f64>> {
            let mut v = vec![0.0; n];
            r.read_f64_into::<LittleEndian>(&mut v)
                .map_err(|_| parse("truncated LDA payload"))?;
            Ok(v)
        };
        let mean = read_vec(d_in)?;
        let projection = read_vec(d_in * d_out)?;
        let eigenvalues = read_vec(d_out)?;
        Ok(Self {
            d_in,
            d_out,
            mean,
            projection,
            eigenvalues,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Fits LDA on labelled embeddings.
///
/// The within-class scatter is regularized as `S_w + λ·tr(S_w)/d·I` and the
/// generalized problem `S_b v = μ S_w v` is solved by whitening with the
/// Cholesky factor of the regularized `S_w`. `target_dim` is clamped to
/// `min(d, classes − 1)`.
pub fn lda_fit(embeddings: &EmbeddingSet, target_dim: usize, shrinkage: f64) -> Result<LdaModel> {
    if target_dim == 0 {
        return Err(Error::Config("LDA target dimension must be >= 1".into()));
    }
    if !(shrinkage >= 0.0 && shrinkage.is_finite()) {
        return Err(Error::Config(format!("shrinkage must be >= 0, got {shrinkage}")));
    }
    let d = embeddings.dim();
    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in embeddings.labels().iter().enumerate() {
        classes.entry(l.as_str()).or_default().push(i);
    }
    if classes.len() < 2 {
        return Err(Error::Data(format!(
            "LDA needs at least 2 classes, got {}",
            classes.len()
        )));
    }
    if let Some((label, members)) = classes.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::Data(format!(
            "class '{label}' has {} sample(s); LDA needs at least 2 per class",
            members.len()
        )));
    }
    let max_dim = d.min(classes.len() - 1);
    let d_out = if target_dim > max_dim {
        log::warn!(
            "LDA target dimension {target_dim} clamped to {max_dim} ({} classes, input dimension {d})",
            classes.len()
        );
        max_dim
    } else {
        target_dim
    };

    let n = embeddings.len() as f64;
    let mut mean = DVector::<f64>::zeros(d);
    for v in embeddings.vectors() {
        mean += DVector::from_column_slice(v);
    }
    mean /= n;

    let mut sw = DMatrix::<f64>::zeros(d, d);
    let mut sb = DMatrix::<f64>::zeros(d, d);
    for members in classes.values() {
        let mut mu = DVector::<f64>::zeros(d);
        for &i in members {
            mu += DVector::from_column_slice(embeddings.vector(i));
        }
        mu /= members.len() as f64;
        for &i in members {
            let c = DVector::from_column_slice(embeddings.vector(i)) - &mu;
            sw.ger(1.0, &c, &c, 1.0);
        }
        let diff = &mu - &mean;
        sb.ger(members.len() as f64, &diff, &diff, 1.0);
    }

    let ridge = shrinkage * sw.trace() / d as f64;
    for k in 0..d {
        sw[(k, k)] += ridge;
    }
    let chol = sw.clone().cholesky().ok_or_else(|| {
        Error::Numeric("regularized within-class scatter is not positive definite".into())
    })?;
    let l = chol.l();
    // M = L⁻¹ S_b L⁻ᵀ
    let linv_sb = l
        .solve_lower_triangular(&sb)
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let m = l
        .solve_lower_triangular(&linv_sb.transpose())
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let lt = l.transpose();
    let mut projection = vec![0.0; d * d_out];
    let mut eigenvalues = Vec::with_capacity(d_out);
    for (k, &idx) in order.iter().take(d_out).enumerate() {
        let v = eig.eigenvectors.column(idx).into_owned();
        let mut w = lt
            .solve_upper_triangular(&v)
            .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
        if let Some(first) = w.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                w.neg_mut();
            }
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite LDA projection".into()));
        }
        for r in 0..d {
            projection[r * d_out + k] = w[r];
        }
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
    }

    Ok(LdaModel {
        d_in: d,
        d_out,
        mean: mean.iter().copied().collect(),
        projection,
        eigenvalues,
    })
}

pub fn lda_transform(model: &LdaModel, embeddings: &EmbeddingSet) -> Result<EmbeddingSet> {
    if embeddings.dim() != model.d_in {
        return Err(Error::Dimension(format!(
            "LDA model expects dimension {}, embeddings have {}",
            model.d_in,
            embeddings.dim()
        )));
    }
    embeddings.map(model.d_out, |x| model.project(x))
}
