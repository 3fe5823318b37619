//! The VAT1 binary tensor container.
//!
//! Layout, little-endian throughout, no padding, no checksum:
//!
//! ```text
//! magic   4 bytes  "VAT1" (0x56 0x41 0x54 0x31)
//! version u32      1
//! count   u32      number of tensors
//! per tensor:
//!   name_len u32
//!   name     name_len bytes (UTF-8, ASCII on write)
//!   ndim     u32
//!   dims     ndim x u64
//!   values   product(dims) x f32, row-major
//! ```
//!
//! Values are stored as f32; all computation upstream is f64, so the
//! precision loss happens exactly once at this boundary.

use std::fs;
use std::path::Path;

use crate::error::{BenchError, Result};
use vat_core::{make_instance, AttentionInstance, Matrix};

pub const MAGIC: [u8; 4] = *b"VAT1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<u64>,
    pub values: Vec<f32>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, dims: Vec<u64>, values: Vec<f32>) -> Self {
        NamedTensor {
            name: name.into(),
            dims,
            values,
        }
    }

    pub fn matrix(name: impl Into<String>, m: &Matrix) -> Self {
        NamedTensor {
            name: name.into(),
            dims: vec![m.rows() as u64, m.cols() as u64],
            values: m.data().iter().map(|&x| x as f32).collect(),
        }
    }

    pub fn scalar(name: impl Into<String>, value: f32) -> Self {
        NamedTensor {
            name: name.into(),
            dims: vec![1],
            values: vec![value],
        }
    }
}

fn checked_len(name: &str, dims: &[u64]) -> Result<usize> {
    let mut product: u64 = 1;
    for &d in dims {
        product = product
            .checked_mul(d)
            .ok_or_else(|| BenchError::DimOverflow {
                name: name.to_string(),
                dims: dims.to_vec(),
            })?;
    }
    usize::try_from(product).map_err(|_| BenchError::DimOverflow {
        name: name.to_string(),
        dims: dims.to_vec(),
    })
}

pub fn encode_tensors(tensors: &[NamedTensor]) -> Result<Vec<u8>> {
    let mut seen: Vec<&str> = Vec::new();
    for t in tensors {
        if !t.name.is_ascii() {
            return Err(BenchError::NonAsciiName(t.name.clone()));
        }
        if seen.contains(&t.name.as_str()) {
            return Err(BenchError::DuplicateName(t.name.clone()));
        }
        seen.push(&t.name);
        let want = checked_len(&t.name, &t.dims)?;
        if want != t.values.len() {
            return Err(BenchError::ValueCountMismatch {
                name: t.name.clone(),
                dims: t.dims.clone(),
                want,
                got: t.values.len(),
            });
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for &d in &t.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for &v in &t.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(BenchError::Truncated {
                needed: self.pos + n - self.bytes.len(),
                what: what.to_string(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn decode_tensors(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(BenchError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(BenchError::BadVersion(version));
    }
    let count = r.u32("tensor count")?;
    let mut tensors = Vec::with_capacity(count.min(1024) as usize);
    for idx in 0..count {
        let name_len = r.u32("name length")? as usize;
        let name_bytes = r.take(name_len, "tensor name")?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| BenchError::BadName)?
            .to_string();
        let ndim = r.u32("ndim")? as usize;
        let mut dims = Vec::with_capacity(ndim.min(64));
        for _ in 0..ndim {
            dims.push(r.u64("dimension")?);
        }
        let n_values = checked_len(&name, &dims)?;
        let byte_len = n_values
            .checked_mul(4)
            .ok_or_else(|| BenchError::DimOverflow {
                name: name.clone(),
                dims: dims.clone(),
            })?;
        let raw = r.take(byte_len, &format!("values of tensor {idx} ({name})"))?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        tensors.push(NamedTensor { name, dims, values });
    }
    if r.pos != bytes.len() {
        return Err(BenchError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(tensors)
}

pub fn write_tensors(path: impl AsRef<Path>, tensors: &[NamedTensor]) -> Result<()> {
    let bytes = encode_tensors(tensors)?;
    fs::write(path.as_ref(), bytes).map_err(|source| BenchError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })
}

pub fn read_tensors(path: impl AsRef<Path>) -> Result<Vec<NamedTensor>> {
    let bytes = fs::read(path.as_ref()).map_err(|source| BenchError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })?;
    decode_tensors(&bytes)
}

fn tensor_to_matrix(t: &NamedTensor) -> Result<Matrix> {
    if t.dims.len() != 2 {
        return Err(BenchError::NotAMatrix {
            name: t.name.clone(),
            ndim: t.dims.len(),
        });
    }
    let rows = t.dims[0] as usize;
    let cols = t.dims[1] as usize;
    let data: Vec<f64> = t.values.iter().map(|&x| x as f64).collect();
    Ok(Matrix::from_vec(rows, cols, data)?)
}

/// Build an attention instance from tensors named Q, K, V. The causal flag
/// comes from `causal_override` when given, else from an optional scalar
/// tensor named "causal" (nonzero means causal), else false.
pub fn instance_from_tensors(
    tensors: &[NamedTensor],
    causal_override: Option<bool>,
) -> Result<AttentionInstance> {
    let find = |name: &'static str| -> Result<&NamedTensor> {
        tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or(BenchError::MissingTensor(name))
    };
    let q = tensor_to_matrix(find("Q")?)?;
    let k = tensor_to_matrix(find("K")?)?;
    let v = tensor_to_matrix(find("V")?)?;
    let causal = causal_override.unwrap_or_else(|| {
        tensors
            .iter()
            .find(|t| t.name == "causal")
            .is_some_and(|t| t.values.first().is_some_and(|&x| x != 0.0))
    });
    Ok(make_instance(q, k, v, causal)?)
}

/// The tensors representing an instance: Q, K, V plus the causal marker.
pub fn tensors_from_instance(inst: &AttentionInstance) -> Vec<NamedTensor> {
    vec![
        NamedTensor::matrix("Q", inst.queries()),
        NamedTensor::matrix("K", inst.keys()),
        NamedTensor::matrix("V", inst.values()),
        NamedTensor::scalar("causal", if inst.causal() { 1.0 } else { 0.0 }),
    ]
}
