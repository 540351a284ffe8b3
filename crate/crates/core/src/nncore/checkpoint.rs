//! Flat binary tensor checkpoints.
//!
//! Layout: the 8 magic bytes `DARECNN1`, then for each tensor until end of
//! file: name length (`u32` LE), UTF-8 name bytes, rows (`u32` LE), cols
//! (`u32` LE), and `rows * cols` row-major `f64` LE values.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::matrix::DenseMatrix;
use super::mlp::Parameterized;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DARECNN1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub value: DenseMatrix,
}

pub fn encode(tensors: &[NamedTensor]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    for t in tensors {
        let name = t.name.as_bytes();
        let len = u32::try_from(name.len())
            .map_err(|_| Error::Checkpoint(format!("tensor name too long: {}", t.name)))?;
        let rows = u32::try_from(t.value.rows()).map_err(|_| Error::Checkpoint("too many rows".into()))?;
        let cols = u32::try_from(t.value.cols()).map_err(|_| Error::Checkpoint("too many cols".into()))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&rows.to_le_bytes());
        out.extend_from_slice(&cols.to_le_bytes());
        for v in t.value.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    let mut cur = bytes;
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("file shorter than the magic header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let mut tensors = Vec::new();
    while !cur.is_empty() {
        let len = read_u32(&mut cur)? as usize;
        if cur.len() < len {
            return Err(Error::Checkpoint("truncated tensor name".into()));
        }
        let name = std::str::from_utf8(&cur[..len])
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
            .to_string();
        cur = &cur[len..];
        let rows = read_u32(&mut cur)? as usize;
        let cols = read_u32(&mut cur)? as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint(format!("tensor `{name}` too large")))?;
        if cur.len() < n * 8 {
            return Err(Error::Checkpoint(format!("truncated data for tensor `{name}`")));
        }
        let data = cur[..n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        cur = &cur[n * 8..];
        let value = DenseMatrix::from_vec(rows, cols, data)
            .map_err(|e| Error::Checkpoint(format!("tensor `{name}`: {e}")))?;
        tensors.push(NamedTensor { name, value });
    }
    Ok(tensors)
}

fn read_u32(cur: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    cur.read_exact(&mut b)
        .map_err(|_| Error::Checkpoint("truncated header field".into()))?;
    Ok(u32::from_le_bytes(b))
}

pub fn save(path: &Path, tensors: &[NamedTensor]) -> Result<()> {
    let bytes = encode(tensors)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Vec<NamedTensor>> {
    decode(&fs::read(path)?)
}

/// Snapshot of a model's parameters, names prefixed with `prefix.`.
pub fn tensors_of<M: Parameterized + ?Sized>(model: &M, prefix: &str) -> Vec<NamedTensor> {
    model
        .named_params()
        .into_iter()
        .map(|(name, p)| NamedTensor {
            name: if prefix.is_empty() {
                name
            } else {
                format!("{prefix}.{name}")
            },
            value: p.value.clone(),
        })
        .collect()
}

/// Copies values for `prefix.*` tensors back into `model`, checking shapes.
pub fn restore_into<M: Parameterized + ?Sized>(
    model: &mut M,
    prefix: &str,
    tensors: &[NamedTensor],
) -> Result<()> {
    let names: Vec<String> = model.named_params().into_iter().map(|(n, _)| n).collect();
    for (name, p) in names.iter().zip(model.params_mut()) {
        let full = if prefix.is_empty() {
            name.clone()
        } else {
            format!("{prefix}.{name}")
        };
        let t = tensors
            .iter()
            .find(|t| t.name == full)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{full}`")))?;
        if t.value.shape() != p.value.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor `{full}` has shape {:?}, expected {:?}",
                t.value.shape(),
                p.value.shape()
            )));
        }
        p.value = t.value.clone();
    }
    Ok(())
}
