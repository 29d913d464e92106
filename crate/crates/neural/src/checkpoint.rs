//! Binary checkpoint container.
//!
//! Byte layout, all integers little-endian:
//!
//! | offset    | size | content                                   |
//! |-----------|------|-------------------------------------------|
//! | 0         | 8    | magic `NANTCKPT`                          |
//! | 8         | 4    | u32 format version (1)                    |
//! | 12        | 8    | u64 header length `H`                     |
//! | 20        | H    | UTF-8 JSON header                         |
//! | 20 + H    | ...  | tensor payload                            |
//!
//! The header names the element type (`f32` or `f64`), the network config,
//! the batch-norm update counters, free-form metadata, and one entry per
//! tensor with its shape and byte offset into the payload. Tensors are
//! stored row-major as little-endian IEEE floats.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::network::{NetworkConfig, NetworkParams};
use crate::ops::BatchNorm;
use crate::real::Real;
use crate::tensor::{NeuralError, Tensor};

pub const MAGIC: &[u8; 8] = b"NANTCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    dtype: String,
    network: NetworkConfig,
    bn_updates: Vec<u64>,
    metadata: Value,
    tensors: Vec<TensorEntry>,
}

fn ck(msg: impl Into<String>) -> NeuralError {
    NeuralError::Checkpoint(msg.into())
}

fn batch_norms<T>(p: &NetworkParams<T>) -> Vec<(&'static str, &BatchNorm<T>)> {
    let mut v = vec![("bn1", &p.bn1)];
    if let Some(bn2) = &p.bn2 {
        v.push(("bn2", bn2));
    }
    v
}

/// Every stored tensor: trainables, then running statistics.
fn all_tensors<T: Real>(p: &NetworkParams<T>) -> Vec<(String, &Tensor<T>)> {
    let mut v: Vec<(String, &Tensor<T>)> = p.trainable().into_iter().map(|(n, t)| (n.to_string(), t)).collect();
    for (name, bn) in batch_norms(p) {
        v.push((format!("{name}.running_mean"), &bn.running_mean));
        v.push((format!("{name}.running_var"), &bn.running_var));
    }
    v
}

pub fn to_bytes<T: Real>(params: &NetworkParams<T>, metadata: Value) -> Vec<u8> {
    let mut payload = Vec::new();
    let mut tensors = Vec::new();
    for (name, t) in all_tensors(params) {
        tensors.push(TensorEntry {
            name,
            shape: t.shape().to_vec(),
            offset: payload.len(),
        });
        for &v in t.data() {
            v.write_le(&mut payload);
        }
    }
    let header = Header {
        dtype: T::DTYPE.into(),
        network: params.config.clone(),
        bn_updates: batch_norms(params).iter().map(|(_, bn)| bn.updates).collect(),
        metadata,
        tensors,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(20 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out
}

/// Parses a checkpoint written with the same element type.
pub fn from_bytes<T: Real>(bytes: &[u8]) -> Result<(NetworkParams<T>, Value), NeuralError> {
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(ck("not a checkpoint (bad magic)"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(ck(format!("unsupported format version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let header_end = 20usize.checked_add(hlen).filter(|&e| e <= bytes.len()).ok_or_else(|| ck("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[20..header_end]).map_err(|e| ck(format!("header: {e}")))?;
    if header.dtype != T::DTYPE {
        return Err(ck(format!("stored as {}, requested {}", header.dtype, T::DTYPE)));
    }
    let payload = &bytes[header_end..];
    let mut params = NetworkParams::<T>::init(header.network.clone(), 0)?;

    let fill = |name: &str, target: &mut Tensor<T>| -> Result<(), NeuralError> {
        let entry = header
            .tensors
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| ck(format!("missing tensor {name}")))?;
        if entry.shape != target.shape() {
            return Err(ck(format!("{name}: stored shape {:?}, expected {:?}", entry.shape, target.shape())));
        }
        let end = entry.offset + target.len() * T::BYTES;
        let raw = payload.get(entry.offset..end).ok_or_else(|| ck(format!("{name}: payload truncated")))?;
        for (dst, chunk) in target.data_mut().iter_mut().zip(raw.chunks_exact(T::BYTES)) {
            *dst = T::read_le(chunk);
        }
        Ok(())
    };
    for (name, t) in params.trainable_mut() {
        fill(name, t)?;
    }
    let mut bns = vec![("bn1", &mut params.bn1)];
    if let Some(bn2) = params.bn2.as_mut() {
        bns.push(("bn2", bn2));
    }
    if bns.len() != header.bn_updates.len() {
        return Err(ck("batch-norm counters do not match the network"));
    }
    for ((name, bn), &updates) in bns.into_iter().zip(&header.bn_updates) {
        fill(&format!("{name}.running_mean"), &mut bn.running_mean)?;
        fill(&format!("{name}.running_var"), &mut bn.running_var)?;
        bn.updates = updates;
    }
    Ok((params, header.metadata))
}

pub fn save<T: Real>(params: &NetworkParams<T>, metadata: Value, path: &Path) -> Result<(), NeuralError> {
    std::fs::write(path, to_bytes(params, metadata)).map_err(|e| ck(format!("{}: {e}", path.display())))
}

pub fn load<T: Real>(path: &Path) -> Result<(NetworkParams<T>, Value), NeuralError> {
    let bytes = std::fs::read(path).map_err(|e| ck(format!("{}: {e}", path.display())))?;
    from_bytes(&bytes)
}
