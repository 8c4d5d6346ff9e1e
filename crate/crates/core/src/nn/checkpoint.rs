//! Versioned binary checkpoint.
//!
//! Layout (all integers little-endian `u32`):
//! `"ONHK"`, version, text length, layer-spec text (UTF-8), tensor count, then
//! per tensor: rank, dims, and the values as little-endian `f64`. Tensors are the
//! weight then bias of every parameterized layer in order.

use alloc::string::String;
use alloc::vec::Vec;

use super::arch::Arch;
use super::network::{LayerParams, Network};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ONHK";
pub const VERSION: u32 = 1;

pub fn encode_checkpoint(net: &Network) -> Vec<u8> {
    let text = net.arch().to_text(&net.frozen_mask());
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    let tensors: Vec<&Tensor> = net
        .layer_params()
        .iter()
        .flatten()
        .flat_map(|p| [&p.weight, &p.bias])
        .collect();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(alloc::format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(f64::from_le_bytes(a))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(alloc::format!("unsupported version {version}")));
    }
    let text_len = r.u32()? as usize;
    let text = String::from_utf8(r.take(text_len)?.to_vec())
        .map_err(|_| Error::Checkpoint("layer spec is not UTF-8".into()))?;
    let (arch, frozen) = Arch::parse(&text)?;
    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        if len > bytes.len() / 8 {
            return Err(Error::Checkpoint("tensor larger than file".into()));
        }
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(r.f64()?);
        }
        tensors.push(Tensor::new(shape, data).map_err(|e| Error::Checkpoint(alloc::format!("{e}")))?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    let mut it = tensors.into_iter();
    let mut params = Vec::with_capacity(arch.layers.len());
    for (layer, &fr) in arch.layers.iter().zip(&frozen) {
        if layer.is_parameterized() {
            let weight = it.next().ok_or_else(|| Error::Checkpoint("missing tensor".into()))?;
            let bias = it.next().ok_or_else(|| Error::Checkpoint("missing tensor".into()))?;
            params.push(Some(LayerParams {
                weight,
                bias,
                frozen: fr,
            }));
        } else {
            params.push(None);
        }
    }
    if it.next().is_some() {
        return Err(Error::Checkpoint("extra tensors".into()));
    }
    Network::from_parts(arch, params)
}
