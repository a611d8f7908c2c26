//! The `PNLKW1` binary weight format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic        8 bytes  "PNLKW1\0\0"
//! pooling      u8       0 = max, 1 = avg
//! layer count  u32
//! per layer:   in u32, out u32,
//!              out*in f32 weights (row-major, row = output channel),
//!              out f32 biases, out f32 scales, out f32 shifts
//! crc32        u32      IEEE CRC-32 of every preceding byte
//! ```

use std::path::Path;

use crate::encoder::{EncoderWeights, Layer, Pooling};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PNLKW1\0\0";

/// Refuse absurd dimensions before allocating.
const MAX_DIM: usize = 1 << 20;

pub fn to_bytes(weights: &EncoderWeights) -> Result<Vec<u8>> {
    weights.validate()?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.push(weights.pooling.code());
    buf.extend_from_slice(&(weights.layers.len() as u32).to_le_bytes());
    for l in &weights.layers {
        buf.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
        for v in l.weight.iter().chain(&l.bias).chain(&l.scale).chain(&l.shift) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn dim(&mut self) -> Result<usize> {
        let d = self.u32()? as usize;
        if d == 0 || d > MAX_DIM {
            return Err(Error::DimensionMismatch(format!("layer dimension {d} out of range")));
        }
        Ok(d)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<EncoderWeights> {
    if bytes.len() < MAGIC.len() + 1 + 4 + 4 {
        return Err(Error::Format(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::Format(format!(
            "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
        )));
    }

    let mut r = Reader { bytes: body, pos: 8 };
    let pooling = Pooling::from_code(r.u8()?)?;
    let count = r.u32()? as usize;
    if count == 0 {
        return Err(Error::DimensionMismatch("weight file has no layers".into()));
    }
    let mut layers = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let in_dim = r.dim()?;
        let out_dim = r.dim()?;
        let weight = r.f32s(in_dim * out_dim)?;
        let bias = r.f32s(out_dim)?;
        let scale = r.f32s(out_dim)?;
        let shift = r.f32s(out_dim)?;
        layers.push(Layer {
            in_dim,
            out_dim,
            weight,
            bias,
            scale,
            shift,
        });
    }
    if r.pos != body.len() {
        return Err(Error::Format(format!(
            "{} unexpected bytes before checksum",
            body.len() - r.pos
        )));
    }
    EncoderWeights::new(pooling, layers)
}

pub fn save_weights(weights: &EncoderWeights, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(weights)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<EncoderWeights> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
