//! Binary checkpoint files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "TALCKPT1"
//! u32 format version
//! u32 layer count L
//! u32 x (L + 1) layer widths
//! u32 queue capacity, u32 queue length, u32 completed epochs
//! f64 x P parameters, f64 x P momentum buffers
//! f64 x 2 per queue entry (mean, variance), oldest first
//! generator state: 32-byte seed, u64 stream, u128 word position
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{param_count, Mlp};
use crate::error::{Error, Result};
use crate::typicalness::{FeatureQueue, FeatureStats};

pub const MAGIC: &[u8; 8] = b"TALCKPT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Mlp,
    pub velocity: Vec<f64>,
    pub queue: FeatureQueue,
    /// Number of completed epochs.
    pub epoch: usize,
    pub rng: ChaCha8Rng,
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in 32 bits")))
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let dims = self.model.dims();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let mut header = vec![FORMAT_VERSION, to_u32(dims.len() - 1, "layer count")?];
        for &d in dims {
            header.push(to_u32(d, "layer width")?);
        }
        header.push(to_u32(self.queue.capacity(), "queue capacity")?);
        header.push(to_u32(self.queue.len(), "queue length")?);
        header.push(to_u32(self.epoch, "epoch")?);
        for h in header {
            out.extend_from_slice(&h.to_le_bytes());
        }
        for v in self.model.params().iter().chain(&self.velocity) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for e in self.queue.entries() {
            out.extend_from_slice(&e.mean.to_le_bytes());
            out.extend_from_slice(&e.variance.to_le_bytes());
        }
        out.extend_from_slice(&self.rng.get_seed());
        out.extend_from_slice(&self.rng.get_stream().to_le_bytes());
        out.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let layers = r.u32()? as usize;
        if layers == 0 || layers > 1024 {
            return Err(Error::Format(format!("implausible layer count {layers}")));
        }
        let dims = (0..=layers).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let capacity = r.u32()? as usize;
        let len = r.u32()? as usize;
        let epoch = r.u32()? as usize;
        if len > capacity {
            return Err(Error::Format("queue length exceeds capacity".into()));
        }

        let n = param_count(&dims);
        let params = r.f64s(n)?;
        let velocity = r.f64s(n)?;
        let flat = r.f64s(2 * len)?;
        let entries = flat
            .chunks(2)
            .map(|c| FeatureStats::new(c[0], c[1]))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Format(e.to_string()))?;

        let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let stream = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }

        let model = Mlp::from_params(&dims, params).map_err(|e| Error::Format(e.to_string()))?;
        if velocity.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite momentum buffer".into()));
        }
        let queue = FeatureQueue::from_entries(capacity, entries, len > 0).map_err(|e| Error::Format(e.to_string()))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(Self { model, velocity, queue, epoch, rng })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format(format!("truncated file at byte {}", self.pos))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}
