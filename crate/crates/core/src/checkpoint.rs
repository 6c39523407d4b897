//! Versioned binary checkpoints for a trained autoencoder.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "FAUGCKPT"
//! version    u32
//! feature    u64
//! hidden     u64
//! dropout    f64
//! flags      u32      bit 0 context dropout, bit 1 reversed input
//! tensors    u64 count, then per tensor: u64 length + length x f64
//! norm mean  u64 length + f64s
//! norm std   u64 length + f64s
//! fingerprint 32 bytes (SHA-256 of the canonical experiment config)
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::autoencoder::AutoencoderModel;
use crate::datasets::NormalizationRecord;
use crate::error::{Error, Result};
use crate::optim::ParamSet;

pub const MAGIC: &[u8; 8] = b"FAUGCKPT";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_CONTEXT_DROPOUT: u32 = 1;
const FLAG_REVERSE_INPUT: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: AutoencoderModel,
    pub normalization: NormalizationRecord,
    pub fingerprint: [u8; 32],
}

pub fn fingerprint(config_text: &str) -> [u8; 32] {
    Sha256::digest(config_text.as_bytes()).into()
}

fn put_tensor(out: &mut Vec<u8>, values: &[f64]) {
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            Error::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensor(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n > (self.bytes.len() - self.pos) / 8 {
            return Err(Error::Checkpoint(format!("tensor length {n} exceeds file size")));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(m.feature_dim as u64).to_le_bytes());
        out.extend_from_slice(&(m.hidden as u64).to_le_bytes());
        out.extend_from_slice(&m.dropout.to_le_bytes());
        let mut flags = 0u32;
        if m.context_dropout {
            flags |= FLAG_CONTEXT_DROPOUT;
        }
        if m.reverse_input {
            flags |= FLAG_REVERSE_INPUT;
        }
        out.extend_from_slice(&flags.to_le_bytes());
        let tensors = m.tensors();
        out.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
        for t in tensors {
            put_tensor(&mut out, t);
        }
        put_tensor(&mut out, &self.normalization.mean);
        put_tensor(&mut out, &self.normalization.std);
        out.extend_from_slice(&self.fingerprint);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let feature_dim = r.u64()? as usize;
        let hidden = r.u64()? as usize;
        if feature_dim == 0 || hidden == 0 {
            return Err(Error::Checkpoint("zero model dimension".into()));
        }
        let mut model = AutoencoderModel::zeros(feature_dim, hidden);
        model.dropout = r.f64()?;
        let flags = r.u32()?;
        model.context_dropout = flags & FLAG_CONTEXT_DROPOUT != 0;
        model.reverse_input = flags & FLAG_REVERSE_INPUT != 0;
        let count = r.u64()? as usize;
        let mut slots = model.tensors_mut();
        if count != slots.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {count}",
                slots.len()
            )));
        }
        for (i, slot) in slots.iter_mut().enumerate() {
            let t = r.tensor()?;
            if t.len() != slot.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor {i} has {} values, expected {}",
                    t.len(),
                    slot.len()
                )));
            }
            slot.copy_from_slice(&t);
        }
        let mean = r.tensor()?;
        let std = r.tensor()?;
        if mean.len() != feature_dim || std.len() != feature_dim {
            return Err(Error::Checkpoint("normalization record does not match features".into()));
        }
        let fingerprint: [u8; 32] = r.take(32)?.try_into().unwrap();
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            model,
            normalization: NormalizationRecord { mean, std },
            fingerprint,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(format!("writing checkpoint {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::io(format!("reading checkpoint {}", path.display()), e))?;
        Self::from_bytes(&bytes)
    }
}
