//! Checkpoint file layout (all integers little-endian):
//!
//! ```text
//! magic "AENSCKPT" | version u32
//! metadata length u32 | metadata JSON (spec, feature kind, train config, history)
//! tensor count u32 | per tensor: name length u32, name, rank u32, dims u32 x rank, f32 data
//! FNV-1a 64 checksum of everything above, u64
//! ```

use std::collections::HashMap;
use std::fs;
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::{EpochRecord, ModelSpec, Network, NnError, Tensor, TrainConfig};
use crate::dsp::FeatureKind;

const MAGIC: &[u8; 8] = b"AENSCKPT";
const VERSION: u32 = 1;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// A trained model with everything needed to reuse it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub network: Network<f32>,
    pub feature_kind: FeatureKind,
    pub train_config: TrainConfig,
    pub history: Vec<EpochRecord>,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    spec: ModelSpec,
    feature_kind: FeatureKind,
    train_config: TrainConfig,
    history: Vec<EpochRecord>,
}

impl ModelCheckpoint {
    pub fn spec(&self) -> &ModelSpec {
        self.network.spec()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = Metadata {
            spec: self.network.spec().clone(),
            feature_kind: self.feature_kind,
            train_config: self.train_config.clone(),
            history: self.history.clone(),
        };
        let meta = serde_json::to_vec(&meta).expect("metadata serializes");
        let state = self.network.named_state();

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(state.len() as u32).to_le_bytes());
        for (name, tensor) in state {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
            for &d in tensor.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let checksum = fnv1a64(&out);
        out.extend_from_slice(&checksum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        let corrupt = |msg: &str| NnError::CorruptCheckpoint(msg.to_string());
        if bytes.len() < MAGIC.len() + 4 + 8 {
            return Err(corrupt("file too short"));
        }
        if &bytes[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        if fnv1a64(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
            return Err(corrupt("checksum mismatch (truncated or modified file)"));
        }

        let mut r = Reader { buf: body, pos: 8 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(NnError::CorruptCheckpoint(format!("unsupported version {version}")));
        }
        let meta_len = r.u32()? as usize;
        let meta: Metadata = serde_json::from_slice(r.take(meta_len)?)
            .map_err(|e| NnError::CorruptCheckpoint(format!("metadata: {e}")))?;

        let count = r.u32()? as usize;
        let mut tensors = HashMap::with_capacity(count);
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| corrupt("tensor name is not UTF-8"))?
                .to_string();
            let rank = r.u32()? as usize;
            let shape = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            let len: usize = shape.iter().product();
            let data = r
                .take(len.checked_mul(4).ok_or_else(|| corrupt("tensor too large"))?)?
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            let tensor = Tensor::from_vec(&shape, data)
                .map_err(|e| NnError::CorruptCheckpoint(e.to_string()))?;
            tensors.insert(name, tensor);
        }
        if r.pos != body.len() {
            return Err(corrupt("trailing bytes after tensors"));
        }

        let mut network = Network::new(&meta.spec, 0)
            .map_err(|e| NnError::CorruptCheckpoint(format!("spec: {e}")))?;
        let expected = network.named_state().len();
        if expected != tensors.len() {
            return Err(NnError::CorruptCheckpoint(format!(
                "{} tensors stored, architecture has {expected}",
                tensors.len()
            )));
        }
        network.load_state(|key| tensors.remove(key))?;
        Ok(Self {
            network,
            feature_kind: meta.feature_kind,
            train_config: meta.train_config,
            history: meta.history,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| NnError::CorruptCheckpoint("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn save_checkpoint(ckpt: &ModelCheckpoint, path: impl AsRef<Path>) -> Result<(), NnError> {
    Ok(fs::write(path, ckpt.to_bytes())?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelCheckpoint, NnError> {
    ModelCheckpoint::from_bytes(&fs::read(path)?)
}
