//! Versioned binary policy file.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "QASALPOL"
//! version    u32
//! n_sizes    u32
//! sizes      n_sizes x u32      layer widths, input first, output last
//! params     f64 x count        per layer: weights (fan_in x fan_out, row-major) then biases
//! meta_len   u32
//! meta       meta_len bytes     UTF-8 JSON of PolicyMeta
//! crc32      u32                over every preceding byte
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::env::ActionMode;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"QASALPOL";
pub const VERSION: u32 = 1;

/// What the policy was trained against; checked before evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyMeta {
    pub action_mode: ActionMode,
    pub observation_dim: usize,
    pub action_count: usize,
    pub node_count: usize,
    pub lambda_max: f64,
    pub d_th_us: f64,
    pub cr_lbt: bool,
    pub scaling: bool,
    pub episodes: u32,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyArtifact {
    pub net: Mlp,
    pub meta: PolicyMeta,
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Artifact("truncated file".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl PolicyArtifact {
    pub fn to_bytes(&self) -> Vec<u8> {
        let sizes = self.net.sizes();
        let params = self.net.flat_params();
        let meta = serde_json::to_vec(&self.meta).expect("metadata serializes");
        let mut out = Vec::with_capacity(32 + 4 * sizes.len() + 8 * params.len() + meta.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
        for s in &sizes {
            out.extend_from_slice(&(*s as u32).to_le_bytes());
        }
        for p in &params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Artifact("not a policy file (bad magic)".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(Error::Artifact("checksum mismatch".into()));
        }
        let mut r = Reader {
            bytes: body,
            at: MAGIC.len(),
        };
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Artifact(format!(
                "unsupported version {version} (expected {VERSION})"
            )));
        }
        let n_sizes = r.u32()? as usize;
        if !(2..=64).contains(&n_sizes) {
            return Err(Error::Artifact(format!("implausible layer count {n_sizes}")));
        }
        let sizes = (0..n_sizes)
            .map(|_| r.u32().map(|s| s as usize))
            .collect::<Result<Vec<_>>>()?;
        let count: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if count.saturating_mul(8) > body.len() {
            return Err(Error::Artifact("truncated parameters".into()));
        }
        let params = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let net = Mlp::from_flat(&sizes, &params)
            .ok_or_else(|| Error::Artifact("parameter layout mismatch".into()))?;
        let meta_len = r.u32()? as usize;
        let meta: PolicyMeta = serde_json::from_slice(r.take(meta_len)?)
            .map_err(|e| Error::Artifact(format!("metadata: {e}")))?;
        if r.at != body.len() {
            return Err(Error::Artifact("trailing bytes".into()));
        }
        if meta.observation_dim != net.input_dim() || meta.action_count != net.output_dim() {
            return Err(Error::Artifact(
                "metadata disagrees with network shape".into(),
            ));
        }
        Ok(Self { net, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(format!("write {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        Self::from_bytes(&bytes)
    }
}
