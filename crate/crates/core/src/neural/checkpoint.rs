//! `AAIC` checkpoint files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "AAIC" | version u32 | arch tag (u32 len + utf8) | context u32 | alpha f64
//!        | seed u64 | init scheme (u32 len + utf8) | tensor count u32
//!        | per tensor: name (u32 len + utf8), rows u32, cols u32
//!        | f32 blobs in declaration order
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::Tensor2;
use crate::error::{AaiError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AAIC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub arch_tag: String,
    pub context: u32,
    pub alpha: f64,
    pub seed: u64,
    pub init: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub value: Tensor2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub tensors: Vec<NamedTensor>,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        put_str(&mut out, &h.arch_tag);
        out.extend_from_slice(&h.context.to_le_bytes());
        out.extend_from_slice(&h.alpha.to_le_bytes());
        out.extend_from_slice(&h.seed.to_le_bytes());
        put_str(&mut out, &h.init);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            put_str(&mut out, &t.name);
            out.extend_from_slice(&(t.value.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(t.value.cols() as u32).to_le_bytes());
        }
        for t in &self.tensors {
            for &v in t.value.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    /// Parses a whole checkpoint; nothing is returned unless every byte checks out.
    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = ByteReader { buf, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(AaiError::Format("missing AAIC magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(AaiError::Format(format!("unsupported checkpoint version {version}")));
        }
        let arch_tag = r.string()?;
        let context = r.u32()?;
        let alpha = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let init = r.string()?;
        let count = r.u32()? as usize;
        let mut shapes = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = r.string()?;
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            shapes.push((name, rows, cols));
        }
        let payload: usize = shapes.iter().map(|(_, r, c)| r * c * 4).sum();
        if buf.len() - r.pos != payload {
            return Err(AaiError::Format(format!(
                "checkpoint payload is {} bytes, shape table implies {payload}",
                buf.len() - r.pos
            )));
        }
        let tensors = shapes
            .into_iter()
            .map(|(name, rows, cols)| {
                let data = r
                    .take(rows * cols * 4)?
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                    .collect();
                Ok(NamedTensor {
                    name,
                    value: Tensor2::from_vec(rows, cols, data)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            header: CheckpointHeader {
                arch_tag,
                context,
                alpha,
                seed,
                init,
            },
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| AaiError::io(path, e))?;
        let mut w = BufWriter::new(f);
        w.write_all(&self.to_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| AaiError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| AaiError::io(path, e))?;
        Self::from_bytes(&buf).map_err(|e| match e {
            AaiError::Format(m) => AaiError::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Looks up tensors in declaration order, checking names and shapes.
    pub fn expect_tensors(&self, expected: &[(String, usize, usize)]) -> Result<Vec<&Tensor2>> {
        if expected.len() != self.tensors.len() {
            return Err(AaiError::Shape(format!(
                "checkpoint holds {} tensors, architecture declares {}",
                self.tensors.len(),
                expected.len()
            )));
        }
        self.tensors
            .iter()
            .zip(expected)
            .map(|(t, (name, rows, cols))| {
                if &t.name != name || t.value.shape() != (*rows, *cols) {
                    Err(AaiError::Shape(format!(
                        "shape table entry {} {:?} does not match expected {name} ({rows}, {cols})",
                        t.name,
                        t.value.shape()
                    )))
                } else {
                    Ok(&t.value)
                }
            })
            .collect()
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(AaiError::Format("checkpoint truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| AaiError::Format("checkpoint string is not utf-8".into()))
    }
}
