//! `AAIF` feature matrices: a 16-byte header (magic, version, frame count,
//! dimension as little-endian `u32`) followed by row-major little-endian `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{AaiError, Result};

pub const AAIF_MAGIC: &[u8; 4] = b"AAIF";
pub const AAIF_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AaifMatrix {
    pub frames: usize,
    pub dim: usize,
    /// Row-major values, already widened to `f64`.
    pub data: Vec<f64>,
}

impl AaifMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(AaiError::Shape("rows have differing dimensions".into()));
        }
        Ok(Self {
            frames: rows.len(),
            dim,
            data: rows.concat(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.frames).map(move |i| self.row(i))
    }
}

pub fn write_aaif<W: Write>(mut w: W, m: &AaifMatrix) -> Result<()> {
    let io = |e| AaiError::io("<aaif stream>", e);
    w.write_all(AAIF_MAGIC).map_err(io)?;
    for v in [AAIF_VERSION, m.frames as u32, m.dim as u32] {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    for &v in &m.data {
        w.write_all(&(v as f32).to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_aaif<R: Read>(mut r: R) -> Result<AaifMatrix> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| AaiError::io("<aaif stream>", e))?;
    if buf.len() < 16 || &buf[..4] != AAIF_MAGIC {
        return Err(AaiError::Format("missing AAIF magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(buf[4 * i..4 * i + 4].try_into().unwrap());
    let version = word(1);
    if version != AAIF_VERSION {
        return Err(AaiError::Format(format!("unsupported AAIF version {version}")));
    }
    let (frames, dim) = (word(2) as usize, word(3) as usize);
    let expected = 16 + 4 * frames * dim;
    if buf.len() != expected {
        return Err(AaiError::Format(format!(
            "AAIF payload is {} bytes, header implies {expected}",
            buf.len()
        )));
    }
    let data = buf[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(AaifMatrix { frames, dim, data })
}

pub fn write_aaif_file(path: &Path, m: &AaifMatrix) -> Result<()> {
    let f = File::create(path).map_err(|e| AaiError::io(path, e))?;
    write_aaif(BufWriter::new(f), m)
}

pub fn read_aaif_file(path: &Path) -> Result<AaifMatrix> {
    let f = File::open(path).map_err(|e| AaiError::io(path, e))?;
    read_aaif(BufReader::new(f)).map_err(|e| match e {
        AaiError::Format(msg) => AaiError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}
