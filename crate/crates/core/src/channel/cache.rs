//! Binary tensor cache. Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        4 bytes  "BFCH"
//! version      u32      1
//! n            u32      array size (matrices are n×n)
//! n_candidates u32
//! n_sites      u32
//! site_ids     u32 × n_sites
//! candidates   u32 × n_candidates
//! re           f64 × n_candidates·n_sites·n·n   ([candidate][site][row][col])
//! im           f64 × same
//! crc32        u32      CRC-32 (IEEE) of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use super::{ChannelError, ChannelTensor};

pub const CACHE_MAGIC: &[u8; 4] = b"BFCH";
pub const CACHE_VERSION: u32 = 1;

pub fn write_cache(t: &ChannelTensor) -> Vec<u8> {
    let mut b = Vec::with_capacity(24 + 4 * (t.site_ids.len() + t.candidate_indices.len()) + 8 * 2 * t.re.len());
    b.extend_from_slice(CACHE_MAGIC);
    for v in [CACHE_VERSION, t.n as u32, t.candidate_indices.len() as u32, t.site_ids.len() as u32] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    for &s in &t.site_ids {
        b.extend_from_slice(&s.to_le_bytes());
    }
    for &m in &t.candidate_indices {
        b.extend_from_slice(&(m as u32).to_le_bytes());
    }
    for x in t.re.iter().chain(&t.im) {
        b.extend_from_slice(&x.to_le_bytes());
    }
    let crc = crc32fast::hash(&b);
    b.extend_from_slice(&crc.to_le_bytes());
    b
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ChannelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| ChannelError::Malformed(format!("need {n} bytes at offset {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ChannelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ChannelError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| ChannelError::Malformed("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn read_cache(bytes: &[u8]) -> Result<ChannelTensor, ChannelError> {
    if bytes.len() < 8 || &bytes[..4] != CACHE_MAGIC {
        return Err(ChannelError::Magic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(ChannelError::Version(version));
    }
    if bytes.len() < 12 {
        return Err(ChannelError::Malformed("file too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(ChannelError::Checksum { stored, computed });
    }
    let mut r = Reader { buf: body, pos: 8 };
    let n = r.u32()? as usize;
    let nc = r.u32()? as usize;
    let ns = r.u32()? as usize;
    let site_ids = (0..ns).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let candidate_indices = (0..nc).map(|_| r.u32().map(|m| m as usize)).collect::<Result<Vec<_>, _>>()?;
    let len = nc * ns * n * n;
    let re = r.f64s(len)?;
    let im = r.f64s(len)?;
    if r.pos != body.len() {
        return Err(ChannelError::Malformed(format!("{} trailing bytes", body.len() - r.pos)));
    }
    if candidate_indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ChannelError::Malformed("candidate indices not ascending".into()));
    }
    Ok(ChannelTensor { n, site_ids, candidate_indices, re, im })
}

pub fn cache_store(path: impl AsRef<Path>, tensor: &ChannelTensor) -> Result<(), ChannelError> {
    fs::write(path, write_cache(tensor))?;
    Ok(())
}

pub fn cache_load(path: impl AsRef<Path>) -> Result<ChannelTensor, ChannelError> {
    read_cache(&fs::read(path)?)
}
