//! Binary checkpoint of a [`SpectralField`].
//!
//! Layout: 8-byte magic, `u32` format version, `u64` manifest length, the
//! JSON manifest, then `(re, im)` pairs of `f64`, row-major in `k`. All
//! integers and floats are little-endian.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::error::{Error, Result};
use crate::solver::{PhaseGrid, SpectralField};

pub const MAGIC: &[u8; 8] = b"VPFPCKPT";
pub const FORMAT_VERSION: u32 = 1;

/// Metadata stored ahead of the array. Floats are kept as IEEE bit patterns
/// so the header round-trips exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub config_hash: String,
    pub step: u64,
    pub k_max: usize,
    pub n_eta: usize,
    pub eta_max_bits: u64,
    pub dt_bits: u64,
    pub time_bits: u64,
}

pub fn encode(field: &SpectralField<f64>, config_hash: &str, step: u64) -> Result<Vec<u8>> {
    let g = field.grid;
    let m = CheckpointManifest {
        config_hash: config_hash.into(),
        step,
        k_max: g.k_max,
        n_eta: g.n_eta,
        eta_max_bits: g.eta_max.to_bits(),
        dt_bits: g.dt.to_bits(),
        time_bits: field.time.to_bits(),
    };
    let json = serde_json::to_vec(&m)?;
    let mut out = Vec::with_capacity(20 + json.len() + 16 * field.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for z in &field.data {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| {
            Error::Format(format!(
                "short read: {what} needs {n} bytes at offset {}, {} available",
                self.pos,
                self.buf.len() - self.pos
            ))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_bits(self.u64(what)?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(SpectralField<f64>, CheckpointManifest)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "checkpoint version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let len = usize::try_from(r.u64("manifest length")?)
        .map_err(|_| Error::Format("manifest length overflows".into()))?;
    let m: CheckpointManifest = serde_json::from_slice(r.take(len, "manifest")?)?;
    let grid = PhaseGrid {
        k_max: m.k_max,
        eta_max: f64::from_bits(m.eta_max_bits),
        n_eta: m.n_eta,
        dt: f64::from_bits(m.dt_bits),
    };
    grid.validate()?;
    let mut field = SpectralField::zeros(grid);
    field.time = f64::from_bits(m.time_bits);
    for z in field.data.iter_mut() {
        *z = Complex::new(r.f64("array")?, r.f64("array")?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the array",
            bytes.len() - r.pos
        )));
    }
    Ok((field, m))
}

pub fn write_checkpoint(
    field: &SpectralField<f64>,
    config_hash: &str,
    step: u64,
    path: &Path,
) -> Result<()> {
    atomic_write(path, &encode(field, config_hash, step)?)
}

pub fn read_checkpoint(path: &Path) -> Result<(SpectralField<f64>, CheckpointManifest)> {
    decode(&std::fs::read(path)?)
}
