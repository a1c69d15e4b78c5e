//! `ZKSNAP01` binary snapshots.
//!
//! Layout: the 8 ASCII bytes `ZKSNAP01`, then little-endian `u64 Nx`,
//! `u64 Ny`, `f64 Lx`, `f64 Ly`, `f64 t`, then `Nx·Ny` `f64` samples with `x`
//! as the outer index.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub const MAGIC: &[u8; 8] = b"ZKSNAP01";
pub const HEADER_LEN: usize = 8 + 5 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

pub fn encode_snapshot(field: &Field, t: f64) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.nx() as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u64).to_le_bytes());
    out.extend_from_slice(&g.lx().to_le_bytes());
    out.extend_from_slice(&g.ly().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn word(bytes: &[u8], k: usize) -> [u8; 8] {
    bytes[8 + 8 * k..16 + 8 * k].try_into().expect("8-byte slice")
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::format(path, "bad magic, expected ZKSNAP01"));
    }
    let nx = u64::from_le_bytes(word(bytes, 0));
    let ny = u64::from_le_bytes(word(bytes, 1));
    let lx = f64::from_le_bytes(word(bytes, 2));
    let ly = f64::from_le_bytes(word(bytes, 3));
    let t = f64::from_le_bytes(word(bytes, 4));
    let count = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN as u64))
        .ok_or_else(|| Error::format(path, format!("implausible shape {nx}x{ny}")))?;
    if count != bytes.len() as u64 {
        return Err(Error::format(
            path,
            format!("shape {nx}x{ny} needs {count} bytes, file has {}", bytes.len()),
        ));
    }
    let grid = Grid::new(lx, ly, nx as usize, ny as usize).map_err(|e| Error::format(path, e.to_string()))?;
    if !t.is_finite() {
        return Err(Error::format(path, "non-finite time"));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let field = Field::from_values(grid, values)?;
    field.ensure_finite().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(Snapshot { t, field })
}

pub fn write_snapshot(path: impl AsRef<Path>, field: &Field, t: f64) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_snapshot(field, t)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes, path)
}
