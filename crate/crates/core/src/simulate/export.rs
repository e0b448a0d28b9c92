//! Bundle export: a long-format CSV (`path,t,value`) and a compact binary
//! cache with a versioned header.
//!
//! Cache layout, little endian: magic `ENLGPATH`, `u32` version, `u64` seed,
//! `u64` path count, `u64` grid length, the grid times, then the values row
//! by row.

use std::io::{self, Read, Write};

use super::grid::TimeGrid;
use super::paths::{common_start, PathBundle};
use super::SimError;

const MAGIC: &[u8; 8] = b"ENLGPATH";
pub const CACHE_VERSION: u32 = 1;

pub fn write_csv<W: Write>(pb: &PathBundle, mut w: W) -> io::Result<()> {
    writeln!(w, "path,t,value")?;
    for (i, p) in pb.paths().enumerate() {
        for (t, v) in pb.grid().times().iter().zip(p) {
            writeln!(w, "{i},{t},{v}")?;
        }
    }
    Ok(())
}

pub fn write_cache<W: Write>(pb: &PathBundle, mut w: W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&pb.seed().to_le_bytes())?;
    w.write_all(&(pb.n_paths() as u64).to_le_bytes())?;
    w.write_all(&(pb.grid().len() as u64).to_le_bytes())?;
    for x in pb.grid().times().iter().chain(pb.values()) {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_cache<R: Read>(mut r: R) -> Result<PathBundle, SimError> {
    let io_err = |e: io::Error| SimError::Cache(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(SimError::Cache("not a path cache".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io_err)?;
    let version = u32::from_le_bytes(b4);
    if version != CACHE_VERSION {
        return Err(SimError::Cache(format!("unsupported cache version {version}")));
    }
    let mut read_u64 = || -> Result<u64, SimError> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(io_err)?;
        Ok(u64::from_le_bytes(b))
    };
    let seed = read_u64()?;
    let n_paths = read_u64()? as usize;
    let width = read_u64()? as usize;
    let total = width
        .checked_mul(n_paths + 1)
        .ok_or_else(|| SimError::Cache("size overflow".into()))?;
    let mut floats = Vec::with_capacity(total);
    let mut b = [0u8; 8];
    for _ in 0..total {
        r.read_exact(&mut b).map_err(io_err)?;
        floats.push(f64::from_le_bytes(b));
    }
    let values = floats.split_off(width);
    let grid = TimeGrid::from_points(floats)?;
    let initial = common_start(&values, width);
    PathBundle::from_values(grid, seed, initial, values)
}
