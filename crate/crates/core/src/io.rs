//! File formats consumed by external tools: CSV and binary phase-space
//! grids, and the JSON density-matrix dump.
//!
//! Binary grid layout (little endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `WGRID001` |
//! | 8×2   | x_min, x_max (f64) |
//! | 8     | n_x (u64) |
//! | 8×2   | p_min, p_max (f64) |
//! | 8     | n_p (u64) |
//! | 8·n_x·n_p | values (f64), row-major, x slow |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wigner::{Axis, GridSpec, PhaseGrid};

pub const GRID_MAGIC: &[u8; 8] = b"WGRID001";

/// Fixed 12-significant-digit float formatting used for every CSV value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

/// CSV with header `x,p,value`, one row per grid point in storage order.
pub fn write_grid_csv<W: Write>(grid: &PhaseGrid, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "x,p,value")?;
    let s = grid.spec;
    for i in 0..s.x.n {
        let x = fmt_f64(s.x.value(i));
        for j in 0..s.p.n {
            writeln!(out, "{},{},{}", x, fmt_f64(s.p.value(j)), fmt_f64(grid.at(i, j)))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_grid_binary<W: Write>(grid: &PhaseGrid, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let s = grid.spec;
    out.write_all(GRID_MAGIC)?;
    for axis in [s.x, s.p] {
        out.write_all(&axis.min.to_le_bytes())?;
        out.write_all(&axis.max.to_le_bytes())?;
        out.write_all(&(axis.n as u64).to_le_bytes())?;
    }
    for v in &grid.values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_grid_binary<R: Read>(mut input: R) -> Result<PhaseGrid> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Domain("not a binary grid dump".into()));
    }
    let mut word = [0u8; 8];
    let mut axes = Vec::with_capacity(2);
    for _ in 0..2 {
        input.read_exact(&mut word)?;
        let min = f64::from_le_bytes(word);
        input.read_exact(&mut word)?;
        let max = f64::from_le_bytes(word);
        input.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        axes.push(Axis::new(min, max, n)?);
    }
    let spec = GridSpec { x: axes[0], p: axes[1] };
    let mut values = Vec::with_capacity(spec.x.n * spec.p.n);
    for _ in 0..spec.x.n * spec.p.n {
        input.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    PhaseGrid::from_values(spec, values)
}

pub fn save_grid(grid: &PhaseGrid, csv: &Path, bin: &Path) -> Result<()> {
    write_grid_csv(grid, File::create(csv)?)?;
    write_grid_binary(grid, File::create(bin)?)?;
    Ok(())
}

/// JSON form of a density matrix: `re` and `im` are row-major dim × dim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityDump {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub trace_deficit: f64,
}
