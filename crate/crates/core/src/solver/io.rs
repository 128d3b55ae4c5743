//! Field serialization.
//!
//! CSV: header `i,j,x,y,u`, one row per node in storage order.
//!
//! Binary (little endian): magic `SVFD`, `u32` version (1), `u32 n_x`,
//! `u32 n_y`, four `f64` bounds `x_min, x_max, y_min, y_max`, then
//! `n_x·n_y` `f64` values in row-major order.

use std::io::{Read, Write};

use super::{DiscreteField, Grid, SolverError};

pub const MAGIC: &[u8; 4] = b"SVFD";
pub const VERSION: u32 = 1;

pub fn write_csv<W: Write>(u: &DiscreteField, out: W) -> Result<(), SolverError> {
    let g = u.grid;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "x", "y", "u"])?;
    for j in 0..g.ny {
        for i in 0..g.nx {
            w.write_record([
                i.to_string(),
                j.to_string(),
                g.x(i).to_string(),
                g.y(j).to_string(),
                u.values[g.idx(i, j)].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`]; the grid is recovered from the
/// index and coordinate columns.
pub fn read_csv<R: Read>(input: R) -> Result<DiscreteField, SolverError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec?);
    }
    let nx = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
    let ny = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
    if rows.len() != nx * ny || nx < 3 || ny < 3 {
        return Err(SolverError::Format(format!("{} rows do not form a {nx}×{ny} grid", rows.len())));
    }
    let pick = |i: usize, j: usize| rows.iter().find(|r| r.0 == i && r.1 == j).copied();
    let (Some(lo), Some(hi)) = (pick(0, 0), pick(nx - 1, ny - 1)) else {
        return Err(SolverError::Format("missing corner nodes".into()));
    };
    let grid = Grid::new([lo.2, hi.2, lo.3, hi.3], nx, ny)?;
    let mut values = vec![f64::NAN; nx * ny];
    for r in &rows {
        values[grid.idx(r.0, r.1)] = r.4;
    }
    DiscreteField::from_values(grid, values)
}

pub fn write_binary<W: Write>(u: &DiscreteField, mut out: W) -> Result<(), SolverError> {
    let g = u.grid;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(g.nx as u32).to_le_bytes())?;
    out.write_all(&(g.ny as u32).to_le_bytes())?;
    for b in [g.x_min, g.x_max, g.y_min, g.y_max] {
        out.write_all(&b.to_le_bytes())?;
    }
    for v in &u.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<DiscreteField, SolverError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SolverError::Format("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |input: &mut R| -> Result<u32, SolverError> {
        input.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(SolverError::Format(format!("unsupported version {version}")));
    }
    let nx = read_u32(&mut input)? as usize;
    let ny = read_u32(&mut input)? as usize;
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |input: &mut R| -> Result<f64, SolverError> {
        input.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let mut bounds = [0.0; 4];
    for b in bounds.iter_mut() {
        *b = read_f64(&mut input)?;
    }
    let grid = Grid::new(bounds, nx, ny)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(read_f64(&mut input)?);
    }
    DiscreteField::from_values(grid, values)
}
