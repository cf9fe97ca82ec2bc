//! Binary container and CSV export for fields and dense matrices.
//!
//! Container layout, all little-endian 64-bit: `d` (u64), `L` (f64), `n` (u64),
//! `β` (f64), then interleaved `re, im` f64 pairs in row-major order. A field
//! carries `n^d` pairs, a matrix `(n^d)²`.

use std::io::{Read, Write};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

const HEADER_BYTES: usize = 32;

fn write_header(w: &mut impl Write, grid: &GridSpec) -> Result<()> {
    w.write_all(&(grid.dim() as u64).to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    w.write_all(&grid.beta().to_le_bytes())?;
    Ok(())
}

fn read_u64(buf: &[u8]) -> u64 {
    u64::from_le_bytes(buf.try_into().expect("8 bytes"))
}

fn read_f64(buf: &[u8]) -> f64 {
    f64::from_le_bytes(buf.try_into().expect("8 bytes"))
}

fn read_container(r: &mut impl Read) -> Result<(GridSpec, Vec<Complex64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_BYTES || (bytes.len() - HEADER_BYTES) % 16 != 0 {
        return Err(Error::InvalidGrid(format!("container of {} bytes is malformed", bytes.len())));
    }
    let d = read_u64(&bytes[0..8]) as usize;
    let l = read_f64(&bytes[8..16]);
    let n = read_u64(&bytes[16..24]) as usize;
    let beta = read_f64(&bytes[24..32]);
    let grid = GridSpec::new(d, l, n, beta)?;
    let values = bytes[HEADER_BYTES..]
        .chunks_exact(16)
        .map(|c| Complex64::new(read_f64(&c[..8]), read_f64(&c[8..])))
        .collect();
    Ok((grid, values))
}

fn write_pairs(w: &mut impl Write, values: impl Iterator<Item = Complex64>) -> Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_field_binary(w: &mut impl Write, field: &Field) -> Result<()> {
    write_header(w, field.grid())?;
    write_pairs(w, field.values().iter().copied())
}

pub fn read_field_binary(r: &mut impl Read) -> Result<Field> {
    let (grid, values) = read_container(r)?;
    Field::from_values(&grid, values)
}

pub fn write_matrix_binary(w: &mut impl Write, grid: &GridSpec, m: &Mat<Complex64>) -> Result<()> {
    let rows = grid.len();
    if m.nrows() != rows || m.ncols() != rows {
        return Err(Error::DimensionMismatch);
    }
    write_header(w, grid)?;
    write_pairs(w, (0..rows).flat_map(|i| (0..rows).map(move |j| m[(i, j)])))
}

pub fn read_matrix_binary(r: &mut impl Read) -> Result<(GridSpec, Mat<Complex64>)> {
    let (grid, values) = read_container(r)?;
    let rows = grid.len();
    if values.len() != rows * rows {
        return Err(Error::FieldSize { expected: rows * rows, found: values.len() });
    }
    Ok((grid, Mat::from_fn(rows, rows, |i, j| values[i * rows + j])))
}

/// CSV with one index column per axis (`i1, i2, …`) followed by `re,im`.
pub fn write_field_csv(w: &mut impl Write, field: &Field) -> Result<()> {
    let g = field.grid();
    let mut header: Vec<String> = (1..=g.dim()).map(|a| format!("i{a}")).collect();
    header.push("re".into());
    header.push("im".into());
    writeln!(w, "{}", header.join(","))?;
    for (flat, v) in field.values().iter().enumerate() {
        let idx: Vec<String> = (0..g.dim()).map(|a| g.axis_index(flat, a).to_string()).collect();
        writeln!(w, "{},{:.16e},{:.16e}", idx.join(","), v.re, v.im)?;
    }
    Ok(())
}
