//! Plain-text field and snapshot files and the binary spectral-basis cache.
//!
//! Cache layout (little endian): magic `UPSB`, `u32` version, `u64` fine and
//! coarse sizes, `u64` patch count, then per patch the length-prefixed arrays
//! `vertices`, `pou`, `pressure_values`, `pressure_vectors`,
//! `displacement_dofs`, `displacement_values`, `displacement_vectors`
//! (indices as `u64`, reals as `f64`).

use std::io::{BufRead, Read, Write};

use crate::coarse_space::{CoarseGrid, PatchBasis, SpectralBasis};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::time_integration::State;

const MAGIC: &[u8; 4] = b"UPSB";
pub const BASIS_CACHE_VERSION: u32 = 1;

/// Per-cell fields as CSV with header `cell,k_s,e_d`.
pub fn write_cell_fields<W: Write, T: Real>(mut w: W, k_s: &[T], e_d: &[T]) -> Result<()> {
    if k_s.len() != e_d.len() {
        return Err(Error::DimensionMismatch {
            context: "cell field lengths",
            expected: k_s.len(),
            got: e_d.len(),
        });
    }
    writeln!(w, "cell,k_s,e_d")?;
    for (c, (k, e)) in k_s.iter().zip(e_d).enumerate() {
        writeln!(w, "{c},{:e},{:e}", k.as_f64(), e.as_f64())?;
    }
    Ok(())
}

pub fn read_cell_fields<R: BufRead, T: Real>(r: R) -> Result<(Vec<T>, Vec<T>)> {
    let mut k_s = Vec::new();
    let mut e_d = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Io(format!("line {}: {e}", n + 1)))
        };
        if cols.len() != 3 || parse(cols[0])? as usize != k_s.len() {
            return Err(Error::Io(format!("line {}: malformed field row", n + 1)));
        }
        k_s.push(T::lit(parse(cols[1])?));
        e_d.push(T::lit(parse(cols[2])?));
    }
    Ok((k_s, e_d))
}

/// Nodal snapshot as CSV with header `vertex,x,y,p,u_x,u_y`.
pub fn write_snapshot<W: Write, T: Real>(mut w: W, vertices: &[[T; 2]], state: &State<T>) -> Result<()> {
    let nv = vertices.len();
    if state.p.len() != nv || state.u.len() != 2 * nv {
        return Err(Error::DimensionMismatch {
            context: "snapshot vs vertex count",
            expected: nv,
            got: state.p.len(),
        });
    }
    writeln!(w, "vertex,x,y,p,u_x,u_y")?;
    for (v, xy) in vertices.iter().enumerate() {
        writeln!(
            w,
            "{v},{},{},{:e},{:e},{:e}",
            xy[0].as_f64(),
            xy[1].as_f64(),
            state.p[v].as_f64(),
            state.u[2 * v].as_f64(),
            state.u[2 * v + 1].as_f64()
        )?;
    }
    Ok(())
}

fn put_u64<W: Write>(w: &mut W, v: usize) -> Result<()> {
    w.write_all(&(v as u64).to_le_bytes())?;
    Ok(())
}

fn put_indices<W: Write>(w: &mut W, v: &[usize]) -> Result<()> {
    put_u64(w, v.len())?;
    for &x in v {
        put_u64(w, x)?;
    }
    Ok(())
}

fn put_reals<W: Write, T: Real>(w: &mut W, v: &[T]) -> Result<()> {
    put_u64(w, v.len())?;
    for &x in v {
        w.write_all(&x.as_f64().to_le_bytes())?;
    }
    Ok(())
}

fn get_u64<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Io("length overflow".into()))
}

fn get_indices<R: Read>(r: &mut R) -> Result<Vec<usize>> {
    let n = get_u64(r)?;
    (0..n).map(|_| get_u64(r)).collect()
}

fn get_reals<R: Read, T: Real>(r: &mut R) -> Result<Vec<T>> {
    let n = get_u64(r)?;
    let mut b = [0u8; 8];
    (0..n)
        .map(|_| {
            r.read_exact(&mut b)?;
            Ok(T::lit(f64::from_le_bytes(b)))
        })
        .collect()
}

pub fn write_basis_cache<W: Write, T: Real>(mut w: W, basis: &SpectralBasis<T>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&BASIS_CACHE_VERSION.to_le_bytes())?;
    put_u64(&mut w, basis.grid.n_fine)?;
    put_u64(&mut w, basis.grid.n_coarse)?;
    put_u64(&mut w, basis.patches.len())?;
    for p in &basis.patches {
        put_indices(&mut w, &p.vertices)?;
        put_reals(&mut w, &p.pou)?;
        put_reals(&mut w, &p.pressure_values)?;
        put_reals(&mut w, &p.pressure_vectors)?;
        put_indices(&mut w, &p.displacement_dofs)?;
        put_reals(&mut w, &p.displacement_values)?;
        put_reals(&mut w, &p.displacement_vectors)?;
    }
    Ok(())
}

pub fn read_basis_cache<R: Read, T: Real>(mut r: R) -> Result<SpectralBasis<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a basis cache file".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    if version != BASIS_CACHE_VERSION {
        return Err(Error::Io(format!(
            "basis cache version {version}, expected {BASIS_CACHE_VERSION}"
        )));
    }
    let grid = CoarseGrid::new(get_u64(&mut r)?, get_u64(&mut r)?)?;
    let n = get_u64(&mut r)?;
    if n != grid.n_vertices() {
        return Err(Error::Io(format!(
            "basis cache holds {n} patches, grid has {}",
            grid.n_vertices()
        )));
    }
    let mut patches = Vec::with_capacity(n);
    for _ in 0..n {
        patches.push(PatchBasis {
            vertices: get_indices(&mut r)?,
            pou: get_reals(&mut r)?,
            pressure_values: get_reals(&mut r)?,
            pressure_vectors: get_reals(&mut r)?,
            displacement_dofs: get_indices(&mut r)?,
            displacement_values: get_reals(&mut r)?,
            displacement_vectors: get_reals(&mut r)?,
        });
    }
    Ok(SpectralBasis { grid, patches })
}
