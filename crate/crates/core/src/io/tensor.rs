//! Raw matrix-field files: little-endian 64-bit floats, node-major,
//! nine per node. Read as a free-space field at the same pixel pitch as
//! the synthetic SPD image, with any asymmetry averaged away.

use crate::error::{Error, Result};
use crate::field::{Boundary, Field, Grid};
use std::fs;
use std::io::Write;
use std::path::Path;

/// Pixel pitch shared with the synthetic SPD image (length 4 over 25 nodes).
const PITCH: f64 = 4.0 / 24.0;

/// Returns the symmetrized field and the largest asymmetry found.
pub fn read_raw_tensor(path: impl AsRef<Path>, dims: &[usize]) -> Result<(Field, f64)> {
    let path = path.as_ref();
    let context = path.display().to_string();
    let data = fs::read(path).map_err(|e| Error::io(&context, e))?;
    let nodes: usize = dims.iter().product();
    let expected = 8 * 9 * nodes;
    if data.len() != expected {
        return Err(Error::parse(
            &context,
            format!("file has {} bytes, dims need {}", data.len(), expected),
        ));
    }
    let lengths = dims.iter().map(|&n| (n.max(2) - 1) as f64 * PITCH).collect();
    let grid = Grid::new(dims.to_vec(), lengths, Boundary::FreeSpace)?;
    let mut values: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::parse(
            &context,
            format!("non-finite value at index {}", bad),
        ));
    }
    let mut max_asymmetry = 0.0f64;
    for node in values.chunks_exact_mut(9) {
        for i in 0..3 {
            for j in i + 1..3 {
                let a = node[i * 3 + j];
                let b = node[j * 3 + i];
                max_asymmetry = max_asymmetry.max((a - b).abs());
                let mean = 0.5 * (a + b);
                node[i * 3 + j] = mean;
                node[j * 3 + i] = mean;
            }
        }
    }
    Ok((Field::new(grid, 9, values)?, max_asymmetry))
}

pub fn write_raw_tensor(path: impl AsRef<Path>, u: &Field) -> Result<()> {
    let path = path.as_ref();
    let context = path.display().to_string();
    if u.k() != 9 {
        return Err(Error::InvalidParameter("tensor field needs k=9".into()));
    }
    let mut out = Vec::with_capacity(8 * u.values().len());
    for &v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(&context, e))?;
    file.write_all(&out).map_err(|e| Error::io(&context, e))
}
