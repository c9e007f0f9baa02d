//! The TVF1 field file: one ASCII header line
//!
//! `TVF1 <d> <k> <n1> ... <nd> <L1> ... <Ld> <FREE|PERIODIC>\n`
//!
//! followed by little-endian 64-bit floats, node-major with the vector
//! components of each node contiguous.

use crate::error::{Error, Result};
use crate::field::{Boundary, Field, Grid};
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn write_tvf(path: impl AsRef<Path>, u: &Field) -> Result<()> {
    let path = path.as_ref();
    let context = path.display().to_string();
    let grid = u.grid();
    let mut header = format!("TVF1 {} {}", grid.ndim(), u.k());
    for &n in grid.dims() {
        header.push_str(&format!(" {}", n));
    }
    for &l in grid.lengths() {
        header.push_str(&format!(" {:.17e}", l));
    }
    header.push_str(match grid.boundary() {
        Boundary::FreeSpace => " FREE\n",
        Boundary::Periodic => " PERIODIC\n",
    });
    let mut out = Vec::with_capacity(header.len() + 8 * u.values().len());
    out.extend_from_slice(header.as_bytes());
    for &v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(&context, e))?;
    file.write_all(&out).map_err(|e| Error::io(&context, e))
}

pub fn read_tvf(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let context = path.display().to_string();
    let data = fs::read(path).map_err(|e| Error::io(&context, e))?;
    let newline = data
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(&context, "missing header line"))?;
    let header = std::str::from_utf8(&data[..newline])
        .map_err(|_| Error::parse(&context, "header is not ASCII"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("TVF1") {
        return Err(Error::parse(&context, "not a TVF1 file"));
    }
    let mut next_usize = |what: &str| -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(&context, format!("bad {}", what)))
    };
    let d = next_usize("dimension")?;
    let k = next_usize("component count")?;
    let mut dims = Vec::with_capacity(d);
    for _ in 0..d {
        dims.push(next_usize("grid size")?);
    }
    let mut tokens_rest = header.split_whitespace().skip(3 + d);
    let mut lengths = Vec::with_capacity(d);
    for _ in 0..d {
        let t = tokens_rest
            .next()
            .ok_or_else(|| Error::parse(&context, "missing axis length"))?;
        lengths.push(
            t.parse::<f64>()
                .map_err(|_| Error::parse(&context, format!("bad axis length {}", t)))?,
        );
    }
    let boundary = match tokens_rest.next() {
        Some("FREE") => Boundary::FreeSpace,
        Some("PERIODIC") => Boundary::Periodic,
        other => {
            return Err(Error::parse(
                &context,
                format!("bad boundary token {:?}", other),
            ))
        }
    };
    let grid = Grid::new(dims, lengths, boundary)?;
    let expected = 8 * k * grid.node_count();
    let payload = &data[newline + 1..];
    if payload.len() != expected {
        return Err(Error::parse(
            &context,
            format!("payload has {} bytes, need {}", payload.len(), expected),
        ));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Field::new(grid, k, values)
}
