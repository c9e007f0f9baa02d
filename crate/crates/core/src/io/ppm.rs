//! Binary PPM (P6) and PGM (P5) images, maxval 255.
//!
//! A pixel byte b maps to the real value b/255. Image fields use a
//! free-space grid with the longest axis spanning 2*pi, so the diffusion
//! times of the experiments act at the intended feature scale.

use crate::error::{Error, Result};
use crate::field::{Boundary, Field, Grid};
use std::fs;
use std::io::Write;
use std::path::Path;

fn image_grid(rows: usize, cols: usize) -> Result<Grid> {
    let longest = rows.max(cols).max(2) as f64 - 1.0;
    let scale = 2.0 * std::f64::consts::PI / longest;
    Grid::new(
        vec![rows, cols],
        vec![
            (rows.max(2) - 1) as f64 * scale,
            (cols.max(2) - 1) as f64 * scale,
        ],
        Boundary::FreeSpace,
    )
}

struct HeaderReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn token(&mut self, context: &str) -> Result<&'a [u8]> {
        // skip whitespace and '#' comments
        loop {
            while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(context, "unexpected end of header"));
        }
        Ok(&self.data[start..self.pos])
    }

    fn number(&mut self, context: &str) -> Result<usize> {
        let tok = self.token(context)?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(context, "expected an integer"))
    }
}

fn read_image(path: &Path, magic: &[u8], channels: usize) -> Result<Field> {
    let context = path.display().to_string();
    let data = fs::read(path).map_err(|e| Error::io(&context, e))?;
    let mut h = HeaderReader { data: &data, pos: 0 };
    if h.token(&context)? != magic {
        return Err(Error::parse(
            &context,
            format!("expected {} image", String::from_utf8_lossy(magic)),
        ));
    }
    let width = h.number(&context)?;
    let height = h.number(&context)?;
    let maxval = h.number(&context)?;
    if maxval != 255 {
        return Err(Error::parse(&context, format!("maxval {} unsupported", maxval)));
    }
    // exactly one whitespace byte separates header and payload
    h.pos += 1;
    let expected = width * height * channels;
    let payload = &data[h.pos.min(data.len())..];
    if payload.len() < expected {
        return Err(Error::parse(
            &context,
            format!("payload has {} bytes, need {}", payload.len(), expected),
        ));
    }
    let grid = image_grid(height, width)?;
    let values = payload[..expected]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Field::new(grid, channels, values)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_image(path: &Path, u: &Field, magic: &[u8], channels: usize) -> Result<()> {
    let context = path.display().to_string();
    if u.k() != channels || u.grid().ndim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "image needs a 2-D field with k={}, got k={}",
            channels,
            u.k()
        )));
    }
    let (rows, cols) = (u.grid().dims()[0], u.grid().dims()[1]);
    let mut out = Vec::with_capacity(u.values().len() + 32);
    out.extend_from_slice(magic);
    out.extend_from_slice(format!("\n{} {}\n255\n", cols, rows).as_bytes());
    out.extend(u.values().iter().map(|&v| quantize(v)));
    let mut file = fs::File::create(path).map_err(|e| Error::io(&context, e))?;
    file.write_all(&out).map_err(|e| Error::io(&context, e))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Field> {
    read_image(path.as_ref(), b"P6", 3)
}

pub fn write_ppm(path: impl AsRef<Path>, u: &Field) -> Result<()> {
    write_image(path.as_ref(), u, b"P6", 3)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Field> {
    read_image(path.as_ref(), b"P5", 1)
}

pub fn write_pgm(path: impl AsRef<Path>, u: &Field) -> Result<()> {
    write_image(path.as_ref(), u, b"P5", 1)
}
