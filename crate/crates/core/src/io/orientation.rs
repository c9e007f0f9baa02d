//! Ridge-orientation extraction from a grayscale image.
//!
//! Each block of pixels gets the structure tensor of central-difference
//! gradients with a Gaussian block weighting. The along-ridge direction
//! is the eigenvector of the smaller eigenvalue. Blocks whose eigenvalue
//! ratio is below the confidence threshold are filled in from neighboring
//! confident blocks, averaged in the doubled-angle representation.

use crate::error::{Error, Result};
use crate::field::{Boundary, Field, Grid};

const CONFIDENCE_RATIO: f64 = 1.05;

/// Extracts one line direction per `block` x `block` pixel block.
/// Returns the direction field and the number of low-confidence blocks.
pub fn extract_orientation_field(img: &Field, block: usize) -> Result<(Field, usize)> {
    if img.k() != 1 || img.grid().ndim() != 2 {
        return Err(Error::InvalidParameter("need a 2-D grayscale field".into()));
    }
    if block < 2 {
        return Err(Error::InvalidParameter("block must be at least 2".into()));
    }
    let (rows, cols) = (img.grid().dims()[0], img.grid().dims()[1]);
    if rows < block || cols < block {
        return Err(Error::InvalidParameter(format!(
            "image {}x{} smaller than one {}x{} block",
            rows, cols, block, block
        )));
    }
    let at = |i: usize, j: usize| img.values()[i * cols + j];
    // central differences, one-sided at the border
    let grad = |i: usize, j: usize| -> (f64, f64) {
        let gy = match i {
            0 => at(1, j) - at(0, j),
            _ if i == rows - 1 => at(rows - 1, j) - at(rows - 2, j),
            _ => 0.5 * (at(i + 1, j) - at(i - 1, j)),
        };
        let gx = match j {
            0 => at(i, 1) - at(i, 0),
            _ if j == cols - 1 => at(i, cols - 1) - at(i, cols - 2),
            _ => 0.5 * (at(i, j + 1) - at(i, j - 1)),
        };
        (gx, gy)
    };
    let (nb_r, nb_c) = (rows / block, cols / block);
    let sigma = block as f64 / 2.0;
    // doubled-angle vector per block, or None when low-confidence
    let mut doubled: Vec<Option<[f64; 2]>> = Vec::with_capacity(nb_r * nb_c);
    for br in 0..nb_r {
        for bc in 0..nb_c {
            let center = ((block - 1) as f64) / 2.0;
            let (mut jxx, mut jxy, mut jyy) = (0.0, 0.0, 0.0);
            for di in 0..block {
                for dj in 0..block {
                    let w = (-((di as f64 - center).powi(2) + (dj as f64 - center).powi(2))
                        / (2.0 * sigma * sigma))
                        .exp();
                    let (gx, gy) = grad(br * block + di, bc * block + dj);
                    jxx += w * gx * gx;
                    jxy += w * gx * gy;
                    jyy += w * gy * gy;
                }
            }
            // eigenvalues of [[jxx, jxy], [jxy, jyy]]
            let trace = jxx + jyy;
            let diff = jxx - jyy;
            let disc = (diff * diff + 4.0 * jxy * jxy).sqrt();
            let hi = 0.5 * (trace + disc);
            let lo = 0.5 * (trace - disc);
            if hi < 1e-24 || (lo > 0.0 && hi / lo < CONFIDENCE_RATIO) {
                doubled.push(None);
                continue;
            }
            // eigenvector for the smaller eigenvalue, doubled angle
            let (ex, ey) = if jxy.abs() > 1e-24 {
                (jxy, lo - jxx)
            } else if jxx <= jyy {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            let theta = ey.atan2(ex);
            doubled.push(Some([(2.0 * theta).cos(), (2.0 * theta).sin()]));
        }
    }
    let low_confidence = doubled.iter().filter(|d| d.is_none()).count();
    fill_from_neighbors(&mut doubled, nb_r, nb_c);
    let longest = nb_r.max(nb_c).max(2) as f64 - 1.0;
    let scale = 2.0 / longest;
    let grid = Grid::new(
        vec![nb_r, nb_c],
        vec![
            (nb_r.max(2) - 1) as f64 * scale,
            (nb_c.max(2) - 1) as f64 * scale,
        ],
        Boundary::FreeSpace,
    )?;
    let field = Field::from_fn(grid, 2, |idx, out| {
        let d = doubled[idx[0] * nb_c + idx[1]].unwrap_or([1.0, 0.0]);
        let half = d[1].atan2(d[0]) / 2.0;
        let mut v = [half.cos(), half.sin()];
        if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
            v[0] = -v[0];
            v[1] = -v[1];
        }
        out.copy_from_slice(&v);
    });
    Ok((field, low_confidence))
}

fn fill_from_neighbors(doubled: &mut [Option<[f64; 2]>], nb_r: usize, nb_c: usize) {
    // breadth-first fill; a fully unconfident image stays unfilled and
    // falls back to the default direction downstream
    loop {
        let mut updates = Vec::new();
        for br in 0..nb_r {
            for bc in 0..nb_c {
                if doubled[br * nb_c + bc].is_some() {
                    continue;
                }
                let mut sum = [0.0; 2];
                let mut count = 0;
                let mut push = |r: usize, c: usize| {
                    if let Some(d) = doubled[r * nb_c + c] {
                        sum[0] += d[0];
                        sum[1] += d[1];
                        count += 1;
                    }
                };
                if br > 0 {
                    push(br - 1, bc);
                }
                if br + 1 < nb_r {
                    push(br + 1, bc);
                }
                if bc > 0 {
                    push(br, bc - 1);
                }
                if bc + 1 < nb_c {
                    push(br, bc + 1);
                }
                if count > 0 {
                    let norm = (sum[0] * sum[0] + sum[1] * sum[1]).sqrt();
                    let d = if norm > 1e-12 {
                        [sum[0] / norm, sum[1] / norm]
                    } else {
                        [1.0, 0.0]
                    };
                    updates.push((br * nb_c + bc, d));
                }
            }
        }
        if updates.is_empty() {
            break;
        }
        for (i, d) in updates {
            doubled[i] = Some(d);
        }
    }
}
