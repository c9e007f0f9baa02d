//! Quality and structure metrics for denoising runs.

use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use nalgebra::Matrix3;

/// A named metric value with optional key-value details.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    pub details: Vec<(String, String)>,
}

impl MetricReport {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        MetricReport {
            name: name.into(),
            value,
            details: Vec::new(),
        }
    }

    /// `name,value[,key=value...]`
    pub fn to_csv_row(&self) -> String {
        let mut row = format!("{},{}", self.name, self.value);
        for (k, v) in &self.details {
            row.push_str(&format!(",{}={}", k, v));
        }
        row
    }
}

fn check_shapes(u: &Field, reference: &Field) -> Result<()> {
    if !u.same_shape(reference) {
        return Err(Error::ShapeMismatch {
            left: format!("grid {:?}, k={}", u.grid().dims(), u.k()),
            right: format!(
                "grid {:?}, k={}",
                reference.grid().dims(),
                reference.k()
            ),
        });
    }
    Ok(())
}

pub fn mse(u: &Field, reference: &Field) -> Result<f64> {
    check_shapes(u, reference)?;
    let n = u.values().len() as f64;
    Ok(u.values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Peak signal-to-noise ratio pooled over all channels; +inf when the
/// fields are identical.
pub fn psnr(u: &Field, reference: &Field, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!("peak {}", peak)));
    }
    let m = mse(u, reference)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

/// PSNR report with per-channel values in the details.
pub fn psnr_report(u: &Field, reference: &Field, peak: f64) -> Result<MetricReport> {
    let pooled = psnr(u, reference, peak)?;
    let mut report = MetricReport::new("psnr", pooled);
    let k = u.k();
    let nodes = u.grid().node_count() as f64;
    for c in 0..k {
        let m: f64 = (0..u.grid().node_count())
            .map(|i| {
                let d = u.node(i)[c] - reference.node(i)[c];
                d * d
            })
            .sum::<f64>()
            / nodes;
        let value = if m == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (peak * peak / m).log10()
        };
        report
            .details
            .push((format!("channel{}", c), format!("{}", value)));
    }
    Ok(report)
}

/// Mean great-circle distance between two unit 3-vector fields, radians.
pub fn geodesic_error_s2(u: &Field, reference: &Field) -> Result<f64> {
    check_shapes(u, reference)?;
    if u.k() != 3 {
        return Err(Error::InvalidParameter("need unit 3-vectors".into()));
    }
    let mut total = 0.0;
    for i in 0..u.grid().node_count() {
        let a = u.node(i);
        let b = reference.node(i);
        for p in [a, b] {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "node {} has norm {}",
                    i, norm
                )));
            }
        }
        let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
        total += dot.acos();
    }
    Ok(total / u.grid().node_count() as f64)
}

/// Mean nodewise Frobenius distance.
pub fn frobenius_error(u: &Field, reference: &Field) -> Result<f64> {
    check_shapes(u, reference)?;
    let mut total = 0.0;
    for i in 0..u.grid().node_count() {
        total += u
            .node(i)
            .iter()
            .zip(reference.node(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    }
    Ok(total / u.grid().node_count() as f64)
}

/// Smallest eigenvalue over all nodes of a symmetric 3x3 matrix field.
pub fn min_eigenvalue_field(u: &Field) -> Result<f64> {
    if u.k() != 9 {
        return Err(Error::InvalidParameter("need 3x3 matrices".into()));
    }
    let mut min = f64::INFINITY;
    for i in 0..u.grid().node_count() {
        let m = Matrix3::from_row_slice(u.node(i));
        if (m - m.transpose()).norm() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "node {} is not symmetric",
                i
            )));
        }
        let eig = ((m + m.transpose()) * 0.5).symmetric_eigen();
        for &l in eig.eigenvalues.iter() {
            min = min.min(l);
        }
    }
    Ok(min)
}

/// Node indices of the largest axis-aligned rectangle one cell inside the
/// boundary, traversed counterclockwise in (axis0, axis1) and closed.
pub fn interior_loop(grid: &Grid) -> Result<Vec<usize>> {
    let dims = grid.dims();
    if dims.len() != 2 {
        return Err(Error::InvalidParameter("index loops need a 2-D grid".into()));
    }
    let (n0, n1) = (dims[0], dims[1]);
    if n0 < 4 || n1 < 4 {
        return Err(Error::InvalidParameter("grid too small for a loop".into()));
    }
    let at = |i: usize, j: usize| i * n1 + j;
    let (lo0, hi0, lo1, hi1) = (1, n0 - 2, 1, n1 - 2);
    let mut path = Vec::new();
    for i in lo0..=hi0 {
        path.push(at(i, lo1));
    }
    for j in lo1 + 1..=hi1 {
        path.push(at(hi0, j));
    }
    for i in (lo0..hi0).rev() {
        path.push(at(i, hi1));
    }
    for j in (lo1 + 1..hi1).rev() {
        path.push(at(lo0, j));
    }
    path.push(at(lo0, lo1));
    Ok(path)
}

/// Winding of the squared line field around a closed loop, halved to undo
/// the squaring; rounds to the nearest half-integer. Errors when any
/// single angular step reaches pi/2, which marks an under-resolved loop.
pub fn line_field_index(v: &Field, loop_nodes: &[usize]) -> Result<f64> {
    if v.k() != 2 {
        return Err(Error::InvalidParameter("need k=2 unit vectors".into()));
    }
    if loop_nodes.len() < 4 || loop_nodes.first() != loop_nodes.last() {
        return Err(Error::InvalidParameter("loop must be closed".into()));
    }
    let angle = |i: usize| -> Result<f64> {
        let p = v.node(i);
        let norm = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "node {} has modulus {}",
                i, norm
            )));
        }
        Ok(p[1].atan2(p[0]))
    };
    let mut total = 0.0;
    let mut prev = angle(loop_nodes[0])?;
    for (step, &node) in loop_nodes[1..].iter().enumerate() {
        let next = angle(node)?;
        let mut inc = next - prev;
        while inc > std::f64::consts::PI {
            inc -= 2.0 * std::f64::consts::PI;
        }
        while inc <= -std::f64::consts::PI {
            inc += 2.0 * std::f64::consts::PI;
        }
        if inc.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::UnderResolvedLoop {
                increment: inc,
                step,
            });
        }
        total += inc;
        prev = next;
    }
    let index = total / (2.0 * std::f64::consts::PI) / 2.0;
    Ok((index * 2.0).round() / 2.0)
}
