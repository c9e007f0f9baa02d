//! Pointwise projection onto the supported target sets.
//!
//! Each node value is sent to its closest point of the target. For convex
//! targets (boxes, balls, the semidefinite cone, and products of those)
//! this is the metric projection and is non-expansive. Sphere-family
//! targets have a null set where the closest point is not unique; inputs
//! landing there get a deterministic fallback and are counted.

use crate::error::{Error, Result};
use crate::field::Field;
use nalgebra::DMatrix;

/// Inputs closer to the sphere center than this are treated as degenerate.
pub const SPHERE_NULL_TOL: f64 = 1e-14;
/// Singular values below this mark a rank-deficient orthogonal projection.
pub const ORTH_NULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// Componentwise clamp to `[lo_i, hi_i]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Closed unit ball in R^k.
    UnitBall(usize),
    /// Unit sphere in R^k.
    Sphere(usize),
    /// Positive semidefinite cone of n x n symmetric matrices,
    /// stored row-major as k = n^2 components.
    Spd(usize),
    /// Orthogonal group O(n), stored row-major.
    Orthogonal(usize),
    /// Concatenated blocks, projected independently.
    Product(Vec<TargetSpec>),
    /// The real projective line through its squared (angle-doubled)
    /// representation; projects like the unit circle.
    Rp1ViaSquare,
}

/// Aggregate outcome of projecting a whole field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionStats {
    pub degenerate_count: usize,
    pub max_move: f64,
}

impl ProjectionStats {
    pub fn none() -> Self {
        ProjectionStats {
            degenerate_count: 0,
            max_move: 0.0,
        }
    }
}

impl TargetSpec {
    /// Hue circle times saturation and value intervals.
    pub fn hsv() -> Self {
        TargetSpec::Product(vec![
            TargetSpec::Sphere(2),
            TargetSpec::Box {
                lo: vec![0.0, 0.0],
                hi: vec![1.0, 1.0],
            },
        ])
    }

    /// Number of components per node this target acts on.
    pub fn k(&self) -> usize {
        match self {
            TargetSpec::Box { lo, .. } => lo.len(),
            TargetSpec::UnitBall(k) | TargetSpec::Sphere(k) => *k,
            TargetSpec::Spd(n) | TargetSpec::Orthogonal(n) => n * n,
            TargetSpec::Product(parts) => parts.iter().map(|p| p.k()).sum(),
            TargetSpec::Rp1ViaSquare => 2,
        }
    }

    /// Whether the target set is convex, hence the projection non-expansive.
    pub fn is_convex(&self) -> bool {
        match self {
            TargetSpec::Box { .. } | TargetSpec::UnitBall(_) | TargetSpec::Spd(_) => true,
            TargetSpec::Sphere(_) | TargetSpec::Orthogonal(_) | TargetSpec::Rp1ViaSquare => false,
            TargetSpec::Product(parts) => parts.iter().all(|p| p.is_convex()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::InvalidParameter("box bounds length mismatch".into()));
                }
                for (a, b) in lo.iter().zip(hi) {
                    if !(a.is_finite() && b.is_finite() && a <= b) {
                        return Err(Error::InvalidParameter(format!(
                            "box bounds [{}, {}] invalid",
                            a, b
                        )));
                    }
                }
            }
            TargetSpec::UnitBall(k) | TargetSpec::Sphere(k) => {
                if *k == 0 {
                    return Err(Error::InvalidParameter("zero-dimensional target".into()));
                }
            }
            TargetSpec::Spd(n) | TargetSpec::Orthogonal(n) => {
                if *n == 0 {
                    return Err(Error::InvalidParameter("zero-dimensional target".into()));
                }
            }
            TargetSpec::Product(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidParameter("empty product target".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
            TargetSpec::Rp1ViaSquare => {}
        }
        Ok(())
    }

    /// Projects one node value in place. Returns whether the input fell in
    /// the null set and took the deterministic fallback.
    pub fn project_point(&self, x: &[f64], out: &mut [f64]) -> Result<bool> {
        if x.len() != self.k() || out.len() != self.k() {
            return Err(Error::ShapeMismatch {
                left: format!("target k={}", self.k()),
                right: format!("point length {}", x.len()),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node: 0,
                component: i,
            });
        }
        match self {
            TargetSpec::Box { lo, hi } => {
                for i in 0..x.len() {
                    out[i] = x[i].clamp(lo[i], hi[i]);
                }
                Ok(false)
            }
            TargetSpec::UnitBall(_) => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm <= 1.0 {
                    out.copy_from_slice(x);
                } else {
                    for i in 0..x.len() {
                        out[i] = x[i] / norm;
                    }
                }
                Ok(false)
            }
            TargetSpec::Sphere(_) | TargetSpec::Rp1ViaSquare => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm < SPHERE_NULL_TOL {
                    out.fill(0.0);
                    out[0] = 1.0;
                    Ok(true)
                } else {
                    for i in 0..x.len() {
                        out[i] = x[i] / norm;
                    }
                    Ok(false)
                }
            }
            TargetSpec::Spd(n) => {
                let n = *n;
                let m = DMatrix::from_row_slice(n, n, x);
                let sym = (&m + m.transpose()) * 0.5;
                let eig = sym.symmetric_eigen();
                let clamped = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
                let proj = &eig.eigenvectors * clamped * eig.eigenvectors.transpose();
                // symmetrize again to kill rounding asymmetry
                let proj = (&proj + proj.transpose()) * 0.5;
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = proj[(i, j)];
                    }
                }
                Ok(false)
            }
            TargetSpec::Orthogonal(n) => {
                let n = *n;
                let m = DMatrix::from_row_slice(n, n, x);
                let svd = m.svd(true, true);
                let degenerate = svd
                    .singular_values
                    .iter()
                    .any(|&s| s < ORTH_NULL_TOL);
                let u = svd.u.as_ref().expect("computed");
                let vt = svd.v_t.as_ref().expect("computed");
                let q = u * vt;
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = q[(i, j)];
                    }
                }
                Ok(degenerate)
            }
            TargetSpec::Product(parts) => {
                let mut off = 0;
                let mut degenerate = false;
                for p in parts {
                    let k = p.k();
                    degenerate |= p.project_point(&x[off..off + k], &mut out[off..off + k])?;
                    off += k;
                }
                Ok(degenerate)
            }
        }
    }

    /// Projects every node of `u`, aggregating degeneracy and movement stats.
    pub fn project_field(&self, u: &Field) -> Result<(Field, ProjectionStats)> {
        if u.k() != self.k() {
            return Err(Error::ShapeMismatch {
                left: format!("target k={}", self.k()),
                right: format!("field k={}", u.k()),
            });
        }
        let mut out = Field::zeros(u.grid().clone(), u.k());
        let mut stats = ProjectionStats::none();
        let k = u.k();
        for i in 0..u.grid().node_count() {
            let degenerate = self.project_point(u.node(i), out.node_mut(i))?;
            if degenerate {
                stats.degenerate_count += 1;
            }
            let moved: f64 = u
                .node(i)
                .iter()
                .zip(out.node(i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            stats.max_move = stats.max_move.max(moved);
            let _ = k;
        }
        Ok((out, stats))
    }
}

/// Angle-doubling map: treats each node (a, b) as a + ib on the unit
/// circle and squares it, identifying antipodal directions.
pub fn rp1_encode(u: &Field) -> Result<Field> {
    if u.k() != 2 {
        return Err(Error::InvalidParameter(format!(
            "direction field has k={}, need 2",
            u.k()
        )));
    }
    let mut out = Field::zeros(u.grid().clone(), 2);
    for i in 0..u.grid().node_count() {
        let p = u.node(i);
        let norm = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "node {} has norm {}, not a unit direction",
                i, norm
            )));
        }
        let (a, b) = (p[0] / norm, p[1] / norm);
        let q = out.node_mut(i);
        q[0] = a * a - b * b;
        q[1] = 2.0 * a * b;
    }
    Ok(out)
}

/// Halves the angle of each node of `v`, choosing the square root whose
/// dot product with `reference` is nonnegative. A zero reference node
/// falls back to the principal root; the count of such nodes is returned.
pub fn rp1_decode(v: &Field, reference: &Field) -> Result<(Field, usize)> {
    if v.k() != 2 || reference.k() != 2 {
        return Err(Error::InvalidParameter("rp1 fields must have k=2".into()));
    }
    if v.grid() != reference.grid() {
        return Err(Error::ShapeMismatch {
            left: format!("{:?}", v.grid().dims()),
            right: format!("{:?}", reference.grid().dims()),
        });
    }
    let mut out = Field::zeros(v.grid().clone(), 2);
    let mut zero_refs = 0;
    for i in 0..v.grid().node_count() {
        let p = v.node(i);
        let half = p[1].atan2(p[0]) / 2.0;
        let mut root = [half.cos(), half.sin()];
        let r = reference.node(i);
        let rnorm = (r[0] * r[0] + r[1] * r[1]).sqrt();
        if rnorm < SPHERE_NULL_TOL {
            zero_refs += 1;
        } else if root[0] * r[0] + root[1] * r[1] < 0.0 {
            root[0] = -root[0];
            root[1] = -root[1];
        }
        out.node_mut(i).copy_from_slice(&root);
    }
    Ok((out, zero_refs))
}
