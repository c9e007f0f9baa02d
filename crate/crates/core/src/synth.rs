//! Synthetic datasets and their noise models.
//!
//! All randomness goes through one seeded ChaCha stream per call, drawn
//! node-major and component-minor, so outputs are reproducible across
//! platforms and thread counts.

use crate::error::{Error, Result};
use crate::field::{Boundary, Field, Grid};
use nalgebra::{Cholesky, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Gaussian steps in the tangent plane of each unit 3-vector,
    /// pushed back to the sphere along geodesics.
    TangentGaussianSphere { sigma: f64 },
    /// Perturbs the upper-triangular Cholesky factor of each SPD(3)
    /// value; the squared result stays positive semidefinite.
    RicianSPD { sigma: f64 },
    /// Independent additive noise on every component, no clipping.
    AdditiveGaussian { sigma: f64 },
    /// Perturbs the sample coordinates of the saddle line field and
    /// re-evaluates it, so noise respects the field's structure.
    CoordinateGaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::TangentGaussianSphere { sigma }
            | NoiseModel::RicianSPD { sigma }
            | NoiseModel::AdditiveGaussian { sigma }
            | NoiseModel::CoordinateGaussian { sigma } => sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub seed: u64,
}

/// Deterministic orthonormal tangent frame at a unit 3-vector: the
/// coordinate axis least aligned with `p`, made orthogonal, and its
/// cross product with `p`.
fn tangent_frame(p: &[f64]) -> ([f64; 3], [f64; 3]) {
    let abs = [p[0].abs(), p[1].abs(), p[2].abs()];
    let mut axis = 0;
    if abs[1] < abs[axis] {
        axis = 1;
    }
    if abs[2] < abs[axis] {
        axis = 2;
    }
    let mut e1 = [0.0; 3];
    e1[axis] = 1.0;
    let dot = e1[0] * p[0] + e1[1] * p[1] + e1[2] * p[2];
    for i in 0..3 {
        e1[i] -= dot * p[i];
    }
    let norm = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    for v in &mut e1 {
        *v /= norm;
    }
    let e2 = [
        p[1] * e1[2] - p[2] * e1[1],
        p[2] * e1[0] - p[0] * e1[2],
        p[0] * e1[1] - p[1] * e1[0],
    ];
    (e1, e2)
}

fn check_unit(p: &[f64]) -> Result<()> {
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "point has norm {}, expected unit",
            norm
        )));
    }
    Ok(())
}

/// Geodesic step on the unit 2-sphere: tangent coefficients are taken in
/// the deterministic frame at `p`.
pub fn sphere_exp(p: &[f64; 3], xi: &[f64; 2]) -> Result<[f64; 3]> {
    check_unit(p)?;
    let theta = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    if theta < 1e-15 {
        return Ok(*p);
    }
    let (e1, e2) = tangent_frame(p);
    let mut out = [0.0; 3];
    let (c, s) = (theta.cos(), theta.sin());
    for i in 0..3 {
        out[i] = c * p[i] + s * (xi[0] * e1[i] + xi[1] * e2[i]) / theta;
    }
    Ok(out)
}

/// Inverse of [`sphere_exp`]: tangent coefficients of the geodesic from
/// `p` to `q`, in the same frame.
pub fn sphere_log(p: &[f64; 3], q: &[f64; 3]) -> Result<[f64; 2]> {
    check_unit(p)?;
    check_unit(q)?;
    let dot = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0);
    if dot <= -1.0 + 1e-9 {
        return Err(Error::Antipodal);
    }
    let theta = dot.acos();
    let mut w = [0.0; 3];
    for i in 0..3 {
        w[i] = q[i] - dot * p[i];
    }
    let wnorm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if wnorm < 1e-15 {
        return Ok([0.0, 0.0]);
    }
    let (e1, e2) = tangent_frame(p);
    let scale = theta / wnorm;
    Ok([
        scale * (w[0] * e1[0] + w[1] * e1[1] + w[2] * e1[2]),
        scale * (w[0] * e2[0] + w[1] * e2[1] + w[2] * e2[2]),
    ])
}

/// A figure-eight curve pushed onto the sphere through the geodesic map
/// at the north pole; 1-D periodic signal of unit 3-vectors.
pub fn lemniscate_signal(n: usize) -> Result<Field> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let grid = Grid::new(vec![n], vec![2.0 * PI], Boundary::Periodic)?;
    let p = [0.0, 0.0, 1.0];
    Ok(Field::from_fn(grid, 3, |idx, out| {
        let t = 2.0 * PI * idx[0] as f64 / (n - 1) as f64;
        let scale = (PI / 2.0) / (1.0 + t.sin() * t.sin());
        let xi = [scale * t.cos(), scale * t.sin() * t.cos()];
        out.copy_from_slice(&sphere_exp(&p, &xi).expect("north pole is unit"));
    }))
}

fn staircase(t: f64) -> f64 {
    t + (PI / 2.0) * (t / (2.0 * PI)).floor()
}

/// Sphere-valued 2-D image: the third basis vector swept by two composed
/// rotations whose angles follow a staircase in each coordinate.
pub fn sphere_image(n: usize) -> Result<Field> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let len = 8.0 * PI;
    let grid = Grid::new(vec![n, n], vec![len, len], Boundary::Periodic)?;
    Ok(Field::from_fn(grid, 3, |idx, out| {
        let t = len * idx[0] as f64 / n as f64;
        let s = len * idx[1] as f64 / n as f64;
        let phi = staircase(t) + staircase(s);
        let theta = staircase(t) - staircase(s);
        // S_theta e3 then R_phi, written out
        let v = [-theta.sin(), 0.0, theta.cos()];
        out[0] = phi.cos() * v[0];
        out[1] = phi.sin() * v[0];
        out[2] = v[2];
    }))
}

fn indicator_gt(a: f64, b: f64) -> f64 {
    if a > b {
        1.0
    } else {
        0.0
    }
}

fn rot(i: usize, j: usize, angle: f64) -> Matrix3<f64> {
    let mut m = Matrix3::identity();
    m[(i, i)] = angle.cos();
    m[(j, j)] = angle.cos();
    m[(i, j)] = -angle.sin();
    m[(j, i)] = angle.sin();
    m
}

/// One matrix of the synthetic SPD(3) image at parameters `s, t` in [0,1].
pub fn spd_value(s: f64, t: f64) -> Matrix3<f64> {
    let a = rot(1, 2, PI * s)
        * rot(0, 1, (2.0 * PI * s - PI).abs())
        * rot(0, 1, (PI * (t - s - (t - s).abs()) - PI).abs());
    let v = Vector3::new(
        1.0 + indicator_gt(s + t, 1.0),
        1.0 + s + t + 1.5 * indicator_gt(s, 0.5),
        4.0 - s - t + 1.5 * indicator_gt(t, 0.5),
    );
    let g = a * Matrix3::from_diagonal(&v) * a.transpose();
    (g + g.transpose()) * 0.5
}

/// Synthetic SPD(3)-valued image on a free-space grid; each node holds a
/// row-major 3x3 matrix.
pub fn spd_image(n: usize) -> Result<Field> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    // pixel pitch chosen so the diffusion scale of the experiments
    // matches the feature scale of the pattern
    let grid = Grid::new(vec![n, n], vec![4.0, 4.0], Boundary::FreeSpace)?;
    Ok(Field::from_fn(grid, 9, |idx, out| {
        let s = idx[0] as f64 / (n - 1) as f64;
        let t = idx[1] as f64 / (n - 1) as f64;
        let g = spd_value(s, t);
        for i in 0..3 {
            for j in 0..3 {
                out[i * 3 + j] = g[(i, j)];
            }
        }
    }))
}

/// One direction of the saddle line field at coordinates `x, y`:
/// the square root of `ix - y`, normalized, with the first nonzero
/// coordinate made positive.
pub fn rp1_value(x: f64, y: f64) -> [f64; 2] {
    // ix - y = -y + i x
    let r = (x * x + y * y).sqrt().sqrt();
    let half = x.atan2(-y) / 2.0;
    let mut z = [r * half.cos(), r * half.sin()];
    let norm = (z[0] * z[0] + z[1] * z[1]).sqrt();
    if norm > 0.0 {
        z[0] /= norm;
        z[1] /= norm;
    } else {
        z = [1.0, 0.0];
    }
    if z[0] < 0.0 || (z[0] == 0.0 && z[1] < 0.0) {
        z[0] = -z[0];
        z[1] = -z[1];
    }
    z
}

fn rp1_coord(i: usize, n: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / (n - 1) as f64
}

/// Line-direction field with a single half-index singularity at the
/// domain center; free-space grid over [-1, 1]^2.
pub fn rp1_field(n: usize) -> Result<Field> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let grid = Grid::new(vec![n, n], vec![2.0, 2.0], Boundary::FreeSpace)?;
    Ok(Field::from_fn(grid, 2, |idx, out| {
        let x = rp1_coord(idx[0], n);
        let y = rp1_coord(idx[1], n);
        out.copy_from_slice(&rp1_value(x, y));
    }))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Applies the noise model to `u`, seeded and reproducible.
pub fn add_noise(u: &Field, spec: &NoiseSpec) -> Result<Field> {
    let sigma = spec.model.sigma();
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma {}", sigma)));
    }
    if sigma == 0.0 {
        return Ok(u.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.model {
        NoiseModel::TangentGaussianSphere { sigma } => {
            if u.k() != 3 {
                return Err(Error::InvalidParameter(
                    "tangent sphere noise needs unit 3-vectors".into(),
                ));
            }
            let mut out = Field::zeros(u.grid().clone(), 3);
            for i in 0..u.grid().node_count() {
                let p: [f64; 3] = u.node(i).try_into().unwrap();
                let xi = [sigma * normal(&mut rng), sigma * normal(&mut rng)];
                out.node_mut(i)
                    .copy_from_slice(&sphere_exp(&p, &xi)?);
            }
            Ok(out)
        }
        NoiseModel::RicianSPD { sigma } => {
            if u.k() != 9 {
                return Err(Error::InvalidParameter(
                    "rician noise needs 3x3 matrices".into(),
                ));
            }
            let sqrt_sigma = sigma.sqrt();
            let mut out = Field::zeros(u.grid().clone(), 9);
            for i in 0..u.grid().node_count() {
                let node = u.node(i);
                let m = Matrix3::from_row_slice(node);
                let sym = (m + m.transpose()) * 0.5;
                let chol = Cholesky::new(sym).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "node {} is not positive definite",
                        i
                    ))
                })?;
                // upper factor R with R^T R = f
                let r = chol.l().transpose();
                let mut b = Matrix3::zeros();
                for row in 0..3 {
                    for col in row..3 {
                        b[(row, col)] = normal(&mut rng);
                    }
                }
                let a = r + b * sqrt_sigma;
                let noisy = a.transpose() * a;
                let dst = out.node_mut(i);
                for row in 0..3 {
                    for col in 0..3 {
                        dst[row * 3 + col] = noisy[(row, col)];
                    }
                }
            }
            Ok(out)
        }
        NoiseModel::AdditiveGaussian { sigma } => {
            let mut out = u.clone();
            for v in out.values_mut() {
                *v += sigma * normal(&mut rng);
            }
            Ok(out)
        }
        NoiseModel::CoordinateGaussian { sigma } => {
            if u.k() != 2 || u.grid().ndim() != 2 {
                return Err(Error::InvalidParameter(
                    "coordinate noise applies to the 2-D line field".into(),
                ));
            }
            let dims = u.grid().dims().to_vec();
            let xs: Vec<f64> = (0..dims[0])
                .map(|i| rp1_coord(i, dims[0]) + sigma * normal(&mut rng))
                .collect();
            let ys: Vec<f64> = (0..dims[1])
                .map(|j| rp1_coord(j, dims[1]) + sigma * normal(&mut rng))
                .collect();
            Ok(Field::from_fn(u.grid().clone(), 2, |idx, out| {
                out.copy_from_slice(&rp1_value(xs[idx[0]], ys[idx[1]]));
            }))
        }
    }
}
