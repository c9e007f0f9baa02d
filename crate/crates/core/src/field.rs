//! Grid-sampled vector fields over a rectangular domain.
//!
//! A [`Field`] stores one k-vector of `f64` per grid node, row-major over
//! the grid, components contiguous per node. All quadrature uses the
//! uniform weight `prod(h_i)` at every node, consistent with the
//! zero-extension convention of the free-space diffusion step.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    FreeSpace,
    Periodic,
}

/// A regular rectangular grid in 1, 2, or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    lengths: Vec<f64>,
    boundary: Boundary,
}

impl Grid {
    pub fn new(dims: Vec<usize>, lengths: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1, 2, or 3, got {}",
                dims.len()
            )));
        }
        if dims.len() != lengths.len() {
            return Err(Error::ShapeMismatch {
                left: format!("dims {:?}", dims),
                right: format!("lengths {:?}", lengths),
            });
        }
        for (&n, &l) in dims.iter().zip(&lengths) {
            if n == 0 {
                return Err(Error::InvalidParameter("axis has 0 nodes".into()));
            }
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("axis length {}", l)));
            }
        }
        Ok(Grid {
            dims,
            lengths,
            boundary,
        })
    }

    /// Unit-length axes, the default domain scale.
    pub fn unit(dims: Vec<usize>, boundary: Boundary) -> Result<Self> {
        let lengths = vec![1.0; dims.len()];
        Grid::new(dims, lengths, boundary)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Node spacing per axis: `L/n` for periodic axes, `L/(n-1)` for free
    /// space. A single-node free-space axis degenerates to spacing `L`.
    pub fn spacing(&self) -> Vec<f64> {
        self.dims
            .iter()
            .zip(&self.lengths)
            .map(|(&n, &l)| match self.boundary {
                Boundary::Periodic => l / n as f64,
                Boundary::FreeSpace => l / (n.max(2) - 1) as f64,
            })
            .collect()
    }

    /// Quadrature weight shared by every node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }
}

/// A k-vector-valued function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    k: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, k: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        let expected = k * grid.node_count();
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                left: format!("{} values", values.len()),
                right: format!("{} expected", expected),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    node: i / k,
                    component: i % k,
                });
            }
        }
        Ok(Field { grid, k, values })
    }

    pub fn zeros(grid: Grid, k: usize) -> Self {
        let n = grid.node_count();
        Field {
            grid,
            k,
            values: vec![0.0; k * n],
        }
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let n = grid.node_count();
        let k = value.len();
        let mut values = Vec::with_capacity(k * n);
        for _ in 0..n {
            values.extend_from_slice(value);
        }
        Field { grid, k, values }
    }

    /// Builds a field by evaluating `f` at every node's multi-index.
    pub fn from_fn(grid: Grid, k: usize, mut f: impl FnMut(&[usize], &mut [f64])) -> Self {
        let n = grid.node_count();
        let mut values = vec![0.0; k * n];
        let mut idx = vec![0usize; grid.ndim()];
        for node in 0..n {
            f(&idx, &mut values[node * k..(node + 1) * k]);
            // row-major increment: last axis fastest
            for ax in (0..grid.ndim()).rev() {
                idx[ax] += 1;
                if idx[ax] < grid.dims()[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Field { grid, k, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.grid == other.grid && self.k == other.k
    }

    fn check_shape(&self, other: &Field) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch {
                left: format!("grid {:?}, k={}", self.grid.dims(), self.k),
                right: format!("grid {:?}, k={}", other.grid.dims(), other.k),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Quadrature approximation of the L2 inner product: `prod(h) * sum u.v`.
pub fn inner_product(u: &Field, v: &Field) -> Result<f64> {
    u.check_shape(v)?;
    let dot: f64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a * b)
        .sum();
    Ok(u.grid.cell_volume() * dot)
}

pub fn l2_norm(u: &Field) -> f64 {
    let dot: f64 = u.values.iter().map(|a| a * a).sum();
    (u.grid.cell_volume() * dot).sqrt()
}

pub fn l2_distance(u: &Field, v: &Field) -> Result<f64> {
    u.check_shape(v)?;
    let dot: f64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((u.grid.cell_volume() * dot).sqrt())
}

/// Pointwise `(1-lambda) u + lambda f`; exact at the endpoints.
pub fn convex_combine(u: &Field, f: &Field, lambda: f64) -> Result<Field> {
    u.check_shape(f)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda {} outside [0, 1]",
            lambda
        )));
    }
    if lambda == 0.0 {
        return Ok(u.clone());
    }
    if lambda == 1.0 {
        return Ok(f.clone());
    }
    let values = u
        .values
        .iter()
        .zip(&f.values)
        .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
        .collect();
    Ok(Field {
        grid: u.grid.clone(),
        k: u.k,
        values,
    })
}

/// Pointwise difference `u - v`.
pub fn sub(u: &Field, v: &Field) -> Result<Field> {
    u.check_shape(v)?;
    let values = u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect();
    Ok(Field {
        grid: u.grid.clone(),
        k: u.k,
        values,
    })
}

/// Pointwise `a*u + b*v`.
pub fn lin_comb(a: f64, u: &Field, b: f64, v: &Field) -> Result<Field> {
    u.check_shape(v)?;
    let values = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(x, y)| a * x + b * y)
        .collect();
    Ok(Field {
        grid: u.grid.clone(),
        k: u.k,
        values,
    })
}
