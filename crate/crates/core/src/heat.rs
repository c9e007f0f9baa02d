//! The heat semigroup applied component-wise to a [`Field`].
//!
//! Periodic grids use the spectral multiplier `exp(-tau |w|^2)` with
//! `w_i = 2 pi m_i / L_i`, which is exact for sampled Fourier modes.
//! Free-space grids extend the field by zero and convolve axis-by-axis
//! with a truncated Gaussian. The 1-D weights are cell averages of the
//! heat kernel,
//!
//! `w_j = 1/2 [ erf((j+1/2)h / sqrt(4 tau)) - erf((j-1/2)h / sqrt(4 tau)) ]`,
//!
//! i.e. the exact evolution of the piecewise-constant interpolant sampled
//! back at the cell centers. The weights are positive, symmetric, and sum
//! to less than one for every spacing, so the discrete operator is a
//! self-adjoint contraction even on grids that under-resolve the kernel.

use crate::error::{Error, Result};
use crate::field::{Boundary, Field, Grid};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use statrs::function::erf::erf;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatMode {
    FreeSpaceConvolution,
    PeriodicSpectral,
}

/// Kernel support in standard deviations; the discarded tail mass is
/// below 1e-8.
const KERNEL_STDDEVS: f64 = 6.0;

/// The solution operator of the diffusion equation at time `tau`.
#[derive(Clone)]
pub struct HeatOperator {
    grid: Grid,
    tau: f64,
    mode: HeatMode,
    /// FreeSpace: per-axis half-kernels of length radius+1 (symmetric).
    kernels: Vec<Vec<f64>>,
    /// Periodic: per-axis decay multipliers exp(-tau w^2).
    multipliers: Vec<Vec<f64>>,
    /// Periodic: per-axis FFT plans (forward, inverse).
    plans: Vec<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl std::fmt::Debug for HeatOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatOperator")
            .field("grid", &self.grid)
            .field("tau", &self.tau)
            .field("mode", &self.mode)
            .finish()
    }
}

fn cell_averaged_kernel(tau: f64, h: f64) -> Vec<f64> {
    let sigma = (2.0 * tau).sqrt();
    let radius = ((KERNEL_STDDEVS * sigma / h).ceil() as usize).max(1);
    let s = (4.0 * tau).sqrt();
    (0..=radius)
        .map(|j| {
            let a = (j as f64 - 0.5) * h / s;
            let b = (j as f64 + 0.5) * h / s;
            0.5 * (erf(b) - erf(a))
        })
        .collect()
}

impl HeatOperator {
    pub fn new(grid: Grid, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau {} must be > 0", tau)));
        }
        let spacing = grid.spacing();
        match grid.boundary() {
            Boundary::FreeSpace => {
                let kernels = spacing.iter().map(|&h| cell_averaged_kernel(tau, h)).collect();
                Ok(HeatOperator {
                    grid,
                    tau,
                    mode: HeatMode::FreeSpaceConvolution,
                    kernels,
                    multipliers: Vec::new(),
                    plans: Vec::new(),
                })
            }
            Boundary::Periodic => {
                let mut planner = FftPlanner::new();
                let mut multipliers = Vec::new();
                let mut plans = Vec::new();
                for (ax, &n) in grid.dims().iter().enumerate() {
                    let l = grid.lengths()[ax];
                    let mult = (0..n)
                        .map(|j| {
                            // integer frequencies in [-n/2, n/2)
                            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                            let w = 2.0 * std::f64::consts::PI * m / l;
                            (-tau * w * w).exp()
                        })
                        .collect();
                    multipliers.push(mult);
                    plans.push((planner.plan_fft_forward(n), planner.plan_fft_inverse(n)));
                }
                Ok(HeatOperator {
                    grid,
                    tau,
                    mode: HeatMode::PeriodicSpectral,
                    kernels: Vec::new(),
                    multipliers,
                    plans,
                })
            }
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mode(&self) -> HeatMode {
        self.mode
    }

    /// FreeSpace kernel radius in cells for the given axis.
    pub fn kernel_radius_cells(&self, axis: usize) -> usize {
        match self.mode {
            HeatMode::FreeSpaceConvolution => self.kernels[axis].len() - 1,
            HeatMode::PeriodicSpectral => 0,
        }
    }

    /// The same operator at half the diffusion time.
    pub fn half_time(&self) -> HeatOperator {
        HeatOperator::new(self.grid.clone(), self.tau / 2.0)
            .expect("halving a valid tau stays valid")
    }

    /// The spectral decay factor for integer frequency `m` on `axis`.
    /// Periodic mode only; used to check the multipliers directly.
    pub fn decay_factor(&self, axis: usize, m: i64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * m as f64 / self.grid.lengths()[axis];
        (-self.tau * w * w).exp()
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        if u.grid() != &self.grid {
            return Err(Error::ShapeMismatch {
                left: format!("operator grid {:?}", self.grid.dims()),
                right: format!("field grid {:?}", u.grid().dims()),
            });
        }
        let k = u.k();
        let n = self.grid.node_count();
        let mut out = Field::zeros(self.grid.clone(), k);
        let mut channel = vec![0.0; n];
        for c in 0..k {
            for i in 0..n {
                channel[i] = u.values()[i * k + c];
            }
            match self.mode {
                HeatMode::FreeSpaceConvolution => self.diffuse_channel_freespace(&mut channel),
                HeatMode::PeriodicSpectral => self.diffuse_channel_periodic(&mut channel),
            }
            for i in 0..n {
                out.values_mut()[i * k + c] = channel[i];
            }
        }
        Ok(out)
    }

    fn diffuse_channel_freespace(&self, data: &mut [f64]) {
        let dims = self.grid.dims().to_vec();
        for ax in 0..dims.len() {
            let n = dims[ax];
            let stride: usize = dims[ax + 1..].iter().product();
            let outer: usize = dims[..ax].iter().product();
            let kernel = &self.kernels[ax];
            let r = kernel.len() - 1;
            let mut line = vec![0.0; n];
            let mut conv = vec![0.0; n];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for j in 0..n {
                        line[j] = data[base + j * stride];
                    }
                    for i in 0..n {
                        // zero extension outside [0, n)
                        let mut acc = kernel[0] * line[i];
                        let jmax = r.min(n - 1 - i);
                        for j in 1..=jmax {
                            acc += kernel[j] * line[i + j];
                        }
                        let jmax = r.min(i);
                        for j in 1..=jmax {
                            acc += kernel[j] * line[i - j];
                        }
                        conv[i] = acc;
                    }
                    for j in 0..n {
                        data[base + j * stride] = conv[j];
                    }
                }
            }
        }
    }

    fn diffuse_channel_periodic(&self, data: &mut [f64]) {
        let dims = self.grid.dims().to_vec();
        let total: usize = dims.iter().product();
        let mut buf: Vec<Complex<f64>> =
            data.iter().map(|&v| Complex::new(v, 0.0)).collect();
        for ax in 0..dims.len() {
            let n = dims[ax];
            let stride: usize = dims[ax + 1..].iter().product();
            let outer: usize = dims[..ax].iter().product();
            let (fwd, _) = &self.plans[ax];
            let mult = &self.multipliers[ax];
            let mut line = vec![Complex::new(0.0, 0.0); n];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for j in 0..n {
                        line[j] = buf[base + j * stride];
                    }
                    fwd.process(&mut line);
                    for j in 0..n {
                        line[j] *= mult[j];
                    }
                    for j in 0..n {
                        buf[base + j * stride] = line[j];
                    }
                }
            }
        }
        for ax in 0..dims.len() {
            let n = dims[ax];
            let stride: usize = dims[ax + 1..].iter().product();
            let outer: usize = dims[..ax].iter().product();
            let (_, inv) = &self.plans[ax];
            let mut line = vec![Complex::new(0.0, 0.0); n];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for j in 0..n {
                        line[j] = buf[base + j * stride];
                    }
                    inv.process(&mut line);
                    for j in 0..n {
                        buf[base + j * stride] = line[j];
                    }
                }
            }
        }
        let scale = 1.0 / total as f64;
        for (d, b) in data.iter_mut().zip(&buf) {
            *d = b.re * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{inner_product, l2_norm, lin_comb, sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: &Grid, k: usize, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.node_count();
        let values = (0..k * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::new(grid.clone(), k, values).unwrap()
    }

    #[test]
    fn periodic_sine_decays_by_exact_multiplier() {
        let n = 64;
        let grid = Grid::unit(vec![n], Boundary::Periodic).unwrap();
        let u = Field::from_fn(grid.clone(), 1, |idx, out| {
            out[0] = (2.0 * PI * idx[0] as f64 / n as f64).sin()
        });
        let tau = 1e-3;
        let op = HeatOperator::new(grid, tau).unwrap();
        let v = op.apply(&u).unwrap();
        let factor = (-4.0 * PI * PI * tau).exp();
        let max_err = u
            .values()
            .iter()
            .zip(v.values())
            .fold(0.0f64, |m, (a, b)| m.max((factor * a - b).abs()));
        assert!(max_err < 1e-12, "max_err = {max_err:e}");
    }

    #[test]
    fn periodic_constant_is_fixed() {
        let grid = Grid::unit(vec![32, 16], Boundary::Periodic).unwrap();
        let u = Field::constant(grid.clone(), &[0.7, -0.3]);
        let op = HeatOperator::new(grid, 1e-2).unwrap();
        let v = op.apply(&u).unwrap();
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn periodic_2d_mode_decays_separably() {
        let n = 32;
        let grid = Grid::unit(vec![n, n], Boundary::Periodic).unwrap();
        let u = Field::from_fn(grid.clone(), 1, |idx, out| {
            let x = idx[0] as f64 / n as f64;
            let y = idx[1] as f64 / n as f64;
            out[0] = (2.0 * PI * 3.0 * x).sin() * (2.0 * PI * 2.0 * y).cos()
        });
        let tau = 2e-3;
        let op = HeatOperator::new(grid, tau).unwrap();
        let v = op.apply(&u).unwrap();
        let factor = (-4.0 * PI * PI * (9.0 + 4.0) * tau).exp();
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!((factor * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_multipliers_match_every_mode() {
        let n = 16;
        let grid = Grid::unit(vec![n], Boundary::Periodic).unwrap();
        let tau = 5e-3;
        let op = HeatOperator::new(grid.clone(), tau).unwrap();
        for m in 1..n / 2 {
            let u = Field::from_fn(grid.clone(), 1, |idx, out| {
                out[0] = (2.0 * PI * m as f64 * idx[0] as f64 / n as f64).cos()
            });
            let v = op.apply(&u).unwrap();
            let factor = op.decay_factor(0, m as i64);
            for (a, b) in u.values().iter().zip(v.values()) {
                assert!((factor * a - b).abs() < 1e-13);
            }
        }
    }

    fn gaussian_field(grid: &Grid, center: f64, variance: f64) -> Field {
        let h = grid.spacing()[0];
        Field::from_fn(grid.clone(), 1, |idx, out| {
            let x = idx[0] as f64 * h - center;
            out[0] = (2.0 * PI * variance).sqrt().recip() * (-x * x / (2.0 * variance)).exp()
        })
    }

    #[test]
    fn freespace_gaussian_gains_2tau_variance() {
        let grid = Grid::unit(vec![512], Boundary::FreeSpace).unwrap();
        let tau = 1e-3;
        let u = gaussian_field(&grid, 0.5, 0.01);
        let op = HeatOperator::new(grid.clone(), tau).unwrap();
        let v = op.apply(&u).unwrap();
        let expected = gaussian_field(&grid, 0.5, 0.01 + 2.0 * tau);
        let err = crate::field::l2_distance(&v, &expected).unwrap() / l2_norm(&expected);
        assert!(err < 1e-3, "relative error {err:e}");
    }

    #[test]
    fn half_time_halves_tau() {
        let grid = Grid::unit(vec![64], Boundary::FreeSpace).unwrap();
        let op = HeatOperator::new(grid, 1e-3).unwrap();
        assert_eq!(op.half_time().tau(), 5e-4);
    }

    #[test]
    fn periodic_semigroup_composition_is_exact() {
        let grid = Grid::unit(vec![64], Boundary::Periodic).unwrap();
        let op = HeatOperator::new(grid.clone(), 1e-3).unwrap();
        let half = op.half_time();
        let u = random_field(&grid, 1, 3);
        let twice = half.apply(&half.apply(&u).unwrap()).unwrap();
        let once = op.apply(&u).unwrap();
        let max_err = twice
            .values()
            .iter()
            .zip(once.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(max_err < 1e-12);
    }

    #[test]
    fn freespace_semigroup_composition_away_from_boundary() {
        let n = 8192;
        let grid = Grid::unit(vec![n], Boundary::FreeSpace).unwrap();
        let tau = 1e-3;
        let u = gaussian_field(&grid, 0.5, 0.01);
        let op = HeatOperator::new(grid.clone(), tau).unwrap();
        let half = op.half_time();
        let twice = half.apply(&half.apply(&u).unwrap()).unwrap();
        let once = op.apply(&u).unwrap();
        let h = grid.spacing()[0];
        let margin = (KERNEL_STDDEVS * (2.0 * tau).sqrt() / h).ceil() as usize;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in margin..n - margin {
            let d = twice.values()[i] - once.values()[i];
            num += d * d;
            den += once.values()[i] * once.values()[i];
        }
        let err = (num / den).sqrt();
        assert!(err < 1e-6, "relative error {err:e}");
    }

    #[test]
    fn linearity_both_modes() {
        for boundary in [Boundary::Periodic, Boundary::FreeSpace] {
            let grid = Grid::unit(vec![48], boundary).unwrap();
            let op = HeatOperator::new(grid.clone(), 2e-3).unwrap();
            let u = random_field(&grid, 2, 10);
            let v = random_field(&grid, 2, 11);
            let lhs = op.apply(&lin_comb(2.0, &u, -0.5, &v).unwrap()).unwrap();
            let rhs = lin_comb(2.0, &op.apply(&u).unwrap(), -0.5, &op.apply(&v).unwrap()).unwrap();
            let err = crate::field::l2_distance(&lhs, &rhs).unwrap()
                / l2_norm(&rhs).max(1e-300);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn contraction_both_modes() {
        for boundary in [Boundary::Periodic, Boundary::FreeSpace] {
            let grid = Grid::unit(vec![40, 13], boundary).unwrap();
            let op = HeatOperator::new(grid.clone(), 1e-3).unwrap();
            for seed in 0..20 {
                let u = random_field(&grid, 3, seed);
                let v = op.apply(&u).unwrap();
                assert!(l2_norm(&v) <= l2_norm(&u) * (1.0 + 1e-12));
                assert!(v.max_norm() <= u.max_norm() + 1e-12);
            }
        }
    }

    #[test]
    fn self_adjoint_both_modes() {
        for boundary in [Boundary::Periodic, Boundary::FreeSpace] {
            let grid = Grid::unit(vec![31, 17], boundary).unwrap();
            let op = HeatOperator::new(grid.clone(), 3e-3).unwrap();
            for seed in 0..10 {
                let u = random_field(&grid, 2, 100 + seed);
                let v = random_field(&grid, 2, 200 + seed);
                let a = inner_product(&op.apply(&u).unwrap(), &v).unwrap();
                let b = inner_product(&u, &op.apply(&v).unwrap()).unwrap();
                assert!((a - b).abs() <= 1e-10 * l2_norm(&u) * l2_norm(&v));
            }
        }
    }

    #[test]
    fn smoothing_is_monotone_in_tau() {
        for boundary in [Boundary::Periodic, Boundary::FreeSpace] {
            let grid = Grid::unit(vec![128], boundary).unwrap();
            let u = random_field(&grid, 1, 5);
            let mut prev = f64::INFINITY;
            for tau in [1e-4, 3e-4, 1e-3, 3e-3, 1e-2] {
                let op = HeatOperator::new(grid.clone(), tau).unwrap();
                let norm = l2_norm(&op.apply(&u).unwrap());
                assert!(norm <= prev * (1.0 + 1e-12));
                prev = norm;
            }
        }
    }

    #[test]
    fn freespace_zero_extension_damps_boundary() {
        let grid = Grid::unit(vec![64], Boundary::FreeSpace).unwrap();
        let u = Field::constant(grid.clone(), &[1.0]);
        let op = HeatOperator::new(grid, 1e-3).unwrap();
        let v = op.apply(&u).unwrap();
        // interior stays near one, the first node loses about half its mass
        let mid = v.values()[32];
        assert!((mid - 1.0).abs() < 1e-8, "mid {mid}");
        assert!(v.values()[0] < 0.6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = Grid::unit(vec![16], Boundary::Periodic).unwrap();
        assert!(HeatOperator::new(grid.clone(), 0.0).is_err());
        assert!(HeatOperator::new(grid.clone(), -1.0).is_err());
        let op = HeatOperator::new(grid, 1e-3).unwrap();
        let other = Grid::unit(vec![8], Boundary::Periodic).unwrap();
        let u = Field::zeros(other, 1);
        assert!(op.apply(&u).is_err());
    }

    #[test]
    fn kernel_radius_covers_six_stddevs() {
        let grid = Grid::unit(vec![512], Boundary::FreeSpace).unwrap();
        let tau = 1e-3;
        let op = HeatOperator::new(grid.clone(), tau).unwrap();
        let h = grid.spacing()[0];
        let r = op.kernel_radius_cells(0);
        assert!(r as f64 * h >= 6.0 * (2.0 * tau).sqrt());
    }

    #[test]
    fn semigroup_error_drops_with_difference_fields() {
        // sanity that sub/lin_comb plumbing used above behaves
        let grid = Grid::unit(vec![16], Boundary::Periodic).unwrap();
        let u = random_field(&grid, 1, 1);
        let d = sub(&u, &u).unwrap();
        assert_eq!(l2_norm(&d), 0.0);
    }
}
