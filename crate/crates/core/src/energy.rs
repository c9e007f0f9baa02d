//! The relaxed denoising energy and its diagnostic estimators.
//!
//! The energy is evaluated in the half-time factored form
//!
//! `E(u) = 1/2 ||u||^2 - 1/2 ||H u||^2 + lambda/2 ||H (u-f)||^2`
//!
//! with `H` the heat operator at `tau/2`. Because `H` is self-adjoint,
//! this equals the quadratic form of the full-time operator `H^2` while
//! staying nonnegative in floating point. The full-time operator used by
//! the first variation and the sphere-form energy is likewise `H^2`, so
//! every consumer sees one and the same positive semidefinite smoothing
//! operator.

use crate::error::{Error, Result};
use crate::field::{inner_product, l2_norm, lin_comb, sub, Field};
use crate::heat::HeatOperator;

pub struct EnergyParams {
    tau: f64,
    lambda: f64,
    f: Field,
    heat: HeatOperator,
    heat_half: HeatOperator,
}

impl EnergyParams {
    pub fn new(f: Field, tau: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda {} outside (0, 1]",
                lambda
            )));
        }
        let heat = HeatOperator::new(f.grid().clone(), tau)?;
        let heat_half = heat.half_time();
        Ok(EnergyParams {
            tau,
            lambda,
            f,
            heat,
            heat_half,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn data(&self) -> &Field {
        &self.f
    }

    pub fn heat(&self) -> &HeatOperator {
        &self.heat
    }

    pub fn heat_half(&self) -> &HeatOperator {
        &self.heat_half
    }

    /// The full-time smoothing as two half-time applications.
    pub fn apply_full(&self, u: &Field) -> Result<Field> {
        self.heat_half.apply(&self.heat_half.apply(u)?)
    }

    pub fn energy(&self, u: &Field) -> Result<f64> {
        let hu = self.heat_half.apply(u)?;
        let hd = self.heat_half.apply(&sub(u, &self.f)?)?;
        let nu = l2_norm(u);
        let nhu = l2_norm(&hu);
        let nhd = l2_norm(&hd);
        Ok(0.5 * nu * nu - 0.5 * nhu * nhu + 0.5 * self.lambda * nhd * nhd)
    }

    /// First variation `u - e^{dt} u + lambda e^{dt} (u - f)`.
    pub fn energy_variation(&self, u: &Field) -> Result<Field> {
        let fu = self.apply_full(u)?;
        let fd = self.apply_full(&sub(u, &self.f)?)?;
        let a = lin_comb(1.0, u, -1.0, &fu)?;
        lin_comb(1.0, &a, self.lambda, &fd)
    }

    /// Sphere-form energy `1/2 (1-lambda) <u, e^{dt} u> + lambda <u, e^{dt} f>`.
    /// For any u this satisfies
    /// `energy(u) = -energy_tilde(u) + 1/2 ||u||^2 + lambda/2 <f, e^{dt} f>`,
    /// so on unit-norm iterates maximizing it is minimizing the energy.
    pub fn energy_tilde(&self, u: &Field) -> Result<f64> {
        let fu = self.apply_full(u)?;
        let ff = self.apply_full(&self.f)?;
        Ok(0.5 * (1.0 - self.lambda) * inner_product(u, &fu)?
            + self.lambda * inner_product(u, &ff)?)
    }
}

/// Small-tau Dirichlet energy estimate `-(1/tau) <u, (e^{dt} - I) u>`,
/// evaluated as `(||u||^2 - ||e^{dt/2} u||^2) / tau` so it cannot go
/// negative.
pub fn dirichlet_estimate(heat: &HeatOperator, u: &Field) -> Result<f64> {
    let half = heat.half_time();
    let hu = half.apply(u)?;
    let nu = l2_norm(u);
    let nhu = l2_norm(&hu);
    Ok((nu * nu - nhu * nhu) / heat.tau())
}

/// Heat-content estimate of the interface length between the supports of
/// two indicator fields: `sqrt(pi/tau) <u1, e^{dt} u2>`. The prefactor
/// makes a flat interface report its exact length as tau -> 0.
pub fn interface_area_estimate(tau: f64, u1: &Field, u2: &Field) -> Result<f64> {
    for (name, u) in [("u1", u1), ("u2", u2)] {
        for (i, &v) in u.values().iter().enumerate() {
            if v.abs() > 1e-9 && (v - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "{} is not an indicator at value index {}: {}",
                    name, i, v
                )));
            }
        }
    }
    let heat = HeatOperator::new(u1.grid().clone(), tau)?;
    let hu2 = heat.apply(u2)?;
    Ok((std::f64::consts::PI / tau).sqrt() * inner_product(u1, &hu2)?)
}
