//! Upper bounds for σ₁ of hyperbolic surfaces from the collar around the
//! shortest boundary geodesic.
//!
//! In collar coordinates `ds² = dρ² + l₀²cosh²ρ dt²` with
//! `sinh(l₀/2)·sinh ρ₀ = 1`, the test functions are
//! `Φ = 1 − ∫₀^ρ sech / ∫₀^{ρ₀} sech` and `Ψ = g(ρ)·sin 2πt` with `g` the
//! linear ramp from 1 at `ρ = 0` to 0 at `ρ = ρ₁`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{adaptive_simpson, QUAD_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollarBound {
    pub l0: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub n_boundaries: u32,
    /// `∫₀^{ρ₀} sech ρ dρ`.
    pub sech_integral: f64,
    /// `l₀ / ∫₀^{ρ₀} sech`.
    pub e_phi: f64,
    /// `∫|∇Φ|²` by direct quadrature of `l₀ F'(ρ)² cosh ρ`.
    pub e_phi_quadrature: f64,
    /// `(l₀/2)·sinh ρ₁/ρ₁² + ρ₁/(6l₀)`.
    pub e_psi_bound: f64,
    /// `∫|∇Ψ|²` by quadrature, including the `h'(t)² = 4π²cos²2πt` factor.
    pub e_psi_quadrature: f64,
    /// `∫₀¹ sin 2πt dt`, the factor that makes `∫∇Φ·∇Ψ` vanish.
    pub cross_term: f64,
    pub norm_phi_sq: f64,
    pub norm_psi_sq: f64,
    /// `max{1/∫₀^{ρ₀} sech, sinh ρ₁/ρ₁² + ρ₁/(3l₀²)}`.
    pub bound_case1: f64,
    /// `max` of the two Rayleigh quotients with `e_psi_quadrature` in place
    /// of `e_psi_bound`.
    pub bound_case1_quadrature: f64,
    /// `2/∫₀^{ρ₀} sech`.
    pub bound_case2: f64,
}

impl CollarBound {
    /// The bound that applies to a surface with `n_boundaries` boundary
    /// components.
    pub fn applicable(&self) -> f64 {
        if self.n_boundaries == 1 {
            self.bound_case1
        } else {
            self.bound_case2
        }
    }
}

/// `∫₀^x sech ρ dρ` by adaptive quadrature.
pub fn sech_integral(x: f64) -> f64 {
    adaptive_simpson(&|r: f64| 1.0 / r.cosh(), 0.0, x, QUAD_TOL)
}

/// Collar width with `sinh(l₀/2)·sinh ρ₀ = 1`.
pub fn collar_width(l0: f64) -> f64 {
    (1.0 / (0.5 * l0).sinh()).asinh()
}

/// Evaluates the collar bounds; `rho1` defaults to `min(l₀, ρ₀)`.
pub fn collar_bound(l0: f64, rho1: Option<f64>, n_boundaries: u32) -> Result<CollarBound> {
    if !(l0 > 0.0 && l0.is_finite()) {
        return Err(Error::param(format!("l0 must be positive, got {l0}")));
    }
    if n_boundaries == 0 {
        return Err(Error::param("a surface needs at least one boundary geodesic"));
    }
    let rho0 = collar_width(l0);
    let rho1 = rho1.unwrap_or(l0.min(rho0));
    if !(rho1 > 0.0) {
        return Err(Error::param(format!("rho1 must be positive, got {rho1}")));
    }
    if rho1 > rho0 {
        return Err(Error::param(format!("rho1 = {rho1} exceeds the collar width rho0 = {rho0}")));
    }
    let i0 = sech_integral(rho0);
    let e_phi = l0 / i0;
    // F' = -sech/I₀
    let e_phi_quadrature = l0 * adaptive_simpson(&|r: f64| 1.0 / (r.cosh() * i0 * i0), 0.0, rho0, QUAD_TOL);

    let e_psi_bound = 0.5 * l0 * rho1.sinh() / (rho1 * rho1) + rho1 / (6.0 * l0);
    // ∫₀¹ sin² = 1/2, ∫₀¹ (2π cos)² = 2π²
    let radial = 0.5 * l0 * adaptive_simpson(&|r: f64| r.cosh(), 0.0, rho1, QUAD_TOL) / (rho1 * rho1);
    let angular = 2.0 * PI * PI / l0
        * adaptive_simpson(&|r: f64| (1.0 - r / rho1).powi(2) / r.cosh(), 0.0, rho1, QUAD_TOL);
    let e_psi_quadrature = radial + angular;
    let cross_term = adaptive_simpson(&|t: f64| (2.0 * PI * t).sin(), 0.0, 1.0, QUAD_TOL);

    let norm_phi_sq = l0;
    let norm_psi_sq = 0.5 * l0;
    let bound_case1 = (1.0 / i0).max(rho1.sinh() / (rho1 * rho1) + rho1 / (3.0 * l0 * l0));
    let bound_case1_quadrature = (e_phi / norm_phi_sq).max(e_psi_quadrature / norm_psi_sq);
    Ok(CollarBound {
        l0,
        rho0,
        rho1,
        n_boundaries,
        sech_integral: i0,
        e_phi,
        e_phi_quadrature,
        e_psi_bound,
        e_psi_quadrature,
        cross_term,
        norm_phi_sq,
        norm_psi_sq,
        bound_case1,
        bound_case1_quadrature,
        bound_case2: 2.0 / i0,
    })
}
