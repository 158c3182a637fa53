//! Closed-form and quadrature computations on hyperbolic model geometries:
//! the constants `c_n`, collar bounds for σ₁, and the explicit DtN quadratic
//! form on the half-disk.

mod collar;
mod halfplane;

pub use collar::{collar_bound, sech_integral, CollarBound};
pub use halfplane::{halfplane_bottom_estimate, halfplane_form, HalfplaneForm, LineFunction, PLATEAU_TAPER};

use crate::error::{Error, Result};

/// Absolute accuracy of every quadrature in this module.
pub const QUAD_TOL: f64 = 1e-12;

/// Upper limit standing in for infinity in `∫₀^∞ sechⁿ`; the tail beyond is
/// below `2ⁿe^{-40n}/n`.
pub const SECH_CUTOFF: f64 = 40.0;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn sech_pow(s: f64, n: i32) -> f64 {
    s.cosh().powi(-n)
}

/// `c_n = (∫₀^∞ sechⁿ s ds)⁻¹`.
pub fn c_n(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("c_n needs n >= 1"));
    }
    let k = n as i32;
    let body = adaptive_simpson(&|s| sech_pow(s, k), 0.0, SECH_CUTOFF, QUAD_TOL);
    // ∫_X^∞ sechⁿ ≈ 2ⁿ e^{-nX} / n
    let tail = 2f64.powi(k) * (-(n as f64) * SECH_CUTOFF).exp() / n as f64;
    Ok(1.0 / (body + tail))
}

/// One sample of `φ_n(r) = 1 − c_n ∫₀^r sechⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSample {
    pub r: f64,
    pub value: f64,
    pub derivative: f64,
}

/// Samples `φ_n` and `φ_n' = −c_n sechⁿ` on an ascending grid of radii.
pub fn phi_n_profile(n: u32, r_grid: &[f64]) -> Result<Vec<PhiSample>> {
    if r_grid.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(Error::param("radii must be finite and nonnegative"));
    }
    if r_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("radii must be ascending"));
    }
    let c = c_n(n)?;
    let k = n as i32;
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let hi = r.min(SECH_CUTOFF);
        if hi > prev {
            acc += adaptive_simpson(&|s| sech_pow(s, k), prev, hi, QUAD_TOL);
            prev = hi;
        }
        out.push(PhiSample {
            r,
            value: (1.0 - c * acc).clamp(0.0, 1.0),
            derivative: -c * sech_pow(r, k),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn c_n_closed_forms() {
        assert!((c_n(1).unwrap() - 2.0 / PI).abs() < 1e-10);
        assert!((c_n(2).unwrap() - 1.0).abs() < 1e-10);
        assert!((c_n(3).unwrap() - 4.0 / PI).abs() < 1e-10);
        // ∫ sech⁴ = 2/3
        assert!((c_n(4).unwrap() - 1.5).abs() < 1e-10);
        assert!(c_n(0).is_err());
    }

    #[test]
    fn c_n_increases() {
        let v: Vec<f64> = (1..=12).map(|n| c_n(n).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn phi_two_is_one_minus_tanh() {
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        for s in phi_n_profile(2, &grid).unwrap() {
            assert!((s.value - (1.0 - s.r.tanh())).abs() < 1e-10);
        }
    }

    #[test]
    fn phi_starts_at_one_with_slope_minus_c_n() {
        let h = 1e-3;
        let grid: Vec<f64> = (0..5).map(|i| i as f64 * h).collect();
        for n in 1..=6 {
            let p = phi_n_profile(n, &grid).unwrap();
            assert_eq!(p[0].value, 1.0);
            let c = c_n(n).unwrap();
            assert_eq!(p[0].derivative, -c);
            // fourth-order one-sided difference
            let f: Vec<f64> = p.iter().map(|s| s.value).collect();
            let d = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
            assert!((d + c).abs() < 1e-10, "n = {n}: {d} vs {}", -c);
        }
    }

    #[test]
    fn phi_decays_to_zero() {
        let p = phi_n_profile(1, &[0.0, 10.0, 30.0, 60.0]).unwrap();
        assert!(p[3].value < 1e-12);
    }

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        let v = adaptive_simpson(&|x| x * x * x - 2.0 * x, -1.0, 3.0, 1e-14);
        assert!((v - 12.0).abs() < 1e-12);
    }
}
