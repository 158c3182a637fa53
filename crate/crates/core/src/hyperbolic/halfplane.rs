//! The DtN quadratic form of the hyperbolic half-disk written on the real
//! line: with `x` the hyperbolic arclength along the diameter,
//! `(Df, f) = c₁∫g² + (1/2π)∬ (g(x) − g(y))² / sinh²(x − y) dx dy`.

use std::f64::consts::PI;

use serde::Serialize;

use super::c_n;
use crate::error::{Error, Result};
use crate::par;

/// Width of the linear ramp on either side of a plateau.
pub const PLATEAU_TAPER: f64 = 1.0;

/// Samples of a compactly supported function on the uniform grid
/// `x_i = −X + iΔx`, `i = 0..=2X/Δx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFunction {
    half_width: f64,
    dx: f64,
    values: Vec<f64>,
}

impl LineFunction {
    pub fn new(half_width: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0 && half_width > 0.0) {
            return Err(Error::param("grid needs positive X and dx"));
        }
        let n = grid_points(half_width, dx);
        if values.len() != n {
            return Err(Error::param(format!("expected {n} samples, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("samples must be finite"));
        }
        if values[0] != 0.0 || values[n - 1] != 0.0 {
            return Err(Error::param("function must vanish at both ends of the grid"));
        }
        Ok(LineFunction { half_width, dx, values })
    }

    /// Samples `f` on the grid.
    pub fn sample(half_width: f64, dx: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = grid_points(half_width, dx);
        let values = (0..n).map(|i| f(-half_width + i as f64 * dx)).collect();
        LineFunction::new(half_width, dx, values)
    }

    /// 1 on `[−L, L]`, tapering linearly to 0 over [`PLATEAU_TAPER`].
    pub fn plateau(l: f64, dx: f64, half_width: f64) -> Result<Self> {
        if !(half_width > l + PLATEAU_TAPER) {
            return Err(Error::param(format!(
                "plateau of half-length {l} plus taper does not fit in [-{half_width}, {half_width}]"
            )));
        }
        LineFunction::sample(half_width, dx, |x| ((l + PLATEAU_TAPER - x.abs()) / PLATEAU_TAPER).clamp(0.0, 1.0))
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The function moved `k` grid steps to the right; the support must stay
    /// inside the grid.
    pub fn shifted(&self, k: isize) -> Result<Self> {
        let n = self.values.len() as isize;
        let mut out = vec![0.0; self.values.len()];
        for (i, &v) in self.values.iter().enumerate() {
            let j = i as isize + k;
            if v != 0.0 {
                if j <= 0 || j >= n - 1 {
                    return Err(Error::param("shift moves the support off the grid"));
                }
                out[j as usize] = v;
            }
        }
        LineFunction::new(self.half_width, self.dx, out)
    }
}

fn grid_points(half_width: f64, dx: f64) -> usize {
    (2.0 * half_width / dx).round() as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfplaneForm {
    pub form_value: f64,
    pub norm_sq: f64,
    pub rayleigh: f64,
}

/// Midpoint-rule evaluation of the form for `g` extended by zero to the
/// whole line. Off-diagonal cells use the kernel
/// `1/sinh²((i − j)Δx)`; a diagonal cell, where the integrand tends to
/// `g'(x)²`, contributes `g'(x_i)²Δx²` with central differences.
pub fn halfplane_form(g: &LineFunction) -> Result<HalfplaneForm> {
    let v = &g.values;
    let n = v.len();
    let dx = g.dx;
    let norm_sq: f64 = v.iter().map(|x| x * x).sum::<f64>() * dx;
    if norm_sq == 0.0 {
        return Err(Error::param("the zero function has no Rayleigh quotient"));
    }
    let kernel: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { (k as f64 * dx).sinh().powi(-2) }).collect();
    let tail = kernel_tails(n + 1, dx);
    let rows: Vec<f64> = par::map_range(n, |i| {
        // pairs with partners beyond either end of the grid, where g = 0,
        // counted in both orders
        let mut s = 2.0 * v[i] * v[i] * (tail[i + 1] + tail[n - i]);
        for j in 0..n {
            if j != i {
                let d = v[i] - v[j];
                s += d * d * kernel[i.abs_diff(j)];
            }
        }
        let slope = match i {
            0 => (v[1] - v[0]) / dx,
            _ if i == n - 1 => (v[i] - v[i - 1]) / dx,
            _ => (v[i + 1] - v[i - 1]) / (2.0 * dx),
        };
        s + slope * slope
    });
    let double: f64 = rows.iter().sum::<f64>() * dx * dx;
    let form_value = c_n(1)? * norm_sq + double / (2.0 * PI);
    Ok(HalfplaneForm {
        form_value,
        norm_sq,
        rayleigh: form_value / norm_sq,
    })
}

/// `tail[m] = Σ_{k≥m} 1/sinh²(kΔx)` for `m = 1..=m_max`; beyond `kΔx = 40`
/// the terms are summed as the geometric series of `4e^{−2kΔx}`.
fn kernel_tails(m_max: usize, dx: f64) -> Vec<f64> {
    let k_end = m_max.max((40.0 / dx).ceil() as usize) + 1;
    let q = (-2.0 * dx).exp();
    let mut tail = vec![0.0; k_end + 1];
    tail[k_end] = 4.0 * (-2.0 * k_end as f64 * dx).exp() / (1.0 - q);
    for k in (1..k_end).rev() {
        tail[k] = tail[k + 1] + (k as f64 * dx).sinh().powi(-2);
    }
    tail.truncate(m_max + 1);
    tail
}

/// Rayleigh quotients of the plateau family, one row per `L`.
pub fn halfplane_bottom_estimate(l_values: &[f64], dx: f64, half_width: f64) -> Result<Vec<(f64, f64)>> {
    let max_l = l_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(half_width > max_l + PLATEAU_TAPER) {
        return Err(Error::param(format!(
            "grid half-width {half_width} must exceed max L + taper = {}",
            max_l + PLATEAU_TAPER
        )));
    }
    l_values
        .iter()
        .map(|&l| Ok((l, halfplane_form(&LineFunction::plateau(l, dx, half_width)?)?.rayleigh)))
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    const C1: f64 = 2.0 / PI;

    #[test]
    fn plateau_family_descends_towards_c1() {
        let rows = halfplane_bottom_estimate(&[5.0, 10.0, 25.0, 50.0], 0.05, 60.0).unwrap();
        assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
        assert!(rows.iter().all(|r| r.1 >= C1));
        assert!(rows[3].1 <= C1 * 1.05, "{rows:?}");
    }

    #[test]
    fn halving_dx_barely_moves_the_quotient() {
        for l in [5.0, 10.0] {
            let a = halfplane_bottom_estimate(&[l], 0.1, 20.0).unwrap()[0].1;
            let b = halfplane_bottom_estimate(&[l], 0.05, 20.0).unwrap()[0].1;
            assert!((a - b).abs() < 1e-3, "L = {l}: {a} vs {b}");
        }
    }

    #[test]
    fn plateau_must_fit() {
        assert!(halfplane_bottom_estimate(&[10.0], 0.1, 10.5).is_err());
    }

    #[test]
    fn zero_function_is_rejected() {
        let g = LineFunction::sample(2.0, 0.1, |_| 0.0).unwrap();
        assert!(halfplane_form(&g).is_err());
    }

    #[test]
    fn translation_leaves_the_quotient_unchanged() {
        let g = LineFunction::sample(10.0, 0.05, |x| (-(x * x)).exp() * (x.abs() < 4.0) as u8 as f64).unwrap();
        let r0 = halfplane_form(&g).unwrap().rayleigh;
        for k in [-40, -7, 3, 60] {
            let r = halfplane_form(&g.shifted(k).unwrap()).unwrap().rayleigh;
            assert!((r - r0).abs() < 1e-12, "shift {k}: {r} vs {r0}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn rayleigh_never_drops_below_c1(
            inner in prop::collection::vec(-3.0f64..3.0, 1..60),
            pad in 1usize..20,
        ) {
            let dx = 0.1;
            let n = inner.len() + 2 * pad + 1;
            let mut values = vec![0.0; n];
            values[pad..pad + inner.len()].copy_from_slice(&inner);
            prop_assume!(values.iter().any(|v| *v != 0.0));
            let half = (n - 1) as f64 * dx / 2.0;
            let g = LineFunction::new(half, dx, values).unwrap();
            prop_assert!(halfplane_form(&g).unwrap().rayleigh >= C1 * (1.0 - 1e-14));
        }
    }
}
