//! The level-set capacity inequality
//! `∫₀^∞ Cap({u ≥ t}, {u ≤ 0}) d(t²) ≤ 4 ∫_{u ≥ 0} |∇u|²`.

use serde::Serialize;

use super::capacity_with;
use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, element_stiffness, NodalField};
use crate::mesh::Mesh;
use crate::par;

/// Relative slack on the right-hand side.
pub const TAU_CAP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelsetReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when both vanish.
    pub ratio: f64,
    pub tau_cap: f64,
    pub passes: bool,
    pub levels: Vec<f64>,
    pub capacities: Vec<f64>,
}

/// `count` equally spaced levels strictly inside `(0, max u)`.
pub fn default_levels(u: &NodalField, count: usize) -> Vec<f64> {
    let top = u.max();
    (1..=count).map(|i| top * i as f64 / (count + 1) as f64).collect()
}

/// Level sets are vertex sets `{v : u(v) ≥ t}` and `{v : u(v) ≤ 0}`; the
/// left side is the trapezoid rule for `2t·Cap` over `t_grid`, the right side
/// counts every triangle with a vertex where `u ≥ 0`.
pub fn levelset_capacity_check(mesh: &Mesh, u: &NodalField, t_grid: &[f64], tau_cap: f64) -> Result<LevelsetReport> {
    if u.len() != mesh.vertex_count() {
        return Err(Error::param("field length does not match the mesh"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.first().is_some_and(|&t| t <= 0.0) {
        return Err(Error::param("levels must be positive and strictly ascending"));
    }
    let rhs = 4.0 * nonnegative_energy(mesh, u)?;
    let b: Vec<usize> = (0..u.len()).filter(|&v| u[v] <= 0.0).collect();
    if b.is_empty() || t_grid.is_empty() {
        return Ok(report(0.0, rhs, tau_cap, t_grid.to_vec(), vec![0.0; t_grid.len()]));
    }
    let k = assemble_stiffness(mesh)?;
    let caps = par::map_slice(t_grid, |&t| {
        let a: Vec<usize> = (0..u.len()).filter(|&v| u[v] >= t).collect();
        if a.is_empty() {
            Ok(0.0)
        } else {
            capacity_with(&k, &a, &b).map(|c| c.value)
        }
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let lhs = t_grid
        .windows(2)
        .zip(caps.windows(2))
        .map(|(t, c)| 0.5 * (t[1] - t[0]) * (2.0 * t[0] * c[0] + 2.0 * t[1] * c[1]))
        .sum();
    Ok(report(lhs, rhs, tau_cap, t_grid.to_vec(), caps))
}

fn report(lhs: f64, rhs: f64, tau_cap: f64, levels: Vec<f64>, capacities: Vec<f64>) -> LevelsetReport {
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    LevelsetReport {
        lhs,
        rhs,
        ratio,
        tau_cap,
        passes: lhs <= rhs * (1.0 + tau_cap),
        levels,
        capacities,
    }
}

/// Energy of `u` over triangles with at least one vertex where `u ≥ 0`.
fn nonnegative_energy(mesh: &Mesh, u: &NodalField) -> Result<f64> {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if tri.iter().all(|&v| u[v] < 0.0) {
            continue;
        }
        let ke = element_stiffness(mesh, t)?;
        let x = [u[tri[0]], u[tri[1]], u[tri[2]]];
        for a in 0..3 {
            for b in 0..3 {
                total += x[a] * ke[a][b] * x[b];
            }
        }
    }
    Ok(total)
}
