//! Relative capacities, isocapacitary constants and the level-set capacity
//! inequality.

mod gamma;
mod levelset;

use std::collections::BTreeSet;

use serde::Serialize;

pub use gamma::{
    candidate_arcs, default_coarse_step, gamma_bruteforce, gamma_search, GammaConfig, GammaEstimate, GammaMode,
    TraceEntry, WitnessB, BRUTEFORCE_MAX_BOUNDARY, TIE_RTOL,
};
pub use levelset::{default_levels, levelset_capacity_check, LevelsetReport, TAU_CAP};

use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, DirichletSolver, NodalField, SymOperator};
use crate::mesh::{arcs_vertex_set, BoundaryArc, EdgeLabel, Mesh};

/// Bound on `|value − flux_value| / max(value, 1)`.
pub const GREEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    /// Dirichlet energy of the potential.
    pub value: f64,
    /// Net discrete flux `Σ_{a∈A} (K u)_a` out of `A`.
    pub flux_value: f64,
    #[serde(skip)]
    pub potential: NodalField,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl CapacityResult {
    pub fn green_gap(&self) -> f64 {
        (self.value - self.flux_value).abs() / self.value.max(1.0)
    }
}

/// `Cap(A, B)`: energy of the harmonic function equal to 1 on `a` and 0 on
/// `b`.
pub fn capacity(mesh: &Mesh, a: &[usize], b: &[usize]) -> Result<CapacityResult> {
    let k = assemble_stiffness(mesh)?;
    capacity_with(&k, a, b)
}

pub fn capacity_with(stiffness: &SymOperator, a: &[usize], b: &[usize]) -> Result<CapacityResult> {
    let sa: BTreeSet<usize> = a.iter().copied().collect();
    let sb: BTreeSet<usize> = b.iter().copied().collect();
    if sa.is_empty() || sb.is_empty() {
        return Err(Error::param("capacity needs nonempty A and B"));
    }
    if let Some(v) = sa.intersection(&sb).next() {
        return Err(Error::param(format!("A and B share vertex {v}")));
    }
    let fixed: Vec<usize> = sa.union(&sb).copied().collect();
    let solver = DirichletSolver::new(stiffness, &fixed)?;
    let values: Vec<f64> = solver.fixed().iter().map(|v| if sa.contains(v) { 1.0 } else { 0.0 }).collect();
    let potential = solver.extend(&values)?;
    let ku = stiffness.apply(potential.values());
    // u vanishes on B and Ku vanishes at free vertices, so uᵀKu = Σ_A (Ku)_a
    let flux_value = sa.iter().map(|&v| ku[v]).sum();
    let value = stiffness.form(potential.values());
    Ok(CapacityResult {
        value,
        flux_value,
        potential,
        a: sa.into_iter().collect(),
        b: sb.into_iter().collect(),
    })
}

/// `Cap(F, ∂ᴵM)`: capacity of exterior arcs `f` relative to the interior
/// boundary.
pub fn capacity_compact_support(mesh: &Mesh, f: &[BoundaryArc]) -> Result<CapacityResult> {
    if !mesh.has_label(EdgeLabel::Interior) {
        return Err(Error::param(format!("mesh '{}' has no interior boundary", mesh.name())));
    }
    if f.is_empty() {
        return Err(Error::param("F must contain at least one arc"));
    }
    for arc in f {
        arc.check(mesh)?;
        let chain = &mesh.boundary()[arc.chain];
        if arc.edge_positions(mesh).iter().any(|&k| chain.labels[k] != EdgeLabel::Exterior) {
            return Err(Error::param(format!("arc {arc:?} leaves the exterior boundary")));
        }
    }
    let a = arcs_vertex_set(mesh, f);
    let b = mesh.vertices_with_label(EdgeLabel::Interior);
    capacity(mesh, &a, &b)
}
