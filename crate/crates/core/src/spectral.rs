//! Steklov and mixed Steklov-Dirichlet spectra via the discrete
//! Dirichlet-to-Neumann operator.
//!
//! The stiffness matrix is condensed onto the free boundary vertices,
//! `S = K_bb - K_bi K_ii⁻¹ K_ib`, and the dense pencil `S v = σ B v` is solved
//! by Cholesky reduction of the boundary mass `B`.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, boundary_mass_where, full_boundary_mass, NodalField, SymOperator};
use crate::linalg::{CsrMatrix, SparseCholesky};
use crate::mesh::{BoundaryArc, EdgeLabel, Mesh};
use crate::par;

/// Relative residual every returned eigenpair must meet.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Default relative slack for the exhaustion monotonicity report.
pub const TAU_MONO: f64 = 1e-6;

/// The condensed operator together with the data needed to extend boundary
/// values harmonically into the interior.
#[derive(Debug, Clone)]
pub struct DtnReduction {
    n_vertices: usize,
    /// Free boundary vertices, the rows and columns of `s`.
    pub boundary: Vec<usize>,
    /// Vertices eliminated by harmonic extension.
    pub interior: Vec<usize>,
    /// Vertices held at zero.
    pub constrained: Vec<usize>,
    pub s: DMatrix<f64>,
    // K_ii⁻¹ K_ib, interior × boundary
    x: DMatrix<f64>,
}

impl DtnReduction {
    pub fn dim(&self) -> usize {
        self.boundary.len()
    }

    /// Harmonic extension of values on [`Self::boundary`], zero on the
    /// constrained set.
    pub fn extend(&self, boundary_values: &[f64]) -> Vec<f64> {
        assert_eq!(boundary_values.len(), self.boundary.len());
        let mut u = vec![0.0; self.n_vertices];
        for (&v, &x) in self.boundary.iter().zip(boundary_values) {
            u[v] = x;
        }
        if !self.interior.is_empty() {
            let inner = -(&self.x * DVector::from_column_slice(boundary_values));
            for (&v, x) in self.interior.iter().zip(inner.iter()) {
                u[v] = *x;
            }
        }
        u
    }

    /// Values of a vertex field on the free boundary, in matrix order.
    pub fn restrict(&self, field: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|&v| field[v]).collect()
    }
}

/// Condenses the stiffness of `mesh` onto the boundary vertices not in
/// `constrained`; constrained vertices are held at zero.
pub fn discrete_dtn(mesh: &Mesh, constrained: &[usize]) -> Result<DtnReduction> {
    let k = assemble_stiffness(mesh)?;
    discrete_dtn_with(mesh, &k, constrained)
}

pub fn discrete_dtn_with(mesh: &Mesh, stiffness: &SymOperator, constrained: &[usize]) -> Result<DtnReduction> {
    let n = mesh.vertex_count();
    let fixed: BTreeSet<usize> = constrained.iter().copied().collect();
    if let Some(&v) = fixed.iter().find(|&&v| v >= n) {
        return Err(Error::param(format!("constrained vertex {v} out of range")));
    }
    let on_boundary: BTreeSet<usize> = mesh.boundary_vertices().into_iter().collect();
    let boundary: Vec<usize> = on_boundary.iter().copied().filter(|v| !fixed.contains(v)).collect();
    if boundary.is_empty() {
        return Err(Error::param("no free boundary vertices remain"));
    }
    let interior: Vec<usize> = (0..n).filter(|v| !on_boundary.contains(v) && !fixed.contains(v)).collect();

    let k = &stiffness.matrix;
    let k_bb = k.submatrix(&boundary, &boundary).to_dense();
    let nb = boundary.len();
    let (s, x) = if interior.is_empty() {
        (k_bb, DMatrix::zeros(0, nb))
    } else {
        let k_ii = k.submatrix(&interior, &interior);
        let k_ib = k.submatrix(&interior, &boundary);
        let chol = SparseCholesky::factor(&k_ii)
            .map_err(|e| Error::Solve(format!("interior block is singular, mesh looks degenerate ({e})")))?;
        let cols = columns(&k_ib);
        let solved: Vec<Vec<f64>> = par::map_slice(&cols, |c| chol.solve_refined(&k_ii, c));
        let x = DMatrix::from_fn(interior.len(), nb, |i, j| solved[j][i]);
        let k_bi = k.submatrix(&boundary, &interior);
        let mut s = k_bb;
        for j in 0..nb {
            let corr = k_bi.mul_vec(&solved[j]);
            for i in 0..nb {
                s[(i, j)] -= corr[i];
            }
        }
        (s, x)
    };
    // exact symmetry
    let s = (&s + s.transpose()) * 0.5;
    Ok(DtnReduction {
        n_vertices: n,
        boundary,
        interior,
        constrained: fixed.into_iter().collect(),
        s,
        x,
    })
}

fn columns(m: &CsrMatrix) -> Vec<Vec<f64>> {
    let mut cols = vec![vec![0.0; m.n_rows()]; m.n_cols()];
    for i in 0..m.n_rows() {
        for (j, v) in m.row(i) {
            cols[j][i] = v;
        }
    }
    cols
}

/// Which boundary problem a spectrum solves.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Steklov,
    Mixed { dirichlet: Vec<usize> },
}

/// The Dirichlet part `Y` of a mixed problem.
#[derive(Debug, Clone, PartialEq)]
pub enum DirichletSet {
    Label(EdgeLabel),
    Arcs(Vec<BoundaryArc>),
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub mesh_name: String,
    pub problem: Problem,
    pub eigenvalues: Vec<f64>,
    pub eigenfields: Vec<NodalField>,
    pub residuals: Vec<f64>,
}

impl SpectrumResult {
    /// Writes `index,eigenvalue,residual` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,eigenvalue,residual")?;
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            writeln!(out, "{i},{l:.17e},{r:.3e}")?;
        }
        Ok(())
    }
}

/// Eigenpairs of the pencil `(S, B)`, ascending, with `B`-orthonormal
/// vectors and relative residuals `‖Sv − λBv‖ / max(‖Sv‖, ε‖S‖‖v‖)`.
pub fn solve_pencil(s: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<DVector<f64>>, Vec<f64>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Spectral {
            message: "boundary mass is not positive definite".into(),
            max_residual: f64::NAN,
        })?;
    let l = chol.l();
    let w = l.solve_lower_triangular(s).ok_or_else(|| Error::Spectral {
        message: "triangular solve failed".into(),
        max_residual: f64::NAN,
    })?;
    let c = l.solve_lower_triangular(&w.transpose()).ok_or_else(|| Error::Spectral {
        message: "triangular solve failed".into(),
        max_residual: f64::NAN,
    })?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let s_norm = s.norm();
    let mut values = Vec::with_capacity(order.len());
    let mut vectors = Vec::with_capacity(order.len());
    let mut residuals = Vec::with_capacity(order.len());
    for &i in &order {
        let y = eig.eigenvectors.column(i).into_owned();
        let v = l.tr_solve_lower_triangular(&y).ok_or_else(|| Error::Spectral {
            message: "back substitution failed".into(),
            max_residual: f64::NAN,
        })?;
        let lam = eig.eigenvalues[i];
        let sv = s * &v;
        let r = (&sv - b * &v * lam).norm();
        // σ₀ = 0 has Sv ≈ 0, so the scale is floored by ‖S‖‖v‖
        let scale = sv.norm().max(1e-6 * s_norm * v.norm());
        values.push(lam);
        vectors.push(v);
        residuals.push(if scale > 0.0 { r / scale } else { r });
    }
    Ok((values, vectors, residuals))
}

fn finish(
    mesh: &Mesh,
    problem: Problem,
    red: &DtnReduction,
    b: &DMatrix<f64>,
    count: usize,
) -> Result<SpectrumResult> {
    let (vals, vecs, res) = solve_pencil(&red.s, b)?;
    let count = count.min(vals.len());
    let worst = res[..count].iter().copied().fold(0.0, f64::max);
    if !(worst <= RESIDUAL_TOL) {
        return Err(Error::Spectral {
            message: format!("eigenpair residual {worst:e} exceeds {RESIDUAL_TOL:e}"),
            max_residual: worst,
        });
    }
    let eigenfields = vecs[..count]
        .iter()
        .map(|v| NodalField::new(red.extend(v.as_slice())))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumResult {
        mesh_name: mesh.name().to_owned(),
        problem,
        eigenvalues: vals[..count].to_vec(),
        eigenfields,
        residuals: res[..count].to_vec(),
    })
}

/// The first `k + 1` Steklov eigenpairs `σ₀ = 0 ≤ σ₁ ≤ … ≤ σ_k` over the
/// whole boundary.
pub fn steklov_spectrum(mesh: &Mesh, k: usize) -> Result<SpectrumResult> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    let stiff = assemble_stiffness(mesh)?;
    let red = discrete_dtn_with(mesh, &stiff, &[])?;
    let mass = full_boundary_mass(mesh).matrix;
    let b = mass.submatrix(&red.boundary, &red.boundary).to_dense();
    finish(mesh, Problem::Steklov, &red, &b, k + 1)
}

/// Boundary edges `(chain, position)` that make up `y`.
fn dirichlet_edges(mesh: &Mesh, y: &DirichletSet) -> Result<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    match y {
        DirichletSet::Label(label) => {
            for (c, k, _, _, l) in mesh.boundary_edges() {
                if l == *label {
                    edges.insert((c, k));
                }
            }
        }
        DirichletSet::Arcs(arcs) => {
            for arc in arcs {
                arc.check(mesh)?;
                for k in arc.edge_positions(mesh) {
                    edges.insert((arc.chain, k));
                }
            }
        }
    }
    Ok(edges)
}

/// The first `k` mixed eigenpairs `0 < ξ₁ ≤ … ≤ ξ_k`: Steklov on the
/// boundary outside `y`, zero Dirichlet data on `y`.
pub fn mixed_spectrum(mesh: &Mesh, y: &DirichletSet, k: usize) -> Result<SpectrumResult> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    let edges = dirichlet_edges(mesh, y)?;
    let total: usize = mesh.boundary().iter().map(|c| c.edge_count()).sum();
    if edges.is_empty() {
        return Err(Error::param("the Dirichlet set is empty"));
    }
    if edges.len() == total {
        return Err(Error::param("the Dirichlet set covers the whole boundary"));
    }
    let mut dirichlet = BTreeSet::new();
    for &(c, k) in &edges {
        let (a, b) = mesh.boundary()[c].edge(k);
        dirichlet.insert(a);
        dirichlet.insert(b);
    }
    let dirichlet: Vec<usize> = dirichlet.into_iter().collect();
    let stiff = assemble_stiffness(mesh)?;
    let red = discrete_dtn_with(mesh, &stiff, &dirichlet)?;
    let mass = boundary_mass_where(mesh, |c, k, _| !edges.contains(&(c, k))).matrix;
    let b = mass.submatrix(&red.boundary, &red.boundary).to_dense();
    finish(mesh, Problem::Mixed { dirichlet }, &red, &b, k)
}

/// `ξ₁` along a family of exhaustion domains, with the Dirichlet part on the
/// interior cut of each.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionReport {
    pub xi1: Vec<f64>,
    pub tau_mono: f64,
    /// Indices `i` with `xi1[i] > xi1[i-1]·(1 + τ)`.
    pub violations: Vec<usize>,
}

impl ExhaustionReport {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn exhaustion_xi1(meshes: &[Mesh], tau_mono: f64) -> Result<ExhaustionReport> {
    for m in meshes {
        if !m.has_label(EdgeLabel::Interior) || !m.has_label(EdgeLabel::Exterior) {
            return Err(Error::param(format!(
                "mesh '{}' needs both interior and exterior boundary",
                m.name()
            )));
        }
    }
    let xi1 = meshes
        .iter()
        .map(|m| mixed_spectrum(m, &DirichletSet::Label(EdgeLabel::Interior), 1).map(|r| r.eigenvalues[0]))
        .collect::<Result<Vec<_>>>()?;
    let violations = (1..xi1.len())
        .filter(|&i| xi1[i] > xi1[i - 1] * (1.0 + tau_mono))
        .collect();
    Ok(ExhaustionReport {
        xi1,
        tau_mono,
        violations,
    })
}
