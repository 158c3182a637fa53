//! Metric-aware P1 finite elements: stiffness and boundary-mass assembly,
//! Dirichlet solves and energies.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Index;

use crate::error::{Error, Result};
use crate::linalg::{norm2, CsrMatrix, SparseCholesky};
use crate::mesh::{EdgeLabel, Mesh, MetricSpec};
use crate::par;

/// A piecewise-linear scalar function given by its vertex values.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField(Vec<f64>);

impl NodalField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("field value at vertex {i} is not finite")));
        }
        Ok(NodalField(values))
    }

    pub fn for_mesh(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.vertex_count() {
            return Err(Error::param(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.vertex_count()
            )));
        }
        NodalField::new(values)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        NodalField(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `vertex,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "vertex,value")?;
        for (i, v) in self.0.iter().enumerate() {
            writeln!(out, "{i},{v:.17e}")?;
        }
        Ok(())
    }
}

impl Index<usize> for NodalField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorRole {
    Stiffness,
    BoundaryMass,
}

/// A sparse symmetric operator on vertex values.
#[derive(Debug, Clone)]
pub struct SymOperator {
    pub role: OperatorRole,
    pub matrix: CsrMatrix,
}

impl SymOperator {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(u)
    }

    pub fn form(&self, u: &[f64]) -> f64 {
        self.matrix.quadratic_form(u)
    }

    pub fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    /// True when every off-diagonal entry is `<= 0`, the condition under
    /// which the discrete maximum principle holds.
    pub fn offdiagonals_nonpositive(&self) -> bool {
        (0..self.dim()).all(|i| self.matrix.row(i).all(|(j, v)| j == i || v <= 0.0))
    }
}

/// Element stiffness `∫_T (∇φ_a)ᵀ g⁻¹ ∇φ_b √det g dx` for triangle `t`.
pub fn element_stiffness(mesh: &Mesh, t: usize) -> Result<[[f64; 3]; 3]> {
    let p = mesh.triangle_chart(t);
    let area = mesh.chart_area(t);
    if !(area > 0.0) {
        return Err(Error::Assembly {
            triangle: t,
            message: format!("non-positive chart area {area:e}"),
        });
    }
    let grads = [
        [p[1][1] - p[2][1], p[2][0] - p[1][0]],
        [p[2][1] - p[0][1], p[0][0] - p[2][0]],
        [p[0][1] - p[1][1], p[1][0] - p[0][0]],
    ];
    // g⁻¹ √det g; identically the identity for conformal metrics in 2D
    let (a11, a12, a22) = match mesh.metric() {
        MetricSpec::Euclidean => (1.0, 0.0, 1.0),
        MetricSpec::Conformal { .. } => {
            let g = mesh.triangle_metric(t);
            if !g.is_spd() {
                return Err(Error::Assembly {
                    triangle: t,
                    message: format!("conformal factor {} is not positive", g.g11),
                });
            }
            (1.0, 0.0, 1.0)
        }
        _ => {
            let g = mesh.triangle_metric(t);
            if !g.is_spd() {
                return Err(Error::Assembly {
                    triangle: t,
                    message: format!("metric tensor {g:?} is not positive definite"),
                });
            }
            let s = g.det().sqrt();
            (g.g22 / s, -g.g12 / s, g.g11 / s)
        }
    };
    // ∇φ = grads / (2A); K = A ∇φᵀ G ∇φ = gradsᵀ G grads / (4A)
    let scale = 0.25 / area;
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let (u, v) = (grads[a], grads[b]);
            let val = scale * (u[0] * (a11 * v[0] + a12 * v[1]) + u[1] * (a12 * v[0] + a22 * v[1]));
            k[a][b] = val;
            k[b][a] = val;
        }
    }
    Ok(k)
}

pub fn assemble_stiffness(mesh: &Mesh) -> Result<SymOperator> {
    let elems: Vec<Result<[[f64; 3]; 3]>> = par::map_range(mesh.triangle_count(), |t| element_stiffness(mesh, t));
    let mut triplets = Vec::with_capacity(9 * mesh.triangle_count());
    for (t, ke) in elems.into_iter().enumerate() {
        let ke = ke?;
        let tri = mesh.triangles()[t];
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((tri[a], tri[b], ke[a][b]));
            }
        }
    }
    let n = mesh.vertex_count();
    Ok(SymOperator {
        role: OperatorRole::Stiffness,
        matrix: CsrMatrix::from_triplets(n, n, &triplets),
    })
}

/// Consistent P1 mass matrix of the boundary edges whose label is in
/// `labels`.
pub fn assemble_boundary_mass(mesh: &Mesh, labels: &[EdgeLabel]) -> SymOperator {
    boundary_mass_where(mesh, |_, _, label| labels.contains(&label))
}

/// Consistent boundary mass over the edges `(chain, position, label)` for
/// which `keep` holds.
pub fn boundary_mass_where(mesh: &Mesh, keep: impl Fn(usize, usize, EdgeLabel) -> bool) -> SymOperator {
    let mut triplets = Vec::new();
    for (c, k, a, b, label) in mesh.boundary_edges() {
        if !keep(c, k, label) {
            continue;
        }
        let len = mesh.boundary_edge_length(c, k);
        let (d, o) = (len / 3.0, len / 6.0);
        triplets.extend_from_slice(&[(a, a, d), (b, b, d), (a, b, o), (b, a, o)]);
    }
    let n = mesh.vertex_count();
    SymOperator {
        role: OperatorRole::BoundaryMass,
        matrix: CsrMatrix::from_triplets(n, n, &triplets),
    }
}

/// Mass over the whole boundary, whatever the labels.
pub fn full_boundary_mass(mesh: &Mesh) -> SymOperator {
    assemble_boundary_mass(mesh, &[EdgeLabel::Exterior, EdgeLabel::Interior])
}

/// Relative residual bound for every Dirichlet solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// A factorised Dirichlet problem: the stiffness restricted to the free
/// vertices, ready to extend any data given on a fixed vertex set.
#[derive(Debug, Clone)]
pub struct DirichletSolver {
    n: usize,
    fixed: Vec<usize>,
    free: Vec<usize>,
    k_ff: CsrMatrix,
    k_fd: CsrMatrix,
    chol: Option<SparseCholesky>,
}

impl DirichletSolver {
    /// Factorises `K[free, free]` for the given fixed set.
    pub fn new(stiffness: &SymOperator, fixed: &[usize]) -> Result<Self> {
        let n = stiffness.dim();
        if fixed.is_empty() {
            return Err(Error::param("harmonic extension needs at least one fixed vertex"));
        }
        let mut is_fixed = vec![false; n];
        for &v in fixed {
            if v >= n {
                return Err(Error::param(format!("fixed vertex {v} out of range")));
            }
            is_fixed[v] = true;
        }
        let fixed: Vec<usize> = (0..n).filter(|&v| is_fixed[v]).collect();
        let free: Vec<usize> = (0..n).filter(|&v| !is_fixed[v]).collect();
        let k_ff = stiffness.matrix.submatrix(&free, &free);
        let k_fd = stiffness.matrix.submatrix(&free, &fixed);
        let chol = if free.is_empty() {
            None
        } else {
            Some(SparseCholesky::factor(&k_ff).map_err(|e| {
                Error::Solve(format!("free vertices include a component with no fixed vertex ({e})"))
            })?)
        };
        Ok(DirichletSolver {
            n,
            fixed,
            free,
            k_ff,
            k_fd,
            chol,
        })
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Harmonic extension of `values` (one per vertex of [`Self::fixed`], in
    /// that order).
    pub fn extend(&self, values: &[f64]) -> Result<NodalField> {
        assert_eq!(values.len(), self.fixed.len());
        let mut u = vec![0.0; self.n];
        for (&v, &x) in self.fixed.iter().zip(values) {
            u[v] = x;
        }
        if let Some(chol) = &self.chol {
            let rhs: Vec<f64> = self.k_fd.mul_vec(values).into_iter().map(|x| -x).collect();
            let x = chol.solve_refined(&self.k_ff, &rhs);
            let kx = self.k_ff.mul_vec(&x);
            let res: Vec<f64> = kx.iter().zip(&rhs).map(|(a, b)| a - b).collect();
            let scale = norm2(&rhs).max(norm2(&kx));
            let r = norm2(&res);
            if r > SOLVE_TOL * scale && r > 0.0 {
                return Err(Error::Solve(format!("relative residual {:e} above tolerance", r / scale)));
            }
            for (&v, xi) in self.free.iter().zip(x) {
                u[v] = xi;
            }
        }
        NodalField::new(u)
    }
}

/// Harmonic extension of `fixed` data: agrees with it on its keys and is
/// discretely harmonic at every other vertex.
pub fn harmonic_extension(mesh: &Mesh, fixed: &BTreeMap<usize, f64>) -> Result<NodalField> {
    let k = assemble_stiffness(mesh)?;
    harmonic_extension_with(&k, fixed)
}

pub fn harmonic_extension_with(stiffness: &SymOperator, fixed: &BTreeMap<usize, f64>) -> Result<NodalField> {
    let verts: Vec<usize> = fixed.keys().copied().collect();
    let solver = DirichletSolver::new(stiffness, &verts)?;
    let values: Vec<f64> = solver.fixed().iter().map(|v| fixed[v]).collect();
    solver.extend(&values)
}

/// `uᵀ K u`.
pub fn dirichlet_energy(mesh: &Mesh, field: &NodalField) -> Result<f64> {
    let k = assemble_stiffness(mesh)?;
    Ok(k.form(field.values()))
}
