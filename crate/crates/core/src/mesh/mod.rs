//! Triangulated 2D charts carrying a Riemannian metric and labelled boundary
//! chains.
//!
//! The metric is piecewise constant per triangle: conformal and collar
//! metrics are evaluated at the triangle barycenter, and boundary edges are
//! measured in the metric at their midpoint. Periodic collar charts identify
//! `t` and `t + 1`, so geometric quantities use unwrapped coordinates.

mod generate;
mod io;
mod validate;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{generate, GeometrySpec};
pub use io::{load, read_str, save, to_json_string};
pub use validate::{validate, Diagnostics, Issue};

/// Which part of the boundary an edge belongs to.
///
/// `Exterior` edges lie on the boundary of the ambient manifold; `Interior`
/// edges are cuts through its interior (the Dirichlet part of a mixed
/// problem, or the truncation of an exhaustion domain).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeLabel {
    #[serde(rename = "EXTERIOR")]
    Exterior,
    #[serde(rename = "INTERIOR")]
    Interior,
}

/// An ordered run of boundary vertices. The chain is closed when it has as
/// many labelled edges as vertices (the last edge returns to the first
/// vertex) and open when it has one edge fewer.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryChain {
    pub vertices: Vec<usize>,
    pub labels: Vec<EdgeLabel>,
}

impl BoundaryChain {
    pub fn is_closed(&self) -> bool {
        self.labels.len() == self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.labels.len()
    }

    /// Endpoints of edge `k` (taken modulo the edge count on closed chains).
    pub fn edge(&self, k: usize) -> (usize, usize) {
        let n = self.vertices.len();
        let k = if self.is_closed() { k % n } else { k };
        (self.vertices[k], self.vertices[(k + 1) % n])
    }
}

/// A metric tensor `[[g11, g12], [g12, g22]]` in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor2 {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Tensor2 {
    pub const IDENTITY: Tensor2 = Tensor2 {
        g11: 1.0,
        g12: 0.0,
        g22: 1.0,
    };

    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn is_spd(&self) -> bool {
        self.g11.is_finite()
            && self.g12.is_finite()
            && self.g22.is_finite()
            && self.g11 > 0.0
            && self.det() > 0.0
    }

    /// `sqrt(vᵀ g v)`.
    pub fn length(&self, v: [f64; 2]) -> f64 {
        (self.g11 * v[0] * v[0] + 2.0 * self.g12 * v[0] * v[1] + self.g22 * v[1] * v[1]).sqrt()
    }
}

/// The metric carried by a mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Euclidean,
    /// `g = λ·δ` with λ sampled at every vertex.
    Conformal { factor: Vec<f64> },
    /// Hyperbolic collar `dρ² + l₀² cosh²ρ dt²` in the `(ρ, t)` chart with
    /// `t` periodic of period 1.
    Collar { l0: f64 },
    /// One constant tensor per triangle.
    PerTriangleTensor { tensors: Vec<Tensor2> },
}

impl MetricSpec {
    pub fn variant_name(&self) -> &'static str {
        match self {
            MetricSpec::Euclidean => "Euclidean",
            MetricSpec::Conformal { .. } => "Conformal",
            MetricSpec::Collar { .. } => "Collar",
            MetricSpec::PerTriangleTensor { .. } => "PerTriangleTensor",
        }
    }

    fn is_periodic(&self) -> bool {
        matches!(self, MetricSpec::Collar { .. })
    }
}

/// A contiguous run of boundary edges `start..end` on one chain. On closed
/// chains positions wrap, and `end - start` may equal the edge count (the
/// whole loop).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub chain: usize,
    pub start: usize,
    pub end: usize,
}

impl BoundaryArc {
    pub fn new(chain: usize, start: usize, end: usize) -> Self {
        BoundaryArc { chain, start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        let chain = mesh
            .boundary()
            .get(self.chain)
            .ok_or_else(|| Error::param(format!("arc refers to missing chain {}", self.chain)))?;
        let n = chain.edge_count();
        if self.is_empty() {
            return Err(Error::param(format!("arc {self:?} is empty")));
        }
        let ok = if chain.is_closed() {
            self.start < n && self.len() <= n
        } else {
            self.end <= n
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("arc {self:?} out of range for chain with {n} edges")))
        }
    }

    /// Edge positions covered by the arc, reduced modulo the edge count.
    pub fn edge_positions(&self, mesh: &Mesh) -> Vec<usize> {
        let n = mesh.boundary()[self.chain].edge_count();
        (self.start..self.end).map(|k| k % n).collect()
    }

    /// Sorted distinct vertex ids touched by the arc.
    pub fn vertex_set(&self, mesh: &Mesh) -> Vec<usize> {
        let chain = &mesh.boundary()[self.chain];
        let n = chain.vertices.len();
        let set: BTreeSet<usize> = (self.start..=self.end).map(|k| chain.vertices[k % n]).collect();
        set.into_iter().collect()
    }
}

/// Sorted distinct vertices touched by a collection of arcs.
pub fn arcs_vertex_set(mesh: &Mesh, arcs: &[BoundaryArc]) -> Vec<usize> {
    let set: BTreeSet<usize> = arcs.iter().flat_map(|a| a.vertex_set(mesh)).collect();
    set.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    name: String,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    metric: MetricSpec,
    boundary: Vec<BoundaryChain>,
    // triangle owning each boundary edge, per chain
    edge_owner: Vec<Vec<Option<usize>>>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds a mesh and rejects it unless every mesh invariant holds.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        metric: MetricSpec,
        boundary: Vec<BoundaryChain>,
    ) -> Result<Mesh> {
        let mesh = Mesh::new_unchecked(name, vertices, triangles, metric, boundary);
        let diag = validate(&mesh);
        if diag.passes() {
            Ok(mesh)
        } else {
            Err(Error::param(format!("invalid mesh '{}': {}", mesh.name, diag.summary())))
        }
    }

    /// Builds a mesh without checking invariants. Use [`validate`] to
    /// inspect the result.
    pub fn new_unchecked(
        name: impl Into<String>,
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        metric: MetricSpec,
        boundary: Vec<BoundaryChain>,
    ) -> Mesh {
        let nv = vertices.len();
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                continue;
            }
            for k in 0..3 {
                owner.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(t);
            }
        }
        let edge_owner = boundary
            .iter()
            .map(|c| {
                (0..c.edge_count())
                    .map(|k| {
                        let (a, b) = c.edge(k);
                        owner.get(&edge_key(a, b)).copied()
                    })
                    .collect()
            })
            .collect();
        Mesh {
            name: name.into(),
            vertices,
            triangles,
            metric,
            boundary,
            edge_owner,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn boundary(&self) -> &[BoundaryChain] {
        &self.boundary
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Chart displacement from `a` to `b`, unwrapped across the periodic
    /// seam for collar charts.
    pub fn chart_delta(&self, a: usize, b: usize) -> [f64; 2] {
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let mut d = [pb[0] - pa[0], pb[1] - pa[1]];
        if self.metric.is_periodic() {
            d[1] -= d[1].round();
        }
        d
    }

    /// Chart corners of triangle `t`, unwrapped relative to its first vertex.
    pub fn triangle_chart(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        let p0 = self.vertices[a];
        let d1 = self.chart_delta(a, b);
        let d2 = self.chart_delta(a, c);
        [p0, [p0[0] + d1[0], p0[1] + d1[1]], [p0[0] + d2[0], p0[1] + d2[1]]]
    }

    /// Signed chart area of triangle `t` (positive when counterclockwise).
    pub fn chart_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let d1 = self.chart_delta(a, b);
        let d2 = self.chart_delta(a, c);
        0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
    }

    /// Metric tensor of triangle `t`, evaluated at its barycenter.
    pub fn triangle_metric(&self, t: usize) -> Tensor2 {
        match &self.metric {
            MetricSpec::Euclidean => Tensor2::IDENTITY,
            MetricSpec::Conformal { factor } => {
                let [a, b, c] = self.triangles[t];
                let lam = (factor[a] + factor[b] + factor[c]) / 3.0;
                Tensor2 {
                    g11: lam,
                    g12: 0.0,
                    g22: lam,
                }
            }
            MetricSpec::Collar { l0 } => {
                let p = self.triangle_chart(t);
                let rho = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
                collar_tensor(*l0, rho)
            }
            MetricSpec::PerTriangleTensor { tensors } => tensors[t],
        }
    }

    /// Metric length of the straight chart segment `a → b`, with the metric
    /// evaluated at the segment midpoint. `owner` supplies the tensor for
    /// per-triangle metrics.
    fn segment_length(&self, a: usize, b: usize, owner: Option<usize>) -> f64 {
        let d = self.chart_delta(a, b);
        match &self.metric {
            MetricSpec::Euclidean => Tensor2::IDENTITY.length(d),
            MetricSpec::Conformal { factor } => {
                let lam = 0.5 * (factor[a] + factor[b]);
                lam.sqrt() * d[0].hypot(d[1])
            }
            MetricSpec::Collar { l0 } => {
                let rho = self.vertices[a][0] + 0.5 * d[0];
                collar_tensor(*l0, rho).length(d)
            }
            MetricSpec::PerTriangleTensor { tensors } => {
                let t = owner.expect("boundary edge without owning triangle");
                tensors[t].length(d)
            }
        }
    }

    /// Metric length of edge `k` of boundary chain `chain`.
    pub fn boundary_edge_length(&self, chain: usize, k: usize) -> f64 {
        let c = &self.boundary[chain];
        let k = k % c.edge_count().max(1);
        let (a, b) = c.edge(k);
        self.segment_length(a, b, self.edge_owner[chain][k])
    }

    /// Iterates `(chain, position, a, b, label)` over every boundary edge.
    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, usize, usize, usize, EdgeLabel)> + '_ {
        self.boundary.iter().enumerate().flat_map(|(ci, c)| {
            (0..c.edge_count()).map(move |k| {
                let (a, b) = c.edge(k);
                (ci, k, a, b, c.labels[k])
            })
        })
    }

    /// Sorted distinct boundary vertices.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.boundary.iter().flat_map(|c| c.vertices.iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Sorted distinct vertices touched by an edge carrying `label`.
    pub fn vertices_with_label(&self, label: EdgeLabel) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .boundary_edges()
            .filter(|e| e.4 == label)
            .flat_map(|e| [e.2, e.3])
            .collect();
        set.into_iter().collect()
    }

    pub fn has_label(&self, label: EdgeLabel) -> bool {
        self.boundary.iter().any(|c| c.labels.contains(&label))
    }

    /// Number of distinct edges.
    pub fn edge_count(&self) -> usize {
        let mut set = BTreeSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                set.insert(edge_key(tri[k], tri[(k + 1) % 3]));
            }
        }
        set.len()
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.triangle_count() as i64
    }

    /// Total metric length of the edges covered by `arcs` (each edge counted
    /// once).
    pub fn boundary_length(&self, arcs: &[BoundaryArc]) -> Result<f64> {
        let mut covered = BTreeSet::new();
        for arc in arcs {
            arc.check(self)?;
            for k in arc.edge_positions(self) {
                covered.insert((arc.chain, k));
            }
        }
        Ok(covered.into_iter().map(|(c, k)| self.boundary_edge_length(c, k)).sum())
    }

    /// Length of the whole boundary.
    pub fn total_boundary_length(&self) -> f64 {
        self.boundary_edges().map(|(c, k, ..)| self.boundary_edge_length(c, k)).sum()
    }

    /// Length of the boundary edges carrying `label`.
    pub fn labelled_length(&self, label: EdgeLabel) -> f64 {
        self.boundary_edges()
            .filter(|e| e.4 == label)
            .map(|(c, k, ..)| self.boundary_edge_length(c, k))
            .sum()
    }

    /// The arc covering all of chain `chain`.
    pub fn whole_chain(&self, chain: usize) -> BoundaryArc {
        BoundaryArc::new(chain, 0, self.boundary[chain].edge_count())
    }

    /// Returns a copy whose boundary labels are replaced by `label_of(a, b,
    /// old)` for every boundary edge `a → b`.
    pub fn relabelled(&self, label_of: impl Fn(&Mesh, usize, usize, EdgeLabel) -> EdgeLabel) -> Mesh {
        let mut out = self.clone();
        for c in out.boundary.iter_mut() {
            for k in 0..c.edge_count() {
                let (a, b) = c.edge(k);
                c.labels[k] = label_of(self, a, b, c.labels[k]);
            }
        }
        out
    }

    /// Copy with every chart coordinate multiplied by `s`. Only meaningful
    /// for Euclidean meshes, where it is a homothety of the surface.
    pub fn scaled(&self, s: f64) -> Result<Mesh> {
        if !matches!(self.metric, MetricSpec::Euclidean) {
            return Err(Error::param("scaling is only defined for Euclidean meshes"));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param(format!("scale factor must be positive, got {s}")));
        }
        let mut out = self.clone();
        for v in out.vertices.iter_mut() {
            v[0] *= s;
            v[1] *= s;
        }
        out.name = format!("{}*{s}", self.name);
        Ok(out)
    }

    /// Copy with the boundary chains traversed in the opposite direction.
    pub fn with_reversed_boundary(&self) -> Mesh {
        let mut out = self.clone();
        for (ci, c) in out.boundary.iter_mut().enumerate() {
            let n = c.edge_count();
            if c.is_closed() {
                // edge k joins v[k] and v[k+1]; reversed chain keeps v[0] first
                let nv = c.vertices.len();
                let verts: Vec<usize> = (0..nv).map(|i| c.vertices[(nv - i) % nv]).collect();
                let labels: Vec<EdgeLabel> = (0..n).map(|k| c.labels[(2 * n - 1 - k) % n]).collect();
                let owners: Vec<Option<usize>> = (0..n).map(|k| self.edge_owner[ci][(2 * n - 1 - k) % n]).collect();
                c.vertices = verts;
                c.labels = labels;
                out.edge_owner[ci] = owners;
            } else {
                c.vertices.reverse();
                c.labels.reverse();
                out.edge_owner[ci].reverse();
            }
        }
        out
    }
}

pub(crate) fn collar_tensor(l0: f64, rho: f64) -> Tensor2 {
    let c = l0 * rho.cosh();
    Tensor2 {
        g11: 1.0,
        g12: 0.0,
        g22: c * c,
    }
}
