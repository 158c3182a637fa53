use std::collections::HashMap;
use std::fmt;

use super::{Mesh, MetricSpec};

/// One violated mesh invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    IndexOutOfRange { triangle: usize },
    NonFiniteVertex { vertex: usize },
    Orientation { triangle: usize, area: f64 },
    Degenerate { triangle: usize, area: f64 },
    Metric { location: String, message: String },
    NonManifoldEdge { a: usize, b: usize, count: usize },
    Boundary { message: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::IndexOutOfRange { triangle } => write!(f, "triangle {triangle} has a vertex index out of range"),
            Issue::NonFiniteVertex { vertex } => write!(f, "vertex {vertex} has non-finite coordinates"),
            Issue::Orientation { triangle, area } => {
                write!(f, "triangle {triangle} is clockwise (chart area {area:e})")
            }
            Issue::Degenerate { triangle, area } => write!(f, "triangle {triangle} is degenerate (chart area {area:e})"),
            Issue::Metric { location, message } => write!(f, "metric at {location}: {message}"),
            Issue::NonManifoldEdge { a, b, count } => write!(f, "edge ({a},{b}) borders {count} triangles"),
            Issue::Boundary { message } => write!(f, "boundary: {message}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub issues: Vec<Issue>,
}

impl Diagnostics {
    pub fn passes(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn summary(&self) -> String {
        const SHOWN: usize = 5;
        let mut parts: Vec<String> = self.issues.iter().take(SHOWN).map(Issue::to_string).collect();
        if self.issues.len() > SHOWN {
            parts.push(format!("... and {} more", self.issues.len() - SHOWN));
        }
        parts.join("; ")
    }

    pub fn has_orientation_issue(&self) -> bool {
        self.issues.iter().any(|i| matches!(i, Issue::Orientation { .. }))
    }

    pub fn has_metric_issue(&self) -> bool {
        self.issues.iter().any(|i| matches!(i, Issue::Metric { .. }))
    }
}

/// Relative degeneracy threshold on chart areas.
const AREA_EPS: f64 = 1e-12;

/// Checks every mesh invariant and reports all violations found.
pub fn validate(mesh: &Mesh) -> Diagnostics {
    let mut issues = Vec::new();
    let nv = mesh.vertex_count();

    for (v, p) in mesh.vertices().iter().enumerate() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            issues.push(Issue::NonFiniteVertex { vertex: v });
        }
    }

    let mut index_ok = true;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if tri.iter().any(|&v| v >= nv) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            issues.push(Issue::IndexOutOfRange { triangle: t });
            index_ok = false;
        }
    }
    if !index_ok {
        return Diagnostics { issues };
    }

    metric_issues(mesh, &mut issues);

    let areas: Vec<f64> = (0..mesh.triangle_count()).map(|t| mesh.chart_area(t)).collect();
    let max_area = areas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let eps = AREA_EPS * max_area;
    for (t, &area) in areas.iter().enumerate() {
        if area.abs() <= eps || !area.is_finite() {
            issues.push(Issue::Degenerate { triangle: t, area });
        } else if area < 0.0 {
            issues.push(Issue::Orientation { triangle: t, area });
        }
    }

    if !metric_is_usable(mesh) {
        return Diagnostics { issues };
    }
    for t in 0..mesh.triangle_count() {
        let g = mesh.triangle_metric(t);
        if !g.is_spd() {
            issues.push(Issue::Metric {
                location: format!("triangle {t}"),
                message: format!("tensor {g:?} is not symmetric positive definite"),
            });
        }
    }

    boundary_issues(mesh, &mut issues);
    Diagnostics { issues }
}

fn metric_is_usable(mesh: &Mesh) -> bool {
    match mesh.metric() {
        MetricSpec::Conformal { factor } => factor.len() == mesh.vertex_count(),
        MetricSpec::PerTriangleTensor { tensors } => tensors.len() == mesh.triangle_count(),
        _ => true,
    }
}

fn metric_issues(mesh: &Mesh, issues: &mut Vec<Issue>) {
    match mesh.metric() {
        MetricSpec::Euclidean => {}
        MetricSpec::Conformal { factor } => {
            if factor.len() != mesh.vertex_count() {
                issues.push(Issue::Metric {
                    location: "metric".into(),
                    message: format!("{} conformal factors for {} vertices", factor.len(), mesh.vertex_count()),
                });
            }
            for (v, &lam) in factor.iter().enumerate() {
                if !(lam > 0.0 && lam.is_finite()) {
                    issues.push(Issue::Metric {
                        location: format!("vertex {v}"),
                        message: format!("conformal factor {lam} is not finite and positive"),
                    });
                }
            }
        }
        MetricSpec::Collar { l0 } => {
            if !(*l0 > 0.0 && l0.is_finite()) {
                issues.push(Issue::Metric {
                    location: "metric".into(),
                    message: format!("collar length l0 = {l0} must be positive"),
                });
            }
            for (v, p) in mesh.vertices().iter().enumerate() {
                if !(0.0..1.0).contains(&p[1]) {
                    issues.push(Issue::Metric {
                        location: format!("vertex {v}"),
                        message: format!("collar coordinate t = {} outside [0, 1)", p[1]),
                    });
                }
            }
        }
        MetricSpec::PerTriangleTensor { tensors } => {
            if tensors.len() != mesh.triangle_count() {
                issues.push(Issue::Metric {
                    location: "metric".into(),
                    message: format!("{} tensors for {} triangles", tensors.len(), mesh.triangle_count()),
                });
            }
        }
    }
}

fn boundary_issues(mesh: &Mesh, issues: &mut Vec<Issue>) {
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    for (&(a, b), &count) in &edge_count {
        if count > 2 {
            issues.push(Issue::NonManifoldEdge { a, b, count });
        }
    }

    let mut labelled: HashMap<(usize, usize), usize> = HashMap::new();
    for (ci, c) in mesh.boundary().iter().enumerate() {
        let nv = c.vertices.len();
        if !(c.labels.len() == nv || c.labels.len() + 1 == nv) || nv < 2 {
            issues.push(Issue::Boundary {
                message: format!("chain {ci} has {} vertices and {} labels", nv, c.labels.len()),
            });
            continue;
        }
        if let Some(&v) = c.vertices.iter().find(|&&v| v >= mesh.vertex_count()) {
            issues.push(Issue::Boundary {
                message: format!("chain {ci} refers to missing vertex {v}"),
            });
            continue;
        }
        for k in 0..c.edge_count() {
            let (a, b) = c.edge(k);
            let key = (a.min(b), a.max(b));
            *labelled.entry(key).or_insert(0) += 1;
            match edge_count.get(&key) {
                Some(1) => {}
                Some(n) => issues.push(Issue::Boundary {
                    message: format!("chain {ci} edge {k} ({a},{b}) borders {n} triangles"),
                }),
                None => issues.push(Issue::Boundary {
                    message: format!("chain {ci} edge {k} ({a},{b}) is not a mesh edge"),
                }),
            }
        }
    }
    for (&(a, b), &count) in &edge_count {
        if count == 1 {
            match labelled.get(&(a, b)) {
                Some(1) => {}
                Some(n) => issues.push(Issue::Boundary {
                    message: format!("boundary edge ({a},{b}) carries {n} labels"),
                }),
                None => issues.push(Issue::Boundary {
                    message: format!("boundary edge ({a},{b}) belongs to no chain"),
                }),
            }
        }
    }
    // deterministic report order
    issues.sort_by_key(|i| i.to_string());
}
