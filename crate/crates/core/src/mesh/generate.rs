use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{BoundaryChain, EdgeLabel, Mesh, MetricSpec};
use crate::error::{Error, Result};

/// Parametrised geometries the generator knows how to mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Unit disk; ring `i` carries `i * n_angular` vertices.
    Disk { n_radial: usize, n_angular: usize },
    /// Euclidean annulus `r_in <= |x| <= r_out`.
    Annulus {
        r_in: f64,
        r_out: f64,
        n_r: usize,
        n_a: usize,
    },
    /// `[0, w] x [0, h]` with `nx x ny` cells, two triangles each.
    Rectangle { w: f64, h: f64, nx: usize, ny: usize },
    /// Hyperbolic collar `[0, rho_max] x (R/Z)` around a geodesic of length
    /// `l0`. The `ρ = 0` loop is exterior, the `ρ = rho_max` loop interior.
    Collar {
        l0: f64,
        rho_max: f64,
        n_rho: usize,
        n_t: usize,
    },
    /// `{|x| <= r_trunc, y >= 0}` in the Poincaré disk chart. `resolution` is
    /// the number of cells per unit hyperbolic length along the diameter.
    PoincareHalfdisk { r_trunc: f64, resolution: f64 },
}

impl GeometrySpec {
    /// The same geometry with every count multiplied by `level`.
    pub fn refined(&self, level: usize) -> GeometrySpec {
        let l = level.max(1);
        match *self {
            GeometrySpec::Disk { n_radial, n_angular } => GeometrySpec::Disk {
                n_radial: n_radial * l,
                n_angular,
            },
            GeometrySpec::Annulus { r_in, r_out, n_r, n_a } => GeometrySpec::Annulus {
                r_in,
                r_out,
                n_r: n_r * l,
                n_a: n_a * l,
            },
            GeometrySpec::Rectangle { w, h, nx, ny } => GeometrySpec::Rectangle {
                w,
                h,
                nx: nx * l,
                ny: ny * l,
            },
            GeometrySpec::Collar { l0, rho_max, n_rho, n_t } => GeometrySpec::Collar {
                l0,
                rho_max,
                n_rho: n_rho * l,
                n_t: n_t * l,
            },
            GeometrySpec::PoincareHalfdisk { r_trunc, resolution } => GeometrySpec::PoincareHalfdisk {
                r_trunc,
                resolution: resolution * l as f64,
            },
        }
    }
}

pub fn generate(spec: &GeometrySpec) -> Result<Mesh> {
    match *spec {
        GeometrySpec::Disk { n_radial, n_angular } => disk(n_radial, n_angular),
        GeometrySpec::Annulus { r_in, r_out, n_r, n_a } => annulus(r_in, r_out, n_r, n_a),
        GeometrySpec::Rectangle { w, h, nx, ny } => rectangle(w, h, nx, ny),
        GeometrySpec::Collar { l0, rho_max, n_rho, n_t } => collar(l0, rho_max, n_rho, n_t),
        GeometrySpec::PoincareHalfdisk { r_trunc, resolution } => poincare_halfdisk(r_trunc, resolution),
    }
}

fn need_count(name: &str, n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::param(format!("{name} must be at least {min}, got {n}")))
    } else {
        Ok(())
    }
}

fn need_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive and finite, got {x}")))
    }
}

fn disk(n_radial: usize, n_angular: usize) -> Result<Mesh> {
    need_count("n_radial", n_radial, 2)?;
    // two vertices on the first ring would be collinear with the center
    need_count("n_angular", n_angular, 3)?;

    let mut vertices = vec![[0.0, 0.0]];
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(n_radial);
    for i in 1..=n_radial {
        let r = i as f64 / n_radial as f64;
        let count = i * n_angular;
        let ring: Vec<usize> = (0..count)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / count as f64;
                vertices.push([r * th.cos(), r * th.sin()]);
                vertices.len() - 1
            })
            .collect();
        rings.push(ring);
    }

    let mut triangles = Vec::new();
    let first = &rings[0];
    for k in 0..first.len() {
        triangles.push([0, first[k], first[(k + 1) % first.len()]]);
    }
    for w in rings.windows(2) {
        zip_rings(&w[0], &w[1], &mut triangles);
    }

    let outer = rings.last().unwrap().clone();
    let labels = vec![EdgeLabel::Exterior; outer.len()];
    Mesh::new(
        format!("disk({n_radial},{n_angular})"),
        vertices,
        triangles,
        MetricSpec::Euclidean,
        vec![BoundaryChain { vertices: outer, labels }],
    )
}

/// Triangulates the band between two concentric closed rings of uniformly
/// spaced vertices that both start at angle 0, merging by angle.
fn zip_rings(inner: &[usize], outer: &[usize], triangles: &mut Vec<[usize; 3]>) {
    let (ni, no) = (inner.len(), outer.len());
    let (mut a, mut b) = (0usize, 0usize);
    while a < ni || b < no {
        let next_in = (a + 1) as f64 / ni as f64;
        let next_out = (b + 1) as f64 / no as f64;
        if b < no && (a >= ni || next_out <= next_in) {
            triangles.push([inner[a % ni], outer[b % no], outer[(b + 1) % no]]);
            b += 1;
        } else {
            triangles.push([inner[a % ni], outer[b % no], inner[(a + 1) % ni]]);
            a += 1;
        }
    }
}

fn annulus(r_in: f64, r_out: f64, n_r: usize, n_a: usize) -> Result<Mesh> {
    need_positive("r_in", r_in)?;
    if !(r_out > r_in && r_out.is_finite()) {
        return Err(Error::param(format!("need 0 < r_in < r_out, got {r_in}, {r_out}")));
    }
    need_count("n_r", n_r, 2)?;
    need_count("n_a", n_a, 3)?;

    let idx = |i: usize, j: usize| i * n_a + (j % n_a);
    let mut vertices = Vec::with_capacity((n_r + 1) * n_a);
    for i in 0..=n_r {
        let r = r_in + (r_out - r_in) * i as f64 / n_r as f64;
        for j in 0..n_a {
            let th = 2.0 * PI * j as f64 / n_a as f64;
            vertices.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n_r * n_a);
    for i in 0..n_r {
        for j in 0..n_a {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let outer: Vec<usize> = (0..n_a).map(|j| idx(n_r, j)).collect();
    // clockwise on the inner circle keeps the domain on the left
    let inner: Vec<usize> = (0..n_a).map(|j| idx(0, (n_a - j) % n_a)).collect();
    Mesh::new(
        format!("annulus({r_in},{r_out},{n_r},{n_a})"),
        vertices,
        triangles,
        MetricSpec::Euclidean,
        vec![
            BoundaryChain {
                vertices: inner,
                labels: vec![EdgeLabel::Exterior; n_a],
            },
            BoundaryChain {
                vertices: outer,
                labels: vec![EdgeLabel::Exterior; n_a],
            },
        ],
    )
}

fn rectangle(w: f64, h: f64, nx: usize, ny: usize) -> Result<Mesh> {
    need_positive("w", w)?;
    need_positive("h", h)?;
    need_count("nx", nx, 2)?;
    need_count("ny", ny, 2)?;

    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([w * i as f64 / nx as f64, h * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let mut loop_: Vec<usize> = Vec::with_capacity(2 * (nx + ny));
    loop_.extend((0..nx).map(|i| idx(i, 0)));
    loop_.extend((0..ny).map(|j| idx(nx, j)));
    loop_.extend((0..nx).map(|i| idx(nx - i, ny)));
    loop_.extend((0..ny).map(|j| idx(0, ny - j)));
    let labels = vec![EdgeLabel::Exterior; loop_.len()];
    Mesh::new(
        format!("rectangle({w},{h},{nx},{ny})"),
        vertices,
        triangles,
        MetricSpec::Euclidean,
        vec![BoundaryChain { vertices: loop_, labels }],
    )
}

fn collar(l0: f64, rho_max: f64, n_rho: usize, n_t: usize) -> Result<Mesh> {
    need_positive("l0", l0)?;
    need_positive("rho_max", rho_max)?;
    need_count("n_rho", n_rho, 2)?;
    // with two columns the periodic unwrap of an edge would be ambiguous
    need_count("n_t", n_t, 3)?;

    let idx = |i: usize, j: usize| i * n_t + (j % n_t);
    let mut vertices = Vec::with_capacity((n_rho + 1) * n_t);
    for i in 0..=n_rho {
        let rho = rho_max * i as f64 / n_rho as f64;
        for j in 0..n_t {
            vertices.push([rho, j as f64 / n_t as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n_rho * n_t);
    for i in 0..n_rho {
        for j in 0..n_t {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let geodesic: Vec<usize> = (0..n_t).map(|j| idx(0, (n_t - j) % n_t)).collect();
    let far: Vec<usize> = (0..n_t).map(|j| idx(n_rho, j)).collect();
    Mesh::new(
        format!("collar({l0},{rho_max},{n_rho},{n_t})"),
        vertices,
        triangles,
        MetricSpec::Collar { l0 },
        vec![
            BoundaryChain {
                vertices: geodesic,
                labels: vec![EdgeLabel::Exterior; n_t],
            },
            BoundaryChain {
                vertices: far,
                labels: vec![EdgeLabel::Interior; n_t],
            },
        ],
    )
}

/// Truncated hyperbolic half-disk.
///
/// Vertices are placed on a grid in the coordinates `ζ = s + iφ` of the strip
/// `0 <= φ < π/2`, which the map `z = tanh(ζ/2)` sends conformally onto the
/// upper half of the unit disk with the diameter at `φ = 0`. Along the
/// diameter `s` is hyperbolic arclength, so a uniform `s` grid resolves the
/// boundary uniformly in the hyperbolic metric. The truncation `|z| <= r`
/// becomes `cos φ >= cosh(s) (1 - r²)/(1 + r²)`, so each column of the grid
/// stops exactly on the circle `|z| = r`.
fn poincare_halfdisk(r_trunc: f64, resolution: f64) -> Result<Mesh> {
    if !(r_trunc > 0.0 && r_trunc < 1.0) {
        return Err(Error::param(format!("r_trunc must lie in (0, 1), got {r_trunc}")));
    }
    need_positive("resolution", resolution)?;
    let s_end = 2.0 * r_trunc.atanh();
    let ds = 1.0 / resolution;
    if s_end < ds {
        return Err(Error::param(format!(
            "resolution {resolution} too coarse for r_trunc = {r_trunc}; need at least {}",
            1.0 / s_end
        )));
    }
    let rows = ((resolution * PI / 2.0).ceil() as usize).max(2);
    let q = (1.0 - r_trunc * r_trunc) / (1.0 + r_trunc * r_trunc);
    let top = |s: f64| (s.cosh() * q).min(1.0).acos();
    let to_disk = |s: f64, phi: f64| {
        let den = s.cosh() + phi.cos();
        [s.sinh() / den, phi.sin() / den]
    };

    // interior columns sit on the fixed lattice s = k ds so that different
    // truncations share their central columns
    let k_max = ((s_end - 0.5 * ds) / ds).floor() as i64;
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let left_end = vertices.len();
    vertices.push([-r_trunc, 0.0]);
    let mut columns: Vec<Vec<usize>> = Vec::new();
    for k in -k_max..=k_max {
        let s = k as f64 * ds;
        let phi_top = top(s);
        let col: Vec<usize> = (0..=rows)
            .map(|j| {
                let phi = phi_top * j as f64 / rows as f64;
                let p = if j == rows {
                    // land exactly on |z| = r
                    let p = to_disk(s, phi);
                    let scale = r_trunc / p[0].hypot(p[1]);
                    [p[0] * scale, p[1] * scale]
                } else {
                    to_disk(s, phi)
                };
                vertices.push(p);
                vertices.len() - 1
            })
            .collect();
        columns.push(col);
    }
    let right_end = vertices.len();
    vertices.push([r_trunc, 0.0]);

    let mut triangles = Vec::new();
    let first = &columns[0];
    for j in 0..rows {
        triangles.push([left_end, first[j], first[j + 1]]);
    }
    for w in columns.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        for j in 0..rows {
            triangles.push([a[j], b[j], b[j + 1]]);
            triangles.push([a[j], b[j + 1], a[j + 1]]);
        }
    }
    let last = columns.last().unwrap();
    for j in 0..rows {
        triangles.push([last[j], right_end, last[j + 1]]);
    }

    let mut diameter = vec![left_end];
    diameter.extend(columns.iter().map(|c| c[0]));
    diameter.push(right_end);
    let mut arc = vec![right_end];
    arc.extend(columns.iter().rev().map(|c| c[rows]));
    arc.push(left_end);

    let factor: Vec<f64> = vertices
        .iter()
        .map(|p| {
            let d = 1.0 - p[0] * p[0] - p[1] * p[1];
            4.0 / (d * d)
        })
        .collect();

    let n_diam = diameter.len() - 1;
    let n_arc = arc.len() - 1;
    Mesh::new(
        format!("poincare_halfdisk({r_trunc},{resolution})"),
        vertices,
        triangles,
        MetricSpec::Conformal { factor },
        vec![
            BoundaryChain {
                vertices: diameter,
                labels: vec![EdgeLabel::Exterior; n_diam],
            },
            BoundaryChain {
                vertices: arc,
                labels: vec![EdgeLabel::Interior; n_arc],
            },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;

    fn all_specs() -> Vec<GeometrySpec> {
        vec![
            GeometrySpec::Disk { n_radial: 5, n_angular: 6 },
            GeometrySpec::Annulus { r_in: 0.5, r_out: 1.0, n_r: 3, n_a: 16 },
            GeometrySpec::Rectangle { w: 2.0, h: 1.0, nx: 4, ny: 3 },
            GeometrySpec::Collar { l0: 1.0, rho_max: 1.4, n_rho: 4, n_t: 12 },
            GeometrySpec::PoincareHalfdisk { r_trunc: 0.9, resolution: 4.0 },
            GeometrySpec::PoincareHalfdisk { r_trunc: 0.999, resolution: 6.0 },
        ]
    }

    #[test]
    fn generated_meshes_validate_with_expected_topology() {
        for spec in all_specs() {
            let m = generate(&spec).unwrap();
            assert!(validate(&m).passes(), "{spec:?}");
            let chi = match spec {
                GeometrySpec::Annulus { .. } | GeometrySpec::Collar { .. } => 0,
                _ => 1,
            };
            assert_eq!(m.euler_characteristic(), chi, "{spec:?}");
        }
    }

    #[test]
    fn halfdisk_has_open_exterior_and_interior_chains() {
        let m = generate(&GeometrySpec::PoincareHalfdisk { r_trunc: 0.9, resolution: 5.0 }).unwrap();
        assert_eq!(m.boundary().len(), 2);
        for c in m.boundary() {
            assert!(!c.is_closed());
            assert!(c.labels.iter().all(|&l| l == c.labels[0]));
        }
        assert_eq!(m.boundary()[0].labels[0], EdgeLabel::Exterior);
        assert_eq!(m.boundary()[1].labels[0], EdgeLabel::Interior);
        for &v in &m.boundary()[1].vertices {
            let p = m.vertices()[v];
            assert!((p[0].hypot(p[1]) - 0.9).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = [
            GeometrySpec::Disk { n_radial: 1, n_angular: 6 },
            GeometrySpec::Annulus { r_in: 1.0, r_out: 0.5, n_r: 3, n_a: 8 },
            GeometrySpec::Rectangle { w: 1.0, h: 1.0, nx: 1, ny: 4 },
            GeometrySpec::Collar { l0: -1.0, rho_max: 1.0, n_rho: 3, n_t: 8 },
            GeometrySpec::PoincareHalfdisk { r_trunc: 1.0, resolution: 4.0 },
        ];
        for spec in bad {
            assert!(matches!(generate(&spec), Err(Error::Parameter(_))), "{spec:?}");
        }
    }

    #[test]
    fn refinement_halves_boundary_defect_quadratically() {
        let coarse = generate(&GeometrySpec::Disk { n_radial: 4, n_angular: 6 }).unwrap();
        let fine = generate(&GeometrySpec::Disk { n_radial: 8, n_angular: 6 }).unwrap();
        let e1 = 2.0 * PI - coarse.total_boundary_length();
        let e2 = 2.0 * PI - fine.total_boundary_length();
        assert!(e1 > 0.0 && e2 > 0.0);
        assert!((e1 / e2 - 4.0).abs() < 0.1, "ratio {}", e1 / e2);
    }

    #[test]
    fn geometry_spec_toml_roundtrip() {
        let spec: GeometrySpec = toml::from_str("kind = \"annulus\"\nr_in = 1.0\nr_out = 2.0\nn_r = 4\nn_a = 32\n").unwrap();
        assert_eq!(spec, GeometrySpec::Annulus { r_in: 1.0, r_out: 2.0, n_r: 4, n_a: 32 });
        assert!(toml::from_str::<GeometrySpec>("kind = \"disk\"\nn_radial = 3\nn_angular = 6\nextra = 1\n").is_err());
    }
}
