//! JSON mesh files.
//!
//! ```text
//! { "name": "...",
//!   "vertices": [[x, y], ...],
//!   "triangles": [[i, j, k], ...],
//!   "metric": { "variant": "Euclidean" | "Conformal" | "Collar" | "PerTriangleTensor",
//!               "payload": null | [λ, ...] | { "l0": ... } | [[g11, g12, g22], ...] },
//!   "boundary_labels": [ { "loop": [v, ...], "labels": ["EXTERIOR" | "INTERIOR", ...] }, ... ] }
//! ```
//!
//! Every float is written with 17 significant digits so coordinates survive a
//! round trip bit for bit. A loop is closed when it has as many labels as
//! vertices and open when it has one fewer.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{BoundaryChain, EdgeLabel, Mesh, MetricSpec, Tensor2};
use crate::error::{Error, Result};

fn num(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.16e}")).expect("finite float formats as a JSON number")
}

#[derive(Serialize)]
struct MeshOut<'a> {
    name: &'a str,
    vertices: Vec<[Box<RawValue>; 2]>,
    triangles: &'a [[usize; 3]],
    metric: MetricOut,
    boundary_labels: Vec<LoopOut<'a>>,
}

#[derive(Serialize)]
struct MetricOut {
    variant: &'static str,
    payload: Box<RawValue>,
}

#[derive(Serialize)]
struct LoopOut<'a> {
    #[serde(rename = "loop")]
    vertices: &'a [usize],
    labels: &'a [EdgeLabel],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshIn {
    name: String,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    metric: MetricIn,
    boundary_labels: Vec<LoopIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricIn {
    variant: String,
    #[serde(default)]
    payload: Option<Box<RawValue>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopIn {
    #[serde(rename = "loop")]
    vertices: Vec<usize>,
    labels: Vec<EdgeLabel>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CollarPayload {
    l0: f64,
}

fn payload_text(metric: &MetricSpec) -> String {
    match metric {
        MetricSpec::Euclidean => "null".to_owned(),
        MetricSpec::Conformal { factor } => {
            let items: Vec<String> = factor.iter().map(|&x| num(x).get().to_owned()).collect();
            format!("[{}]", items.join(","))
        }
        MetricSpec::Collar { l0 } => format!("{{\"l0\":{}}}", num(*l0).get()),
        MetricSpec::PerTriangleTensor { tensors } => {
            let items: Vec<String> = tensors
                .iter()
                .map(|g| format!("[{},{},{}]", num(g.g11).get(), num(g.g12).get(), num(g.g22).get()))
                .collect();
            format!("[{}]", items.join(","))
        }
    }
}

pub fn to_json_string(mesh: &Mesh) -> String {
    let out = MeshOut {
        name: mesh.name(),
        vertices: mesh.vertices().iter().map(|p| [num(p[0]), num(p[1])]).collect(),
        triangles: mesh.triangles(),
        metric: MetricOut {
            variant: mesh.metric().variant_name(),
            payload: RawValue::from_string(payload_text(mesh.metric())).expect("payload is valid JSON"),
        },
        boundary_labels: mesh
            .boundary()
            .iter()
            .map(|c| LoopOut {
                vertices: &c.vertices,
                labels: &c.labels,
            })
            .collect(),
    };
    serde_json::to_string(&out).expect("mesh serialises")
}

pub fn save(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(mesh))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    read_str(&text)
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Line and column of the first occurrence of `needle`, or (0, 0).
fn locate(text: &str, needle: &str) -> (usize, usize) {
    match text.find(needle) {
        Some(pos) => {
            let before = &text[..pos];
            let line = before.matches('\n').count() + 1;
            let column = pos - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (line, column)
        }
        None => (0, 0),
    }
}

pub fn read_str(text: &str) -> Result<Mesh> {
    let raw: MeshIn = serde_json::from_str(text).map_err(parse_err)?;
    let payload = raw.metric.payload.as_deref().map_or("null", RawValue::get);
    let field_err = |field: &str, e: serde_json::Error| {
        let (line, column) = locate(text, "\"payload\"");
        Error::Parse {
            line,
            column,
            message: format!("metric.payload ({field}): {e}"),
        }
    };
    let metric = match raw.metric.variant.as_str() {
        "Euclidean" => MetricSpec::Euclidean,
        "Conformal" => {
            let factor: Vec<f64> = serde_json::from_str(payload).map_err(|e| field_err("Conformal factors", e))?;
            MetricSpec::Conformal { factor }
        }
        "Collar" => {
            let p: CollarPayload = serde_json::from_str(payload).map_err(|e| field_err("Collar", e))?;
            MetricSpec::Collar { l0: p.l0 }
        }
        "PerTriangleTensor" => {
            let t: Vec<[f64; 3]> = serde_json::from_str(payload).map_err(|e| field_err("PerTriangleTensor", e))?;
            MetricSpec::PerTriangleTensor {
                tensors: t
                    .into_iter()
                    .map(|[g11, g12, g22]| Tensor2 { g11, g12, g22 })
                    .collect(),
            }
        }
        other => {
            let (line, column) = locate(text, &format!("\"{other}\""));
            return Err(Error::Parse {
                line,
                column,
                message: format!("unknown metric variant '{other}'"),
            });
        }
    };
    let boundary = raw
        .boundary_labels
        .into_iter()
        .map(|l| BoundaryChain {
            vertices: l.vertices,
            labels: l.labels,
        })
        .collect();
    Mesh::new(raw.name, raw.vertices, raw.triangles, metric, boundary)
}
