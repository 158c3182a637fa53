//! Isocapacitary constants over contiguous boundary arcs.
//!
//! COMPACT minimises `Cap(A, B) / min(m(A), m(B))` over pairs of disjoint
//! arcs; MIXED minimises `Cap(F, Y) / m(F)` over exterior arcs `F` with `Y`
//! the interior boundary. The search condenses the stiffness once onto the
//! boundary and evaluates each candidate by a dense solve on the remaining
//! boundary vertices; the brute-force oracle instead runs a fresh
//! finite-element capacity solve per candidate.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use super::capacity_with;
use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, SymOperator};
use crate::mesh::{arcs_vertex_set, BoundaryArc, EdgeLabel, Mesh};
use crate::par;
use crate::spectral::discrete_dtn_with;

/// Candidates within this relative distance of the minimum count as tied and
/// are ordered by arc key.
pub const TIE_RTOL: f64 = 1e-9;

pub const BRUTEFORCE_MAX_BOUNDARY: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GammaMode {
    Compact,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaConfig {
    /// Grid spacing for arc endpoints; `None` picks [`default_coarse_step`].
    pub coarse_step: Option<usize>,
    pub refine_rounds: usize,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig {
            coarse_step: None,
            refine_rounds: 2,
        }
    }
}

/// Exhaustive on small boundaries, otherwise about 24 grid points in total.
pub fn default_coarse_step(n_boundary: usize) -> usize {
    if n_boundary <= BRUTEFORCE_MAX_BOUNDARY {
        1
    } else {
        n_boundary.div_ceil(24)
    }
}

/// The second witness: explicit arcs, or the whole interior boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessB {
    Arcs(Vec<BoundaryArc>),
    InteriorBoundary,
}

impl Serialize for WitnessB {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            WitnessB::Arcs(arcs) => arcs.serialize(s),
            WitnessB::InteriorBoundary => s.serialize_str("INTERIOR"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub stage: String,
    pub value: f64,
    #[serde(rename = "witness_A")]
    pub witness_a: Vec<BoundaryArc>,
    #[serde(rename = "witness_B")]
    pub witness_b: WitnessB,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub value: f64,
    #[serde(rename = "witness_A")]
    pub witness_a: Vec<BoundaryArc>,
    #[serde(rename = "witness_B")]
    pub witness_b: WitnessB,
    pub candidates_evaluated: usize,
    pub trace: Vec<TraceEntry>,
    pub mode: GammaMode,
    pub coarse_step: usize,
}

impl GammaEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serialises")
    }

    /// The witness ratio recomputed by a fresh finite-element solve.
    pub fn recompute(&self, mesh: &Mesh) -> Result<f64> {
        let a = arcs_vertex_set(mesh, &self.witness_a);
        let m_a = mesh.boundary_length(&self.witness_a)?;
        match &self.witness_b {
            WitnessB::Arcs(arcs) => {
                let b = arcs_vertex_set(mesh, arcs);
                let cap = super::capacity(mesh, &a, &b)?.value;
                Ok(cap / m_a.min(mesh.boundary_length(arcs)?))
            }
            WitnessB::InteriorBoundary => {
                let b = mesh.vertices_with_label(EdgeLabel::Interior);
                Ok(super::capacity(mesh, &a, &b)?.value / m_a)
            }
        }
    }
}

/// Arcs on `chain` whose endpoints lie on the grid of every `step`-th
/// position (plus the far end of an open chain). The whole loop of a closed
/// chain appears once, starting at 0.
pub fn candidate_arcs(mesh: &Mesh, chain: usize, step: usize) -> Vec<BoundaryArc> {
    let c = &mesh.boundary()[chain];
    let n = c.edge_count();
    let step = step.max(1);
    let mut out = Vec::new();
    if c.is_closed() {
        let grid: Vec<usize> = (0..n).step_by(step).collect();
        for &s in &grid {
            for &e in &grid {
                let len = (e + n - s) % n;
                if len > 0 {
                    out.push(BoundaryArc::new(chain, s, s + len));
                }
            }
        }
        out.push(BoundaryArc::new(chain, 0, n));
    } else {
        let mut grid: Vec<usize> = (0..n).step_by(step).collect();
        grid.push(n);
        for (i, &s) in grid.iter().enumerate() {
            for &e in &grid[i + 1..] {
                out.push(BoundaryArc::new(chain, s, e));
            }
        }
    }
    out.sort_by_key(arc_key);
    out
}

fn arc_key(a: &BoundaryArc) -> (usize, usize, usize) {
    (a.chain, a.start, a.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Candidate {
    a: BoundaryArc,
    b: Option<BoundaryArc>,
}

impl Candidate {
    fn pair(x: BoundaryArc, y: BoundaryArc) -> Candidate {
        if arc_key(&x) <= arc_key(&y) {
            Candidate { a: x, b: Some(y) }
        } else {
            Candidate { a: y, b: Some(x) }
        }
    }

    fn key(&self) -> ((usize, usize, usize), Option<(usize, usize, usize)>) {
        (arc_key(&self.a), self.b.as_ref().map(arc_key))
    }
}

/// Boundary geometry shared by both routes: vertex masks and lengths of
/// arcs, the fixed `Y` set in mixed mode.
struct Frame<'m> {
    mesh: &'m Mesh,
    mode: GammaMode,
    row_of: Vec<usize>,
    n_rows: usize,
    y_rows: Vec<usize>,
    // cumulative edge lengths per chain
    prefix: Vec<Vec<f64>>,
}

const NONE: usize = usize::MAX;

impl<'m> Frame<'m> {
    fn new(mesh: &'m Mesh, mode: GammaMode) -> Result<Self> {
        let bverts = mesh.boundary_vertices();
        let mut row_of = vec![NONE; mesh.vertex_count()];
        for (i, &v) in bverts.iter().enumerate() {
            row_of[v] = i;
        }
        let y_rows = match mode {
            GammaMode::Compact => Vec::new(),
            GammaMode::Mixed => {
                let y = mesh.vertices_with_label(EdgeLabel::Interior);
                if y.is_empty() {
                    return Err(Error::param(format!("mesh '{}' has no interior boundary", mesh.name())));
                }
                y.iter().map(|&v| row_of[v]).collect()
            }
        };
        let prefix = mesh
            .boundary()
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                let mut p = vec![0.0];
                for k in 0..c.edge_count() {
                    p.push(p[k] + mesh.boundary_edge_length(ci, k));
                }
                p
            })
            .collect();
        Ok(Frame {
            mesh,
            mode,
            row_of,
            n_rows: bverts.len(),
            y_rows,
            prefix,
        })
    }

    fn length(&self, a: &BoundaryArc) -> f64 {
        let p = &self.prefix[a.chain];
        let n = p.len() - 1;
        if a.end <= n {
            p[a.end] - p[a.start]
        } else {
            (p[n] - p[a.start]) + p[a.end - n]
        }
    }

    fn rows(&self, a: &BoundaryArc) -> Vec<usize> {
        a.vertex_set(self.mesh).into_iter().map(|v| self.row_of[v]).collect()
    }

    fn mask(&self, rows: &[usize]) -> Vec<u64> {
        let mut m = vec![0u64; self.n_rows.div_ceil(64)];
        for &r in rows {
            m[r / 64] |= 1 << (r % 64);
        }
        m
    }

    fn admissible_f(&self, a: &BoundaryArc, y_mask: &[u64]) -> bool {
        let chain = &self.mesh.boundary()[a.chain];
        a.edge_positions(self.mesh).iter().all(|&k| chain.labels[k] == EdgeLabel::Exterior)
            && disjoint(&self.mask(&self.rows(a)), y_mask)
    }

    fn valid(&self, c: &Candidate) -> bool {
        if c.a.check(self.mesh).is_err() {
            return false;
        }
        match (self.mode, c.b) {
            (GammaMode::Compact, Some(b)) => {
                b.check(self.mesh).is_ok() && disjoint(&self.mask(&self.rows(&c.a)), &self.mask(&self.rows(&b)))
            }
            (GammaMode::Mixed, None) => self.admissible_f(&c.a, &self.mask(&self.y_rows)),
            _ => false,
        }
    }

    /// Every candidate of the class on the grid of spacing `step`.
    fn enumerate(&self, step: usize) -> Vec<Candidate> {
        let arcs: Vec<BoundaryArc> = (0..self.mesh.boundary().len())
            .flat_map(|c| candidate_arcs(self.mesh, c, step))
            .collect();
        match self.mode {
            GammaMode::Compact => {
                let masks: Vec<Vec<u64>> = arcs.iter().map(|a| self.mask(&self.rows(a))).collect();
                let mut out = Vec::new();
                for i in 0..arcs.len() {
                    for j in i + 1..arcs.len() {
                        if disjoint(&masks[i], &masks[j]) {
                            out.push(Candidate::pair(arcs[i], arcs[j]));
                        }
                    }
                }
                out
            }
            GammaMode::Mixed => {
                let y_mask = self.mask(&self.y_rows);
                arcs.into_iter()
                    .filter(|a| self.admissible_f(a, &y_mask))
                    .map(|a| Candidate { a, b: None })
                    .collect()
            }
        }
    }

    fn denominator(&self, c: &Candidate) -> f64 {
        match c.b {
            Some(b) => self.length(&c.a).min(self.length(&b)),
            None => self.length(&c.a),
        }
    }

    fn b_rows(&self, c: &Candidate) -> Vec<usize> {
        match c.b {
            Some(b) => self.rows(&b),
            None => self.y_rows.clone(),
        }
    }

    /// Candidates reachable by moving one endpoint by `delta`.
    fn neighbours(&self, c: &Candidate, delta: usize) -> Vec<Candidate> {
        let moved_a = self.moves(&c.a, delta);
        let mut out = Vec::new();
        match c.b {
            Some(b) => {
                for a in &moved_a {
                    out.push(Candidate::pair(*a, b));
                }
                for b2 in self.moves(&b, delta) {
                    out.push(Candidate::pair(c.a, b2));
                }
            }
            None => out.extend(moved_a.into_iter().map(|a| Candidate { a, b: None })),
        }
        out.retain(|x| x != c && self.valid(x));
        out
    }

    fn moves(&self, a: &BoundaryArc, d: usize) -> Vec<BoundaryArc> {
        let chain = &self.mesh.boundary()[a.chain];
        let n = chain.edge_count();
        let (s, len) = (a.start as i64, a.len() as i64);
        let d = d as i64;
        let mut out = Vec::new();
        if chain.is_closed() {
            let n = n as i64;
            // (start shift, length change) keeping the other endpoint
            for (ds, dl) in [(-d, d), (d, -d), (0, d), (0, -d)] {
                let l2 = len + dl;
                if l2 < 1 || l2 > n {
                    continue;
                }
                let s2 = if l2 == n { 0 } else { (s + ds).rem_euclid(n) };
                out.push(BoundaryArc::new(a.chain, s2 as usize, (s2 + l2) as usize));
            }
        } else {
            let (e, n) = (a.end as i64, n as i64);
            for (s2, e2) in [(s - d, e), (s + d, e), (s, e - d), (s, e + d)] {
                if s2 >= 0 && e2 <= n && s2 < e2 {
                    out.push(BoundaryArc::new(a.chain, s2 as usize, e2 as usize));
                }
            }
        }
        out
    }

    fn estimate(&self, best: (Candidate, f64), evaluated: usize, trace: Vec<TraceEntry>, step: usize) -> GammaEstimate {
        let (c, value) = best;
        GammaEstimate {
            value,
            witness_a: vec![c.a],
            witness_b: witness_b(&c),
            candidates_evaluated: evaluated,
            trace,
            mode: self.mode,
            coarse_step: step,
        }
    }
}

fn witness_b(c: &Candidate) -> WitnessB {
    match c.b {
        Some(b) => WitnessB::Arcs(vec![b]),
        None => WitnessB::InteriorBoundary,
    }
}

fn trace_entry(stage: impl Into<String>, best: &(Candidate, f64)) -> TraceEntry {
    TraceEntry {
        stage: stage.into(),
        value: best.1,
        witness_a: vec![best.0.a],
        witness_b: witness_b(&best.0),
    }
}

fn disjoint(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & y == 0)
}

/// Minimum value, ties within [`TIE_RTOL`] broken by the smallest key.
fn select(scored: &[(Candidate, f64)]) -> Option<(Candidate, f64)> {
    let vmin = scored.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if !vmin.is_finite() {
        return None;
    }
    let cut = vmin + TIE_RTOL * vmin.abs();
    scored
        .iter()
        .filter(|s| s.1 <= cut)
        .min_by_key(|s| s.0.key())
        .copied()
}

/// `Cap(A, B)` from the boundary-condensed stiffness `S`: with `F` the
/// remaining boundary rows, `Cap = 1ᵀS_AA1 − rᵀS_FF⁻¹r` where `r = S_FA1`.
struct SchurCapacity {
    s: DMatrix<f64>,
}

impl SchurCapacity {
    fn cap(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        let n = self.s.nrows();
        let mut fixed = vec![false; n];
        for &r in a.iter().chain(b) {
            fixed[r] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&r| !fixed[r]).collect();
        let saa: f64 = a.iter().map(|&i| a.iter().map(|&j| self.s[(i, j)]).sum::<f64>()).sum();
        if free.is_empty() {
            return Ok(saa);
        }
        let r = DVector::from_iterator(free.len(), free.iter().map(|&f| a.iter().map(|&j| self.s[(f, j)]).sum::<f64>()));
        let sff = self.s.select_rows(&free).select_columns(&free);
        let chol = sff
            .cholesky()
            .ok_or_else(|| Error::Solve("condensed free block is not positive definite".into()))?;
        let x = chol.solve(&r);
        Ok(saa - r.dot(&x))
    }
}

fn bruteforce_cap(frame: &Frame, k: &SymOperator, c: &Candidate) -> Result<f64> {
    let a = c.a.vertex_set(frame.mesh);
    let b = match c.b {
        Some(b) => b.vertex_set(frame.mesh),
        None => frame.mesh.vertices_with_label(EdgeLabel::Interior),
    };
    Ok(capacity_with(k, &a, &b)?.value / frame.denominator(c))
}

fn score_all<F>(cands: &[Candidate], f: F) -> Result<Vec<(Candidate, f64)>>
where
    F: Fn(&Candidate) -> Result<f64> + Sync + Send,
{
    par::map_slice(cands, |c| f(c).map(|v| (*c, v)))
        .into_iter()
        .collect()
}

fn check_size(frame: &Frame) -> Result<()> {
    if frame.mode == GammaMode::Compact && frame.n_rows < 4 {
        return Err(Error::param("boundary needs at least 4 vertices"));
    }
    Ok(())
}

/// Coarse grid scan followed by greedy endpoint refinement.
pub fn gamma_search(mesh: &Mesh, mode: GammaMode, config: GammaConfig) -> Result<GammaEstimate> {
    let frame = Frame::new(mesh, mode)?;
    check_size(&frame)?;
    let step = config.coarse_step.unwrap_or_else(|| default_coarse_step(frame.n_rows)).max(1);
    let k = assemble_stiffness(mesh)?;
    let red = discrete_dtn_with(mesh, &k, &[])?;
    let oracle = SchurCapacity { s: red.s };
    let eval = |c: &Candidate| -> Result<f64> { Ok(oracle.cap(&frame.rows(&c.a), &frame.b_rows(c))? / frame.denominator(c)) };

    let coarse = frame.enumerate(step);
    if coarse.is_empty() {
        return Err(Error::param("no feasible candidate arcs on this boundary"));
    }
    let scored = score_all(&coarse, eval)?;
    let mut best = select(&scored).expect("nonempty candidate set");
    let mut seen: HashMap<Candidate, f64> = scored.into_iter().collect();
    let mut trace = vec![trace_entry("coarse", &best)];

    for round in 1..=config.refine_rounds {
        let delta = (step >> round).max(1);
        for _ in 0..4 * frame.n_rows {
            let fresh: Vec<Candidate> = frame
                .neighbours(&best.0, delta)
                .into_iter()
                .filter(|c| !seen.contains_key(c))
                .collect();
            for (c, v) in score_all(&fresh, eval)? {
                seen.insert(c, v);
            }
            let mut local: Vec<(Candidate, f64)> =
                frame.neighbours(&best.0, delta).into_iter().map(|c| (c, seen[&c])).collect();
            local.push(best);
            let next = select(&local).expect("current candidate is present");
            if next.0 == best.0 {
                break;
            }
            best = next;
        }
        trace.push(trace_entry(format!("refine {round} (±{delta})"), &best));
    }
    Ok(frame.estimate(best, seen.len(), trace, step))
}

/// Exhaustive minimum over every arc candidate, each scored by a direct
/// finite-element capacity solve.
pub fn gamma_bruteforce(mesh: &Mesh, mode: GammaMode, max_boundary_vertices: usize) -> Result<GammaEstimate> {
    let frame = Frame::new(mesh, mode)?;
    if frame.n_rows > max_boundary_vertices {
        return Err(Error::Size(format!(
            "{} boundary vertices exceed the brute-force limit of {max_boundary_vertices}",
            frame.n_rows
        )));
    }
    check_size(&frame)?;
    let k = assemble_stiffness(mesh)?;
    let all = frame.enumerate(1);
    if all.is_empty() {
        return Err(Error::param("no feasible candidate arcs on this boundary"));
    }
    let scored = score_all(&all, |c| bruteforce_cap(&frame, &k, c))?;
    let best = select(&scored).expect("nonempty candidate set");
    let trace = vec![trace_entry("exhaustive", &best)];
    Ok(frame.estimate(best, scored.len(), trace, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, GeometrySpec};

    fn square(n: usize) -> Mesh {
        generate(&GeometrySpec::Rectangle { w: 1.0, h: 1.0, nx: n, ny: n }).unwrap()
    }

    #[test]
    fn closed_chain_arc_count() {
        let m = square(2);
        // 8 starts × 7 proper lengths + the whole loop
        assert_eq!(candidate_arcs(&m, 0, 1).len(), 57);
        assert_eq!(candidate_arcs(&m, 0, 2).len(), 13);
    }

    #[test]
    fn search_matches_bruteforce_on_square() {
        let m = square(4);
        let s = gamma_search(&m, GammaMode::Compact, GammaConfig::default()).unwrap();
        let b = gamma_bruteforce(&m, GammaMode::Compact, BRUTEFORCE_MAX_BOUNDARY).unwrap();
        assert!((s.value - b.value).abs() <= 1e-10 * b.value);
        assert_eq!(s.witness_a, b.witness_a);
        assert_eq!(s.witness_b, b.witness_b);
    }

    #[test]
    fn witness_recomputes_from_scratch() {
        let m = generate(&GeometrySpec::Disk { n_radial: 4, n_angular: 6 }).unwrap();
        let g = gamma_search(&m, GammaMode::Compact, GammaConfig::default()).unwrap();
        assert!((g.recompute(&m).unwrap() - g.value).abs() <= 1e-10 * g.value);
    }

    #[test]
    fn square_witness_is_mirrored_by_the_diagonal_reflection() {
        // reflection in y = x preserves the triangulation and maps boundary
        // position k to 16 - k
        let m = square(4);
        let frame = Frame::new(&m, GammaMode::Compact).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        let mirror = |a: &BoundaryArc| {
            let s = (16 - a.end % 16) % 16;
            BoundaryArc::new(0, s, s + a.len())
        };
        let bottom_top = Candidate::pair(BoundaryArc::new(0, 0, 4), BoundaryArc::new(0, 8, 12));
        let left_right = Candidate::pair(mirror(&bottom_top.a), mirror(&bottom_top.b.unwrap()));
        assert!(frame.valid(&bottom_top) && frame.valid(&left_right));
        let v1 = bruteforce_cap(&frame, &k, &bottom_top).unwrap();
        let v2 = bruteforce_cap(&frame, &k, &left_right).unwrap();
        assert!((v1 - v2).abs() <= 1e-8 * v1);

        let g = gamma_search(&m, GammaMode::Compact, GammaConfig::default()).unwrap();
        let WitnessB::Arcs(b) = &g.witness_b else { panic!() };
        let image = Candidate::pair(mirror(&g.witness_a[0]), mirror(&b[0]));
        let v = bruteforce_cap(&frame, &k, &image).unwrap();
        assert!((v - g.value).abs() <= 1e-8 * g.value);
    }

    #[test]
    fn mixed_search_matches_bruteforce_on_halfdisk() {
        let m = generate(&GeometrySpec::PoincareHalfdisk { r_trunc: 0.6, resolution: 3.0 }).unwrap();
        let s = gamma_search(&m, GammaMode::Mixed, GammaConfig::default()).unwrap();
        let b = gamma_bruteforce(&m, GammaMode::Mixed, BRUTEFORCE_MAX_BOUNDARY).unwrap();
        assert!((s.value - b.value).abs() <= 1e-10 * b.value);
        assert_eq!(s.witness_a, b.witness_a);
        assert_eq!(s.witness_b, WitnessB::InteriorBoundary);
    }

    #[test]
    fn bruteforce_refuses_large_boundaries() {
        let m = square(12);
        assert!(matches!(
            gamma_bruteforce(&m, GammaMode::Compact, BRUTEFORCE_MAX_BOUNDARY),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn refinement_never_worsens_the_coarse_value() {
        let m = generate(&GeometrySpec::Disk { n_radial: 8, n_angular: 6 }).unwrap();
        let g = gamma_search(&m, GammaMode::Compact, GammaConfig { coarse_step: Some(8), refine_rounds: 2 }).unwrap();
        assert_eq!(g.trace.len(), 3);
        assert!(g.trace.windows(2).all(|w| w[1].value <= w[0].value * (1.0 + TIE_RTOL)));
    }

    #[test]
    fn estimate_json_has_contract_keys() {
        let m = square(2);
        let g = gamma_search(&m, GammaMode::Compact, GammaConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
        for key in ["value", "witness_A", "witness_B", "candidates_evaluated", "trace"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
