use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use serde_json::{json, Value};

use super::scenario::{Check, Scenario, Side};
use super::{check_sandwich, Table, Verdict};
use crate::capacity::{
    capacity_compact_support, default_levels, gamma_search, levelset_capacity_check, GammaConfig, GammaEstimate,
    GammaMode,
};
use crate::error::Result;
use crate::hyperbolic::{c_n, collar_bound, halfplane_bottom_estimate};
use crate::mesh::{generate, EdgeLabel, GeometrySpec, Mesh};
use crate::spectral::{exhaustion_xi1, mixed_spectrum, steklov_spectrum, DirichletSet, SpectrumResult};

type Fallible<T> = std::result::Result<T, String>;

fn text<T>(r: Result<T>) -> Fallible<T> {
    r.map_err(|e| e.to_string())
}

pub(super) struct Outcome {
    pub values: Value,
    pub verdict: Verdict,
    pub message: String,
    pub table: Option<Table>,
}

struct LevelOutcome {
    verdict: Verdict,
    values: Value,
    message: String,
    rows: Vec<Vec<f64>>,
}

impl LevelOutcome {
    fn new(verdict: Verdict, values: Value, message: impl Into<String>) -> Self {
        LevelOutcome {
            verdict,
            values,
            message: message.into(),
            rows: Vec::new(),
        }
    }
}

/// Everything computed on one refinement level, shared between checks.
#[derive(Default)]
struct Level {
    mesh: Option<Fallible<Rc<Mesh>>>,
    steklov: Option<Fallible<Rc<SpectrumResult>>>,
    gamma: Option<Fallible<Rc<GammaEstimate>>>,
    mixed_gamma: Option<Fallible<Rc<GammaEstimate>>>,
}

pub(super) struct Context<'a> {
    scenario: &'a Scenario,
    levels: HashMap<usize, Level>,
}

impl<'a> Context<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        Context {
            scenario,
            levels: HashMap::new(),
        }
    }

    pub fn run(&mut self, check: Check) -> Outcome {
        match check {
            Check::SteklovSpectrum => self.ladder(&["level", "index", "eigenvalue", "residual"], Self::steklov),
            Check::Gamma => self.ladder(&["level", "value", "recomputed", "candidates_evaluated"], Self::gamma),
            Check::Sandwich => self.ladder(&["level", "sigma1", "gamma", "ratio"], Self::sandwich),
            Check::MixedSandwich => self.ladder(&["level", "xi1", "gamma_y", "ratio"], Self::mixed_sandwich),
            Check::Levelset => self.ladder(&["level", "t", "capacity"], Self::levelset),
            Check::Weyl => self.ladder(&["level", "sigma", "count", "weyl_term"], Self::weyl),
            Check::Exhaustion => self.ladder(&["level", "r_trunc", "xi1", "capacity_f"], Self::exhaustion),
            Check::Collar => self.ladder(&["level", "l0", "xi1", "xi2", "bound_case1", "bound_case1_quadrature"], Self::collar),
            Check::Halfplane => self.ladder(&["level", "l", "rayleigh"], Self::halfplane),
        }
    }

    /// Runs `f` on each ladder level from coarse to fine, stopping at the
    /// first error. The finest completed level decides the verdict.
    fn ladder(&mut self, header: &[&'static str], f: fn(&mut Self, usize) -> Fallible<LevelOutcome>) -> Outcome {
        let mut table = Table::new(header);
        let mut per_level = Vec::new();
        let mut last: Option<(Verdict, String)> = None;
        for &level in &self.scenario.ladder.clone() {
            match f(self, level) {
                Ok(out) => {
                    for mut row in out.rows {
                        row.insert(0, level as f64);
                        table.rows.push(row);
                    }
                    let mut v = out.values;
                    v["level"] = json!(level);
                    v["verdict"] = json!(out.verdict);
                    per_level.push(v);
                    last = Some((out.verdict, format!("level {level}: {}", out.message)));
                }
                Err(e) => {
                    return Outcome {
                        values: json!({ "levels": per_level, "error_level": level }),
                        verdict: Verdict::Fail,
                        message: format!("level {level}: {e}"),
                        table: Some(table),
                    };
                }
            }
        }
        let (verdict, message) = last.expect("ladder is nonempty");
        Outcome {
            values: json!({ "levels": per_level }),
            verdict,
            message,
            table: Some(table),
        }
    }

    fn level(&mut self, level: usize) -> &mut Level {
        self.levels.entry(level).or_default()
    }

    fn mesh(&mut self, level: usize) -> Fallible<Rc<Mesh>> {
        let scenario = self.scenario;
        let slot = self.level(level);
        slot.mesh
            .get_or_insert_with(|| {
                let geometry = scenario.geometry.as_ref().ok_or("scenario has no geometry")?;
                let mesh = text(generate(&geometry.refined(level)))?;
                Ok(Rc::new(match (scenario.mixed.interior_side, geometry) {
                    (Some(side), GeometrySpec::Rectangle { w, h, .. }) => with_interior_side(&mesh, side, *w, *h),
                    _ => mesh,
                }))
            })
            .clone()
    }

    fn spectrum(&mut self, level: usize) -> Fallible<Rc<SpectrumResult>> {
        let mesh = self.mesh(level)?;
        let k = self.scenario.spectrum.k;
        self.level(level)
            .steklov
            .get_or_insert_with(|| text(steklov_spectrum(&mesh, k)).map(Rc::new))
            .clone()
    }

    fn gamma_config(&self) -> GammaConfig {
        let g = self.scenario.gamma;
        GammaConfig {
            coarse_step: g.coarse_step,
            refine_rounds: g.refine_rounds.unwrap_or(GammaConfig::default().refine_rounds),
        }
    }

    fn gamma_estimate(&mut self, level: usize, mode: GammaMode) -> Fallible<Rc<GammaEstimate>> {
        let mesh = self.mesh(level)?;
        let config = self.gamma_config();
        let slot = self.level(level);
        let cell = match mode {
            GammaMode::Compact => &mut slot.gamma,
            GammaMode::Mixed => &mut slot.mixed_gamma,
        };
        cell.get_or_insert_with(|| text(gamma_search(&mesh, mode, config)).map(Rc::new)).clone()
    }

    /// Γ̂ after fault injection.
    fn gamma_value(&mut self, level: usize, mode: GammaMode) -> Fallible<f64> {
        Ok(self.gamma_estimate(level, mode)?.value * self.scenario.fault.gamma_scale)
    }

    fn steklov(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let mesh = self.mesh(level)?;
        let r = self.spectrum(level)?;
        let params = &self.scenario.spectrum;
        let mut verdict = Verdict::Pass;
        let mut message = format!("σ₁ = {:.6}", r.eigenvalues[1]);
        if r.eigenvalues[0] < -1e-9 {
            verdict = Verdict::Fail;
            message = format!("σ₀ = {:e} is negative", r.eigenvalues[0]);
        }
        let mut errors = Vec::new();
        if let Some(expected) = &params.expected {
            for (j, (&got, &want)) in r.eigenvalues.iter().zip(expected).enumerate() {
                let err = (got - want).abs() / want.abs().max(1.0);
                errors.push(err);
                if err > params.rtol && verdict == Verdict::Pass {
                    verdict = Verdict::Fail;
                    message = format!("σ_{j} = {got:.6} differs from {want} by {:.3}%", 100.0 * err);
                }
            }
        }
        let mut out = LevelOutcome::new(
            verdict,
            json!({
                "n_vertices": mesh.vertex_count(),
                "n_boundary": mesh.boundary_vertices().len(),
                "eigenvalues": r.eigenvalues,
                "max_residual": r.residuals.iter().copied().fold(0.0, f64::max),
                "relative_errors": errors,
            }),
            message,
        );
        out.rows = r
            .eigenvalues
            .iter()
            .zip(&r.residuals)
            .enumerate()
            .map(|(i, (&l, &res))| vec![i as f64, l, res])
            .collect();
        Ok(out)
    }

    fn gamma(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let mesh = self.mesh(level)?;
        let est = self.gamma_estimate(level, GammaMode::Compact)?;
        let value = self.gamma_value(level, GammaMode::Compact)?;
        let recomputed = text(est.recompute(&mesh))?;
        let gap = (value - recomputed).abs() / recomputed.abs().max(1.0);
        let (verdict, message) = if gap <= 1e-10 {
            (Verdict::Pass, format!("Γ̂ = {value:.6} after {} candidates", est.candidates_evaluated))
        } else {
            (Verdict::Fail, format!("Γ̂ = {value:.6} but the witnesses give {recomputed:.6}"))
        };
        let mut out = LevelOutcome::new(
            verdict,
            json!({
                "value": value,
                "recomputed": recomputed,
                "witness_A": est.witness_a,
                "witness_B": est.witness_b,
                "candidates_evaluated": est.candidates_evaluated,
                "coarse_step": est.coarse_step,
            }),
            message,
        );
        out.rows = vec![vec![value, recomputed, est.candidates_evaluated as f64]];
        Ok(out)
    }

    fn sandwich_outcome(&self, lower_name: &str, sigma: f64, gamma: f64) -> Fallible<LevelOutcome> {
        let tau = self.scenario.tolerances.tau_thm;
        let verdict = text(check_sandwich(sigma, gamma, tau))?;
        let ratio = sigma / gamma;
        let mut out = LevelOutcome::new(
            verdict,
            json!({
                lower_name: sigma,
                "gamma": gamma,
                "ratio": ratio,
                "lower": 0.25 * gamma,
                "lower_relaxed": 0.25 * gamma * (1.0 - tau),
                "upper": 2.0 * gamma,
                "tau_thm": tau,
            }),
            format!("{lower_name}/Γ̂ = {ratio:.4} against [0.25, 2]"),
        );
        out.rows = vec![vec![sigma, gamma, ratio]];
        Ok(out)
    }

    fn sandwich(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let sigma1 = self.spectrum(level)?.eigenvalues[1];
        let gamma = self.gamma_value(level, GammaMode::Compact)?;
        self.sandwich_outcome("sigma1", sigma1, gamma)
    }

    fn mixed_sandwich(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let mesh = self.mesh(level)?;
        let xi1 = text(mixed_spectrum(&mesh, &DirichletSet::Label(EdgeLabel::Interior), 1))?.eigenvalues[0];
        let gamma = self.gamma_value(level, GammaMode::Mixed)?;
        self.sandwich_outcome("xi1", xi1, gamma)
    }

    fn levelset(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let mesh = self.mesh(level)?;
        let spec = self.spectrum(level)?;
        let u = &spec.eigenfields[1];
        let t_grid = default_levels(u, self.scenario.levelset.levels);
        let r = text(levelset_capacity_check(&mesh, u, &t_grid, self.scenario.tolerances.tau_cap))?;
        let verdict = if r.passes { Verdict::Pass } else { Verdict::Fail };
        let mut out = LevelOutcome::new(
            verdict,
            json!({ "lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio, "tau_cap": r.tau_cap, "levels": t_grid.len() }),
            format!("lhs/rhs = {:.4}", r.ratio),
        );
        out.rows = r.levels.iter().zip(&r.capacities).map(|(&t, &c)| vec![t, c]).collect();
        Ok(out)
    }

    fn weyl(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let mesh = self.mesh(level)?;
        let params = &self.scenario.weyl;
        let length = mesh.total_boundary_length();
        let sigma_max = params.sigmas.iter().copied().fold(0.0, f64::max);
        let n_b = mesh.boundary_vertices().len();
        let k = ((length * sigma_max / PI).ceil() as usize + params.slack.ceil() as usize + 2).min(n_b - 1);
        let r = text(steklov_spectrum(&mesh, k))?;
        let top = *r.eigenvalues.last().expect("spectrum is nonempty");
        if top < sigma_max {
            return Err(format!("only {} eigenvalues below {sigma_max}; the mesh is too coarse", r.eigenvalues.len()));
        }
        let mut verdict = Verdict::Pass;
        let mut worst = 0.0f64;
        let mut rows = Vec::new();
        for &sigma in &params.sigmas {
            let count = r.eigenvalues.iter().filter(|&&s| s < sigma).count() as f64;
            let weyl = length * sigma / PI;
            worst = worst.max((count - weyl).abs());
            if (count - weyl).abs() > params.slack {
                verdict = Verdict::Fail;
            }
            rows.push(vec![sigma, count, weyl]);
        }
        let mut out = LevelOutcome::new(
            verdict,
            json!({ "boundary_length": length, "max_deviation": worst, "slack": params.slack }),
            format!("max |count − ℓσ/π| = {worst:.3}"),
        );
        out.rows = rows;
        Ok(out)
    }

    fn exhaustion(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let params = &self.scenario.exhaustion;
        let tau = self.scenario.tolerances.tau_mono;
        let resolution = params.resolution * level as f64;
        let meshes = params
            .radii
            .iter()
            .map(|&r| text(generate(&GeometrySpec::PoincareHalfdisk { r_trunc: r, resolution })))
            .collect::<Fallible<Vec<Mesh>>>()?;
        if meshes.is_empty() {
            return Err("exhaustion needs at least one radius".into());
        }
        let rep = text(exhaustion_xi1(&meshes, tau))?;
        let caps = meshes
            .iter()
            .map(|m| {
                let f = text(super::diameter_arc(m, params.f_half_width))?;
                text(capacity_compact_support(m, &[f])).map(|c| c.value)
            })
            .collect::<Fallible<Vec<f64>>>()?;
        let cap_violations: Vec<usize> = (1..caps.len()).filter(|&i| caps[i] > caps[i - 1] * (1.0 + tau)).collect();
        let c1 = text(c_n(1))?;
        let floor = c1 - 1e-3;
        let finest = *rep.xi1.last().expect("nonempty");
        let limit_gap = (finest - c1) / c1;
        let (verdict, message) = if let Some(i) = rep.xi1.iter().position(|&x| x < floor) {
            (Verdict::Fail, format!("ξ₁ = {} at r = {} is below 2/π − 1e-3", rep.xi1[i], params.radii[i]))
        } else if limit_gap > params.limit_rtol {
            (Verdict::Fail, format!("finest ξ₁ is {:.2}% above 2/π", 100.0 * limit_gap))
        } else if !rep.is_monotone() || !cap_violations.is_empty() {
            (Verdict::Warn, format!("non-monotone beyond τ_mono: ξ₁ at {:?}, capacity at {cap_violations:?}", rep.violations))
        } else {
            (Verdict::Pass, format!("finest ξ₁ is {:.2}% above 2/π", 100.0 * limit_gap))
        };
        let mut out = LevelOutcome::new(
            verdict,
            json!({
                "resolution": resolution,
                "radii": params.radii,
                "xi1": rep.xi1,
                "capacity_f": caps,
                "xi1_violations": rep.violations,
                "capacity_violations": cap_violations,
                "c1": c1,
                "finest_relative_gap": limit_gap,
            }),
            message,
        );
        out.rows = (0..caps.len()).map(|i| vec![params.radii[i], rep.xi1[i], caps[i]]).collect();
        Ok(out)
    }

    fn collar(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let p = self.scenario.collar;
        let b = text(collar_bound(p.l0, p.rho1, p.n_boundaries))?;
        let width_gap = ((0.5 * b.l0).sinh() * b.rho0.sinh() - 1.0).abs();
        let phi_gap = (b.e_phi * b.sech_integral - b.l0).abs();
        let mut values = json!({
            "bound": b,
            "applicable": b.applicable(),
            "l0_times_bound_case1": b.l0 * b.bound_case1,
            "collar_width_residual": width_gap,
            "phi_energy_residual": phi_gap,
        });
        let mut verdict = Verdict::Pass;
        let mut message = format!("bound = {:.6}", b.applicable());
        if width_gap > 1e-12 || phi_gap > 1e-10 * b.l0.max(1.0) {
            verdict = Verdict::Fail;
            message = format!("collar identities off by {width_gap:e} and {phi_gap:e}");
        }
        let mut row = vec![b.l0, f64::NAN, f64::NAN, b.bound_case1, b.bound_case1_quadrature];
        if let (Some(m), 1) = (p.mesh, p.n_boundaries) {
            let mesh = text(generate(&GeometrySpec::Collar {
                l0: b.l0,
                rho_max: b.rho0,
                n_rho: m.n_rho * level,
                n_t: m.n_t * level,
            }))?;
            let r = text(mixed_spectrum(&mesh, &DirichletSet::Label(EdgeLabel::Interior), 2))?;
            let (xi1, xi2) = (r.eigenvalues[0], r.eigenvalues[1]);
            values["xi1"] = json!(xi1);
            values["xi2"] = json!(xi2);
            values["xi2_below_bound_case1"] = json!(xi2 <= b.bound_case1);
            values["xi2_below_bound_case1_quadrature"] = json!(xi2 <= b.bound_case1_quadrature);
            row[1] = xi1;
            row[2] = xi2;
            if verdict == Verdict::Pass {
                if xi2 > b.bound_case1_quadrature {
                    verdict = Verdict::Fail;
                    message = format!("ξ₂ = {xi2:.6} exceeds the test-function bound {:.6}", b.bound_case1_quadrature);
                } else if xi2 > b.bound_case1 {
                    verdict = Verdict::Warn;
                    message = format!(
                        "ξ₂ = {xi2:.6} ≤ {:.6} (full Ψ energy) but exceeds the closed-form bound {:.6}",
                        b.bound_case1_quadrature, b.bound_case1
                    );
                } else {
                    message = format!("ξ₂ = {xi2:.6} ≤ {:.6}", b.bound_case1);
                }
            }
        }
        let mut out = LevelOutcome::new(verdict, values, message);
        out.rows = vec![row];
        Ok(out)
    }

    fn halfplane(&mut self, level: usize) -> Fallible<LevelOutcome> {
        let p = &self.scenario.halfplane;
        let dx = p.dx / level as f64;
        let rows = text(halfplane_bottom_estimate(&p.l_values, dx, p.half_width))?;
        let c1 = text(c_n(1))?;
        let q: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let min = q.iter().copied().fold(f64::INFINITY, f64::min);
        let (verdict, message) = if q.iter().any(|&x| x < c1) {
            (Verdict::Fail, "a Rayleigh quotient fell below 2/π".to_string())
        } else if q.windows(2).any(|w| w[1] >= w[0]) {
            (Verdict::Fail, "Rayleigh quotients do not decrease with L".to_string())
        } else if min > c1 * (1.0 + p.limit_rtol) {
            (Verdict::Fail, format!("smallest quotient is {:.2}% above 2/π", 100.0 * (min / c1 - 1.0)))
        } else {
            (Verdict::Pass, format!("smallest quotient is {:.2}% above 2/π", 100.0 * (min / c1 - 1.0)))
        };
        let mut out = LevelOutcome::new(
            verdict,
            json!({ "dx": dx, "half_width": p.half_width, "l_values": p.l_values, "rayleigh": q, "c1": c1 }),
            message,
        );
        out.rows = rows.iter().map(|&(l, r)| vec![l, r]).collect();
        Ok(out)
    }
}

/// Relabels the edges on one side of the rectangle `[0, w] × [0, h]` as
/// INTERIOR.
fn with_interior_side(mesh: &Mesh, side: Side, w: f64, h: f64) -> Mesh {
    let eps = 1e-12 * w.max(h);
    let on_side = move |p: [f64; 2]| match side {
        Side::Bottom => p[1].abs() <= eps,
        Side::Top => (p[1] - h).abs() <= eps,
        Side::Left => p[0].abs() <= eps,
        Side::Right => (p[0] - w).abs() <= eps,
    };
    mesh.relabelled(|m, a, b, old| {
        if on_side(m.vertices()[a]) && on_side(m.vertices()[b]) {
            EdgeLabel::Interior
        } else {
            old
        }
    })
}
