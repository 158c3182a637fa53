use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryArc, GeometrySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Check {
    SteklovSpectrum,
    Gamma,
    Sandwich,
    MixedSandwich,
    Levelset,
    Exhaustion,
    Collar,
    Halfplane,
    Weyl,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::SteklovSpectrum => "STEKLOV_SPECTRUM",
            Check::Gamma => "GAMMA",
            Check::Sandwich => "SANDWICH",
            Check::MixedSandwich => "MIXED_SANDWICH",
            Check::Levelset => "LEVELSET",
            Check::Exhaustion => "EXHAUSTION",
            Check::Collar => "COLLAR",
            Check::Halfplane => "HALFPLANE",
            Check::Weyl => "WEYL",
        }
    }

    /// Checks that run on the scenario geometry rather than on their own
    /// parameter block.
    pub fn needs_geometry(self) -> bool {
        !matches!(self, Check::Exhaustion | Check::Collar | Check::Halfplane)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tau_thm: f64,
    pub tau_cap: f64,
    pub tau_mono: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tau_thm: 0.15,
            tau_cap: crate::capacity::TAU_CAP,
            tau_mono: crate::spectral::TAU_MONO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    /// Number of nonzero eigenvalues to compute.
    pub k: usize,
    /// Reference values for σ₀, σ₁, … compared with relative tolerance `rtol`.
    pub expected: Option<Vec<f64>>,
    pub rtol: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams { k: 5, expected: None, rtol: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaParams {
    pub coarse_step: Option<usize>,
    pub refine_rounds: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelsetParams {
    pub levels: usize,
}

impl Default for LevelsetParams {
    fn default() -> Self {
        LevelsetParams { levels: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExhaustionParams {
    pub radii: Vec<f64>,
    /// Base resolution, multiplied by each ladder level.
    pub resolution: f64,
    /// The fixed set F is the part of the diameter with `|x| <= f_half_width`.
    pub f_half_width: f64,
    /// The finest ξ₁ must lie within this relative distance of 2/π.
    pub limit_rtol: f64,
}

impl Default for ExhaustionParams {
    fn default() -> Self {
        ExhaustionParams {
            radii: vec![0.5, 0.7, 0.9, 0.99, 0.999],
            resolution: 16.0,
            f_half_width: 0.4,
            limit_rtol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollarMesh {
    pub n_rho: usize,
    pub n_t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollarParams {
    pub l0: f64,
    pub rho1: Option<f64>,
    pub n_boundaries: u32,
    /// When set, ξ₂ of the collar with Dirichlet data on `ρ = ρ₀` is computed
    /// on this mesh (times the ladder level) and compared with the bounds.
    pub mesh: Option<CollarMesh>,
}

impl Default for CollarParams {
    fn default() -> Self {
        CollarParams {
            l0: 1e-4,
            rho1: None,
            n_boundaries: 1,
            mesh: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HalfplaneParams {
    pub l_values: Vec<f64>,
    pub dx: f64,
    pub half_width: f64,
    pub limit_rtol: f64,
}

impl Default for HalfplaneParams {
    fn default() -> Self {
        HalfplaneParams {
            l_values: vec![5.0, 10.0, 25.0, 50.0],
            dx: 0.05,
            half_width: 60.0,
            limit_rtol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeylParams {
    pub sigmas: Vec<f64>,
    /// Allowed `|count − ℓ(∂M)σ/π|`.
    pub slack: f64,
}

impl Default for WeylParams {
    fn default() -> Self {
        WeylParams {
            sigmas: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            slack: 2.0,
        }
    }
}

/// Which side of a rectangle to turn into Dirichlet (INTERIOR) boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixedParams {
    /// Rectangle side relabelled INTERIOR before the mixed checks.
    pub interior_side: Option<Side>,
}

#[allow(clippy::derivable_impls)]
impl Default for MixedParams {
    fn default() -> Self {
        MixedParams { interior_side: None }
    }
}

/// Deliberate corruption used to confirm that the harness can fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultParams {
    /// Multiplies every Γ̂ before it is reported or compared.
    pub gamma_scale: f64,
}

impl Default for FaultParams {
    fn default() -> Self {
        FaultParams { gamma_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    /// Refinement levels, strictly increasing; the finest level decides.
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub spectrum: SpectrumParams,
    #[serde(default)]
    pub gamma: GammaParams,
    #[serde(default)]
    pub mixed: MixedParams,
    #[serde(default)]
    pub levelset: LevelsetParams,
    #[serde(default)]
    pub exhaustion: ExhaustionParams,
    #[serde(default)]
    pub collar: CollarParams,
    #[serde(default)]
    pub halfplane: HalfplaneParams,
    #[serde(default)]
    pub weyl: WeylParams,
    #[serde(default)]
    pub fault: FaultParams,
}

fn default_ladder() -> Vec<usize> {
    vec![1]
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Scenario::from_toml(&text)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.checks.is_empty() {
            return bad("at least one check is required".into());
        }
        let mut seen = self.checks.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return bad("checks must not repeat".into());
        }
        if self.ladder.is_empty() || self.ladder[0] == 0 {
            return bad("ladder levels must be positive and nonempty".into());
        }
        if self.ladder.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("ladder {:?} must be strictly increasing", self.ladder));
        }
        if self.geometry.is_none() {
            if let Some(c) = self.checks.iter().find(|c| c.needs_geometry()) {
                return bad(format!("check {} needs a [geometry] section", c.name()));
            }
        }
        if self.mixed.interior_side.is_some() && !matches!(self.geometry, Some(GeometrySpec::Rectangle { .. })) {
            return bad("mixed.interior_side applies to rectangle geometries only".into());
        }
        let t = &self.tolerances;
        if [t.tau_thm, t.tau_cap, t.tau_mono].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return bad("tolerances must be finite and nonnegative".into());
        }
        if !(self.fault.gamma_scale > 0.0 && self.fault.gamma_scale.is_finite()) {
            return bad("fault.gamma_scale must be positive".into());
        }
        if self.spectrum.k == 0 {
            return bad("spectrum.k must be at least 1".into());
        }
        Ok(())
    }
}

/// The part of the open EXTERIOR chain of a half-disk mesh whose vertices
/// satisfy `|x| <= half_width` in the chart.
pub fn diameter_arc(mesh: &crate::mesh::Mesh, half_width: f64) -> Result<BoundaryArc> {
    use crate::mesh::EdgeLabel;
    let inside = |v: usize| mesh.vertices()[v][0].abs() <= half_width * (1.0 + 1e-12);
    for (c, chain) in mesh.boundary().iter().enumerate() {
        if chain.is_closed() || chain.labels.iter().any(|&l| l != EdgeLabel::Exterior) {
            continue;
        }
        let pos: Vec<usize> = (0..chain.edge_count())
            .filter(|&k| {
                let (a, b) = chain.edge(k);
                inside(a) && inside(b)
            })
            .collect();
        if let (Some(&first), Some(&last)) = (pos.first(), pos.last()) {
            return Ok(BoundaryArc::new(c, first, last + 1));
        }
    }
    Err(Error::param(format!("no diameter edge lies within |x| <= {half_width}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = r#"
name = "disk"
checks = ["STEKLOV_SPECTRUM", "GAMMA", "SANDWICH"]
ladder = [1, 2]

[geometry]
kind = "disk"
n_radial = 4
n_angular = 6
"#;

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let s = Scenario::from_toml(DISK).unwrap();
        assert_eq!(s.checks.len(), 3);
        assert_eq!(s.tolerances.tau_thm, 0.15);
        assert_eq!(s.fault.gamma_scale, 1.0);
    }

    #[test]
    fn empty_checks_are_a_config_error() {
        let text = DISK.replace(r#"["STEKLOV_SPECTRUM", "GAMMA", "SANDWICH"]"#, "[]");
        assert!(matches!(Scenario::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_and_checks_are_rejected() {
        assert!(Scenario::from_toml(&format!("{DISK}\n[tolerances]\ntau_typo = 1.0\n")).is_err());
        assert!(Scenario::from_toml(&DISK.replace("\"GAMMA\"", "\"GAMA\"")).is_err());
        assert!(Scenario::from_toml(&DISK.replace("name = \"disk\"", "name = \"disk\"\ncolour = 1")).is_err());
    }

    #[test]
    fn ladder_must_refine() {
        assert!(Scenario::from_toml(&DISK.replace("[1, 2]", "[2, 2]")).is_err());
        assert!(Scenario::from_toml(&DISK.replace("[1, 2]", "[]")).is_err());
    }

    #[test]
    fn geometry_checks_need_geometry() {
        let text = "name = \"x\"\nchecks = [\"SANDWICH\"]\n";
        assert!(Scenario::from_toml(text).is_err());
        let text = "name = \"x\"\nchecks = [\"HALFPLANE\", \"COLLAR\"]\n";
        assert!(Scenario::from_toml(text).is_ok());
    }

    #[test]
    fn interior_side_needs_a_rectangle() {
        let text = format!("{DISK}\n[mixed]\ninterior_side = \"left\"\n");
        assert!(Scenario::from_toml(&text).is_err());
    }
}
