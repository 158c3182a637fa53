//! Scenario runner: reads a TOML scenario, runs the requested checks over a
//! resolution ladder and assembles a JSON report with one record per check.
//!
//! Records are deterministic given the scenario and the build except for
//! `wall_time_s`. Any module error inside a check becomes a FAIL record and
//! the run moves on to the next check.

mod checks;
mod scenario;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use scenario::{
    diameter_arc, Check, CollarMesh, CollarParams, ExhaustionParams, FaultParams, GammaParams, HalfplaneParams,
    LevelsetParams, MixedParams, Scenario, Side, SpectrumParams, Tolerances, WeylParams,
};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// The checked-in JSON schema every report conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// Ordered so that `max` picks the worst outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Warn => "WARN",
            Verdict::Fail => "FAIL",
        })
    }
}

/// `¼Γ̂ ≤ σ₁ ≤ 2Γ̂`: the upper comparison is exact, the lower one is relaxed
/// to `¼Γ̂(1 − τ)` for PASS and `¼Γ̂(1 − 2τ)` for WARN.
pub fn check_sandwich(sigma1: f64, gamma: f64, tau_thm: f64) -> Result<Verdict> {
    if !(sigma1 > 0.0 && gamma > 0.0 && sigma1.is_finite() && gamma.is_finite()) {
        return Err(Error::Parameter(format!(
            "sandwich needs positive finite inputs, got sigma1 = {sigma1}, gamma = {gamma}"
        )));
    }
    if !(tau_thm >= 0.0) {
        return Err(Error::Parameter(format!("tau_thm must be nonnegative, got {tau_thm}")));
    }
    Ok(if sigma1 > 2.0 * gamma {
        Verdict::Fail
    } else if sigma1 >= 0.25 * gamma * (1.0 - tau_thm) {
        Verdict::Pass
    } else if sigma1 >= 0.25 * gamma * (1.0 - 2.0 * tau_thm) {
        Verdict::Warn
    } else {
        Verdict::Fail
    })
}

/// Tabular data exported next to the report as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    /// sha256 of the check name and the full scenario, as canonical JSON.
    pub inputs_digest: String,
    pub values: Value,
    pub verdict: Verdict,
    pub message: String,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub table: Option<Table>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Environment {
    pub package: &'static str,
    pub version: &'static str,
    pub parallel: bool,
    pub threads: usize,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            parallel: crate::par::is_parallel(),
            threads: crate::par::worker_count(),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub warn: usize,
    pub fail: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub config: Scenario,
    pub environment: Environment,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    /// 0 when every record passes or warns, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.summary.verdict == Verdict::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn record(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    /// Writes the report to `path` and each record's table to
    /// `<stem>.<check>.csv` beside it. Returns the CSV paths.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n")?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        let mut written = Vec::new();
        for r in &self.records {
            if let Some(t) = &r.table {
                let p = dir.join(format!("{stem}.{}.csv", r.name.to_lowercase()));
                t.write_csv(std::io::BufWriter::new(std::fs::File::create(&p)?))?;
                written.push(p);
            }
        }
        Ok(written)
    }
}

/// Runs every check of `scenario` in the listed order.
pub fn run_scenario(scenario: &Scenario) -> Result<Report> {
    scenario.check()?;
    let mut ctx = checks::Context::new(scenario);
    let config_json = serde_json::to_string(scenario).map_err(|e| Error::Config(e.to_string()))?;
    let records: Vec<Record> = scenario
        .checks
        .iter()
        .map(|&check| {
            let start = Instant::now();
            let outcome = ctx.run(check);
            let mut h = Sha256::new();
            h.update(check.name().as_bytes());
            h.update([0u8]);
            h.update(config_json.as_bytes());
            Record {
                name: check.name().to_string(),
                inputs_digest: hex::encode(h.finalize()),
                values: outcome.values,
                verdict: outcome.verdict,
                message: outcome.message,
                wall_time_s: start.elapsed().as_secs_f64(),
                table: outcome.table,
            }
        })
        .collect();
    let count = |v: Verdict| records.iter().filter(|r| r.verdict == v).count();
    let summary = Summary {
        pass: count(Verdict::Pass),
        warn: count(Verdict::Warn),
        fail: count(Verdict::Fail),
        verdict: records.iter().map(|r| r.verdict).max().unwrap_or(Verdict::Pass),
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        config: scenario.clone(),
        environment: Environment::current(),
        records,
        summary,
    })
}
