use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use steklov::capacity::{capacity, capacity_compact_support, gamma_search, GammaConfig, GammaMode};
use steklov::hyperbolic::{c_n, collar_bound, halfplane_bottom_estimate};
use steklov::mesh::{self, arcs_vertex_set, BoundaryArc, GeometrySpec};
use steklov::spectral::steklov_spectrum;
use steklov::verify::{run_scenario, Scenario};
use steklov::{par, Error};

/// Steklov spectra, capacities and isocapacitary constants on triangulated
/// surfaces.
#[derive(Debug, Parser)]
#[command(name = "steklov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a mesh from a geometry spec (TOML file or `kind:key=value,...`).
    Mesh {
        spec: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print σ₀..σ_k as CSV.
    Steklov {
        mesh: PathBuf,
        #[arg(short, default_value_t = 5)]
        k: usize,
    },
    /// Relative capacity between two sets of boundary arcs.
    Capacity {
        mesh: PathBuf,
        /// Arcs `chain:start:end`, comma separated.
        #[arg(long)]
        a: String,
        /// Arcs as for `--a`, or `INTERIOR` for the interior boundary.
        #[arg(long)]
        b: String,
    },
    /// Search for the isocapacitary constant and print the estimate as JSON.
    Gamma {
        mesh: PathBuf,
        /// Use the interior boundary as the second set.
        #[arg(long)]
        mixed: bool,
        #[arg(long)]
        step: Option<usize>,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
    },
    /// Closed-form hyperbolic computations.
    Hyperbolic {
        #[command(subcommand)]
        command: Hyperbolic,
    },
    /// Run a scenario file and write a JSON report with CSV tables beside it.
    Verify {
        config: PathBuf,
        #[arg(short, long, default_value = "report.json")]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum Hyperbolic {
    /// c_n = (∫₀^∞ sechⁿ)⁻¹.
    Cn { n: u32 },
    /// Collar bounds for σ₁ as JSON.
    Collar {
        #[arg(long)]
        l0: f64,
        #[arg(long)]
        rho1: Option<f64>,
        #[arg(long, default_value_t = 1)]
        boundaries: u32,
    },
    /// Rayleigh quotients of the plateau family as CSV.
    Halfplane {
        #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 25.0, 50.0])]
        l: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        dx: f64,
        #[arg(long, default_value_t = 60.0)]
        half_width: f64,
    },
}

/// Malformed input maps to 2, failed computations to 1.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Parameter(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("STEKLOV_THREADS") {
        let cap = match v.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!("error: STEKLOV_THREADS must be a positive integer, got '{v}'");
                return ExitCode::from(2);
            }
        };
        if let Err(e) = par::limit_threads(cap) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(command: Command) -> steklov::Result<u8> {
    match command {
        Command::Mesh { spec, output } => {
            let geometry = parse_geometry(&spec)?;
            let m = mesh::generate(&geometry)?;
            let diag = mesh::validate(&m);
            if !diag.passes() {
                return Err(Error::Config(format!("generated mesh is invalid: {}", diag.summary())));
            }
            mesh::save(&m, &output)?;
            println!(
                "{}: {} vertices, {} triangles, chi = {}, boundary length = {}",
                m.name(),
                m.vertex_count(),
                m.triangle_count(),
                m.euler_characteristic(),
                m.total_boundary_length()
            );
        }
        Command::Steklov { mesh: path, k } => {
            let r = steklov_spectrum(&mesh::load(path)?, k)?;
            r.write_csv(std::io::stdout().lock())?;
        }
        Command::Capacity { mesh: path, a, b } => {
            let m = mesh::load(path)?;
            let a_arcs = parse_arcs(&a)?;
            for arc in &a_arcs {
                arc.check(&m)?;
            }
            let r = if b.eq_ignore_ascii_case("interior") {
                capacity_compact_support(&m, &a_arcs)?
            } else {
                let b_arcs = parse_arcs(&b)?;
                for arc in &b_arcs {
                    arc.check(&m)?;
                }
                capacity(&m, &arcs_vertex_set(&m, &a_arcs), &arcs_vertex_set(&m, &b_arcs))?
            };
            println!("capacity = {}", r.value);
            println!("flux = {}", r.flux_value);
            println!("green_gap = {:e}", r.green_gap());
        }
        Command::Gamma { mesh: path, mixed, step, rounds } => {
            let m = mesh::load(path)?;
            let mode = if mixed { GammaMode::Mixed } else { GammaMode::Compact };
            let est = gamma_search(
                &m,
                mode,
                GammaConfig {
                    coarse_step: step,
                    refine_rounds: rounds,
                },
            )?;
            println!("{}", est.to_json());
        }
        Command::Hyperbolic { command } => match command {
            Hyperbolic::Cn { n } => println!("{:.15}", c_n(n)?),
            Hyperbolic::Collar { l0, rho1, boundaries } => {
                let b = collar_bound(l0, rho1, boundaries)?;
                println!("{}", serde_json::to_string_pretty(&b).expect("bound serialises"));
            }
            Hyperbolic::Halfplane { l, dx, half_width } => {
                println!("l,rayleigh");
                for (l, r) in halfplane_bottom_estimate(&l, dx, half_width)? {
                    println!("{l},{r}");
                }
            }
        },
        Command::Verify { config, output } => return verify(&config, &output),
    }
    Ok(0)
}

fn verify(config: &Path, output: &Path) -> steklov::Result<u8> {
    let scenario = Scenario::load(config)?;
    let report = run_scenario(&scenario)?;
    let csvs = report.write(output)?;
    for r in &report.records {
        println!("{:<16} {}  {}", r.name, r.verdict, r.message);
    }
    println!(
        "{}: {} pass, {} warn, {} fail; report {} (+{} csv)",
        report.scenario,
        report.summary.pass,
        report.summary.warn,
        report.summary.fail,
        output.display(),
        csvs.len()
    );
    Ok(report.exit_code() as u8)
}

/// A TOML file, or the compact form `disk:n_radial=20,n_angular=6`.
fn parse_geometry(spec: &str) -> steklov::Result<GeometrySpec> {
    let text = if Path::new(spec).is_file() {
        std::fs::read_to_string(spec)?
    } else {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut t = format!("kind = \"{kind}\"\n");
        for kv in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value in geometry spec, got '{kv}'")))?;
            t.push_str(&format!("{} = {}\n", k.trim(), v.trim()));
        }
        t
    };
    toml::from_str(&text).map_err(|e| Error::Config(format!("geometry spec: {e}")))
}

fn parse_arcs(s: &str) -> steklov::Result<Vec<BoundaryArc>> {
    s.split(',')
        .map(|part| {
            let nums: Vec<usize> = part
                .split(':')
                .map(|x| x.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Config(format!("arc '{part}': {e}")))?;
            match nums[..] {
                [chain, start, end] => Ok(BoundaryArc::new(chain, start, end)),
                _ => Err(Error::Config(format!("arc '{part}' must be chain:start:end"))),
            }
        })
        .collect()
}
