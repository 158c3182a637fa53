//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steklov::capacity::{
    capacity, capacity_compact_support, default_levels, gamma_bruteforce, gamma_search, levelset_capacity_check,
    GammaConfig, GammaMode, BRUTEFORCE_MAX_BOUNDARY, TAU_CAP,
};
use steklov::fem::{assemble_stiffness, harmonic_extension, NodalField};
use steklov::hyperbolic::{c_n, collar_bound, halfplane_bottom_estimate, halfplane_form, phi_n_profile, LineFunction};
use steklov::mesh::{generate, EdgeLabel, GeometrySpec, Mesh, MetricSpec};
use steklov::spectral::{exhaustion_xi1, steklov_spectrum, TAU_MONO};
use steklov::verify::{diameter_arc, run_scenario, Scenario, Verdict};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit_s,
        format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64()),
    )
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn closed_forms() -> Outcome {
    let t = Instant::now();
    for (n, want) in [(1, 2.0 / PI), (2, 1.0), (3, 4.0 / PI)] {
        let got = c_n(n).map_err(e)?;
        ensure((got - want).abs() <= 1e-10, format!("c_{n} = {got}, want {want}"))?;
    }
    within(t.elapsed(), 1.0)?;
    Ok(format!("c_1, c_2, c_3 within 1e-10 in {:.3} s", t.elapsed().as_secs_f64()))
}

fn fine_disk() -> Mesh {
    generate(&GeometrySpec::Disk { n_radial: 20, n_angular: 6 }).unwrap()
}

fn disk_oracle() -> Outcome {
    let t = Instant::now();
    let r = steklov_spectrum(&fine_disk(), 5).map_err(e)?;
    let want = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0];
    let mut worst = 0.0f64;
    for (j, (&got, &w)) in r.eigenvalues.iter().zip(&want).enumerate() {
        let err = if w == 0.0 { got.abs() } else { (got - w).abs() / w };
        worst = worst.max(err);
        ensure(err <= 0.01, format!("σ_{j} = {got}, want {w}"))?;
    }
    within(t.elapsed(), 60.0)?;
    Ok(format!("h = 0.05, worst relative error {:.3}%", 100.0 * worst))
}

fn weyl_count() -> Outcome {
    let m = fine_disk();
    let r = steklov_spectrum(&m, 30).map_err(e)?;
    let mut worst = 0.0f64;
    for sigma in [2.0, 4.0, 6.0, 8.0, 10.0] {
        let count = r.eigenvalues.iter().filter(|&&s| s < sigma).count() as f64;
        worst = worst.max((count - 2.0 * sigma).abs());
        ensure((count - 2.0 * sigma).abs() <= 2.0, format!("σ = {sigma}: count {count}"))?;
    }
    Ok(format!("max |count − 2σ| = {worst}"))
}

fn capacity_oracle() -> Outcome {
    let ladder = [(4, 48), (8, 96), (16, 192)];
    let want = 2.0 * PI;
    let mut mid = f64::NAN;
    let mut worst_gap = 0.0f64;
    for (i, &(n_r, n_a)) in ladder.iter().enumerate() {
        let m = generate(&GeometrySpec::Annulus { r_in: 1.0, r_out: E, n_r, n_a }).map_err(e)?;
        let inner: Vec<usize> = m.boundary()[0].vertices.clone();
        let outer: Vec<usize> = m.boundary()[1].vertices.clone();
        let c = capacity(&m, &inner, &outer).map_err(e)?;
        worst_gap = worst_gap.max(c.green_gap() / c.value.max(1.0));
        if i == 1 {
            mid = c.value;
        }
    }
    ensure((mid - want).abs() <= 0.02 * want, format!("Cap = {mid}, want 2π"))?;
    ensure(worst_gap <= 1e-8, format!("energy/flux gap {worst_gap:e}"))?;
    Ok(format!(
        "Cap = {mid:.5} at 8×96 ({:.2}% off 2π), energy/flux gap ≤ {worst_gap:.1e}",
        100.0 * (mid / want - 1.0).abs()
    ))
}

fn scenario(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&path).unwrap_or_else(|err| panic!("{}: {err}", path.display()))
}

fn sandwich_rows(files: &[&str], check: &str) -> Result<Vec<String>, String> {
    let mut rows = Vec::new();
    for f in files {
        let report = run_scenario(&scenario(f)).map_err(e)?;
        let rec = report.record(check).ok_or(format!("{f}: no {check} record"))?;
        ensure(rec.verdict == Verdict::Pass, format!("{f}: {} {}", rec.verdict, rec.message))?;
        let finest = rec.values["levels"].as_array().and_then(|l| l.last()).ok_or("no levels")?;
        let (gamma, ratio) = (finest["gamma"].as_f64().unwrap(), finest["ratio"].as_f64().unwrap());
        // the upper comparison carries no tolerance
        ensure(ratio * gamma <= 2.0 * gamma, format!("{f}: upper bound violated"))?;
        rows.push(format!("{} {ratio:.3}", report.scenario));
    }
    Ok(rows)
}

fn sandwich() -> Outcome {
    let t = Instant::now();
    let rows = sandwich_rows(&["disk.toml", "square.toml", "annulus.toml", "collar.toml"], "SANDWICH")?;
    within(t.elapsed(), 600.0)?;
    Ok(format!("σ₁/Γ̂: {}", rows.join(", ")))
}

fn mixed_sandwich() -> Outcome {
    let rows = sandwich_rows(&["halfdisk_mixed.toml", "square_mixed.toml"], "MIXED_SANDWICH")?;
    Ok(format!("ξ₁/Γ̂_Y: {}", rows.join(", ")))
}

fn levelset() -> Outcome {
    let t = Instant::now();
    let disk = generate(&GeometrySpec::Disk { n_radial: 10, n_angular: 6 }).map_err(e)?;
    let u = steklov_spectrum(&disk, 1).map_err(e)?.eigenfields[1].clone();
    let a = levelset_capacity_check(&disk, &u, &default_levels(&u, 32), TAU_CAP).map_err(e)?;
    ensure(a.passes, format!("disk eigenfield: ratio {}", a.ratio))?;

    let square = generate(&GeometrySpec::Rectangle { w: 1.0, h: 1.0, nx: 8, ny: 8 }).map_err(e)?;
    let ramp = NodalField::new(square.vertices().iter().map(|p| p[0] - 0.5).collect()).map_err(e)?;
    let b = levelset_capacity_check(&square, &ramp, &default_levels(&ramp, 32), TAU_CAP).map_err(e)?;
    ensure(b.passes, format!("ramp: ratio {}", b.ratio))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let boundary = disk.boundary()[0].vertices.clone();
    for i in 0..20 {
        let coeffs: Vec<(f64, f64)> = (1..=4)
            .map(|m| (rng.random_range(-1.0..1.0) / m as f64, rng.random_range(-1.0..1.0) / m as f64))
            .collect();
        let fixed: BTreeMap<usize, f64> = boundary
            .iter()
            .map(|&v| {
                let [x, y] = disk.vertices()[v];
                let th = y.atan2(x);
                let f = coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, (a, b))| a * ((m + 1) as f64 * th).cos() + b * ((m + 1) as f64 * th).sin())
                    .sum();
                (v, f)
            })
            .collect();
        let u = harmonic_extension(&disk, &fixed).map_err(e)?;
        let r = levelset_capacity_check(&disk, &u, &default_levels(&u, 32), TAU_CAP).map_err(e)?;
        ensure(r.passes, format!("random field {i}: ratio {}", r.ratio))?;
        worst = worst.max(r.ratio);
    }
    within(t.elapsed(), 300.0)?;
    Ok(format!(
        "lhs/rhs: eigenfield {:.3}, ramp {:.3}, 20 random fields ≤ {worst:.3}",
        a.ratio, b.ratio
    ))
}

fn exhaustion() -> Outcome {
    let radii = [0.5, 0.7, 0.9, 0.99, 0.999];
    let meshes = radii
        .iter()
        .map(|&r| generate(&GeometrySpec::PoincareHalfdisk { r_trunc: r, resolution: 16.0 }))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    let rep = exhaustion_xi1(&meshes, TAU_MONO).map_err(e)?;
    ensure(rep.is_monotone(), format!("ξ₁ not monotone: {:?}", rep.xi1))?;
    let c1 = 2.0 / PI;
    ensure(rep.xi1.iter().all(|&x| x >= c1 - 1e-3), format!("ξ₁ below 2/π: {:?}", rep.xi1))?;
    let finest = rep.xi1[4];
    ensure(finest <= c1 * 1.05, format!("finest ξ₁ = {finest}"))?;
    let caps = meshes
        .iter()
        .map(|m| capacity_compact_support(m, &[diameter_arc(m, 0.4)?]).map(|c| c.value))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    ensure(
        caps.windows(2).all(|w| w[1] <= w[0] * (1.0 + TAU_MONO)),
        format!("Cap(F) not monotone: {caps:?}"),
    )?;
    Ok(format!(
        "ξ₁ = {:.4} … {finest:.4} ({:.2}% above 2/π), Cap(F) {:.4} → {:.4}",
        rep.xi1[0],
        100.0 * (finest / c1 - 1.0),
        caps[0],
        caps[4]
    ))
}

fn halfplane() -> Outcome {
    let t = Instant::now();
    let rows = halfplane_bottom_estimate(&[5.0, 10.0, 25.0, 50.0], 0.05, 60.0).map_err(e)?;
    let c1 = 2.0 / PI;
    ensure(rows.windows(2).all(|w| w[1].1 < w[0].1), format!("not decreasing: {rows:?}"))?;
    ensure(rows.iter().all(|r| r.1 >= c1), "a quotient fell below 2/π")?;
    ensure(rows[3].1 <= c1 * 1.05, format!("L = 50 gives {}", rows[3].1))?;
    within(t.elapsed(), 120.0)?;
    Ok(format!("rayleigh(L = 50) = {:.5}, {:.2}% above 2/π", rows[3].1, 100.0 * (rows[3].1 / c1 - 1.0)))
}

fn collar() -> Outcome {
    let l0 = 1e-4;
    let b = collar_bound(l0, Some(l0), 1).map_err(e)?;
    let scaled = l0 * b.bound_case1;
    ensure((4.0 / 3.0..=4.0 / 3.0 * 1.02).contains(&scaled), format!("l₀·bound = {scaled}"))?;
    let mut top = 0.0f64;
    for i in 1..=100 {
        let l = i as f64 / 101.0;
        let c2 = collar_bound(l, None, 2).map_err(e)?.bound_case2;
        ensure(c2 < E + 1.0 / E, format!("bound_case2({l}) = {c2}"))?;
        top = top.max(c2);
    }
    Ok(format!("l₀·bound_case1 = {scaled:.6}, max bound_case2 = {top:.4} < e + 1/e"))
}

fn oracle_corpus() -> Vec<(Mesh, Vec<GammaMode>)> {
    let compact = vec![GammaMode::Compact];
    let both = vec![GammaMode::Compact, GammaMode::Mixed];
    let square = generate(&GeometrySpec::Rectangle { w: 1.0, h: 1.0, nx: 4, ny: 4 }).unwrap();
    vec![
        (square.clone(), compact.clone()),
        (square.with_reversed_boundary(), compact.clone()),
        (square.scaled(2.5).unwrap(), compact.clone()),
        (generate(&GeometrySpec::Rectangle { w: 2.0, h: 1.0, nx: 6, ny: 3 }).unwrap(), compact.clone()),
        (generate(&GeometrySpec::Disk { n_radial: 3, n_angular: 6 }).unwrap(), compact.clone()),
        (generate(&GeometrySpec::Disk { n_radial: 6, n_angular: 6 }).unwrap(), compact.clone()),
        (
            generate(&GeometrySpec::Annulus { r_in: 0.5, r_out: 1.0, n_r: 2, n_a: 12 }).unwrap(),
            compact.clone(),
        ),
        (
            generate(&GeometrySpec::Collar { l0: 1.0, rho_max: 1.0, n_rho: 2, n_t: 8 }).unwrap(),
            both.clone(),
        ),
        (generate(&GeometrySpec::PoincareHalfdisk { r_trunc: 0.6, resolution: 3.0 }).unwrap(), both.clone()),
        (generate(&GeometrySpec::PoincareHalfdisk { r_trunc: 0.8, resolution: 4.0 }).unwrap(), both),
        (
            square.relabelled(|m, a, b, old| {
                if m.vertices()[a][0] == 0.0 && m.vertices()[b][0] == 0.0 {
                    EdgeLabel::Interior
                } else {
                    old
                }
            }),
            vec![GammaMode::Mixed],
        ),
    ]
}

fn oracle_equivalence() -> Outcome {
    let mut cases = 0;
    let mut worst = 0.0f64;
    for (m, modes) in oracle_corpus() {
        ensure(m.boundary_vertices().len() <= BRUTEFORCE_MAX_BOUNDARY, format!("{} is too large", m.name()))?;
        for mode in modes {
            let s = gamma_search(&m, mode, GammaConfig::default()).map_err(e)?;
            let b = gamma_bruteforce(&m, mode, BRUTEFORCE_MAX_BOUNDARY).map_err(e)?;
            let tag = format!("{} {mode:?}", m.name());
            ensure(s.witness_a == b.witness_a && s.witness_b == b.witness_b, format!("{tag}: witnesses differ"))?;
            let rel = (s.value - b.value).abs() / b.value;
            ensure(rel <= 1e-12, format!("{tag}: {} vs {}", s.value, b.value))?;
            worst = worst.max(rel);
            cases += 1;
        }
    }
    Ok(format!("{cases} mesh/mode pairs, identical witnesses, values agree to {worst:.1e} relative"))
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);

    // conformal factors cancel in two dimensions
    let disk = generate(&GeometrySpec::Disk { n_radial: 6, n_angular: 6 }).unwrap();
    let k0 = assemble_stiffness(&disk).map_err(e)?;
    let factor: Vec<f64> = (0..disk.vertex_count()).map(|_| rng.random_range(0.1..10.0)).collect();
    let conformal = Mesh::new(
        "conformal",
        disk.vertices().to_vec(),
        disk.triangles().to_vec(),
        MetricSpec::Conformal { factor },
        disk.boundary().to_vec(),
    )
    .map_err(e)?;
    let k1 = assemble_stiffness(&conformal).map_err(e)?;
    let n = disk.vertex_count();
    let scale = (0..n).map(|i| k0.matrix.get(i, i).abs()).fold(0.0, f64::max);
    let diff = (0..n)
        .flat_map(|i| k0.matrix.row(i).map(move |(j, _)| (i, j)))
        .map(|(i, j)| (k0.matrix.get(i, j) - k1.matrix.get(i, j)).abs())
        .fold(0.0, f64::max);
    ensure(diff <= 1e-13 * scale, format!("conformal stiffness differs by {diff:e}"))?;

    // capacity symmetry and monotonicity in A
    let sq = generate(&GeometrySpec::Rectangle { w: 1.0, h: 1.0, nx: 6, ny: 6 }).unwrap();
    let ring = sq.boundary()[0].vertices.clone();
    for _ in 0..20 {
        let s = rng.random_range(0..ring.len());
        let a: Vec<usize> = (0..3).map(|i| ring[(s + i) % ring.len()]).collect();
        let a_big: Vec<usize> = (0..5).map(|i| ring[(s + i) % ring.len()]).collect();
        let b: Vec<usize> = (10..14).map(|i| ring[(s + i) % ring.len()]).collect();
        let ab = capacity(&sq, &a, &b).map_err(e)?.value;
        let ba = capacity(&sq, &b, &a).map_err(e)?.value;
        let big = capacity(&sq, &a_big, &b).map_err(e)?.value;
        ensure((ab - ba).abs() <= 1e-12 * ab, format!("Cap(A,B) = {ab} but Cap(B,A) = {ba}"))?;
        ensure(ab <= big * (1.0 + 1e-12), format!("Cap grew from {ab} to {big} when A shrank"))?;
    }

    // Γ scales by 1/s with unchanged witnesses
    let base = generate(&GeometrySpec::Rectangle { w: 1.0, h: 1.0, nx: 4, ny: 4 }).unwrap();
    let g0 = gamma_search(&base, GammaMode::Compact, GammaConfig::default()).map_err(e)?;
    for s in [0.5, 3.0] {
        let g = gamma_search(&base.scaled(s).map_err(e)?, GammaMode::Compact, GammaConfig::default()).map_err(e)?;
        ensure((g.value * s - g0.value).abs() <= 1e-10 * g0.value, format!("Γ at scale {s}: {}", g.value))?;
        ensure(g.witness_a == g0.witness_a && g.witness_b == g0.witness_b, format!("witnesses moved at scale {s}"))?;
    }

    // the half-plane quotient never drops below c₁
    let c1 = c_n(1).map_err(e)?;
    let mut lowest = f64::INFINITY;
    for _ in 0..1000 {
        let inner = rng.random_range(1..60);
        let pad = rng.random_range(1..20);
        let n = inner + 2 * pad + 1;
        let mut v = vec![0.0; n];
        for x in &mut v[pad..pad + inner] {
            *x = rng.random_range(-3.0..3.0);
        }
        let g = LineFunction::new((n - 1) as f64 * 0.05, 0.1, v).map_err(e)?;
        let r = halfplane_form(&g).map_err(e)?.rayleigh;
        lowest = lowest.min(r);
    }
    ensure(lowest >= c1 * (1.0 - 1e-14), format!("rayleigh {lowest} < c₁"))?;

    // φ_n lies in [0, 1] and never increases
    let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
    for n in 1..=10 {
        let p = phi_n_profile(n, &grid).map_err(e)?;
        ensure(p.iter().all(|s| (0.0..=1.0).contains(&s.value)), format!("φ_{n} leaves [0, 1]"))?;
        ensure(p.windows(2).all(|w| w[1].value <= w[0].value), format!("φ_{n} increases"))?;
    }
    Ok(format!(
        "conformal gap {:.1e}, capacity symmetry/monotonicity ×20, Γ scaling ×2, min rayleigh/c₁ = {:.4}, φ_n for n ≤ 10",
        diff / scale,
        lowest / c1
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("closed-form c_n", closed_forms),
        ("disk Steklov oracle", disk_oracle),
        ("Weyl count", weyl_count),
        ("annulus capacity oracle", capacity_oracle),
        ("sandwich", sandwich),
        ("mixed sandwich", mixed_sandwich),
        ("level-set inequality", levelset),
        ("exhaustion", exhaustion),
        ("half-plane form", halfplane),
        ("collar bounds", collar),
        ("Γ oracle equivalence", oracle_equivalence),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
