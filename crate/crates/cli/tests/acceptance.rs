//! One line per acceptance criterion; exits non-zero when any fails.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use magrobin::asymptotics::{dilation_check, disk_expansion_check, domain_expansion_check};
use magrobin::coarea::{verify_isoperimetric, Verdict, VerifyConfig};
use magrobin::fem::{solve_domain, solve_domain_refined, EigenOptions, MeshResolution};
use magrobin::geometry::{
    default_levels, distance_field, hurwitz_gap, inradius, level_curves, DomainSpec, Point, Polyline,
};
use magrobin::radial::{
    constant_test_bound, critical_beta_disk, disk_ground, fiber_ground, FiberParams, RadialConfig, RadialGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const BESSEL_REL: f64 = 1e-5;
const BESSEL_SECONDS: f64 = 1.0;
const MODE_GRID_SECONDS: f64 = 10.0;
const BETA_C_SLACK: f64 = 1e-4;
const CONSTANT_TEST_SLACK: f64 = 1e-6;
const LEVEL_SLACK: f64 = 0.01;
const DISK_LEVEL_REL: f64 = 5e-3;
const HURWITZ_SLACK: f64 = 1e-6;
const HURWITZ_EQUALITY_REL: f64 = 1e-3;
const EQUALITY_REL: f64 = 1e-3;
const ELLIPSE_SECONDS: f64 = 120.0;
const CROSS_SOLVER_REL: f64 = 1e-2;
const MIN_ORDER: f64 = 1.5;
const GAUGE_REL: f64 = 1e-7;
const SANDWICH_SLACK: f64 = 1e-9;
const E_TERM_DEVIATION: f64 = 0.05;
const DOMAIN_RESIDUAL_BOUND: f64 = 2.0;
const DILATION_REL: f64 = 1e-8;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `I₀` and `I₁` from 30 terms of their power series.
fn bessel_i01(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut i0, mut i1) = (t0, t1);
    for k in 1..30 {
        let k = k as f64;
        t0 *= q / (k * k);
        t1 *= q / (k * (k + 1.0));
        i0 += t0;
        i1 += t1;
    }
    (i0, i1)
}

fn bessel_oracle() -> Outcome {
    let start = Instant::now();
    let g = |k: f64| {
        let (i0, i1) = bessel_i01(k);
        k * i1 - i0
    };
    let (mut lo, mut hi) = (1e-6, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let exact = -(0.5 * (lo + hi)).powi(2);
    let p = FiberParams::new(0, 1.0, 0.0, -1.0).map_err(|e| e.to_string())?;
    let grid = RadialGrid::staggered(1.0, 4096).map_err(|e| e.to_string())?;
    let mu = fiber_ground(&p, &grid).map_err(|e| e.to_string())?.mu1;
    let secs = start.elapsed().as_secs_f64();
    let rel = (mu - exact).abs() / exact.abs();
    ensure(rel < BESSEL_REL, || format!("mu1 {mu} vs {exact}, rel {rel:.2e}"))?;
    ensure(secs < BESSEL_SECONDS, || format!("took {secs:.2} s"))?;
    Ok(format!("rel {rel:.2e}, {secs:.3} s"))
}

const GRID_B: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const GRID_BETA: [f64; 5] = [-0.5, -1.0, -2.0, -4.0, -8.0];

fn mode_bound_grid() -> Outcome {
    let start = Instant::now();
    let cfg = RadialConfig::default();
    let mut worst_gap = f64::INFINITY;
    for b in GRID_B {
        for beta in GRID_BETA {
            let s = disk_ground(1.0, b, beta, &cfg).map_err(|e| e.to_string())?;
            ensure(s.m_star == 0, || format!("m_star {} at b={b}, beta={beta}", s.m_star))?;
            let m = (b * 1.0f64).ceil() as i64 + 1;
            let mu = |m: i64| -> Result<f64, String> {
                let p = FiberParams::new(m, 1.0, b, beta).map_err(|e| e.to_string())?;
                let g = RadialGrid::for_mode(m, 1.0, cfg.n).map_err(|e| e.to_string())?;
                Ok(fiber_ground(&p, &g).map_err(|e| e.to_string())?.mu1)
            };
            let (mu0, mum) = (mu(0)?, mu(m)?);
            ensure(mum > mu0, || format!("mu(m={m}) {mum} <= mu0 {mu0} at b={b}, beta={beta}"))?;
            worst_gap = worst_gap.min(mum - mu0);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < MODE_GRID_SECONDS, || format!("took {secs:.2} s"))?;
    Ok(format!("25 points, min gap {worst_gap:.3e}, {secs:.2} s"))
}

fn critical_beta_bound() -> Outcome {
    let mut details = Vec::new();
    for b in [0.25, 0.5, 1.0] {
        let bc = critical_beta_disk(1.0, b, 1e-6, &RadialConfig::default()).map_err(|e| e.to_string())?;
        let floor = -b * b / 16.0 - BETA_C_SLACK;
        ensure(bc >= floor && bc < 0.0, || format!("beta_c {bc} at b={b}, floor {floor}"))?;
        details.push(format!("b={b}: {bc:.6e}"));
    }
    Ok(details.join(", "))
}

fn constant_test() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for b in GRID_B {
        for beta in GRID_BETA {
            let l = disk_ground(1.0, b, beta, &RadialConfig::default()).map_err(|e| e.to_string())?.lambda1;
            let bound = constant_test_bound(1.0, b, beta);
            // independent arithmetic for the bound
            let direct = b * b / 8.0 + 2.0 * beta;
            ensure((bound - direct).abs() < 1e-14, || format!("bound {bound} vs {direct}"))?;
            ensure(l <= bound + CONSTANT_TEST_SLACK, || format!("{l} above {bound} at b={b}, beta={beta}"))?;
            worst = worst.max(l - bound);
        }
    }
    Ok(format!("max lambda1 - bound {worst:.3e}"))
}

fn random_zonogon(rng: &mut ChaCha8Rng) -> Result<DomainSpec, String> {
    let n = rng.gen_range(2..7);
    let gens: Vec<Point> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(0.05..1.0)]).collect();
    DomainSpec::zonogon(&gens)
        .and_then(|d| d.with_perimeter(2.0 * PI))
        .map_err(|e| e.to_string())
}

fn level_length_lemma() -> Outcome {
    let map = |r: magrobin::Result<DomainSpec>| r.map_err(|e| e.to_string());
    let disk = map(DomainSpec::disk(1.0, 1024))?;
    let mut domains = vec![
        ("disk".to_string(), disk.clone()),
        ("ellipse".into(), map(DomainSpec::ellipse(1.2, 0.8, 1024).and_then(|d| d.with_perimeter(2.0 * PI)))?),
        (
            "smoothed square".into(),
            map(DomainSpec::rounded_square(1.0, 6.0, 1024).and_then(|d| d.with_perimeter(2.0 * PI)))?,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for k in 0..20 {
        domains.push((format!("zonogon {k}"), random_zonogon(&mut rng)?));
    }
    let mut checked = 0;
    for (name, d) in &domains {
        let l = d.perimeter();
        let r = d.matched_radius();
        let f = distance_field(d, r / 256.0).map_err(|e| e.to_string())?;
        let levels = default_levels(inradius(&f), 64);
        let table = level_curves(&f, d, &levels, [0.0, 0.0]).map_err(|e| e.to_string())?;
        for row in table.rows.iter().filter(|row| row.valid) {
            let cap = l - 2.0 * PI * row.t + LEVEL_SLACK * l;
            ensure(row.length <= cap, || format!("{name}: t={} length {} > {cap}", row.t, row.length))?;
            checked += 1;
        }
    }
    // disk: exact level lengths and moments about the centre
    let f = distance_field(&disk, 1.0 / 256.0).map_err(|e| e.to_string())?;
    let table = level_curves(&f, &disk, &default_levels(inradius(&f), 64), [0.0, 0.0]).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for row in table.rows.iter().filter(|row| row.valid) {
        let s = 1.0 - row.t;
        let el = (row.length / (2.0 * PI * s) - 1.0).abs();
        let em = (row.moment / (2.0 * PI * s.powi(3)) - 1.0).abs();
        ensure(el < DISK_LEVEL_REL && em < DISK_LEVEL_REL, || {
            format!("disk t={}: length rel {el:.2e}, moment rel {em:.2e}", row.t)
        })?;
        worst = worst.max(el).max(em);
    }
    Ok(format!("{} domains, {checked} levels, disk max rel {worst:.2e}", domains.len()))
}

fn hurwitz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut min_scaled = f64::INFINITY;
    for _ in 0..200 {
        let n = rng.gen_range(3..40);
        let shift = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
        let pts: Vec<Point> =
            (0..n).map(|_| [shift[0] + rng.gen_range(-2.0..2.0), shift[1] + rng.gen_range(-2.0..2.0)]).collect();
        let g = hurwitz_gap(&Polyline::closed(pts)).map_err(|e| e.to_string())?;
        let scaled = g.margin / g.length.powi(3);
        ensure(scaled >= -HURWITZ_SLACK, || format!("margin {} for length {}", g.margin, g.length))?;
        min_scaled = min_scaled.min(scaled);
    }
    let n = 256;
    let regular = Polyline::closed(
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [3.0 + 2.0 * t.cos(), -1.0 + 2.0 * t.sin()]
            })
            .collect(),
    );
    let g = hurwitz_gap(&regular).map_err(|e| e.to_string())?;
    let rel = (g.moment / g.bound - 1.0).abs();
    ensure(rel < HURWITZ_EQUALITY_REL, || format!("256-gon moment/bound - 1 = {rel:.2e}"))?;
    Ok(format!("200 polygons, min margin/l^3 {min_scaled:.3e}; 256-gon rel {rel:.2e}"))
}

fn ellipse_family() -> Outcome {
    let start = Instant::now();
    let cfg = VerifyConfig::default();
    let mut min_margin = f64::INFINITY;
    let mut cases = 0;
    for e in [0.2, 0.4, 0.6] {
        let semi_minor = (1.0f64 - e * e).sqrt();
        let d = DomainSpec::ellipse(1.0, semi_minor, 1024)
            .and_then(|d| d.with_perimeter(2.0 * PI))
            .map_err(|err| err.to_string())?;
        for beta in [-1.0, -2.0] {
            for b in [0.2, 0.5] {
                let rep = verify_isoperimetric(&d, beta, b, &cfg).map_err(|err| err.to_string())?;
                let tag = format!("e={e}, beta={beta}, b={b}");
                let t = rep.transplant.as_ref().ok_or_else(|| format!("{tag}: no transplant"))?;
                let fem = rep.fem.as_ref().ok_or_else(|| format!("{tag}: no FEM value"))?;
                ensure(t.rayleigh < rep.disk_lambda1, || {
                    format!("{tag}: rayleigh {} >= disk {}", t.rayleigh, rep.disk_lambda1)
                })?;
                ensure(fem.extrapolated <= t.rayleigh + rep.combined_tolerance, || {
                    format!("{tag}: FEM {} above rayleigh {} + {}", fem.extrapolated, t.rayleigh, rep.combined_tolerance)
                })?;
                let chain = rep.disk_lambda1 - fem.extrapolated;
                ensure(chain > 0.0, || format!("{tag}: chain margin {chain}"))?;
                ensure(rep.verdict == Verdict::Pass, || format!("{tag}: verdict {:?}", rep.verdict))?;
                min_margin = min_margin.min(chain);
                cases += 1;
            }
        }
    }
    let disk = DomainSpec::disk(1.0, 1024).map_err(|e| e.to_string())?;
    let rep = verify_isoperimetric(&disk, -1.0, 0.3, &cfg).map_err(|e| e.to_string())?;
    let rayleigh = rep.transplant.as_ref().map_or(f64::NAN, |t| t.rayleigh);
    let rel = (rayleigh - rep.disk_lambda1).abs() / rep.disk_lambda1.abs();
    ensure(rep.verdict == Verdict::Equality && rel <= EQUALITY_REL, || {
        format!("disk verdict {:?}, rel {rel:.2e}", rep.verdict)
    })?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < ELLIPSE_SECONDS, || format!("took {secs:.1} s"))?;
    Ok(format!("{cases} ellipse cases PASS, min chain margin {min_margin:.3e}; disk EQUALITY rel {rel:.2e}; {secs:.1} s"))
}

fn order_of(a: f64, b: f64, c: f64) -> f64 {
    ((a - b) / (b - c)).abs().log2()
}

fn cross_solver() -> Outcome {
    let disk = DomainSpec::disk(1.0, 1024).map_err(|e| e.to_string())?;
    let opts = EigenOptions::default();
    let mut worst_rel: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    for (b, beta) in [(0.5, -1.0), (0.2, -2.0), (0.9, -0.5), (0.1, -0.5), (0.7, -1.5), (0.3, -3.0)] {
        let fiber = |n: usize| disk_ground(1.0, b, beta, &RadialConfig { n }).map(|s| s.lambda1);
        let reference = fiber(RadialConfig::default().n).map_err(|e| e.to_string())?;
        let r = solve_domain_refined(&disk, b, beta, MeshResolution::default(), &opts).map_err(|e| e.to_string())?;
        let rel = (r.coarse - reference).abs() / reference.abs();
        ensure(rel < CROSS_SOLVER_REL, || format!("({b}, {beta}): FEM {} vs fiber {reference}", r.coarse))?;
        let coarsest = r.coarsest.ok_or("no coarsest FEM level")?;
        let fem_order = order_of(coarsest, r.coarse, r.fine);
        let (f1, f2, f3) = (
            fiber(128).map_err(|e| e.to_string())?,
            fiber(256).map_err(|e| e.to_string())?,
            fiber(512).map_err(|e| e.to_string())?,
        );
        let fiber_order = order_of(f1, f2, f3);
        ensure(fem_order >= MIN_ORDER && fiber_order >= MIN_ORDER, || {
            format!("({b}, {beta}): orders FEM {fem_order:.2}, fiber {fiber_order:.2}")
        })?;
        worst_rel = worst_rel.max(rel);
        min_order = min_order.min(fem_order).min(fiber_order);
    }
    Ok(format!("6 points, max rel {worst_rel:.2e}, min order {min_order:.2}"))
}

fn gauge_and_sandwich() -> Outcome {
    let opts = EigenOptions::default();
    let res = MeshResolution::default();
    let gauge = |x: Point| x[0] * x[0] - x[1] * x[1] + 0.3 * x[0] * x[1] + 0.5 * x[1];
    let domains = [
        ("disk", DomainSpec::disk(1.0, 1024).map_err(|e| e.to_string())?),
        (
            "ellipse",
            DomainSpec::ellipse(1.2, 0.8, 1024)
                .and_then(|d| d.with_perimeter(2.0 * PI))
                .map_err(|e| e.to_string())?,
        ),
    ];
    let mut worst_gauge: f64 = 0.0;
    for (name, d) in &domains {
        let c = d.boundary_centroid();
        let a_max_sq =
            d.vertices().iter().map(|p| 0.25 * ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2))).fold(0.0, f64::max);
        for (b, beta) in [(0.2, -1.0), (0.5, -2.0), (1.0, -0.5), (2.0, -3.0)] {
            let solve = |b: f64, g: Option<&(dyn Fn(Point) -> f64 + Sync)>| {
                solve_domain(d, b, beta, res, g, &opts).map(|r| r.lambda1).map_err(|e| e.to_string())
            };
            let base = solve(b, None)?;
            let moved = solve(b, Some(&gauge))?;
            let rel = (moved - base).abs() / base.abs().max(1.0);
            ensure(rel <= GAUGE_REL, || format!("{name} ({b}, {beta}): gauge moved {base} to {moved}"))?;
            worst_gauge = worst_gauge.max(rel);
            let free = solve(0.0, None)?;
            ensure(base >= free - SANDWICH_SLACK && base <= free + b * b * a_max_sq + SANDWICH_SLACK, || {
                format!("{name} ({b}, {beta}): {base} outside [{free}, {}]", free + b * b * a_max_sq)
            })?;
        }
    }
    Ok(format!("8 points, max gauge rel {worst_gauge:.2e}, sandwich holds"))
}

fn asymptotics() -> Outcome {
    let cfg = RadialConfig { n: 8192 };
    let mut disk_dev: f64 = 0.0;
    for b in [0.0, 1.0, 2.0] {
        let c = disk_expansion_check(1.0, b, &[-5.0, -10.0, -20.0, -40.0, -80.0], &cfg).map_err(|e| e.to_string())?;
        let dev = c.last_deviation();
        ensure(dev < E_TERM_DEVIATION, || format!("bR^2={b}: deviation {dev} at beta=-80"))?;
        disk_dev = disk_dev.max(dev);
    }
    let ellipse = DomainSpec::ellipse(1.2, 0.8, 1024).map_err(|e| e.to_string())?;
    let check =
        domain_expansion_check(&ellipse, 0.3, &[-4.0, -8.0, -16.0], MeshResolution::default(), &EigenOptions::default())
            .map_err(|e| e.to_string())?;
    let worst = check.expansion.max_abs_residual();
    ensure(worst <= DOMAIN_RESIDUAL_BOUND, || format!("ellipse residuals {:?}", check.expansion.residual_scaled))?;
    ensure(check.sandwich_holds, || "ellipse sandwich violated".into())?;
    let mut dil: f64 = 0.0;
    for (r, b, beta) in [(2.0, 0.2, -3.0), (0.5, 1.0, -1.0), (3.0, 0.05, -0.2)] {
        let c = dilation_check(r, b, beta, &RadialConfig::default()).map_err(|e| e.to_string())?;
        ensure(c.relative_difference < DILATION_REL, || format!("dilation ({r}, {b}, {beta}): {c:?}"))?;
        dil = dil.max(c.relative_difference);
    }
    Ok(format!(
        "disk max deviation {disk_dev:.2e}; ellipse max |residual| {worst:.3}; dilation max rel {dil:.2e}"
    ))
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|entry| {
            let entry = entry.map_err(|e| e.to_string())?;
            let bytes = fs::read(entry.path()).map_err(|e| e.to_string())?;
            Ok((entry.file_name().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let domain = tmp.path().join("ellipse.json");
    let d = DomainSpec::ellipse(1.2, 0.8, 256).map_err(|e| e.to_string())?;
    fs::write(&domain, serde_json::to_string(&d.to_input()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let o = Command::new(env!("CARGO_BIN_EXE_magrobin"))
            .env_remove("MAGROBIN_CONFIG")
            .args(["verify", "--b", "0.3", "--beta", "-1", "--domain"])
            .arg(&domain)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.code() == Some(0), || format!("exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))?;
        runs.push(read_dir_sorted(&out)?);
    }
    ensure(runs[0].len() >= 3, || format!("only {} files written", runs[0].len()))?;
    ensure(runs[0] == runs[1], || "reports differ between runs".into())?;
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("identical {}", names.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Bessel oracle agreement", bessel_oracle),
        ("mode bound and radial ground state", mode_bound_grid),
        ("critical parameter bound", critical_beta_bound),
        ("constant-test upper bound", constant_test),
        ("level-length lemma", level_length_lemma),
        ("Hurwitz property", hurwitz),
        ("isoperimetric verification", ellipse_family),
        ("cross-solver agreement", cross_solver),
        ("gauge invariance and sandwich", gauge_and_sandwich),
        ("asymptotics", asymptotics),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} [PRIMARY] {name}: PASS ({detail}) [{secs:.1} s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} [PRIMARY] {name}: FAIL ({why}) [{secs:.1} s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
