//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::cell::OnceCell;
use std::collections::BTreeSet;
use std::f64::consts::LN_2;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use heatlab::calibrate::MIN_CONSTANT;
use heatlab::config::{Suite, RunConfig};
use heatlab::report::Gate;
use heatlab::runner::Summary;
use heatlab::{RunOptions, RunOutcome};
use heatlab_core::entropy::{dissipation_f, entropy_f, entropy_series};
use heatlab_core::geometry::{build_sphere, build_torus};
use heatlab_core::harnack::{evolution_residual, log_u, quantity_h, quantity_liyau, HarnackParams, Variant};
use heatlab_core::heatflow::{solve, Direction};
use heatlab_core::initial::{gaussian_image_log_excess, gaussian_log_density, InitialData, TrigMode};
use heatlab_core::pathwise::{check_integrated_harnack, SpaceTimePair};
use heatlab_core::{Manifold, ScalarField, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BAND: (f64, f64) = (3.5, 4.5);

fn in_band(r: f64) -> bool {
    (BAND.0..=BAND.1).contains(&r)
}

struct Run {
    name: &'static str,
    outcome: RunOutcome,
    elapsed: Duration,
}

struct Ctx {
    scratch: tempfile::TempDir,
    forward: OnceCell<Vec<Run>>,
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&config_path(name)).unwrap()
}

impl Ctx {
    fn run(&self, name: &'static str, cfg: &RunConfig, tag: &str) -> Run {
        let opts = RunOptions { output_dir: Some(self.scratch.path().join(format!("{name}-{tag}"))), strict: false };
        let start = Instant::now();
        let outcome = heatlab::run(cfg, &opts).unwrap();
        Run { name, outcome, elapsed: start.elapsed() }
    }

    /// Forward random-data runs on T² (64²) and S² (subdivision 4) without the scan.
    fn forward(&self) -> &[Run] {
        self.forward.get_or_init(|| {
            ["torus_random", "sphere_random"]
                .into_iter()
                .map(|name| {
                    let mut cfg = load(name);
                    cfg.suites.remove(&Suite::Paramscan);
                    self.run(name, &cfg, "forward")
                })
                .collect()
        })
    }
}

fn gate<'a>(s: &'a Summary, suite: &str, name: &str) -> &'a Gate {
    s.suites
        .iter()
        .find(|r| r.suite == suite)
        .and_then(|r| r.gates.iter().find(|g| g.name == name))
        .unwrap_or_else(|| panic!("no gate {suite}/{name}"))
}

fn suite_passes(s: &Summary, suite: &str) -> bool {
    s.suites.iter().find(|r| r.suite == suite).is_some_and(|r| r.pass)
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn constant_solution(_: &Ctx) -> Verdict {
    let start = Instant::now();
    let m = build_torus(2, &[1.0, 1.0], &[16, 16]).unwrap();
    let traj = solve(&m, &ScalarField::constant(&m, 1.0), 1.0, 2.0, 0.01, Direction::Forward).unwrap();
    let first = &traj.states()[0];
    let h_err = quantity_h(&log_u(first).unwrap(), 1.0).values().iter().map(|h| (h + 4.0).abs()).fold(0.0, f64::max);
    let mut f_err: f64 = 0.0;
    let mut d_err: f64 = 0.0;
    for s in traj.states() {
        f_err = f_err.max((entropy_f(s).unwrap().direct + 4.0 * s.time()).abs());
        d_err = d_err.max((dissipation_f(s).unwrap() + 4.0).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        h_err <= 1e-12 && f_err <= 1e-12 && d_err <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("|H+4| {h_err:.1e}, |F+4t| {f_err:.1e}, |dF+4| {d_err:.1e}, {elapsed:.2?}"),
    )
}

fn harnack_signs(ctx: &Ctx) -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for run in ctx.forward() {
        let s = &run.outcome.summary;
        let worst = ["max_H", "max_P", "max_liyau"].map(|g| gate(s, "harnack_signs", g).value);
        pass &= suite_passes(s, "harnack_signs") && run.elapsed < Duration::from_secs(30);
        detail.push(format!(
            "{}: max H {:.3}, P {:.3}, LY {:.3} vs tol {:.1e} in {:.1?}",
            run.name,
            worst[0],
            worst[1],
            worst[2],
            s.tol_disc.unwrap(),
            run.elapsed
        ));
    }
    verdict(pass, detail.join("; "))
}

fn random_params(variant: Variant, rng: &mut ChaCha8Rng) -> Vec<HarnackParams> {
    (0..5)
        .map(|_| {
            let alpha = rng.gen_range(0.5..3.0);
            let beta = alpha - rng.gen_range(0.2..2.0);
            let (b, c, lambda) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..2.0), rng.gen_range(0.2..2.5));
            HarnackParams::new(alpha, beta, b, c, lambda, variant).unwrap()
        })
        .collect()
}

/// Single-mode flow on the circle with `dt = h/4`, through `t* = 0.1 + 1/16`.
fn circle_run(n: usize) -> (Trajectory, usize) {
    let m = build_torus(1, &[1.0], &[n]).unwrap();
    let data = InitialData::TrigPolynomial {
        floor: 0.5,
        modes: vec![TrigMode { wavevector: vec![1], amplitude: 0.5, phase: 0.0 }],
    };
    let (t0, dt) = (0.1, 0.25 / n as f64);
    let k = (0.0625 / dt).round() as usize;
    let f0 = data.sample(&m, t0).unwrap();
    (solve(&m, &f0, t0, t0 + (k + 1) as f64 * dt, dt, Direction::Forward).unwrap(), k)
}

fn evolution_residual_order(_: &Ctx) -> Verdict {
    let (coarse, fine) = (circle_run(128), circle_run(256));
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ratios = Vec::new();
    for variant in [Variant::U, Variant::V] {
        for p in random_params(variant, &mut rng) {
            let r1 = evolution_residual(&coarse.0, &p, coarse.1).unwrap();
            let r2 = evolution_residual(&fine.0, &p, fine.1).unwrap();
            ratios.push(r1 / r2);
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
    verdict(ratios.iter().all(|&r| in_band(r)), format!("10 tuples, ratios in [{lo:.3}, {hi:.3}]"))
}

fn stokes_gaps(m: &Arc<Manifold>, dt: f64) -> (f64, f64) {
    let data = InitialData::SeededRandomSmooth { seed: 1, mode_cutoff: 2, amplitude: 1.0, floor: 0.2 };
    let traj = solve(m, &data.sample(m, 0.05).unwrap(), 0.05, 0.25, dt, Direction::Forward).unwrap();
    entropy_series(&traj).unwrap().iter().fold((0.0, 0.0), |(f, w), r| {
        (f64::max(f, (r.f_direct - r.f_via_h).abs()), f64::max(w, (r.w_direct - r.w_via_p).abs()))
    })
}

fn stokes_identity(_: &Ctx) -> Verdict {
    let q = load("torus_random").tolerances.quadrature_tol;
    let levels = [
        ("T²", build_torus(2, &[1.0, 1.0], &[64, 64]).unwrap(), build_torus(2, &[1.0, 1.0], &[128, 128]).unwrap()),
        ("S²", build_sphere(3).unwrap(), build_sphere(4).unwrap()),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, coarse, fine) in levels {
        let (c, f) = (stokes_gaps(&coarse, 0.01), stokes_gaps(&fine, 0.005));
        for (label, gc, gf) in [("F", c.0, f.0), ("W", c.1, f.1)] {
            let bound_ok = gc <= q * coarse.mesh_size().powi(2) && gf <= q * fine.mesh_size().powi(2);
            pass &= bound_ok && in_band(gc / gf);
            detail.push(format!("{name} {label} {gc:.2e} -> {gf:.2e} (x{:.2})", gc / gf));
        }
    }
    verdict(pass, detail.join(", "))
}

fn entropy_monotonicity(ctx: &Ctx) -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for run in ctx.forward() {
        let s = &run.outcome.summary;
        pass &= suite_passes(s, "entropy");
        let (df, dw) = (gate(s, "entropy", "dF_fd").value, gate(s, "entropy", "dW_fd").value);
        detail.push(format!("{}: max dF/dt {df:.3e}, max dW/dt {dw:.3e}", run.name));
        if run.name == "torus_random" {
            let mismatch = gate(s, "entropy", "dissipation_F");
            let ratio = gate(s, "entropy", "dissipation_F_refinement_ratio_low").value;
            detail.push(format!("|dF_fd - dF_formula| {:.2e} <= {:.2e}, refinement x{ratio:.2}", mismatch.value, mismatch.limit));
        }
    }
    verdict(pass, detail.join("; "))
}

fn integrated_harnack(ctx: &Ctx) -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for run in ctx.forward() {
        let s = &run.outcome.summary;
        let csv = fs::read_to_string(run.outcome.output_dir.join("pathwise.csv")).unwrap();
        let rows = csv.lines().skip(1).filter(|l| l.ends_with(",true")).count();
        pass &= suite_passes(s, "pathwise") && rows == 100;
        detail.push(format!("{}: {rows}/100 pairs, worst slack {:.3}", run.name, gate(s, "pathwise", "pair_slack").value));
    }

    let m = build_torus(2, &[1.0, 1.0], &[16, 16]).unwrap();
    let traj = solve(&m, &ScalarField::constant(&m, 1.7), 0.5, 2.0, 0.25, Direction::Forward).unwrap();
    let grid = m.torus().unwrap();
    let far = grid.node_at([4, 8, 0]);
    let pairs = [
        SpaceTimePair { x1: 5, x2: 5, t1: 0.5, t2: 1.0 },
        SpaceTimePair { x1: 0, x2: far, t1: 0.75, t2: 2.0 },
    ];
    let d2 = 0.25f64.powi(2) + 0.5f64.powi(2);
    let expected = [-2.0 * LN_2, -2.0 * (2.0f64 / 0.75).ln() - d2 / (2.0 * 1.25)];
    let reports = check_integrated_harnack(&traj, &pairs, 0.0).unwrap();
    let err = reports.iter().zip(expected).map(|(r, e)| (r.slack - e).abs()).fold(0.0, f64::max);
    pass &= err <= 1e-12;
    detail.push(format!("constant-data slack error {err:.1e}"));
    verdict(pass, detail.join("; "))
}

fn backward_equation(ctx: &Ctx) -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for name in ["torus_backward", "sphere_backward"] {
        let run = ctx.run(name, &load(name), "backward");
        let s = &run.outcome.summary;
        pass &= suite_passes(s, "harnack_signs") && suite_passes(s, "entropy");
        let meta = fs::read_to_string(run.outcome.output_dir.join("trajectory_meta.json")).unwrap();
        pass &= meta.contains("\"clock\": \"tau\"");
        let (df, dw) = (gate(s, "entropy", "dF_dt_fd"), gate(s, "entropy", "dW_dt_fd"));
        detail.push(format!(
            "{name}: max H {:.3}, min dF/dt {:.3e}, min dW/dt {:.3e} >= {:.1e}",
            gate(s, "harnack_signs", "max_H").value,
            df.value,
            dw.value,
            df.limit
        ));
    }
    verdict(pass, detail.join("; "))
}

fn parameter_uniqueness(ctx: &Ctx) -> Verdict {
    let cfg = load("paramscan");
    let opts = RunOptions { output_dir: Some(ctx.scratch.path().join("scan")), strict: false };
    let s = heatlab::scan(&cfg, &opts).unwrap().summary;
    let g = |n| gate(&s, "paramscan", n).value;
    verdict(
        suite_passes(&s, "paramscan"),
        format!(
            "{} survivors, max |α-2β| {:.3}, max |b+β| {:.3}, diameter ratio {:.3}, named tuples {}",
            g("survivors"),
            g("alpha_minus_two_beta"),
            g("b_plus_beta"),
            g("diameter_halving_low"),
            if g("named_ni") + g("named_cao_hamilton") + g("named_li_yau") == 0.0 { "ok" } else { "mismatch" }
        ),
    )
}

fn gaussian_equality(_: &Ctx) -> Verdict {
    let (t, res, radius) = (0.01, 512, 1.0);
    let m = build_torus(2, &[8.0, 8.0], &[res, res]).unwrap();
    let grid = m.torus().unwrap();
    let centre = grid.node_at([res / 2, res / 2, 0]);
    let n = 2.0;
    let log_f = gaussian_log_density(&m, centre, t).unwrap();
    let v = log_f.map(|l| -l - 0.5 * n * (4.0 * std::f64::consts::PI * t).ln());
    let ly = quantity_liyau(&v, t);
    // plane oracle: v = |x|²/4t, so 2Δv - n/t = 2 (n/2t) - n/t = 0
    let plane = 0.0;
    let h = grid.spacing()[0];
    let within = |node: usize, r: f64| grid.displacement(centre, node).iter().map(|x| x * x).sum::<f64>() <= r * r;
    let worst = (0..m.node_count()).filter(|&i| within(i, radius)).map(|i| (ly.values()[i] - plane).abs()).fold(0.0, f64::max);
    // 2 |Δ_h ln(1+ε)| <= 2 (4n / h²) max ln(1+ε) over the stencil
    let excess = gaussian_image_log_excess(&m, centre, t, radius + h).unwrap();
    let bound = 2.0 * 4.0 * n * excess / (h * h);
    let tol = MIN_CONSTANT * h * h;
    verdict(
        worst <= bound + tol,
        format!("max |LY| {worst:.2e} over r <= {radius}, image bound {bound:.1e}, tol {tol:.1e}"),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let names: BTreeSet<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.into_iter().map(|n| (n.clone(), fs::read(dir.join(&n)).unwrap())).collect()
}

fn determinism(ctx: &Ctx) -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for name in ["torus_random", "sphere_random"] {
        let mut cfg = load(name);
        cfg.snapshots = true;
        let a = ctx.run(name, &cfg, "det-a");
        let b = ctx.run(name, &cfg, "det-b");
        let (fa, fb) = (dir_bytes(&a.outcome.output_dir), dir_bytes(&b.outcome.output_dir));
        let same = fa == fb;
        pass &= same && fa.len() >= 5;
        let bytes: usize = fa.iter().map(|(_, b)| b.len()).sum();
        detail.push(format!("{name}: {} files, {bytes} bytes, {}", fa.len(), if same { "identical" } else { "DIFFER" }));
    }
    verdict(pass, detail.join("; "))
}

fn main() {
    let ctx = Ctx { scratch: tempfile::tempdir().unwrap(), forward: OnceCell::new() };
    let criteria: [(&str, fn(&Ctx) -> Verdict); 10] = [
        ("constant-solution exactness", constant_solution),
        ("Harnack signs", harnack_signs),
        ("evolution-identity residual order", evolution_residual_order),
        ("Stokes identity", stokes_identity),
        ("entropy monotonicity", entropy_monotonicity),
        ("integrated Harnack", integrated_harnack),
        ("backward equation", backward_equation),
        ("parameter uniqueness", parameter_uniqueness),
        ("Gaussian equality case", gaussian_equality),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(|| check(&ctx)))
            .unwrap_or_else(|e| verdict(false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        failures += usize::from(!v.pass);
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {:>2} {name}: {} [{:.1?}]", i + 1, v.detail, start.elapsed());
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
