use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use heatlab::config::{InitialSpec, RunConfig, Suite};
use heatlab::{LabError, RunOptions};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn small_torus(direction: &str, suites: &str) -> String {
    format!(
        "t0 = 0.05\nt_end = 0.25\ndt = 0.01\ndirection = \"{direction}\"\nsuites = [{suites}]\noutput_dir = \"unused\"\n\
         [manifold]\nkind = \"torus\"\nn = 2\nsides = [1.0, 1.0]\nresolution = [16, 16]\n\
         [initial_data]\nkind = \"seeded_random_smooth\"\nseed = 5\nmode_cutoff = 1\namplitude = 1.0\nfloor = 0.3\n\
         [tolerances]\nquadrature_tol = 0.05\npair_count = 20\nseed = 3\n"
    )
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions { output_dir: Some(dir.to_path_buf()), strict: false }
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn constant_data_gives_linear_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::load(&config_path("constant")).unwrap();
    let outcome = heatlab::run(&cfg, &opts(dir.path())).unwrap();
    assert_eq!(outcome.exit_code(), 0, "{:#?}", outcome.summary);
    assert_eq!(outcome.summary.not_requested, vec!["paramscan"]);

    let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "time,max_H,argmax_H,max_liyau,F_direct,F_via_H,W_direct,W_via_P,dF_fd,dF_formula,dW_fd,dW_formula,residual_maxnorm"
    );
    let times: Vec<f64> = column(&csv, "time").iter().map(|s| s.parse().unwrap()).collect();
    let f: Vec<f64> = column(&csv, "F_direct").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(times.len(), 101);
    for (t, f) in times.iter().zip(&f) {
        assert!((f + 4.0 * t).abs() <= 1e-12, "F({t}) = {f}");
    }
    let df = column(&csv, "dF_fd");
    assert!(df[0].parse::<f64>().is_ok() && df.iter().all(|s| (s.parse::<f64>().unwrap() + 4.0).abs() < 1e-9));
    let residual = column(&csv, "residual_maxnorm");
    assert!(residual[0].is_empty() && residual[100].is_empty() && !residual[50].is_empty());

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("trajectory_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["tolerance"]["source"], "calibrated");
    assert_eq!(meta["tolerance"]["calibration"]["floored"], true);
    assert_eq!(meta["solver"]["steps"], 100);
    assert_eq!(meta["manifold_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn every_gate_cites_its_suite_and_slack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(&small_torus("forward", "\"harnack_signs\", \"entropy\", \"pathwise\", \"evolution_residual\"")).unwrap();
    let outcome = heatlab::run(&cfg, &opts(dir.path())).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], outcome.summary.pass);
    let suites = summary["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 4);
    for s in suites {
        let gates = s["gates"].as_array().unwrap();
        assert!(!gates.is_empty());
        let worst = gates.iter().map(|g| g["slack"].as_f64().unwrap()).fold(f64::MIN, f64::max);
        assert_eq!(s["worst_slack"].as_f64().unwrap(), worst);
        for g in gates {
            assert_eq!(g["pass"].as_bool().unwrap(), g["slack"].as_f64().unwrap() <= 0.0);
        }
    }
    let pathwise = fs::read_to_string(dir.path().join("pathwise.csv")).unwrap();
    assert_eq!(pathwise.lines().count(), 21);
    assert!(!dir.path().join("paramscan.csv").exists());
}

#[test]
fn strict_halves_the_tolerance() {
    let cfg = RunConfig::parse(&small_torus("forward", "\"harnack_signs\"")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let loose = heatlab::run(&cfg, &opts(a.path())).unwrap().summary.tol_disc.unwrap();
    let strict = heatlab::run(&cfg, &RunOptions { strict: true, ..opts(b.path()) }).unwrap().summary.tol_disc.unwrap();
    assert_eq!(strict, 0.5 * loose);
}

#[test]
fn backward_runs_report_both_clocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(&small_torus("backward", "\"entropy\"")).unwrap();
    let s = heatlab::run(&cfg, &opts(dir.path())).unwrap().summary;
    let names: Vec<&str> = s.suites[0].gates.iter().map(|g| g.name.as_str()).collect();
    for n in ["dF_dtau_fd", "dW_dtau_fd", "dF_dt_fd", "dW_dt_fd"] {
        assert!(names.contains(&n), "{names:?}");
    }
    let tau = s.suites[0].gates.iter().find(|g| g.name == "dF_dtau_fd").unwrap();
    let t = s.suites[0].gates.iter().find(|g| g.name == "dF_dt_fd").unwrap();
    assert_eq!(t.value, -tau.value);
    assert!(RunConfig::parse(&small_torus("backward", "\"pathwise\"")).is_err());
}

#[test]
fn snapshots_file_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::parse(&small_torus("forward", "\"harnack_signs\"")).unwrap();
    cfg.snapshots = true;
    heatlab::run(&cfg, &opts(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# manifold_hash=") && header.ends_with("dt=0.01 direction=t"), "{header}");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0].split(',').count(), 1 + 256);
    assert_eq!(rows[20].split(',').next().unwrap().parse::<f64>().unwrap(), 0.05 + 20.0 * 0.01);
}

#[test]
fn seed_override_changes_data_and_pairs() {
    let mut cfg = RunConfig::parse(&small_torus("forward", "\"pathwise\"")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    heatlab::run(&cfg, &opts(a.path())).unwrap();
    cfg.override_seed(99);
    assert!(matches!(cfg.initial_data, InitialSpec::SeededRandomSmooth { seed: 99, .. }));
    heatlab::run(&cfg, &opts(b.path())).unwrap();
    let read = |d: &Path| fs::read(d.join("pathwise.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn scan_writes_every_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::load(&config_path("paramscan")).unwrap();
    cfg.paramscan = Some(heatlab::config::ScanSpec { step: 0.25, ..cfg.scan_spec() });
    let s = heatlab::scan(&cfg, &opts(dir.path())).unwrap().summary;
    assert!(s.pass, "{s:#?}");
    assert_eq!(s.not_requested.len(), 4);
    assert!(s.tol_disc.is_none());
    let csv = fs::read_to_string(dir.path().join("paramscan.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "alpha,beta,b,lambda,alpha_minus_beta,b_plus_beta,quarter_square,survivor");
    assert_eq!(csv.lines().count(), 1 + 15 * 21 * 17);
    assert!(csv.contains("\n2,1,-1,1,1,0,0,true\n"));
}

#[test]
fn sphere_configs_use_the_declared_constant() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config_path("sphere_random")).unwrap().replace("subdivision = 4", "subdivision = 2");
    let cfg = RunConfig::parse(&text).unwrap();
    heatlab::run(&cfg, &opts(dir.path())).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("trajectory_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["tolerance"]["source"], "declared");
    assert_eq!(meta["tolerance"]["constant"], 1.0);
    assert!(meta["tolerance"].get("calibration").is_none());
    let diag = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(column(&diag, "dF_formula").iter().all(String::is_empty));
    assert!(matches!(heatlab::calibrate(&cfg, &opts(dir.path())), Err(LabError::Config(_))));
    assert!(cfg.has(Suite::Pathwise));
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_heatlab")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };
    let out = dir.path().join("out").to_string_lossy().into_owned();

    let good = write("good.toml", &small_torus("forward", "\"harnack_signs\", \"entropy\""));
    let (code, stdout, _) = cli(&["run", &good, "--output-dir", &out]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("harnack_signs") && stdout.contains("pass"));

    let typo = write("typo.toml", &small_torus("forward", "\"harnack_signs\"").replace("floor = 0.3", "flor = 0.3"));
    let (code, _, stderr) = cli(&["run", &typo]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line") && stderr.contains("flor"), "{stderr}");

    // data posed at t0 that is not a positive heat flow from t = 0: the Li-Yau gate fails
    let single = fs::read_to_string(config_path("single_mode")).unwrap().replace("floor = 6.5", "floor = 0.5");
    let (code, stdout, _) = cli(&["run", &write("single.toml", &single), "--output-dir", &out]);
    assert_eq!(code, 1, "{stdout}");
    assert!(stdout.contains("FAIL"));

    let (code, stdout, _) = cli(&["calibrate", &config_path("single_mode").to_string_lossy(), "--output-dir", &out]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("C = "));
    let (code, _, stderr) = cli(&["calibrate", &config_path("sphere_random").to_string_lossy(), "--output-dir", &out]);
    assert_eq!(code, 2);
    assert!(stderr.contains("torus"));

    let (code, _, _) = cli(&["run", "/nonexistent/config.toml"]);
    assert_eq!(code, 2);
}
