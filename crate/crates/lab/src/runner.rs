//! End-to-end execution of a config: solve, run the requested suites, write
//! reports.

use std::path::PathBuf;
use std::sync::Arc;

use heatlab_core::entropy::{entropy_series, EntropyReport};
use heatlab_core::harnack::{
    evolution_residual, log_u, log_v, quantity_h, quantity_liyau, quantity_p, HarnackParams, Variant,
};
use heatlab_core::heatflow::{solve, CG_RELATIVE_TOLERANCE};
use heatlab_core::paramspace::{case_one_uniqueness_scan, classify, scan_points, NamedMatch, ScanGrid};
use heatlab_core::pathwise::{check_integrated_harnack, sample_pairs};
use heatlab_core::{Manifold, Trajectory};
use serde::Serialize;

use crate::calibrate::{calibrate_with, Calibration, SolverTotals};
use crate::config::{FlowDirection, InitialSpec, ManifoldSpec, RunConfig, ScanSpec, Suite};
use crate::error::Result;
use crate::report::{
    fmt_f64, manifold_hash, paramscan_record, pathwise_record, DiagnosticsRow, Gate, ReportDir, SuiteResult,
    DIAGNOSTICS_HEADER, PARAMSCAN_HEADER, PATHWISE_HEADER,
};

/// Accepted band for second-order refinement ratios.
pub const RATIO_BAND: (f64, f64) = (3.5, 4.5);

/// Accepted band for the survivor-diameter ratio under step halving.
pub const DIAMETER_BAND: (f64, f64) = (1.9, 2.1);

/// Below this, both levels of a refinement study count as exact.
pub const EXACT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `output_dir`.
    pub output_dir: Option<PathBuf>,
    /// Halves `tol_disc`.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerance {
    /// `calibrated` (torus) or `declared` (sphere).
    pub source: &'static str,
    pub constant: f64,
    /// Largest grid spacing or mesh edge.
    pub h: f64,
    pub dt: f64,
    pub strict: bool,
    /// `constant (h² + dt)`, halved when strict.
    pub tol_disc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

impl Tolerance {
    fn new(source: &'static str, constant: f64, h: f64, dt: f64, strict: bool, calibration: Option<Calibration>) -> Self {
        let scale = if strict { 0.5 } else { 1.0 };
        Tolerance { source, constant, h, dt, strict, tol_disc: scale * constant * (h * h + dt), calibration }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub manifold: ManifoldSpec,
    pub manifold_hash: String,
    pub node_count: usize,
    pub mesh_size: f64,
    pub total_volume: f64,
    pub initial_data: InitialSpec,
    pub direction: FlowDirection,
    /// `t` for forward runs, `tau` for backward runs.
    pub clock: &'static str,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub snapshots: usize,
    pub solver: SolverTotals,
    pub cg_relative_tolerance: f64,
    pub tolerance: Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_disc: Option<f64>,
    pub suites: Vec<SuiteResult>,
    pub not_requested: Vec<&'static str>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    /// 0 when every requested gate passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.pass {
            0
        } else {
            1
        }
    }
}

const ALL_SUITES: [Suite; 5] =
    [Suite::HarnackSigns, Suite::EvolutionResidual, Suite::Entropy, Suite::Pathwise, Suite::Paramscan];

fn summarize(tol_disc: Option<f64>, suites: Vec<SuiteResult>) -> Summary {
    let ran: Vec<&str> = suites.iter().map(|s| s.suite).collect();
    Summary {
        pass: suites.iter().all(|s| s.pass),
        tol_disc,
        not_requested: ALL_SUITES.iter().map(|s| s.name()).filter(|n| !ran.contains(n)).collect(),
        suites,
    }
}

fn tolerance(cfg: &RunConfig, traj: &Trajectory, strict: bool) -> Result<Tolerance> {
    let h = traj.manifold().mesh_size();
    match cfg.tolerances.tol_disc_constant {
        Some(c) => Ok(Tolerance::new("declared", c, h, cfg.dt, strict, None)),
        None => {
            let cal = calibrate_with(cfg, traj)?;
            Ok(Tolerance::new("calibrated", cal.constant, h, cfg.dt, strict, Some(cal)))
        }
    }
}

/// Per-snapshot sign data beyond what `diagnostics.csv` records.
struct SignRow {
    max_p: f64,
}

fn diagnostics(cfg: &RunConfig, traj: &Trajectory) -> Result<(Vec<DiagnosticsRow>, Vec<SignRow>, Vec<EntropyReport>)> {
    let entropy = entropy_series(traj)?;
    let residual_params = HarnackParams::cao_hamilton(Variant::U);
    let mut rows = Vec::with_capacity(traj.len());
    let mut signs = Vec::with_capacity(traj.len());
    for (k, (state, e)) in traj.states().iter().zip(&entropy).enumerate() {
        let t = state.time();
        let (u, v) = (log_u(state)?, log_v(state)?);
        let (max_h, argmax_h) = quantity_h(&u, t).max_with_node();
        let residual = if cfg.has(Suite::EvolutionResidual) && k > 0 && k + 1 < traj.len() {
            Some(evolution_residual(traj, &residual_params, k)?)
        } else {
            None
        };
        rows.push(DiagnosticsRow {
            time: t,
            max_h,
            argmax_h,
            max_liyau: quantity_liyau(&v, t).max(),
            f_direct: e.f_direct,
            f_via_h: e.f_via_h,
            w_direct: e.w_direct,
            w_via_p: e.w_via_p,
            df_fd: e.df_fd,
            df_formula: e.df_formula,
            dw_fd: e.dw_fd,
            dw_formula: e.dw_formula,
            residual_maxnorm: residual,
        });
        signs.push(SignRow { max_p: quantity_p(&v, t).max() });
    }
    Ok((rows, signs, entropy))
}

/// Largest value of `key` over `items`, with the time it occurs at.
fn worst<T>(items: &[T], time: impl Fn(&T) -> f64, key: impl Fn(&T) -> Option<f64>) -> Option<(f64, f64)> {
    items
        .iter()
        .filter_map(|it| key(it).map(|v| (v, time(it))))
        .fold(None, |acc: Option<(f64, f64)>, (v, t)| match acc {
            Some((best, _)) if best >= v => acc,
            _ => Some((v, t)),
        })
}

fn upper_gate<T>(
    name: &str,
    claim: &str,
    items: &[T],
    time: impl Fn(&T) -> f64,
    key: impl Fn(&T) -> Option<f64>,
    limit: f64,
) -> Option<Gate> {
    worst(items, time, key).map(|(v, t)| Gate::at_most(name, claim, v, limit).at_time(t))
}

fn harnack_suite(rows: &[DiagnosticsRow], signs: &[SignRow], tol: f64) -> SuiteResult {
    let paired: Vec<(&DiagnosticsRow, &SignRow)> = rows.iter().zip(signs).collect();
    let time = |p: &(&DiagnosticsRow, &SignRow)| p.0.time;
    let gates = [
        upper_gate("max_H", "max H <= tol_disc", &paired, time, |p| Some(p.0.max_h), tol),
        upper_gate("max_P", "max P <= tol_disc", &paired, time, |p| Some(p.1.max_p), tol),
        upper_gate("max_liyau", "max (2Δv - n/t) <= tol_disc", &paired, time, |p| Some(p.0.max_liyau), tol),
    ];
    SuiteResult::new(Suite::HarnackSigns.name(), gates.into_iter().flatten().collect())
}

/// Three-state window centred at `t_mid`, started from the exact solution.
fn window(cfg: &RunConfig, m: &Arc<Manifold>, t_mid: f64, dt: f64) -> Result<Trajectory> {
    let exact = cfg.initial_data.to_core().closed_form(m, cfg.t0)?;
    let f = exact.sample(m, t_mid - dt)?;
    Ok(solve(m, &f, t_mid - dt, t_mid + dt, dt, cfg.direction.into())?)
}

/// Coarse and fine windows for a refinement study at `t_mid`.
fn window_pair(cfg: &RunConfig, traj: &Trajectory, t_mid: f64) -> Result<(Trajectory, Trajectory)> {
    let fine_m = cfg.manifold.refined(2).expect("refinement studies run on tori").build()?;
    Ok((window(cfg, traj.manifold(), t_mid, cfg.dt)?, window(cfg, &fine_m, t_mid, cfg.dt / 2.0)?))
}

fn refinement_gates(name: &str, what: &str, coarse: f64, fine: f64, t: f64) -> Vec<Gate> {
    if coarse <= EXACT_FLOOR && fine <= EXACT_FLOOR {
        return vec![Gate::at_most(&format!("{name}_exact"), &format!("{what} <= {EXACT_FLOOR:e} at both levels"), coarse.max(fine), EXACT_FLOOR).at_time(t)];
    }
    let ratio = coarse / fine;
    vec![
        Gate::at_least(&format!("{name}_ratio_low"), &format!("{what} coarse/fine >= {}", RATIO_BAND.0), ratio, RATIO_BAND.0).at_time(t),
        Gate::at_most(&format!("{name}_ratio_high"), &format!("{what} coarse/fine <= {}", RATIO_BAND.1), ratio, RATIO_BAND.1).at_time(t),
    ]
}


fn entropy_suite(cfg: &RunConfig, traj: &Trajectory, entropy: &[EntropyReport], tol: &Tolerance) -> Result<SuiteResult> {
    let t = |e: &EntropyReport| e.time;
    let centered = |get: fn(&EntropyReport) -> Option<f64>| move |e: &EntropyReport| if e.fd_centered { get(e) } else { None };
    let tol_disc = tol.tol_disc;
    let stokes_limit = cfg.tolerances.quadrature_tol * tol.h * tol.h;
    let mut gates = vec![
        upper_gate("F_direct", "F <= tol_disc", entropy, t, |e| Some(e.f_direct), tol_disc),
        upper_gate("W_direct", "W <= tol_disc", entropy, t, |e| Some(e.w_direct), tol_disc),
        upper_gate("stokes_F", "|F_direct - F_via_H| <= quadrature_tol h²", entropy, t, |e| Some((e.f_direct - e.f_via_h).abs()), stokes_limit),
        upper_gate("stokes_W", "|W_direct - W_via_P| <= quadrature_tol h²", entropy, t, |e| Some((e.w_direct - e.w_via_p).abs()), stokes_limit),
    ];
    match cfg.direction {
        FlowDirection::Forward => {
            gates.push(upper_gate("dF_fd", "centred dF/dt <= tol_disc", entropy, t, centered(|e| e.df_fd), tol_disc));
            gates.push(upper_gate("dW_fd", "centred dW/dt <= tol_disc", entropy, t, centered(|e| e.dw_fd), tol_disc));
        }
        FlowDirection::Backward => {
            gates.push(upper_gate("dF_dtau_fd", "centred dF/dτ <= tol_disc", entropy, t, centered(|e| e.df_fd), tol_disc));
            gates.push(upper_gate("dW_dtau_fd", "centred dW/dτ <= tol_disc", entropy, t, centered(|e| e.dw_fd), tol_disc));
            // dF/dt = -dF/dτ, so its minimum is minus the largest dF/dτ
            for (name, claim, get) in [
                ("dF_dt_fd", "centred dF/dt >= -tol_disc", (|e: &EntropyReport| e.df_fd) as fn(&EntropyReport) -> Option<f64>),
                ("dW_dt_fd", "centred dW/dt >= -tol_disc", |e: &EntropyReport| e.dw_fd),
            ] {
                if let Some((neg, time)) = worst(entropy, t, centered(get)) {
                    gates.push(Some(Gate::at_least(name, claim, -neg, -tol_disc).at_time(time)));
                }
            }
        }
    }
    if traj.manifold().torus().is_some() {
        let limit = cfg.tolerances.quadrature_tol * (tol.h * tol.h + cfg.dt * cfg.dt);
        let gap = |fd: fn(&EntropyReport) -> Option<f64>, formula: fn(&EntropyReport) -> Option<f64>| {
            move |e: &EntropyReport| if e.fd_centered { Some((fd(e)? - formula(e)?).abs()) } else { None }
        };
        let gap_f = gap(|e| e.df_fd, |e| e.df_formula);
        let t_mid = worst(entropy, t, &gap_f).map(|(_, time)| time).expect("torus runs have centred rows");
        gates.push(upper_gate("dissipation_F", "|dF_fd - dF_formula| <= quadrature_tol (h² + dt²)", entropy, t, gap_f, limit));
        gates.push(upper_gate("dissipation_W", "|dW_fd - dW_formula| <= quadrature_tol (h² + dt²)", entropy, t, gap(|e| e.dw_fd, |e| e.dw_formula), limit));
        let (coarse, fine) = window_pair(cfg, traj, t_mid)?;
        let mismatch = |w: &Trajectory| -> Result<(f64, f64)> {
            let e = &entropy_series(w)?[1];
            let formula = |x: Option<f64>| x.expect("torus windows have dissipation formulas");
            Ok(((formula(e.df_fd) - formula(e.df_formula)).abs(), (formula(e.dw_fd) - formula(e.dw_formula)).abs()))
        };
        let (c, f) = (mismatch(&coarse)?, mismatch(&fine)?);
        gates.extend(refinement_gates("dissipation_F_refinement", "|dF_fd - dF_formula|", c.0, f.0, t_mid).into_iter().map(Some));
        gates.extend(refinement_gates("dissipation_W_refinement", "|dW_fd - dW_formula|", c.1, f.1, t_mid).into_iter().map(Some));
    }
    Ok(SuiteResult::new(Suite::Entropy.name(), gates.into_iter().flatten().collect()))
}

/// The refinement study sits at the snapshot with the largest trajectory residual.
fn residual_suite(cfg: &RunConfig, traj: &Trajectory, rows: &[DiagnosticsRow]) -> Result<SuiteResult> {
    let t_mid = worst(rows, |r| r.time, |r| r.residual_maxnorm).map(|(_, time)| time).expect("interior snapshots exist");
    let (coarse, fine) = window_pair(cfg, traj, t_mid)?;
    let mut gates = Vec::new();
    for (label, p) in [("H", HarnackParams::cao_hamilton(Variant::U)), ("P", HarnackParams::cao_hamilton(Variant::V))] {
        let (c, f) = (evolution_residual(&coarse, &p, 1)?, evolution_residual(&fine, &p, 1)?);
        gates.extend(refinement_gates(&format!("residual_{label}"), &format!("evolution residual of {label}"), c, f, t_mid));
    }
    Ok(SuiteResult::new(Suite::EvolutionResidual.name(), gates))
}

fn pathwise_suite(cfg: &RunConfig, traj: &Trajectory, tol_disc: f64, out: &ReportDir) -> Result<SuiteResult> {
    let pairs = sample_pairs(traj, cfg.tolerances.pair_count, cfg.tolerances.seed)?;
    let reports = check_integrated_harnack(traj, &pairs, tol_disc)?;
    out.csv("pathwise.csv", PATHWISE_HEADER, reports.iter().map(pathwise_record))?;
    let (slack, t) = worst(&reports, |r| r.pair.t2, |r| Some(r.slack)).expect("pair_count is positive");
    let gate = Gate::at_most("pair_slack", "ln f(x1,t1) - ln f(x2,t2) - n ln(t2/t1) - Γ/2 <= tol_disc", slack, tol_disc);
    Ok(SuiteResult::new(Suite::Pathwise.name(), vec![gate.at_time(t)]))
}

fn named_gate(name: &str, p: &HarnackParams, expected: NamedMatch) -> Result<Gate> {
    let got = classify(p)?.named_match;
    let miss = if got == expected { 0.0 } else { 1.0 };
    Ok(Gate::at_most(name, &format!("named tuple classifies as {expected:?} (0 = match)"), miss, 0.0))
}

fn paramscan_suite(spec: &ScanSpec, out: &ReportDir) -> Result<SuiteResult> {
    let grid = spec.grid();
    let mut csv = out.csv_writer("paramscan.csv", PARAMSCAN_HEADER)?;
    let mut failed = None;
    scan_points(&grid, |p| {
        if failed.is_none() {
            failed = csv.row(&paramscan_record(p)).err();
        }
    })?;
    if let Some(e) = failed {
        return Err(e);
    }
    csv.finish()?;

    let report = case_one_uniqueness_scan(&grid)?;
    let half = case_one_uniqueness_scan(&ScanGrid { step: grid.step / 2.0, ..grid })?;
    let within = grid.step * (1.0 + 1e-9);
    let mut gates = vec![
        Gate::at_least("survivors", "survivor count >= 1", report.survivors as f64, 1.0),
        Gate::at_most("alpha_minus_two_beta", "max |α - 2β| over survivors <= step", report.max_alpha_minus_two_beta, within),
        Gate::at_most("b_plus_beta", "max |b + β| over survivors <= step", report.max_b_plus_beta, within),
    ];
    let ratio = report.diameter / half.diameter;
    gates.push(Gate::at_least("diameter_halving_low", &format!("diameter(step) / diameter(step/2) >= {}", DIAMETER_BAND.0), ratio, DIAMETER_BAND.0));
    gates.push(Gate::at_most("diameter_halving_high", &format!("diameter(step) / diameter(step/2) <= {}", DIAMETER_BAND.1), ratio, DIAMETER_BAND.1));
    gates.push(named_gate("named_ni", &HarnackParams::ni(), NamedMatch::Ni)?);
    gates.push(named_gate("named_cao_hamilton", &HarnackParams::cao_hamilton(Variant::U), NamedMatch::CaoHamiltonH)?);
    gates.push(named_gate("named_li_yau", &HarnackParams::li_yau(), NamedMatch::LiYau)?);
    Ok(SuiteResult::new(Suite::Paramscan.name(), gates))
}

fn output_dir(cfg: &RunConfig, opts: &RunOptions) -> Result<ReportDir> {
    ReportDir::create(opts.output_dir.as_ref().unwrap_or(&cfg.output_dir))
}

/// Runs every requested suite and writes the reports.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let m = cfg.manifold.build()?;
    let f0 = cfg.initial_data.to_core().sample(&m, cfg.t0)?;
    let traj = solve(&m, &f0, cfg.t0, cfg.t_end, cfg.dt, cfg.direction.into())?;
    let tol = tolerance(cfg, &traj, opts.strict)?;
    let (rows, signs, entropy) = diagnostics(cfg, &traj)?;
    let out = output_dir(cfg, opts)?;

    let mut suites = Vec::new();
    for suite in &cfg.suites {
        suites.push(match suite {
            Suite::HarnackSigns => harnack_suite(&rows, &signs, tol.tol_disc),
            Suite::EvolutionResidual => residual_suite(cfg, &traj, &rows)?,
            Suite::Entropy => entropy_suite(cfg, &traj, &entropy, &tol)?,
            Suite::Pathwise => pathwise_suite(cfg, &traj, tol.tol_disc, &out)?,
            Suite::Paramscan => paramscan_suite(&cfg.scan_spec(), &out)?,
        });
    }

    let hash = manifold_hash(&m);
    let meta = TrajectoryMeta {
        manifold: cfg.manifold.clone(),
        manifold_hash: hash.clone(),
        node_count: m.node_count(),
        mesh_size: m.mesh_size(),
        total_volume: m.total_volume(),
        initial_data: cfg.initial_data.clone(),
        direction: cfg.direction,
        clock: match cfg.direction {
            FlowDirection::Forward => "t",
            FlowDirection::Backward => "tau",
        },
        t0: cfg.t0,
        t_end: cfg.t_end,
        dt: cfg.dt,
        snapshots: traj.len(),
        solver: traj.stats().into(),
        cg_relative_tolerance: CG_RELATIVE_TOLERANCE,
        tolerance: tol.clone(),
    };
    out.json("trajectory_meta.json", &meta)?;
    out.csv("diagnostics.csv", DIAGNOSTICS_HEADER, rows.iter().map(DiagnosticsRow::to_record))?;
    if cfg.snapshots {
        let header = format!("manifold_hash={hash} dt={} direction={}", fmt_f64(cfg.dt), meta.clock);
        out.snapshots(&header, traj.states().iter().map(|s| (s.time(), s.f().values())))?;
    }
    let summary = summarize(Some(tol.tol_disc), suites);
    out.json("summary.json", &summary)?;
    Ok(RunOutcome { summary, output_dir: out.path().to_path_buf() })
}

/// Runs only the parameter scan.
pub fn scan(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let out = output_dir(cfg, opts)?;
    let result = paramscan_suite(&cfg.scan_spec(), &out)?;
    let summary = summarize(None, vec![result]);
    out.json("summary.json", &summary)?;
    Ok(RunOutcome { summary, output_dir: out.path().to_path_buf() })
}

/// Calibrates `C` and writes it into `trajectory_meta.json`.
pub fn calibrate(cfg: &RunConfig, opts: &RunOptions) -> Result<Tolerance> {
    if !cfg.manifold.is_torus() {
        return Err(crate::error::LabError::Config("calibrate needs a torus manifold".into()));
    }
    let m = cfg.manifold.build()?;
    let f0 = cfg.initial_data.to_core().sample(&m, cfg.t0)?;
    let traj = solve(&m, &f0, cfg.t0, cfg.t_end, cfg.dt, cfg.direction.into())?;
    let tol = tolerance(cfg, &traj, opts.strict)?;
    let out = output_dir(cfg, opts)?;
    out.json("trajectory_meta.json", &CalibrationMeta {
        manifold: cfg.manifold.clone(),
        manifold_hash: manifold_hash(&m),
        initial_data: cfg.initial_data.clone(),
        t0: cfg.t0,
        t_end: cfg.t_end,
        dt: cfg.dt,
        solver: traj.stats().into(),
        cg_relative_tolerance: CG_RELATIVE_TOLERANCE,
        tolerance: tol.clone(),
    })?;
    Ok(tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CalibrationMeta {
    manifold: ManifoldSpec,
    manifold_hash: String,
    initial_data: InitialSpec,
    t0: f64,
    t_end: f64,
    dt: f64,
    solver: SolverTotals,
    cg_relative_tolerance: f64,
    tolerance: Tolerance,
}
