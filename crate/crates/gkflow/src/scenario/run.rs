use std::io::Write;
use std::path::{Path, PathBuf};

use crate::complex::GKState;
use crate::error::{Error, Result};
use crate::flows::{integrate, FlowProblem, FlowState, FlowStatus, FlowSystem, FlowTrajectory, ResidualRow};
use crate::recipes::{commuting_gk_torus, flat_kahler_torus, hopf_gk, perturbed_torus, torus_backend};
use crate::statics::{
    cylinder_invariants, hopf_samples, hopf_staticity, lambda_sweep, lee_form_checks, staticprop_checks, PatchOptions,
    SolitonData, StaticTolerances,
};
use crate::tensor::snapshot::{save_field, Payload};
use crate::transport::{verify_gauge_equivalence, GaugeOptions, GaugeReport};

use super::config::{Check, FlowSpec, Recipe, Scenario};

/// Environment variable naming the output root; defaults to `gkflow-out`.
pub const OUT_ENV: &str = "GKFLOW_OUT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("gkflow-out"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

impl CheckResult {
    /// Passes iff value ≤ tol (NaN fails).
    pub fn at_most(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tol, passed: value <= tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// A negative control failed as it should.
    ExpectedFail,
    /// A negative control passed.
    UnexpectedPass,
    Degenerate,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::ExpectedFail => "EXPECTED_FAIL",
            Outcome::UnexpectedPass => "UNEXPECTED_PASS",
            Outcome::Degenerate => "DEGENERATE",
        }
    }

    /// 0 for PASS and EXPECTED_FAIL, 1 for failed checks, 3 for degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Pass | Outcome::ExpectedFail => 0,
            Outcome::Fail | Outcome::UnexpectedPass => 1,
            Outcome::Degenerate => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub outcome: Outcome,
    pub checks: Vec<CheckResult>,
    pub out_dir: PathBuf,
    pub notes: Vec<String>,
}

#[allow(clippy::large_enum_variant)]
enum Initial {
    Gk(GKState),
    Samples(Vec<[f64; 4]>),
}

fn build_initial(s: &Scenario) -> Result<Initial> {
    let torus = || torus_backend(&s.resolution, s.stencil);
    Ok(match &s.recipe {
        Recipe::FlatKahlerTorus => Initial::Gk(flat_kahler_torus(&torus()?)?),
        Recipe::PerturbedTorus { seed, amplitude } => Initial::Gk(perturbed_torus(&torus()?, *seed, *amplitude)?),
        Recipe::CommutingGkTorus { epsilon } => {
            let r: [usize; 4] = s
                .resolution
                .as_slice()
                .try_into()
                .map_err(|_| Error::InvalidArgument("COMMUTING_GK_TORUS needs a 4-axis resolution".into()))?;
            Initial::Gk(commuting_gk_torus(r, *epsilon, s.stencil)?)
        }
        Recipe::HopfGk { radius } => Initial::Gk(hopf_gk(*radius)?),
        Recipe::HopfStatic { samples, seed } => Initial::Samples(hopf_samples(*samples, *seed, 0.5, 2.0)),
        Recipe::Custom { path } => Initial::Gk(GKState::load(path)?),
    })
}

fn flow_state(f: &FlowSpec, gk: &GKState) -> Result<FlowState> {
    Ok(match f.system {
        FlowSystem::GkCoupled | FlowSystem::GaugeFixed => FlowState::from_gk(gk),
        FlowSystem::BField if f.frozen_j => FlowState::from_gk(gk),
        FlowSystem::BField => FlowState::bfield(&gk.g, gk.h.clone()),
        FlowSystem::Pluriclosed => FlowState::pluriclosed(&gk.g, &gk.j_plus)?,
    })
}

fn run_flow(system: FlowSystem, f: &FlowSpec, state: FlowState, stride: usize) -> Result<FlowTrajectory> {
    let mut p = FlowProblem::new(system, state, f.dt, f.steps);
    p.scheme = f.scheme;
    p.snapshot_stride = stride;
    integrate(&p)
}

fn worst(rows: &[ResidualRow], cols: &[fn(&ResidualRow) -> f64]) -> f64 {
    let mut m: f64 = 0.0;
    for r in rows {
        for c in cols {
            let v = c(r);
            if v.is_nan() {
                return f64::NAN;
            }
            m = m.max(v);
        }
    }
    m
}

fn initial_row(gk: &GKState) -> Result<ResidualRow> {
    crate::flows::residual_row(FlowSystem::GkCoupled, &FlowState::from_gk(gk), 0.0, &Default::default())
}

fn write_gauge_csv(path: &Path, r: &GaugeReport) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,metric_gap,dc_gap,reference_metric_gap,dc_plus_gap,dc_minus_gap,jflow_gap")?;
    let opt = |v: &Option<Vec<f64>>, k: usize| v.as_ref().map_or(f64::NAN, |v| v[k]);
    for k in 0..r.times.len() {
        let jf = if k == 0 { f64::NAN } else { r.jflow_gap[k - 1] };
        let vals = [
            r.times[k],
            r.metric_gap[k],
            r.dc_gap[k],
            opt(&r.reference_metric_gap, k),
            opt(&r.dc_plus_gap, k),
            opt(&r.dc_minus_gap, k),
            jf,
        ];
        let line: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

fn gauge_check(s: &Scenario, gk: &GKState, dir: &Path) -> Result<Vec<CheckResult>> {
    let f = s.flow.as_ref().ok_or_else(|| Error::InvalidArgument("gauge_equivalence needs dt and steps".into()))?;
    let plus = run_flow(FlowSystem::Pluriclosed, f, FlowState::pluriclosed(&gk.g, &gk.j_plus)?, 1)?;
    let minus = run_flow(FlowSystem::Pluriclosed, f, FlowState::pluriclosed(&gk.g, &gk.j_minus)?, 1)?;
    let reference = run_flow(FlowSystem::GkCoupled, f, FlowState::from_gk(gk), 1)?;
    let r = verify_gauge_equivalence(&plus, &minus, Some(&reference), GaugeOptions::default())?;
    write_gauge_csv(&dir.join("gauge.csv"), &r)?;
    let ref_gap = r.reference_metric_gap.as_ref().map_or(f64::NAN, |v| v.iter().cloned().fold(0.0, f64::max));
    let tol = s.tolerances.gauge;
    Ok(vec![
        CheckResult::at_most("gauge.metric_gap", r.max_metric_gap(), tol),
        CheckResult::at_most("gauge.dc_gap", r.max_dc_gap(), tol),
        CheckResult::at_most("gauge.reference_metric_gap", ref_gap, tol),
    ])
}

fn static_checks(s: &Scenario, gk: &GKState) -> Result<Vec<CheckResult>> {
    let d = SolitonData::new_static(gk.g.clone(), gk.h.clone(), s.lambda)?;
    let tol = StaticTolerances { soliton: s.tolerances.static_residual, ..Default::default() };
    let rep = staticprop_checks(&d, tol)?;
    let mut out = vec![
        CheckResult::at_most("static.soliton_residual", rep.soliton.max(), tol.soliton),
        CheckResult::at_most("static.integral_gap", rep.integral_gap, tol.integral_gap),
        CheckResult::at_most("static.neg_min_eig_rc_minus_lambda", -rep.min_eig_rc_minus_lambda, tol.eigenvalue),
    ];
    if let Some(v) = rep.dstar_h {
        out.push(CheckResult::at_most("static.dstar_h", v, tol.dstar_h));
    }
    if s.lambda < 0.0 {
        out.push(CheckResult::at_most("static.h_norm_for_negative_lambda", rep.h_norm, tol.soliton));
    }
    for (label, j) in [("plus", &gk.j_plus), ("minus", &gk.j_minus)] {
        let g = gk.g.rebased(j.backend())?;
        let lee = lee_form_checks(&g, j)?;
        if let Some(v) = lee.theta_minus_star_h {
            out.push(CheckResult::at_most(&format!("static.theta_minus_star_h_{label}"), v, 1e-8));
        }
        out.push(CheckResult::at_most(&format!("static.d_theta_{label}"), lee.d_theta, 1e-8));
    }
    let sweep = lambda_sweep(&d, -1.0, 1.0, 1e-9)?;
    out.push(CheckResult::at_most("static.lambda_sweep_argmin", sweep.lambda.abs(), 1e-6));
    Ok(out)
}

fn hopf_checks(s: &Scenario, samples: &[[f64; 4]], dir: &Path) -> Result<Vec<CheckResult>> {
    let reps = hopf_staticity(samples, PatchOptions::default())?;
    let (scal, rc2, rm2) = cylinder_invariants();
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("hopf.csv"))?);
    writeln!(w, "x0,x1,x2,x3,rho,s_minus_q,pcf_rate,scal,ricci_sq,riemann_sq")?;
    let mut m = [0.0f64; 4];
    for (x, r) in samples.iter().zip(&reps) {
        let vals = [x[0], x[1], x[2], x[3], r.rho, r.s_minus_q, r.pcf_rate, r.scal, r.ricci_sq, r.riemann_sq];
        let line: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
        for (k, v) in [r.s_minus_q, (r.scal - scal).abs(), (r.ricci_sq - rc2).abs(), (r.riemann_sq - rm2).abs()]
            .iter()
            .enumerate()
        {
            m[k] = if v.is_nan() || m[k].is_nan() { f64::NAN } else { m[k].max(*v) };
        }
    }
    Ok(vec![
        CheckResult::at_most("hopf.s_minus_q", m[0], s.tolerances.hopf),
        CheckResult::at_most("hopf.scal_vs_cylinder", m[1], 1e-6),
        CheckResult::at_most("hopf.ricci_sq_vs_cylinder", m[2], 1e-6),
        CheckResult::at_most("hopf.riemann_sq_vs_cylinder", m[3], 1e-6),
    ])
}

fn save_final(traj: &FlowTrajectory, dir: &Path) -> Result<()> {
    let state = traj.final_state();
    if state.h.is_some() && state.j_plus.is_some() && state.j_minus.is_some() {
        return state.to_gk()?.save(dir, Payload::Text);
    }
    std::fs::create_dir_all(dir)?;
    save_field(&dir.join("g.field"), "g", &state.g, Payload::Text)?;
    if let Some(h) = &state.h {
        save_field(&dir.join("H.field"), "H", h, Payload::Text)?;
    }
    if let Some(j) = &state.j_plus {
        save_field(&dir.join("Jplus.field"), "Jplus", j, Payload::Text)?;
    }
    Ok(())
}

fn execute(s: &Scenario, dir: &Path) -> Result<(Vec<CheckResult>, bool, Vec<String>)> {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let initial = build_initial(s)?;
    let mut traj = None;
    if let (Some(f), Initial::Gk(gk)) = (&s.flow, &initial) {
        let t = run_flow(f.system, f, flow_state(f, gk)?, f.stride)?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("residuals.csv"))?);
        t.write_csv(&mut w)?;
        w.flush()?;
        if let FlowStatus::Degenerate { step, t: time, min_eig } = t.status {
            notes.push(format!("degenerate at step {step}, t = {time}, min eigenvalue {min_eig:e}"));
            return Ok((checks, true, notes));
        }
        if s.snapshots {
            save_final(&t, &dir.join("snapshots").join("final"))?;
        }
        traj = Some(t);
    }
    for c in &s.checks {
        match (c, &initial) {
            (Check::GkResiduals | Check::Closedness, Initial::Gk(gk)) => {
                let rows = match &traj {
                    Some(t) => t.rows.clone(),
                    None => vec![initial_row(gk)?],
                };
                if *c == Check::GkResiduals {
                    let cols: [fn(&ResidualRow) -> f64; 7] = [
                        |r| r.r1,
                        |r| r.r2,
                        |r| r.r3,
                        |r| r.n_plus,
                        |r| r.n_minus,
                        |r| r.compat_plus,
                        |r| r.compat_minus,
                    ];
                    checks.push(CheckResult::at_most("gk_residuals.max", worst(&rows, &cols), s.tolerances.gk));
                } else {
                    checks.push(CheckResult::at_most("closedness.dH", worst(&rows, &[|r| r.dh]), s.tolerances.closed));
                    let sq = |r: &ResidualRow| {
                        if r.square_minus.is_nan() {
                            r.square_plus
                        } else {
                            r.square_plus.max(r.square_minus)
                        }
                    };
                    let v = rows.iter().map(sq).fold(0.0, f64::max);
                    checks.push(CheckResult::at_most("closedness.J2_plus_id", v, s.tolerances.closed));
                }
            }
            (Check::GaugeEquivalence, Initial::Gk(gk)) => checks.extend(gauge_check(s, gk, dir)?),
            (Check::Static, Initial::Gk(gk)) => checks.extend(static_checks(s, gk)?),
            (Check::HopfStaticity, Initial::Samples(p)) => checks.extend(hopf_checks(s, p, dir)?),
            (c, _) => {
                return Err(Error::InvalidArgument(format!(
                    "check {} does not apply to recipe {}",
                    c.name(),
                    s.recipe.name()
                )))
            }
        }
    }
    Ok((checks, false, notes))
}

fn write_report(s: &Scenario, r: &RunReport) -> Result<()> {
    let mut w = std::fs::File::create(r.out_dir.join("report.txt"))?;
    writeln!(w, "scenario: {}", s.name)?;
    writeln!(w, "recipe: {}", s.recipe.name())?;
    if let Some(f) = &s.flow {
        writeln!(w, "system: {}", f.system.name())?;
        writeln!(w, "scheme: {}", f.scheme.name())?;
        writeln!(w, "dt: {:.16e}", f.dt)?;
        writeln!(w, "steps: {}", f.steps)?;
        writeln!(w, "frozen_j: {}", f.frozen_j)?;
    }
    writeln!(w, "resolution: {}", s.resolution.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))?;
    writeln!(w, "stencil: {}", s.stencil.name())?;
    writeln!(w, "expect: {}", if s.expect_fail { "FAIL" } else { "PASS" })?;
    for c in &r.checks {
        writeln!(
            w,
            "check {} = {:.16e} (tol {:.3e}) {}",
            c.name,
            c.value,
            c.tol,
            if c.passed { "PASS" } else { "FAIL" }
        )?;
    }
    for n in &r.notes {
        writeln!(w, "note: {n}")?;
    }
    writeln!(w, "outcome: {}", r.outcome.name())?;
    Ok(())
}

/// Runs one scenario, writing `residuals.csv`, `report.txt` and optional
/// artifacts to `<out_root>/<name>/`.
pub fn run_scenario(s: &Scenario, out_root: &Path) -> Result<RunReport> {
    let out_dir = out_root.join(&s.name);
    std::fs::create_dir_all(&out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let (checks, degenerate, notes) = pool.install(|| execute(s, &out_dir))?;
    let all_pass = checks.iter().all(|c| c.passed);
    let outcome = match (degenerate, s.expect_fail, all_pass) {
        (true, _, _) => Outcome::Degenerate,
        (false, false, true) => Outcome::Pass,
        (false, false, false) => Outcome::Fail,
        (false, true, false) => Outcome::ExpectedFail,
        (false, true, true) => Outcome::UnexpectedPass,
    };
    let report = RunReport { scenario: s.name.clone(), outcome, checks, out_dir, notes };
    write_report(s, &report)?;
    Ok(report)
}

pub fn run_scenario_file(path: &Path) -> Result<RunReport> {
    run_scenario(&Scenario::load(path)?, &output_root())
}
