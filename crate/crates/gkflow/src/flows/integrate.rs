use std::io::Write;

use crate::complex::gauge::{lee_form_unchecked, sharp};
use crate::complex::gk::side_residuals;
use crate::complex::kahler::{d_c, kahler_form_unchecked};
use crate::complex::nijenhuis::nijenhuis;
use crate::complex::{project_complex, AlmostComplexStructure, GKState, INTEGRABILITY_TOL};
use crate::error::{Error, Result};
use crate::tensor::forms::as_form;
use crate::tensor::{exterior_derivative, ricci, Backend, Connection, Metric, TensorField};

use super::rhs::{bfield_rhs, deturck_gauge_rhs, gk_coupled_rhs, pluriclosed_metric_rhs};

/// Which evolution equation to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowSystem {
    /// (g, H) by the B-field flow; J± (if present) are carried unchanged.
    BField,
    /// g by the pluriclosed flow with the complex structure in `j_plus` held fixed.
    Pluriclosed,
    /// (g, H, J₊, J₋) by the coupled system.
    GkCoupled,
    /// The coupled system plus the DeTurck Lie-derivative term.
    GaugeFixed,
}

impl FlowSystem {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "BFIELD" => Ok(Self::BField),
            "PLURICLOSED" => Ok(Self::Pluriclosed),
            "GK_COUPLED" => Ok(Self::GkCoupled),
            "GAUGE_FIXED" => Ok(Self::GaugeFixed),
            _ => Err(Error::UnknownName(format!("flow system {s}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BField => "BFIELD",
            Self::Pluriclosed => "PLURICLOSED",
            Self::GkCoupled => "GK_COUPLED",
            Self::GaugeFixed => "GAUGE_FIXED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Euler,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "RK4" => Ok(Self::Rk4),
            "EULER" => Ok(Self::Euler),
            _ => Err(Error::UnknownName(format!("scheme {s}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rk4 => "RK4",
            Self::Euler => "EULER",
        }
    }
}

/// Evolving fields. Also used for time derivatives, where `None` means "not evolved".
#[derive(Debug, Clone)]
pub struct FlowState {
    pub g: TensorField,
    pub h: Option<TensorField>,
    pub j_plus: Option<TensorField>,
    pub j_minus: Option<TensorField>,
}

impl FlowState {
    pub fn from_gk(s: &GKState) -> Self {
        Self {
            g: s.g.field().clone(),
            h: Some(s.h.clone()),
            j_plus: Some(s.j_plus.field().clone()),
            j_minus: Some(s.j_minus.field().clone()),
        }
    }

    pub fn bfield(g: &Metric, h: TensorField) -> Self {
        Self { g: g.field().clone(), h: Some(h), j_plus: None, j_minus: None }
    }

    /// State for the pluriclosed flow of (g, J); g is moved to J's backend.
    pub fn pluriclosed(g: &Metric, j: &AlmostComplexStructure) -> Result<Self> {
        let g = g.rebased(j.backend())?;
        Ok(Self { g: g.field().clone(), h: None, j_plus: Some(j.field().clone()), j_minus: None })
    }

    pub fn backend(&self) -> &std::sync::Arc<Backend> {
        self.g.backend()
    }

    pub fn metric(&self) -> Result<Metric> {
        Metric::new(self.g.clone())
    }

    pub fn to_gk(&self) -> Result<GKState> {
        let missing = || Error::InvalidArgument("state does not carry (H, J+, J-)".into());
        GKState::new(
            self.metric()?,
            self.h.clone().ok_or_else(missing)?,
            AlmostComplexStructure::new(self.j_plus.clone().ok_or_else(missing)?)?,
            AlmostComplexStructure::new(self.j_minus.clone().ok_or_else(missing)?)?,
        )
    }

    fn fields(&self) -> [Option<&TensorField>; 4] {
        [Some(&self.g), self.h.as_ref(), self.j_plus.as_ref(), self.j_minus.as_ref()]
    }

    /// self + s·k for every field evolved by `k`.
    pub fn combine(&self, k: &FlowState, s: f64) -> Result<FlowState> {
        let upd = |y: &Option<TensorField>, d: &Option<TensorField>| -> Result<Option<TensorField>> {
            match (y, d) {
                (Some(y), Some(d)) => Ok(Some(y.axpy(s, d)?)),
                (y, None) => Ok(y.clone()),
                (None, Some(_)) => Err(Error::Shape("derivative for a field the state lacks".into())),
            }
        };
        Ok(FlowState {
            g: self.g.axpy(s, &k.g)?.symmetrized(),
            h: upd(&self.h, &k.h)?.map(as_form),
            j_plus: upd(&self.j_plus, &k.j_plus)?,
            j_minus: upd(&self.j_minus, &k.j_minus)?,
        })
    }

    /// Largest componentwise difference over the fields both states carry.
    pub fn max_abs_diff(&self, other: &FlowState) -> Result<f64> {
        let mut m: f64 = 0.0;
        for (a, b) in self.fields().into_iter().zip(other.fields()) {
            if let (Some(a), Some(b)) = (a, b) {
                m = m.max(a.max_abs_diff(b)?);
            }
        }
        Ok(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.fields()
            .into_iter()
            .flatten()
            .map(|f| f.max_abs())
            .fold(0.0, |m: f64, v| if v.is_nan() { v } else { m.max(v) })
    }

    pub fn is_finite(&self) -> bool {
        self.fields().into_iter().flatten().all(|f| f.is_finite())
    }
}

/// Tolerances and the DeTurck reference connection.
#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub integrability_tol: f64,
    pub pluriclosed_tol: f64,
    /// Bound on |dH| accepted for the initial B-field data.
    pub closed_tol: f64,
    /// Reference connection for GAUGE_FIXED; flat coordinate connection when `None`.
    pub reference: Option<Connection>,
    /// Apply J ← J(-J²)^{-1/2} after every step.
    pub project_j: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            integrability_tol: INTEGRABILITY_TOL,
            pluriclosed_tol: 1e-6,
            closed_tol: 1e-6,
            reference: None,
            project_j: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowProblem {
    pub system: FlowSystem,
    pub initial: FlowState,
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    /// CFL safety factor: dt ≤ safety·h²·min_eig(g) on grids.
    pub safety: f64,
    /// Keep every k-th state (0 keeps none besides the final state).
    pub snapshot_stride: usize,
    pub options: FlowOptions,
}

impl FlowProblem {
    pub fn new(system: FlowSystem, initial: FlowState, dt: f64, steps: usize) -> Self {
        Self {
            system,
            initial,
            dt,
            steps,
            scheme: Scheme::Rk4,
            safety: 0.05,
            snapshot_stride: 0,
            options: FlowOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowStatus {
    Completed,
    /// Positivity of g failed; the trajectory stops at the last valid state.
    Degenerate {
        step: usize,
        t: f64,
        min_eig: f64,
    },
}

/// Per-sample diagnostics; NaN marks quantities the system does not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub t: f64,
    pub rc: f64,
    pub h: f64,
    pub dh: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub compat_plus: f64,
    pub compat_minus: f64,
    pub min_eig: f64,
    pub x_plus: f64,
    pub x_minus: f64,
    pub square_plus: f64,
    pub square_minus: f64,
    pub rhs_norm: f64,
    /// Largest J projection applied during the step that produced this sample.
    pub projection: f64,
}

/// Column names of the CSV time series.
pub const CSV_COLUMNS: [&str; 14] = [
    "t",
    "Rc",
    "H",
    "dH",
    "N_plus",
    "N_minus",
    "r1",
    "r2",
    "r3",
    "compat_plus",
    "compat_minus",
    "min_eig_g",
    "X_plus",
    "X_minus",
];

impl ResidualRow {
    pub fn csv_values(&self) -> [f64; 14] {
        [
            self.t,
            self.rc,
            self.h,
            self.dh,
            self.n_plus,
            self.n_minus,
            self.r1,
            self.r2,
            self.r3,
            self.compat_plus,
            self.compat_minus,
            self.min_eig,
            self.x_plus,
            self.x_minus,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub system: FlowSystem,
    pub dt: f64,
    pub rows: Vec<ResidualRow>,
    /// Strided (t, state) samples, always ending with the final state.
    pub states: Vec<(f64, FlowState)>,
    pub status: FlowStatus,
    /// Substeps used per step after CFL halving.
    pub substeps: Vec<usize>,
}

impl FlowTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn final_state(&self) -> &FlowState {
        &self.states.last().expect("trajectory has a final state").1
    }

    /// Largest value of a column over the run, NaN-propagating.
    pub fn column_max(&self, f: impl Fn(&ResidualRow) -> f64) -> f64 {
        self.rows.iter().map(f).fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        write_csv(w, &self.rows)
    }
}

/// Writes the time series with 17 significant digits.
pub fn write_csv(w: &mut impl Write, rows: &[ResidualRow]) -> Result<()> {
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for r in rows {
        let line: Vec<String> = r.csv_values().iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Time derivative of `state` under `system`.
pub fn evaluate_rhs(system: FlowSystem, state: &FlowState, opts: &FlowOptions) -> Result<FlowState> {
    let g = state.metric()?;
    let need = |f: &Option<TensorField>, name: &str| {
        f.clone().ok_or_else(|| Error::InvalidArgument(format!("{} needs {name}", system.name())))
    };
    match system {
        FlowSystem::BField => {
            let b = bfield_rhs(&g, state.h.as_ref().ok_or_else(|| Error::InvalidArgument("BFIELD needs H".into()))?)?;
            Ok(FlowState { g: b.dg, h: Some(b.dh), j_plus: None, j_minus: None })
        }
        FlowSystem::Pluriclosed => {
            let j = AlmostComplexStructure::unchecked(need(&state.j_plus, "J")?);
            let dg = pluriclosed_metric_rhs(&g, &j, f64::INFINITY, f64::INFINITY)?;
            Ok(FlowState { g: dg, h: None, j_plus: None, j_minus: None })
        }
        FlowSystem::GkCoupled | FlowSystem::GaugeFixed => {
            let h = need(&state.h, "H")?;
            let jp = need(&state.j_plus, "J+")?;
            let jm = need(&state.j_minus, "J-")?;
            let d = if system == FlowSystem::GkCoupled {
                gk_coupled_rhs(&g, &h, &jp, &jm)?
            } else {
                let flat = Connection::flat(g.backend());
                deturck_gauge_rhs(&g, &h, &jp, &jm, opts.reference.as_ref().unwrap_or(&flat))?
            };
            Ok(FlowState { g: d.dg, h: Some(d.dh), j_plus: Some(d.dj_plus), j_minus: Some(d.dj_minus) })
        }
    }
}

fn check_initial(p: &FlowProblem) -> Result<()> {
    let s = &p.initial;
    let g = s.metric()?;
    let o = &p.options;
    if !(p.dt > 0.0) || !p.dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", p.dt)));
    }
    if let Some(h) = &s.h {
        let dh = exterior_derivative(h)?.max_abs();
        if !(dh <= o.closed_tol) {
            return Err(Error::InvalidArgument(format!("initial H is not closed: |dH| = {dh:e}")));
        }
    }
    match p.system {
        FlowSystem::BField => {
            if s.h.is_none() {
                return Err(Error::InvalidArgument("BFIELD needs H".into()));
            }
        }
        FlowSystem::Pluriclosed => {
            let j = AlmostComplexStructure::new(
                s.j_plus.clone().ok_or_else(|| Error::InvalidArgument("PLURICLOSED needs J".into()))?,
            )?;
            // rejects non-integrable J, incompatible or non-pluriclosed data
            pluriclosed_metric_rhs(&g, &j, o.integrability_tol, o.pluriclosed_tol)?;
            crate::complex::kahler_form(&g, &j)?;
        }
        FlowSystem::GkCoupled | FlowSystem::GaugeFixed => {
            s.to_gk()?;
        }
    }
    Ok(())
}

fn step_once(system: FlowSystem, scheme: Scheme, y: &FlowState, dt: f64, opts: &FlowOptions) -> Result<FlowState> {
    let k1 = evaluate_rhs(system, y, opts)?;
    match scheme {
        Scheme::Euler => y.combine(&k1, dt),
        Scheme::Rk4 => {
            let k2 = evaluate_rhs(system, &y.combine(&k1, 0.5 * dt)?, opts)?;
            let k3 = evaluate_rhs(system, &y.combine(&k2, 0.5 * dt)?, opts)?;
            let k4 = evaluate_rhs(system, &y.combine(&k3, dt)?, opts)?;
            y.combine(&k1, dt / 6.0)?.combine(&k2, dt / 3.0)?.combine(&k3, dt / 3.0)?.combine(&k4, dt / 6.0)
        }
    }
}

/// Smallest time step allowed by the parabolic CFL bound, infinite off the torus.
pub fn cfl_limit(g: &Metric, safety: f64) -> f64 {
    match &**g.backend() {
        Backend::Torus(t) => {
            let h = t.min_spacing();
            if h.is_finite() {
                safety * h * h * g.min_eigenvalue()
            } else {
                f64::INFINITY
            }
        }
        _ => f64::INFINITY,
    }
}

const MAX_HALVINGS: usize = 8;

fn project_state(s: FlowState) -> Result<(FlowState, f64)> {
    let mut size: f64 = 0.0;
    let mut proj = |j: Option<TensorField>| -> Result<Option<TensorField>> {
        match j {
            Some(j) => {
                let (p, d) = project_complex(&j)?;
                size = size.max(d);
                Ok(Some(p))
            }
            None => Ok(None),
        }
    };
    let j_plus = proj(s.j_plus)?;
    let j_minus = proj(s.j_minus)?;
    Ok((FlowState { g: s.g, h: s.h, j_plus, j_minus }, size))
}

fn is_degeneracy(e: &Error) -> bool {
    matches!(e, Error::NonPositiveMetric { .. } | Error::SingularMetric { .. })
}

/// Integrates the problem; positivity failure ends the run with [`FlowStatus::Degenerate`].
pub fn integrate(p: &FlowProblem) -> Result<FlowTrajectory> {
    check_initial(p)?;
    let evolves_j = matches!(p.system, FlowSystem::GkCoupled | FlowSystem::GaugeFixed);
    let mut state = p.initial.clone();
    let mut rows = vec![residual_row(p.system, &state, 0.0, &p.options)?];
    let mut states = Vec::new();
    if p.snapshot_stride > 0 {
        states.push((0.0, state.clone()));
    }
    let mut status = FlowStatus::Completed;
    let mut substeps = Vec::with_capacity(p.steps);
    let mut t = 0.0;
    for step in 1..=p.steps {
        let g = state.metric()?;
        let limit = cfl_limit(&g, p.safety);
        let mut m = 1usize;
        let mut halvings = 0;
        while p.dt / m as f64 > limit {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::Cfl { halvings: MAX_HALVINGS, dt: p.dt, limit });
            }
            m *= 2;
        }
        if m > 1 {
            log::debug!("step {step}: {m} substeps (dt {:e}, CFL limit {limit:e})", p.dt);
        }
        substeps.push(m);
        let h = p.dt / m as f64;
        let mut projection: f64 = 0.0;
        let mut next = state.clone();
        let mut degenerate = None;
        for _ in 0..m {
            match step_once(p.system, p.scheme, &next, h, &p.options) {
                Ok(s) => next = s,
                Err(e) if is_degeneracy(&e) => {
                    degenerate = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
            if !next.is_finite() {
                return Err(Error::NonFinite { step });
            }
            if evolves_j && p.options.project_j {
                let (s, size) = project_state(next)?;
                next = s;
                projection = projection.max(size);
            }
        }
        let t_next = step as f64 * p.dt;
        let g_next = match degenerate {
            Some(e) => Err(e),
            None => next.metric(),
        };
        match g_next {
            Ok(_) => {}
            Err(e) if is_degeneracy(&e) => {
                let min_eig = match e {
                    Error::NonPositiveMetric { min_eig, .. } => min_eig,
                    _ => 0.0,
                };
                log::warn!("metric degenerate at step {step} (t = {t_next}), min eigenvalue {min_eig:e}");
                status = FlowStatus::Degenerate { step, t: t_next, min_eig };
                break;
            }
            Err(e) => return Err(e),
        }
        if evolves_j && p.options.project_j {
            log::trace!("step {step}: J projection {projection:e}");
        }
        state = next;
        t = t_next;
        let mut row = residual_row(p.system, &state, t, &p.options)?;
        row.projection = projection;
        rows.push(row);
        if p.snapshot_stride > 0 && step % p.snapshot_stride == 0 {
            states.push((t, state.clone()));
        }
    }
    if states.last().is_none_or(|(s, _)| *s != t) {
        states.push((t, state));
    }
    Ok(FlowTrajectory { system: p.system, dt: p.dt, rows, states, status, substeps })
}

/// Diagnostics of one state.
pub fn residual_row(system: FlowSystem, state: &FlowState, t: f64, opts: &FlowOptions) -> Result<ResidualRow> {
    let g = state.metric()?;
    let nan = f64::NAN;
    let mut row = ResidualRow {
        t,
        rc: ricci(&g).max_abs(),
        h: nan,
        dh: nan,
        n_plus: nan,
        n_minus: nan,
        r1: nan,
        r2: nan,
        r3: nan,
        compat_plus: nan,
        compat_minus: nan,
        min_eig: g.min_eigenvalue(),
        x_plus: nan,
        x_minus: nan,
        square_plus: nan,
        square_minus: nan,
        rhs_norm: evaluate_rhs(system, state, opts)?.max_abs(),
        projection: 0.0,
    };
    let gauge = |j: &AlmostComplexStructure| -> Result<f64> {
        let gj = g.rebased(j.backend())?;
        Ok(sharp(&gj, &lee_form_unchecked(&gj, j)?).max_abs())
    };
    if system == FlowSystem::Pluriclosed {
        let j = AlmostComplexStructure::unchecked(state.j_plus.clone().expect("pluriclosed state carries J"));
        let h = d_c(&kahler_form_unchecked(&g, &j), &j)?;
        row.h = h.max_abs();
        row.dh = exterior_derivative(&h)?.max_abs();
        row.r3 = row.dh;
        row.n_plus = nijenhuis(&j).max_abs();
        row.compat_plus = j.compatibility_defect(&g);
        row.square_plus = j.square_defect();
        row.x_plus = gauge(&j)?;
        return Ok(row);
    }
    if let Some(h) = &state.h {
        row.h = h.max_abs();
        row.dh = exterior_derivative(h)?.max_abs();
        row.r3 = row.dh;
    }
    // (compat, N, r, |X|, |J^2 + Id|) of one side
    type SideRow = Option<(f64, f64, f64, f64, f64)>;
    let side = |j: &Option<TensorField>, sign: f64| -> Result<SideRow> {
        let Some(j) = j else { return Ok(None) };
        let j = AlmostComplexStructure::unchecked(j.clone());
        let x = gauge(&j)?;
        let (compat, n, r) = match &state.h {
            Some(h) => side_residuals(&g, h, &j, sign)?,
            None => {
                let gj = g.rebased(j.backend())?;
                (j.compatibility_defect(&gj), nijenhuis(&j).max_abs(), nan)
            }
        };
        Ok(Some((compat, n, r, x, j.square_defect())))
    };
    if let Some((c, n, r, x, sq)) = side(&state.j_plus, 1.0)? {
        (row.compat_plus, row.n_plus, row.r1, row.x_plus, row.square_plus) = (c, n, r, x, sq);
    }
    if let Some((c, n, r, x, sq)) = side(&state.j_minus, -1.0)? {
        (row.compat_minus, row.n_minus, row.r2, row.x_minus, row.square_minus) = (c, n, r, x, sq);
    }
    Ok(row)
}
