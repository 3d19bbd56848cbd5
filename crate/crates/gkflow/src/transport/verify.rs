use crate::complex::{d_c, gauge_vector_field, kahler_form, AlmostComplexStructure};
use crate::error::{Error, Result};
use crate::flows::{j_rhs, FlowState, FlowSystem, FlowTrajectory};
use crate::tensor::{Metric, TensorField};

use super::diffeo::{integrate_diffeo, pullback, DiffeoFlow, DiffeoOptions, SampledVectorField};

#[derive(Debug, Clone, Copy, Default)]
pub struct GaugeOptions {
    pub diffeo: DiffeoOptions,
    /// Negative control: integrate φ₋ with -X₋.
    pub flip_minus: bool,
}

/// Residuals of the gauge equivalence between two pluriclosed trajectories.
#[derive(Debug, Clone)]
pub struct GaugeReport {
    pub times: Vec<f64>,
    /// ‖φ₊*g₊ - φ₋*g₋‖ per sample.
    pub metric_gap: Vec<f64>,
    /// ‖φ₊*(d^c₊ω₊) + φ₋*(d^c₋ω₋)‖ per sample.
    pub dc_gap: Vec<f64>,
    /// ‖φ₊*g₊ - g‖ against a reference coupled trajectory.
    pub reference_metric_gap: Option<Vec<f64>>,
    /// ‖φ₊*(d^c₊ω₊) - H‖ against the reference.
    pub dc_plus_gap: Option<Vec<f64>>,
    /// ‖φ₋*(d^c₋ω₋) + H‖ against the reference.
    pub dc_minus_gap: Option<Vec<f64>>,
    /// ‖j_rhs(φ*g, φ*J) - forward difference of φ*J‖ per interval, worst of both sides.
    pub jflow_gap: Vec<f64>,
    pub min_jacobian_det: f64,
}

fn worst(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(*x) })
}

impl GaugeReport {
    pub fn max_metric_gap(&self) -> f64 {
        worst(&self.metric_gap)
    }
    pub fn max_dc_gap(&self) -> f64 {
        let mut m = worst(&self.dc_gap);
        for v in [&self.dc_plus_gap, &self.dc_minus_gap].into_iter().flatten() {
            m = m.max(worst(v));
        }
        m
    }
    pub fn max_jflow_gap(&self) -> f64 {
        worst(&self.jflow_gap)
    }
}

/// Data of one pluriclosed trajectory needed for transport.
struct Side {
    metrics: Vec<Metric>,
    j: AlmostComplexStructure,
    h: Vec<TensorField>,
    flow: DiffeoFlow,
}

fn side(traj: &FlowTrajectory, flip: bool, opts: DiffeoOptions) -> Result<Side> {
    let first: &FlowState = &traj.states[0].1;
    let j = AlmostComplexStructure::new(
        first.j_plus.clone().ok_or_else(|| Error::InvalidArgument("pluriclosed trajectory without J".into()))?,
    )?;
    let mut metrics = Vec::new();
    let mut xs = Vec::new();
    let mut h = Vec::new();
    for (_, s) in &traj.states {
        let g = s.metric()?;
        xs.push(gauge_vector_field(&g, &j)?);
        h.push(d_c(&kahler_form(&g, &j)?, &j)?);
        metrics.push(g);
    }
    let times: Vec<f64> = traj.states.iter().map(|(t, _)| *t).collect();
    let x = SampledVectorField::new(times, xs)?;
    let x = if flip { x.scaled(-1.0) } else { x };
    let flow = integrate_diffeo(&x, opts)?;
    Ok(Side { metrics, j, h, flow })
}

fn check_grid(a: &FlowTrajectory, b: &FlowTrajectory) -> Result<()> {
    let ta: Vec<f64> = a.states.iter().map(|(t, _)| *t).collect();
    let tb: Vec<f64> = b.states.iter().map(|(t, _)| *t).collect();
    if ta != tb {
        return Err(Error::TimeGrid(format!("{} vs {} samples or differing times", ta.len(), tb.len())));
    }
    if ta.len() != a.rows.len() {
        return Err(Error::TimeGrid("trajectory must keep every step (snapshot stride 1)".into()));
    }
    Ok(())
}

/// Transports both pluriclosed trajectories by their gauge flows and compares them.
///
/// `plus` and `minus` are pluriclosed runs on (M, J₊) and (M, J₋) from the
/// same initial metric, keeping every step. With `reference` (a coupled run on
/// the same time grid) the transported quantities are also compared to its g and H.
pub fn verify_gauge_equivalence(
    plus: &FlowTrajectory,
    minus: &FlowTrajectory,
    reference: Option<&FlowTrajectory>,
    opts: GaugeOptions,
) -> Result<GaugeReport> {
    for t in [plus, minus] {
        if t.system != FlowSystem::Pluriclosed {
            return Err(Error::InvalidArgument("gauge equivalence compares pluriclosed trajectories".into()));
        }
    }
    check_grid(plus, minus)?;
    if let Some(r) = reference {
        check_grid(plus, r)?;
    }
    let p = side(plus, false, opts.diffeo)?;
    let m = side(minus, opts.flip_minus, opts.diffeo)?;
    let base = p.metrics[0].backend().clone();
    let n = p.metrics.len();
    let mut report = GaugeReport {
        times: plus.states.iter().map(|(t, _)| *t).collect(),
        metric_gap: Vec::with_capacity(n),
        dc_gap: Vec::with_capacity(n),
        reference_metric_gap: reference.map(|_| Vec::new()),
        dc_plus_gap: reference.map(|_| Vec::new()),
        dc_minus_gap: reference.map(|_| Vec::new()),
        jflow_gap: Vec::new(),
        min_jacobian_det: p.flow.min_jacobian_det().min(m.flow.min_jacobian_det()),
    };
    let mut prev: Option<[(Metric, TensorField); 2]> = None;
    for k in 0..n {
        let gp = pullback(&p.flow, k, p.metrics[k].field())?;
        let gm = pullback(&m.flow, k, m.metrics[k].field())?;
        let hp = pullback(&p.flow, k, &p.h[k])?;
        let hm = pullback(&m.flow, k, &m.h[k])?;
        let gm_b = gm.rebased(&base)?;
        let hm_b = hm.rebased(&base)?;
        report.metric_gap.push(gp.max_abs_diff(&gm_b)?);
        report.dc_gap.push(hp.add(&hm_b)?.max_abs());
        if let Some(r) = reference {
            let rs = &r.states[k].1;
            let rh = rs.h.as_ref().ok_or_else(|| Error::InvalidArgument("reference trajectory without H".into()))?;
            report.reference_metric_gap.as_mut().unwrap().push(gp.max_abs_diff(&rs.g)?);
            report.dc_plus_gap.as_mut().unwrap().push(hp.max_abs_diff(rh)?);
            report.dc_minus_gap.as_mut().unwrap().push(hm_b.add(rh)?.max_abs());
        }
        let jp = pullback(&p.flow, k, p.j.field())?;
        let jm = pullback(&m.flow, k, m.j.field())?;
        let cur = [(Metric::new(gp)?, jp), (Metric::new(gm)?, jm)];
        if let Some(pr) = &prev {
            let dt = report.times[k] - report.times[k - 1];
            let mut gap: f64 = 0.0;
            for (a, b) in pr.iter().zip(&cur) {
                let fd = b.1.sub(&a.1)?.scale(1.0 / dt);
                let rhs = j_rhs(&a.0, &a.1)?.total()?;
                gap = gap.max(rhs.max_abs_diff(&fd)?);
            }
            report.jflow_gap.push(gap);
        }
        prev = Some(cur);
    }
    Ok(report)
}
