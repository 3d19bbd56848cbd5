//! Acceptance suite: one line per criterion.
//!
//! Run with `cargo test --test acceptance`; pass criterion numbers after `--`
//! to run a subset. The process fails if any criterion outside
//! `KNOWN_BLOCKED` fails.

// oracles index several arrays with the same component indices
#![allow(clippy::needless_range_loop)]

use std::cell::OnceCell;
use std::time::Instant;

use gkflow::complex::{nijenhuis, nijenhuis_with_connection, AlmostComplexStructure, GKState};
use gkflow::flows::{bfield_rhs, integrate, FlowProblem, FlowState, FlowSystem, FlowTrajectory};
use gkflow::recipes::{
    commuting_gk_torus, hopf_gk, random_form, random_metric, random_tensor, random_vector_field, torus_backend,
};
use gkflow::statics::{
    cylinder_invariants, hopf_samples, hopf_staticity, lambda_sweep, lee_form_checks, soliton_residual,
    static_hopf_datum, staticprop_checks, PatchOptions, StaticTolerances,
};
use gkflow::tensor::forms::d_squared_defect;
use gkflow::tensor::{
    bianchi_defect, codifferential, covariant_derivative, exterior_derivative, form_from_fn, laplace_beltrami,
    levi_civita, lie_derivative, ricci_asymmetry, riemann, Backend, FrameAlgebra, Metric, Stencil, TensorField,
};
use gkflow::transport::{
    integrate_diffeo, pullback, verify_gauge_equivalence, DiffeoOptions, GaugeOptions, GaugeReport, SampledVectorField,
};

/// Criteria that cannot be demonstrated as stated; see the README.
/// They are still run and reported, but do not fail the suite.
const KNOWN_BLOCKED: &[usize] = &[5];

/// GK residual level regarded as the discretization floor of spectral runs.
const FLOOR: f64 = 1e-9;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

// ---------------------------------------------------------------------------
// closed-form oracles

/// a·sin(k·x + ph)
#[derive(Clone, Copy)]
struct Wave {
    a: f64,
    k: [f64; 4],
    ph: f64,
}

fn w(a: f64, k: [f64; 4], ph: f64) -> Wave {
    Wave { a, k, ph }
}

fn phase(wv: &Wave, x: &[f64]) -> f64 {
    (0..4).map(|i| wv.k[i] * x[i]).sum::<f64>() + wv.ph
}

fn val(f: &[Wave], x: &[f64]) -> f64 {
    f.iter().map(|wv| wv.a * phase(wv, x).sin()).sum()
}

fn grad(f: &[Wave], x: &[f64]) -> [f64; 4] {
    let mut g = [0.0; 4];
    for wv in f {
        let c = wv.a * phase(wv, x).cos();
        for i in 0..4 {
            g[i] += c * wv.k[i];
        }
    }
    g
}

fn hess(f: &[Wave], x: &[f64]) -> [[f64; 4]; 4] {
    let mut h = [[0.0; 4]; 4];
    for wv in f {
        let s = -wv.a * phase(wv, x).sin();
        for i in 0..4 {
            for j in 0..4 {
                h[i][j] += s * wv.k[i] * wv.k[j];
            }
        }
    }
    h
}

/// Conformal factor of the test metric e^{2f}δ.
fn conformal_f() -> Vec<Wave> {
    vec![w(0.15, [1.0, 1.0, 0.0, 0.0], 0.2), w(0.1, [0.0, 1.0, -1.0, 0.0], 1.0), w(0.08, [1.0, 0.0, 2.0, 0.0], -0.5)]
}

/// Components of the test 1-form.
fn one_form() -> [Vec<Wave>; 4] {
    [
        vec![w(1.0, [0.0, 1.0, 1.0, 0.0], 0.3)],
        vec![w(0.7, [1.0, 0.0, 2.0, 0.0], -0.4)],
        vec![w(0.5, [1.0, -1.0, 0.0, 0.0], 1.1)],
        vec![w(0.9, [1.0, 1.0, 1.0, 0.0], 0.0)],
    ]
}

fn test_scalar() -> Vec<Wave> {
    vec![w(1.0, [1.0, 2.0, 0.0, 0.0], 0.1), w(0.5, [0.0, 1.0, 1.0, 0.0], -0.7)]
}

fn conformal_metric(b: &std::sync::Arc<Backend>, f: &[Wave]) -> Metric {
    let t = TensorField::from_fn(b, 2, 0, |p, out| {
        let e = (2.0 * val(f, &b.coords(p))).exp();
        for i in 0..4 {
            out[i * 4 + i] = e;
        }
    });
    Metric::new(t).unwrap()
}

/// Max error of each operator against its oracle on an n×n×n×1 FD4 grid.
fn operator_errors(n: usize) -> [f64; 4] {
    let b = torus_backend(&[n, n, n, 1], Stencil::Fd(4)).unwrap();
    let f = conformal_f();
    let g = conformal_metric(&b, &f);
    let alpha = one_form();
    let a = form_from_fn(&b, 1, |p, t| val(&alpha[t[0]], &b.coords(p)));

    let da = exterior_derivative(&a).unwrap();
    let mut e_d: f64 = 0.0;
    for p in 0..b.npoints() {
        let x = b.coords(p);
        let gr: Vec<[f64; 4]> = alpha.iter().map(|c| grad(c, &x)).collect();
        for i in 0..4 {
            for j in 0..4 {
                let want = gr[j][i] - gr[i][j];
                e_d = e_d.max((da.at(p)[i * 4 + j] - want).abs());
            }
        }
    }

    // d*α = -e^{-2f} Σ_i (∂_i α_i + 2 ∂_i f α_i) for g = e^{2f}δ in dimension 4
    let ds = codifferential(&g, &a).unwrap();
    let mut e_ds: f64 = 0.0;
    for p in 0..b.npoints() {
        let x = b.coords(p);
        let fg = grad(&f, &x);
        let s: f64 = (0..4).map(|i| grad(&alpha[i], &x)[i] + 2.0 * fg[i] * val(&alpha[i], &x)).sum();
        let want = -(-2.0 * val(&f, &x)).exp() * s;
        e_ds = e_ds.max((ds.at(p)[0] - want).abs());
    }

    // Δu = e^{-2f} (Δ₀u + 2 ∇f·∇u)
    let uw = test_scalar();
    let u = form_from_fn(&b, 0, |p, _| val(&uw, &b.coords(p)));
    let lu = laplace_beltrami(&g, &u).unwrap();
    let mut e_lb: f64 = 0.0;
    for p in 0..b.npoints() {
        let x = b.coords(p);
        let (fg, ug, uh) = (grad(&f, &x), grad(&uw, &x), hess(&uw, &x));
        let lap0: f64 = (0..4).map(|i| uh[i][i]).sum();
        let dot: f64 = (0..4).map(|i| fg[i] * ug[i]).sum();
        let want = (-2.0 * val(&f, &x)).exp() * (lap0 + 2.0 * dot);
        e_lb = e_lb.max((lu.at(p)[0] - want).abs());
    }

    // R_{ijk}^l = -(T ⊙ δ)_{ijkl}, T = ∇²f - df⊗df + ½|df|²δ
    let rm = riemann(&g);
    let mut e_rm: f64 = 0.0;
    for p in 0..b.npoints() {
        let x = b.coords(p);
        let (fg, fh) = (grad(&f, &x), hess(&f, &x));
        let sq: f64 = fg.iter().map(|v| v * v).sum();
        let t = |i: usize, j: usize| fh[i][j] - fg[i] * fg[j] + if i == j { 0.5 * sq } else { 0.0 };
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let r = rm.at(p);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let want = -(t(i, l) * d(j, k) + t(j, k) * d(i, l) - t(i, k) * d(j, l) - t(j, l) * d(i, k));
                        e_rm = e_rm.max((r[((i * 4 + j) * 4 + k) * 4 + l] - want).abs());
                    }
                }
            }
        }
    }
    [e_d, e_ds, e_lb, e_rm]
}

/// Least-squares slope of -log e against log n.
fn fitted_order(ns: &[usize], es: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = es.iter().map(|e| -e.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn criterion_1() -> Verdict {
    let t0 = Instant::now();
    let ns = [16, 32, 64];
    let errs: Vec<[f64; 4]> = ns.iter().map(|&n| operator_errors(n)).collect();
    let names = ["exterior_derivative", "codifferential", "laplace_beltrami", "riemann"];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut csv = String::from("operator,n,error,fitted_order\n");
    for (o, name) in names.iter().enumerate() {
        let es: Vec<f64> = errs.iter().map(|e| e[o]).collect();
        let order = fitted_order(&ns, &es);
        pass &= (order - 4.0).abs() <= 0.5;
        parts.push(format!("{name} {order:.2} (err {:.1e} -> {:.1e})", es[0], es[2]));
        for (n, e) in ns.iter().zip(&es) {
            csv.push_str(&format!("{name},{n},{e:.16e},{order:.16e}\n"));
        }
    }
    // data for the refinement figure
    let dir = gkflow::scenario::output_root().join("acceptance");
    let written = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("refinement.csv"), csv));
    if let Err(e) = written {
        parts.push(format!("refinement.csv not written: {e}"));
        pass = false;
    }
    // runtime budget of the whole refinement study
    pass &= t0.elapsed().as_secs() < 300;
    verdict(pass, parts.join(", "))
}

// ---------------------------------------------------------------------------

fn random_acs(b: &std::sync::Arc<Backend>, seed: u64) -> AlmostComplexStructure {
    let j0 = AlmostComplexStructure::standard(b).unwrap();
    let noise = random_tensor(b, 1, 1, seed, 0.15);
    AlmostComplexStructure::new(j0.field().add(&noise).unwrap()).unwrap()
}

fn criterion_2() -> Verdict {
    // (name, value, tolerance)
    let mut checks: Vec<(&str, f64, f64)> = Vec::new();
    let mut check = |name, v, tol| checks.push((name, v, tol));

    let fd = torus_backend(&[16, 16, 16, 1], Stencil::Fd(4)).unwrap();
    // resolved enough that Γ^i_{ik} is a gradient to roundoff
    let sp = torus_backend(&[32, 32, 32, 1], Stencil::Spectral).unwrap();
    let frame = Backend::frame(FrameAlgebra::su2_u1(1.0));

    let g = random_metric(&fd, 11, 0.2).unwrap();
    let rm = riemann(&g);
    check("bianchi", bianchi_defect(&rm) / rm.max_abs(), 1e-13);

    let mut d2: f64 = 0.0;
    for (k, seed) in [(0, 21), (1, 22), (2, 23)] {
        d2 = d2.max(d_squared_defect(&random_form(&fd, k, seed, 1.0)).unwrap());
        d2 = d2.max(d_squared_defect(&random_form(&frame, k, seed, 1.0)).unwrap());
    }
    check("d^2", d2, 1e-12);

    let dg_torus = covariant_derivative(&g, g.field()).unwrap().max_abs();
    let gf = random_metric(&frame, 12, 0.2).unwrap();
    let dg_frame = covariant_derivative(&gf, gf.field()).unwrap().max_abs();
    check("Dg", dg_torus.max(dg_frame), 1e-12);

    let gs = random_metric(&sp, 13, 0.2).unwrap();
    let rc_size = gkflow::tensor::ricci(&gs).max_abs();
    check("ricci symmetry", (ricci_asymmetry(&gs) / rc_size).max(ricci_asymmetry(&gf)), 1e-12);

    let mut nij: f64 = 0.0;
    let mut nij_size: f64 = f64::INFINITY;
    for (b, gg, seed) in [(&fd, &g, 31), (&frame, &gf, 32)] {
        let j = random_acs(b, seed);
        let bracket = nijenhuis(&j);
        let coord = nijenhuis_with_connection(&j, &levi_civita(gg)).unwrap();
        nij = nij.max(bracket.max_abs_diff(&coord).unwrap() / bracket.max_abs());
        nij_size = nij_size.min(bracket.max_abs());
    }
    check("nijenhuis coord vs bracket", nij, 1e-12);

    // L_X T against the second-order one-sided difference of φ_t^*T
    let b = torus_backend(&[16, 16, 8, 1], Stencil::Spectral).unwrap();
    let x = random_vector_field(&b, 41, 0.3);
    let t = random_tensor(&b, 2, 0, 42, 1.0);
    let tau = 1e-3;
    let samples = SampledVectorField::new(vec![0.0, tau, 2.0 * tau], vec![x.clone(), x.clone(), x.clone()]).unwrap();
    let flow = integrate_diffeo(&samples, DiffeoOptions::default()).unwrap();
    let p1 = pullback(&flow, 1, &t).unwrap();
    let p2 = pullback(&flow, 2, &t).unwrap();
    let transport = t.scale(-3.0).axpy(4.0, &p1).unwrap().axpy(-1.0, &p2).unwrap().scale(1.0 / (2.0 * tau));
    let coordinate = lie_derivative(&x, &t).unwrap();
    check("lie coord vs transport", coordinate.max_abs_diff(&transport).unwrap() / coordinate.max_abs(), 1e-5);

    // the random structures must be genuinely non-integrable
    let mut pass = nij_size > 1e-3;
    let mut parts = vec![format!("min |N| {nij_size:.1e}")];
    for (name, v, tol) in checks {
        pass &= v <= tol;
        parts.push(format!("{name} {v:.1e}/{tol:.0e}"));
    }
    verdict(pass, parts.join(", "))
}

// ---------------------------------------------------------------------------

fn criterion_3() -> Verdict {
    let d = static_hopf_datum(1.0).unwrap();
    let sol = soliton_residual(&d).unwrap().max();
    let rep = staticprop_checks(&d, StaticTolerances::default()).unwrap();
    let sweep = lambda_sweep(&d, -1.0, 1.0, 1e-9).unwrap();
    let gk = hopf_gk(1.0).unwrap();
    let lp = lee_form_checks(&gk.g, &gk.j_plus).unwrap();
    let gm = gk.g.rebased(gk.j_minus.backend()).unwrap();
    let lm = lee_form_checks(&gm, &gk.j_minus).unwrap();
    let d_theta = lp.d_theta.max(lm.d_theta);
    let star = lp.theta_minus_star_h.unwrap().max(lm.theta_minus_star_h.unwrap());
    let pass = sol < 1e-10
        && rep.integral_gap < 1e-6
        && rep.passed()
        && d_theta < 1e-8
        && star < 1e-8
        && sweep.lambda.abs() <= 1e-6
        && lp.theta_norm > 0.1;
    verdict(
        pass,
        format!(
            "soliton {sol:.1e}, integral gap {:.1e}, |D theta| {d_theta:.1e}, |theta - *H| {star:.1e}, |theta| {:.2}, sweep argmin {:.1e}",
            rep.integral_gap, lp.theta_norm, sweep.lambda
        ),
    )
}

fn criterion_4() -> Verdict {
    let samples = hopf_samples(100, 7, 0.5, 2.0);
    let r = hopf_staticity(&samples, PatchOptions::default()).unwrap();
    let (scal, rc2, rm2) = cylinder_invariants();
    let m = |f: &dyn Fn(&gkflow::statics::HopfPointReport) -> f64| r.iter().map(f).fold(0.0f64, f64::max);
    let sq = m(&|x| x.s_minus_q);
    let inv = m(&|x| (x.scal - scal).abs().max((x.ricci_sq - rc2).abs()).max((x.riemann_sq - rm2).abs()));
    verdict(
        r.len() == 100 && sq < 1e-7 && inv < 1e-6,
        format!("{} points, max |S - Q| {sq:.1e}, max invariant deviation {inv:.1e} (scal {scal}, |Rc|^2 {rc2}, |Rm|^2 {rm2})", r.len()),
    )
}

// ---------------------------------------------------------------------------
// gauge transport runs shared by criteria 5, 6 and 8

struct GaugeRun {
    report: GaugeReport,
    trajectories: Vec<FlowTrajectory>,
}

fn gauge_run(s: &GKState, dt: f64, steps: usize) -> GaugeRun {
    let mk = |sys, st: FlowState| {
        let mut p = FlowProblem::new(sys, st, dt, steps);
        p.snapshot_stride = 1;
        integrate(&p).unwrap()
    };
    let plus = mk(FlowSystem::Pluriclosed, FlowState::pluriclosed(&s.g, &s.j_plus).unwrap());
    let minus = mk(FlowSystem::Pluriclosed, FlowState::pluriclosed(&s.g, &s.j_minus).unwrap());
    let reference = mk(FlowSystem::GkCoupled, FlowState::from_gk(s));
    let report = verify_gauge_equivalence(&plus, &minus, Some(&reference), GaugeOptions::default()).unwrap();
    GaugeRun { report, trajectories: vec![plus, minus, reference] }
}

fn worst(v: &Option<Vec<f64>>) -> f64 {
    v.as_ref().map_or(f64::NAN, |v| v.iter().cloned().fold(0.0, f64::max))
}

/// Residuals below this are roundoff; no convergence rate can be read off them.
const ROUNDOFF: f64 = 1e-12;

#[derive(Default)]
struct Runs {
    hopf: OnceCell<[GaugeRun; 2]>,
    torus: OnceCell<[GaugeRun; 2]>,
    coupled: OnceCell<[FlowTrajectory; 2]>,
}

impl Runs {
    fn hopf(&self) -> &[GaugeRun; 2] {
        self.hopf.get_or_init(|| {
            let s = hopf_gk(1.0).unwrap();
            [gauge_run(&s, 0.02, 10), gauge_run(&s, 0.01, 20)]
        })
    }
    fn torus(&self) -> &[GaugeRun; 2] {
        self.torus.get_or_init(|| {
            let s = commuting_gk_torus([16, 1, 16, 1], 0.002, Stencil::Spectral).unwrap();
            [gauge_run(&s, 0.02, 10), gauge_run(&s, 0.01, 20)]
        })
    }
    /// Frozen-J B-field run and coupled run, 200 steps.
    fn coupled(&self) -> &[FlowTrajectory; 2] {
        self.coupled.get_or_init(|| {
            let s = commuting_gk_torus([16, 1, 16, 1], 0.05, Stencil::Spectral).unwrap();
            let run = |sys| integrate(&FlowProblem::new(sys, FlowState::from_gk(&s), 0.005, 200)).unwrap();
            [run(FlowSystem::BField), run(FlowSystem::GkCoupled)]
        })
    }
}

fn halving(a: f64, b: f64) -> String {
    if a < ROUNDOFF && b < ROUNDOFF {
        format!("{a:.1e} -> {b:.1e} (roundoff)")
    } else {
        format!("{a:.1e} -> {b:.1e} (x{:.1})", a / b)
    }
}

fn shrinks(a: f64, b: f64) -> bool {
    a >= ROUNDOFF && a >= 4.0 * b
}

fn criterion_5(runs: &Runs) -> Verdict {
    let [h1, h2] = runs.hopf();
    let (m1, m2) = (h1.report.max_metric_gap(), h2.report.max_metric_gap());
    let (c1, c2) = (h1.report.max_dc_gap(), h2.report.max_dc_gap());
    let pass = shrinks(m1, m2) && (shrinks(c1, c2) || c2 < ROUNDOFF);
    let [t1, t2] = runs.torus();
    let (tm1, tm2) = (t1.report.max_metric_gap(), t2.report.max_metric_gap());
    let (r1, r2) = (worst(&t1.report.reference_metric_gap), worst(&t2.report.reference_metric_gap));
    let dc = t1.report.max_dc_gap().max(t2.report.max_dc_gap());
    verdict(
        pass,
        format!(
            "S3xS1 metric gap {}, d^c gap {}; T4 metric gap {}, T4 gap to coupled run {}, T4 d^c gaps <= {dc:.1e}",
            halving(m1, m2),
            halving(c1, c2),
            halving(tm1, tm2),
            halving(r1, r2)
        ),
    )
}

fn criterion_6(runs: &Runs) -> Verdict {
    let [h1, h2] = runs.hopf();
    let [t1, t2] = runs.torus();
    let (a, b) = (t1.report.max_jflow_gap(), t2.report.max_jflow_gap());
    let ratio = a / b;
    verdict(
        a >= ROUNDOFF && (ratio - 2.0).abs() <= 0.5,
        format!(
            "T4 {} (order {:.2}); S3xS1 {}",
            halving(a, b),
            ratio.log2(),
            halving(h1.report.max_jflow_gap(), h2.report.max_jflow_gap())
        ),
    )
}

fn gk_max(t: &FlowTrajectory) -> f64 {
    t.column_max(|r| {
        [r.r1, r.r2, r.r3, r.n_plus, r.n_minus, r.compat_plus, r.compat_minus].iter().cloned().fold(0.0, f64::max)
    })
}

fn criterion_7(runs: &Runs) -> Verdict {
    let [naive, coupled] = runs.coupled();
    let steps = coupled.rows.len() - 1;
    let naive_r1 = naive.column_max(|r| r.r1);
    let naive_r1_0 = naive.rows[0].r1;
    let c = gk_max(coupled);
    verdict(
        steps >= 200 && c <= FLOOR && naive_r1 >= 10.0 * FLOOR,
        format!(
            "{steps} steps; coupled max residual {c:.1e} (floor {FLOOR:.0e}); frozen-J r1 {naive_r1_0:.1e} -> {naive_r1:.1e}"
        ),
    )
}

fn criterion_8(runs: &Runs) -> Verdict {
    let mut dh: f64 = 0.0;
    let mut sq: f64 = 0.0;
    let mut count = 0;
    let gauge = runs.hopf().iter().chain(runs.torus().iter()).flat_map(|r| r.trajectories.iter());
    for t in gauge.chain(runs.coupled().iter()) {
        dh = dh.max(t.column_max(|r| if r.dh.is_nan() { 0.0 } else { r.dh }));
        sq = sq.max(t.column_max(|r| {
            [r.square_plus, r.square_minus].iter().filter(|v| !v.is_nan()).cloned().fold(0.0, f64::max)
        }));
        count += 1;
    }

    let b = torus_backend(&[16, 16, 8, 1], Stencil::Fd(4)).unwrap();
    let g = random_metric(&b, 51, 0.2).unwrap();
    let h = exterior_derivative(&random_form(&b, 2, 52, 1.0)).unwrap();
    let pos = bfield_rhs(&g, &h).unwrap();
    let neg = bfield_rhs(&g, &h.neg()).unwrap();
    let sym = pos.dg.max_abs_diff(&neg.dg).unwrap().max(pos.dh.add(&neg.dh).unwrap().max_abs());
    verdict(
        dh <= FLOOR && sq <= FLOOR && sym <= 1e-15,
        format!("{count} runs: max |dH| {dh:.1e}, max |J^2 + Id| {sq:.1e}; sign symmetry {sym:.1e}"),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let runs = Runs::default();
    let criteria: [(usize, &str, &dyn Fn() -> Verdict); 8] = [
        (1, "operator convergence", &criterion_1),
        (2, "identity suite", &criterion_2),
        (3, "static suite", &criterion_3),
        (4, "Hopf staticity", &criterion_4),
        (5, "gauge equivalence of the pluriclosed flows", &|| criterion_5(&runs)),
        (6, "complex structure evolution along the gauge", &|| criterion_6(&runs)),
        (7, "coupled preservation vs naive failure", &|| criterion_7(&runs)),
        (8, "closedness and structure preservation", &|| criterion_8(&runs)),
    ];
    let mut unexpected = Vec::new();
    for (n, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let v = f();
        let secs = t0.elapsed().as_secs_f64();
        let tag = match (v.pass, KNOWN_BLOCKED.contains(&n)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known blocked)",
            (false, false) => "FAIL",
        };
        println!("criterion {n} {name}: {tag} [{secs:.0}s] {}", v.detail);
        if !v.pass && !KNOWN_BLOCKED.contains(&n) {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("failed criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
