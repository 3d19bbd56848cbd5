use gkflow::complex::{AlmostComplexStructure, GKState};
use gkflow::flows::{
    bfield_rhs, deturck_gauge_rhs, evaluate_rhs, gk_coupled_rhs, integrate, pluriclosed_metric_rhs, FlowOptions,
    FlowProblem, FlowState, FlowStatus, FlowSystem, Scheme,
};
use gkflow::recipes::{
    commuting_gk_torus, flat_kahler_torus, hopf_gk, perturbed_torus, random_form, random_metric, random_tensor,
    torus_backend,
};
use gkflow::tensor::{exterior_derivative, levi_civita, ricci, Stencil};
use proptest::prelude::*;

const SYSTEMS: [FlowSystem; 4] =
    [FlowSystem::BField, FlowSystem::Pluriclosed, FlowSystem::GkCoupled, FlowSystem::GaugeFixed];

fn state_for(system: FlowSystem, s: &GKState) -> FlowState {
    match system {
        FlowSystem::Pluriclosed => FlowState::pluriclosed(&s.g, &s.j_plus).unwrap(),
        _ => FlowState::from_gk(s),
    }
}

#[test]
fn recipes_are_generalized_kahler() {
    let flat = flat_kahler_torus(&torus_backend(&[8, 8, 8, 8], Stencil::Spectral).unwrap()).unwrap();
    let pert2 = perturbed_torus(&torus_backend(&[16, 16, 1, 1], Stencil::Spectral).unwrap(), 2, 0.1).unwrap();
    let pert4 = perturbed_torus(&torus_backend(&[8, 8, 8, 8], Stencil::Spectral).unwrap(), 2, 0.1).unwrap();
    let comm = commuting_gk_torus([16, 1, 16, 1], 0.05, Stencil::Spectral).unwrap();
    let hopf = hopf_gk(1.3).unwrap();
    for (name, s, tol) in [
        ("flat", &flat, 0.0),
        ("pert2", &pert2, 1e-12),
        ("pert4", &pert4, 1e-12),
        ("commuting", &comm, 1e-12),
        ("hopf", &hopf, 1e-13),
    ] {
        let r = s.residuals().unwrap();
        assert!(r.max() <= tol, "{name}: {r:?}");
    }
    // the perturbation is genuine and the commuting structure is not Kähler
    assert!(pert4.g.field().max_abs_diff(flat.g.field()).unwrap() > 1e-3);
    assert!(comm.h.max_abs() > 1e-3);
    assert!(hopf.swapped().unwrap().residuals().unwrap().max() < 1e-13);
}

#[test]
fn commuting_torus_needs_an_invariant_axis() {
    assert!(commuting_gk_torus([16, 16, 16, 1], 0.05, Stencil::Spectral).is_err());
}

#[test]
fn flat_torus_is_a_fixed_point_of_every_system() {
    let s = flat_kahler_torus(&torus_backend(&[8, 8, 1, 1], Stencil::Spectral).unwrap()).unwrap();
    for sys in SYSTEMS {
        let d = evaluate_rhs(sys, &state_for(sys, &s), &FlowOptions::default()).unwrap();
        assert_eq!(d.max_abs(), 0.0, "{}", sys.name());
        let t = integrate(&FlowProblem::new(sys, state_for(sys, &s), 0.01, 5)).unwrap();
        assert_eq!(t.status, FlowStatus::Completed);
        assert_eq!(t.final_state().max_abs_diff(&state_for(sys, &s)).unwrap(), 0.0, "{}", sys.name());
    }
}

#[test]
fn hopf_is_static_under_the_b_field_flow() {
    let s = hopf_gk(1.0).unwrap();
    let d = evaluate_rhs(FlowSystem::GkCoupled, &FlowState::from_gk(&s), &FlowOptions::default()).unwrap();
    assert!(d.max_abs() < 1e-13, "{}", d.max_abs());
}

#[test]
fn kahler_ricci_cross_check() {
    // on a Kähler state the pluriclosed and B-field metric velocities are both -2Rc
    let s = perturbed_torus(&torus_backend(&[16, 16, 16, 16], Stencil::Spectral).unwrap(), 5, 0.1).unwrap();
    let rc = ricci(&s.g);
    let pcf = pluriclosed_metric_rhs(&s.g, &s.j_plus, 1e-9, 1e-9).unwrap();
    let bf = bfield_rhs(&s.g, &s.h).unwrap();
    let scale = rc.max_abs();
    assert!(scale > 1e-3);
    assert!(pcf.max_abs_diff(&rc.scale(-2.0)).unwrap() < 1e-10 * scale);
    assert!(bf.dg.max_abs_diff(&rc.scale(-2.0)).unwrap() < 1e-10 * scale);
    // J is parallel, so it does not move
    let d = gk_coupled_rhs(&s.g, &s.h, s.j_plus.field(), s.j_minus.field()).unwrap();
    assert!(d.dj_plus.max_abs() < 1e-10 * scale);
}

#[test]
fn deturck_term_vanishes_for_its_own_connection() {
    let s = commuting_gk_torus([16, 1, 16, 1], 0.05, Stencil::Spectral).unwrap();
    let (jp, jm) = (s.j_plus.field(), s.j_minus.field());
    let base = gk_coupled_rhs(&s.g, &s.h, jp, jm).unwrap();
    let own = deturck_gauge_rhs(&s.g, &s.h, jp, jm, &levi_civita(&s.g)).unwrap();
    assert!(own.dg.max_abs_diff(&base.dg).unwrap() < 1e-14);
    assert!(own.dj_plus.max_abs_diff(&base.dj_plus).unwrap() < 1e-14);
    // against the flat connection the gauge term is present
    let flat = gkflow::tensor::Connection::flat(s.g.backend());
    let fixed = deturck_gauge_rhs(&s.g, &s.h, jp, jm, &flat).unwrap();
    assert!(fixed.dg.max_abs_diff(&base.dg).unwrap() > 1e-6);
}

/// Runs without CFL substepping so that dt is the actual step.
fn unsplit(s: &GKState, system: FlowSystem, scheme: Scheme, dt: f64, steps: usize) -> FlowState {
    let mut p = FlowProblem::new(system, FlowState::from_gk(s), dt, steps);
    p.scheme = scheme;
    // stable for RK4 and Euler at these steps on an 8-point grid
    p.safety = 1.0;
    let t = integrate(&p).unwrap();
    assert!(t.substeps.iter().all(|&k| k == 1), "substepped at dt {dt}");
    t.final_state().clone()
}

#[test]
fn rk4_converges_at_fourth_order() {
    let s = perturbed_torus(&torus_backend(&[8, 8, 1, 1], Stencil::Spectral).unwrap(), 3, 0.2).unwrap();
    let run = |dt, steps| unsplit(&s, FlowSystem::GkCoupled, Scheme::Rk4, dt, steps);
    let exact = run(0.0025, 64);
    let e1 = run(0.02, 8).max_abs_diff(&exact).unwrap();
    let e2 = run(0.01, 16).max_abs_diff(&exact).unwrap();
    let order = (e1 / e2).log2();
    assert!((order - 4.0).abs() < 0.5, "order {order} ({e1:e}, {e2:e})");
}

#[test]
fn euler_is_first_order() {
    let s = perturbed_torus(&torus_backend(&[8, 8, 1, 1], Stencil::Spectral).unwrap(), 3, 0.2).unwrap();
    let exact = unsplit(&s, FlowSystem::BField, Scheme::Rk4, 0.0025, 64);
    let e1 = unsplit(&s, FlowSystem::BField, Scheme::Euler, 0.01, 16).max_abs_diff(&exact).unwrap();
    let e2 = unsplit(&s, FlowSystem::BField, Scheme::Euler, 0.005, 32).max_abs_diff(&exact).unwrap();
    assert!(((e1 / e2).log2() - 1.0).abs() < 0.2, "{e1:e} {e2:e}");
}

#[test]
fn initial_data_is_validated() {
    let b = torus_backend(&[8, 8, 8, 8], Stencil::Fd(4)).unwrap();
    let g = random_metric(&b, 1, 0.1).unwrap();
    let not_closed = random_form(&b, 3, 2, 1.0);
    let p = FlowProblem::new(FlowSystem::BField, FlowState::bfield(&g, not_closed), 0.001, 1);
    assert!(integrate(&p).is_err());
    let mut p = FlowProblem::new(
        FlowSystem::BField,
        FlowState::bfield(&g, exterior_derivative(&random_form(&b, 2, 3, 1.0)).unwrap()),
        0.0,
        1,
    );
    assert!(integrate(&p).is_err());
    p.dt = f64::NAN;
    assert!(integrate(&p).is_err());
    // a non-integrable J is rejected by the pluriclosed flow
    let j = AlmostComplexStructure::new(
        AlmostComplexStructure::standard(&b).unwrap().field().add(&random_tensor(&b, 1, 1, 4, 0.1)).unwrap(),
    )
    .unwrap();
    let p = FlowProblem::new(FlowSystem::Pluriclosed, FlowState::pluriclosed(&g, &j).unwrap(), 0.001, 1);
    assert!(integrate(&p).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn bfield_rhs_sign_symmetry(seed in 0u64..10_000, amp in 0.01f64..0.2) {
        let b = torus_backend(&[8, 8, 8, 1], Stencil::Fd(4)).unwrap();
        let g = random_metric(&b, seed, amp).unwrap();
        let h = exterior_derivative(&random_form(&b, 2, seed + 1, 1.0)).unwrap();
        let p = bfield_rhs(&g, &h).unwrap();
        let m = bfield_rhs(&g, &h.neg()).unwrap();
        prop_assert_eq!(p.dg.max_abs_diff(&m.dg).unwrap(), 0.0);
        prop_assert_eq!(p.dh.add(&m.dh).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn coupled_step_keeps_j_squared(seed in 0u64..10_000) {
        let s = perturbed_torus(&torus_backend(&[8, 8, 1, 1], Stencil::Spectral).unwrap(), seed, 0.05).unwrap();
        let t = integrate(&FlowProblem::new(FlowSystem::GkCoupled, FlowState::from_gk(&s), 0.005, 2)).unwrap();
        let last = t.rows.last().unwrap();
        prop_assert!(last.square_plus < 1e-13 && last.square_minus < 1e-13);
        prop_assert!(last.dh < 1e-13);
    }
}
