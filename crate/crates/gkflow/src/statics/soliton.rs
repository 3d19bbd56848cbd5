use nalgebra::DMatrix;

use crate::complex::{d_c, kahler_form, lee_form, AlmostComplexStructure};
use crate::error::{Error, Result};
use crate::tensor::forms::as_form;
use crate::tensor::{
    codifferential, covariant_derivative, exterior_derivative, h_squared, hodge_star, l2_norm, laplace_beltrami,
    lie_derivative, ricci, Backend, FrameAlgebra, Metric, TensorField,
};

/// Tolerance on ‖dH‖ when a soliton datum is constructed.
pub const CLOSED_TOL: f64 = 1e-8;

/// A B-field flow soliton candidate (g, H, X, λ).
#[derive(Debug, Clone)]
pub struct SolitonData {
    pub g: Metric,
    pub h: TensorField,
    pub x: TensorField,
    pub lambda: f64,
}

impl SolitonData {
    /// Checks shapes and dH = 0 up to [`CLOSED_TOL`].
    pub fn new(g: Metric, h: TensorField, x: TensorField, lambda: f64) -> Result<Self> {
        if h.lower() != 3 || h.upper() != 0 {
            return Err(Error::Shape("H must be a 3-form".into()));
        }
        let h = if h.is_form() {
            h
        } else if h.symmetry_defect(true) == 0.0 {
            as_form(h)
        } else {
            return Err(Error::Shape("H is not antisymmetric".into()));
        };
        if x.lower() != 0 || x.upper() != 1 {
            return Err(Error::Shape("X must be a vector field".into()));
        }
        if !g.backend().same_points(h.backend()) || !g.backend().same_points(x.backend()) {
            return Err(Error::BackendMismatch("soliton fields on different backends".into()));
        }
        if g.dim() >= 4 {
            let dh = exterior_derivative(&h)?.max_abs();
            if !(dh <= CLOSED_TOL) {
                return Err(Error::InvalidArgument(format!("H is not closed: |dH| = {dh:e}")));
            }
        }
        Ok(Self { g, h, x, lambda })
    }

    /// Static datum: X = 0.
    pub fn new_static(g: Metric, h: TensorField, lambda: f64) -> Result<Self> {
        let x = TensorField::zeros(g.backend(), 0, 1);
        Self::new(g, h, x, lambda)
    }

    pub fn is_static(&self) -> bool {
        self.x.max_abs() == 0.0
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonResidual {
    /// ‖Rc - ¼H² + L_X g - λg‖_∞
    pub r_g: f64,
    /// ‖-½Δ_d H + L_X H - λH‖_∞
    pub r_h: f64,
}

impl SolitonResidual {
    pub fn max(&self) -> f64 {
        self.r_g.max(self.r_h)
    }
}

/// Residuals of the soliton equations.
pub fn soliton_residual(s: &SolitonData) -> Result<SolitonResidual> {
    let g = &s.g;
    let h2 = h_squared(g, &s.h)?;
    let mut eg = ricci(g).axpy(-0.25, &h2)?.axpy(-s.lambda, g.field())?;
    let mut eh = laplace_beltrami(g, &s.h)?.scale(-0.5).axpy(-s.lambda, &s.h)?;
    if !s.is_static() {
        eg = eg.add(&lie_derivative(&s.x, g.field())?)?;
        eh = eh.add(&lie_derivative(&s.x, &s.h)?)?;
    }
    Ok(SolitonResidual { r_g: eg.max_abs(), r_h: eh.max_abs() })
}

/// Smallest eigenvalue of the symmetric form `a` relative to g over all points.
pub fn min_relative_eigenvalue(g: &Metric, a: &TensorField) -> Result<f64> {
    if a.lower() != 2 || a.upper() != 0 {
        return Err(Error::Shape("expected a (0,2) field".into()));
    }
    let n = g.dim();
    let mut m = f64::INFINITY;
    for p in 0..g.npoints() {
        let gm = DMatrix::from_row_slice(n, n, g.at(p));
        let am = DMatrix::from_row_slice(n, n, a.at(p));
        let l = gm.cholesky().ok_or_else(|| Error::SingularMetric { point: g.backend().point_index(p) })?.l();
        let li = l.try_inverse().ok_or_else(|| Error::SingularMetric { point: g.backend().point_index(p) })?;
        let b = &li * am * li.transpose();
        let b = (&b + b.transpose()) * 0.5;
        m = m.min(b.symmetric_eigen().eigenvalues.min());
    }
    Ok(m)
}

/// Tolerances of [`staticprop_checks`].
#[derive(Debug, Clone, Copy)]
pub struct StaticTolerances {
    pub integral_gap: f64,
    pub eigenvalue: f64,
    pub dstar_h: f64,
    pub soliton: f64,
}

impl Default for StaticTolerances {
    fn default() -> Self {
        Self { integral_gap: 1e-6, eigenvalue: 1e-10, dstar_h: 1e-9, soliton: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct StaticPropReport {
    pub lambda: f64,
    pub soliton: SolitonResidual,
    /// ∫|d*H|²
    pub i1: f64,
    /// 2λ∫|H|²
    pub i2: f64,
    /// |I₁ - I₂| / max(I₁, |I₂|, ε)
    pub integral_gap: f64,
    /// Smallest eigenvalue of Rc - λg relative to g.
    pub min_eig_rc_minus_lambda: f64,
    /// ‖d*H‖_∞ when λ = 0.
    pub dstar_h: Option<f64>,
    pub h_norm: f64,
    pub failures: Vec<String>,
}

impl StaticPropReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Consequences of staticity: the integral identity, semidefiniteness of
/// Rc - λg, d*H = 0 for λ = 0, and H = 0 whenever λ < 0.
pub fn staticprop_checks(s: &SolitonData, tol: StaticTolerances) -> Result<StaticPropReport> {
    if !s.is_static() {
        return Err(Error::InvalidArgument("static checks need X = 0".into()));
    }
    let g = &s.g;
    let dsh = codifferential(g, &s.h)?;
    let i1 = l2_norm(g, &dsh)?.powi(2);
    let h_l2 = l2_norm(g, &s.h)?;
    let i2 = 2.0 * s.lambda * h_l2 * h_l2;
    let integral_gap = (i1 - i2).abs() / i1.max(i2.abs()).max(1e-300);
    let integral_gap = if i1 == 0.0 && i2 == 0.0 { 0.0 } else { integral_gap };
    let rc = ricci(g).axpy(-s.lambda, g.field())?;
    let min_eig = min_relative_eigenvalue(g, &rc)?;
    let soliton = soliton_residual(s)?;
    let h_norm = s.h.max_abs();
    let mut failures = Vec::new();
    if !(soliton.max() <= tol.soliton) {
        failures.push(format!("soliton residual {:e} > {:e}", soliton.max(), tol.soliton));
    }
    if !(integral_gap <= tol.integral_gap) {
        failures.push(format!("integral identity gap {integral_gap:e} > {:e}", tol.integral_gap));
    }
    if !(min_eig >= -tol.eigenvalue) {
        failures.push(format!("Rc - lambda g has eigenvalue {min_eig:e}"));
    }
    let dstar_h = if s.lambda == 0.0 {
        let v = dsh.max_abs();
        if !(v <= tol.dstar_h) {
            failures.push(format!("|d*H| = {v:e} > {:e}", tol.dstar_h));
        }
        Some(v)
    } else {
        None
    };
    if s.lambda < 0.0 && !(h_norm <= tol.soliton) {
        failures.push(format!("lambda < 0 with |H| = {h_norm:e}: a static datum would be Kaehler"));
    }
    Ok(StaticPropReport {
        lambda: s.lambda,
        soliton,
        i1,
        i2,
        integral_gap,
        min_eig_rc_minus_lambda: min_eig,
        dstar_h,
        h_norm,
        failures,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LambdaSweep {
    pub lambda: f64,
    pub residual: f64,
    pub evaluations: usize,
}

/// Minimizes the static residual max(r_g, r_H) over λ ∈ [lo, hi] by golden-section search.
pub fn lambda_sweep(s: &SolitonData, lo: f64, hi: f64, tol: f64) -> Result<LambdaSweep> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument("lambda sweep needs lo < hi and tol > 0".into()));
    }
    let f = |l: f64| soliton_residual(&s.with_lambda(l)).map(|r| r.max());
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut evaluations = 2;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let lambda = 0.5 * (a + b);
    Ok(LambdaSweep { lambda, residual: f(lambda)?, evaluations: evaluations + 1 })
}

#[derive(Debug, Clone, Copy)]
pub struct LeeReport {
    /// ‖θ - ⋆H‖_∞ with ⋆ for the orientation of J; `None` outside real dimension 4.
    pub theta_minus_star_h: Option<f64>,
    /// ‖Dθ‖_∞
    pub d_theta: f64,
    pub theta_norm: f64,
}

/// Lee form checks with H = d^c ω for the given structure.
pub fn lee_form_checks(g: &Metric, j: &AlmostComplexStructure) -> Result<LeeReport> {
    let theta = lee_form(g, j)?;
    let d_theta = covariant_derivative(g, &theta)?.max_abs();
    let theta_minus_star_h = if g.dim() == 4 {
        let h = d_c(&kahler_form(g, j)?, j)?;
        let star_h = hodge_star(g, &h)?.scale(j.orientation(g)?);
        Some(theta.max_abs_diff(&star_h)?)
    } else {
        log::info!("theta = *H check skipped in real dimension {}", g.dim());
        None
    };
    Ok(LeeReport { theta_minus_star_h, d_theta, theta_norm: theta.max_abs() })
}

/// Constant c with Rc = ¼H² for H = c·e¹²³ on S³×S¹, solved from the frame algebra.
pub fn cartan_normalization(radius: f64) -> Result<f64> {
    let b = Backend::frame(FrameAlgebra::su2_u1(radius));
    let g = Metric::euclidean(&b);
    let unit = cartan_form(&b, 1.0);
    let rc = ricci(&g);
    let h2 = h_squared(&g, &unit)?;
    // Rc and H² are both multiples of the S³ metric; match them on e₁.
    let (r11, q11) = (rc.at(0)[5], h2.at(0)[5]);
    if !(q11 > 0.0 && r11 > 0.0) {
        return Err(Error::InvalidArgument("no positive Cartan normalization".into()));
    }
    Ok((4.0 * r11 / q11).sqrt())
}

fn cartan_form(b: &std::sync::Arc<Backend>, c: f64) -> TensorField {
    crate::tensor::form_from_fn(b, 3, |_, idx| if idx == [1, 2, 3] { c } else { 0.0 })
}

/// The static datum on S³×S¹: bi-invariant metric, Cartan 3-form at the solved normalization, λ = 0.
pub fn static_hopf_datum(radius: f64) -> Result<SolitonData> {
    let b = Backend::frame(FrameAlgebra::su2_u1(radius));
    let c = cartan_normalization(radius)?;
    SolitonData::new_static(Metric::euclidean(&b), cartan_form(&b, c), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recipes::{flat_kahler_torus, hopf_gk, torus_backend};
    use crate::tensor::Stencil;

    #[test]
    fn flat_torus_is_static() {
        let b = torus_backend(&[8, 8, 1, 1], Stencil::Spectral).unwrap();
        let s = flat_kahler_torus(&b).unwrap();
        let d = SolitonData::new_static(s.g.clone(), s.h.clone(), 0.0).unwrap();
        let r = soliton_residual(&d).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn cartan_constant_matches_hopf_structure() {
        let c = cartan_normalization(1.3).unwrap();
        assert!((c - 2.0 / 1.3).abs() < 1e-14);
        let s = hopf_gk(1.3).unwrap();
        let d = static_hopf_datum(1.3).unwrap();
        assert!((s.h.max_abs() - d.h.max_abs()).abs() < 1e-14);
        assert!(soliton_residual(&d).unwrap().max() < 1e-12);
    }

    #[test]
    fn round_three_sphere_pairs() {
        // Einstein with H = 0, or Ricci balanced by H with λ = 0.
        let r = 0.8;
        let b = Backend::frame(FrameAlgebra::su2(r));
        let g = Metric::euclidean(&b);
        let vol = |c: f64| crate::tensor::form_from_fn(&b, 3, |_, idx| if idx == [0, 1, 2] { c } else { 0.0 });
        let einstein = SolitonData::new_static(g.clone(), vol(0.0), 2.0 / (r * r)).unwrap();
        assert!(soliton_residual(&einstein).unwrap().max() < 1e-12);
        let balanced = SolitonData::new_static(g.clone(), vol(2.0 / r), 0.0).unwrap();
        assert!(soliton_residual(&balanced).unwrap().max() < 1e-12);
        let neither = SolitonData::new_static(g, vol(1.0 / r), 1.0 / (r * r)).unwrap();
        assert!(soliton_residual(&neither).unwrap().max() > 0.1);
    }

    #[test]
    fn negative_lambda_control_fails() {
        let d = static_hopf_datum(1.0).unwrap().with_lambda(-0.5);
        let rep = staticprop_checks(&d, StaticTolerances::default()).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn relative_eigenvalue() {
        let b = Backend::frame(FrameAlgebra::abelian(2));
        let g = Metric::new(TensorField::constant(&b, 2, 0, &[4.0, 0.0, 0.0, 1.0]).unwrap()).unwrap();
        let a = TensorField::constant(&b, 2, 0, &[2.0, 0.0, 0.0, 3.0]).unwrap();
        assert!((min_relative_eigenvalue(&g, &a).unwrap() - 0.5).abs() < 1e-15);
    }
}
