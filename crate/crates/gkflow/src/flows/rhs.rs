use crate::complex::chern::chern_quantities;
use crate::complex::kahler::{d_c, kahler_form_unchecked};
use crate::complex::AlmostComplexStructure;
use crate::error::{Error, Result};
use crate::tensor::forms::as_form;
use crate::tensor::{
    covariant_derivative_with, exterior_derivative, h_squared, laplace_beltrami, levi_civita, lie_derivative, ricci,
    Connection, Metric, TensorField,
};

/// Time derivative of the pair (g, H).
#[derive(Debug, Clone)]
pub struct BFieldRhs {
    pub dg: TensorField,
    pub dh: TensorField,
}

/// ∂g = -2Rc + ½H², ∂H = Δ_d H.
pub fn bfield_rhs(g: &Metric, h: &TensorField) -> Result<BFieldRhs> {
    let rc = ricci(g);
    let h2 = h_squared(g, h)?;
    let dg = rc.scale(-2.0).axpy(0.5, &h2)?.symmetrized();
    let dh = laplace_beltrami(g, h)?;
    Ok(BFieldRhs { dg, dh })
}

/// As [`bfield_rhs`], rejecting H with |dH| above `tol`.
pub fn bfield_rhs_checked(g: &Metric, h: &TensorField, tol: f64) -> Result<BFieldRhs> {
    let dh = exterior_derivative(h)?.max_abs();
    if !(dh <= tol) {
        return Err(Error::InvalidArgument(format!("H is not closed: |dH| = {dh:e} exceeds {tol:e}")));
    }
    bfield_rhs(g, h)
}

/// The three summands of the complex-structure evolution ΔJ + R(J) + Q(DJ).
#[derive(Debug, Clone)]
pub struct JRhsTerms {
    /// Rough Laplacian D^s D_s J.
    pub laplacian: TensorField,
    /// R(J)_k^l = J_k^p Rc_p^l - Rc_k^p J_p^l.
    pub commutator: TensorField,
    /// Quadratic first-order term Q(DJ).
    pub quadratic: TensorField,
}

impl JRhsTerms {
    pub fn total(&self) -> Result<TensorField> {
        self.laplacian.add(&self.commutator)?.add(&self.quadratic)
    }
}

/// Evaluates ΔJ + R(J) + Q(DJ) for any endomorphism field, integrable or not.
pub fn j_rhs(g: &Metric, j: &TensorField) -> Result<JRhsTerms> {
    j_rhs_with(g, &levi_civita(g), &ricci(g), j)
}

pub(crate) fn j_rhs_with(g: &Metric, conn: &Connection, rc: &TensorField, j: &TensorField) -> Result<JRhsTerms> {
    if j.lower() != 1 || j.upper() != 1 {
        return Err(Error::Shape("J must be a (1,1) field".into()));
    }
    let n = g.dim();
    let dj = covariant_derivative_with(conn, j)?;
    let ddj = covariant_derivative_with(conn, &dj)?;
    let n2 = n * n;
    let laplacian = TensorField::from_fn(g.backend(), 1, 1, |p, out| {
        let gi = g.inv_at(p);
        let d2 = ddj.at(p);
        for kl in 0..n2 {
            let mut s = 0.0;
            for b in 0..n {
                for a in 0..n {
                    s += gi[b * n + a] * d2[(b * n + a) * n2 + kl];
                }
            }
            out[kl] = s;
        }
    });
    let commutator = TensorField::from_fn(g.backend(), 1, 1, |p, out| {
        let gi = g.inv_at(p);
        let r = rc.at(p);
        let jm = j.at(p);
        // Rc_k^l = Rc_{km} g^{ml}
        let mut ru = vec![0.0; n2];
        for k in 0..n {
            for l in 0..n {
                ru[k * n + l] = (0..n).map(|m| r[k * n + m] * gi[m * n + l]).sum();
            }
        }
        for k in 0..n {
            for l in 0..n {
                out[k * n + l] = (0..n).map(|q| jm[k * n + q] * ru[q * n + l] - ru[k * n + q] * jm[q * n + l]).sum();
            }
        }
    });
    let quadratic = TensorField::from_fn(g.backend(), 1, 1, |p, out| {
        let gi = g.inv_at(p);
        let jm = j.at(p);
        let d = dj.at(p);
        let jv = |a: usize, b: usize| jm[a * n + b];
        let dv = |a: usize, b: usize, c: usize| d[(a * n + b) * n + c];
        // DuJ[s][k][l] = g^{sa} D_a J_k^l and its trace v^t = DuJ[s][s][t]
        let mut du = vec![0.0; n * n2];
        for s in 0..n {
            for kl in 0..n2 {
                du[s * n2 + kl] = (0..n).map(|a| gi[s * n + a] * d[a * n2 + kl]).sum();
            }
        }
        let uv = |a: usize, b: usize, c: usize| du[(a * n + b) * n + c];
        let v: Vec<f64> = (0..n).map(|t| (0..n).map(|s| uv(s, s, t)).sum()).collect();
        for k in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for s in 0..n {
                    for i in 0..n {
                        for q in 0..n {
                            acc -= jv(k, q) * uv(s, i, l) * dv(q, s, i);
                            acc -= jv(i, l) * uv(s, k, q) * dv(q, s, i);
                            acc += jv(s, q) * uv(s, i, l) * dv(q, k, i);
                        }
                    }
                }
                for i in 0..n {
                    for q in 0..n {
                        acc += jv(i, l) * v[q] * dv(q, k, i);
                    }
                }
                for t in 0..n {
                    for q in 0..n {
                        acc -= jv(q, l) * dv(k, t, q) * v[t];
                        acc += jv(k, q) * dv(q, t, l) * v[t];
                        acc -= jv(t, q) * v[t] * dv(q, k, l);
                    }
                }
                out[k * n + l] = acc;
            }
        }
    });
    Ok(JRhsTerms { laplacian, commutator, quadratic })
}

/// Time derivative of (g, H, J₊, J₋).
#[derive(Debug, Clone)]
pub struct GkDerivative {
    pub dg: TensorField,
    pub dh: TensorField,
    pub dj_plus: TensorField,
    pub dj_minus: TensorField,
}

/// B-field flow for (g, H) coupled with the complex-structure evolution of J₊ and J₋.
pub fn gk_coupled_rhs(
    g: &Metric,
    h: &TensorField,
    j_plus: &TensorField,
    j_minus: &TensorField,
) -> Result<GkDerivative> {
    let b = bfield_rhs(g, h)?;
    let conn = levi_civita(g);
    let rc = ricci(g);
    let dj_plus = j_rhs_with(g, &conn, &rc, j_plus)?.total()?;
    let dj_minus = if **j_minus.backend() == **g.backend() {
        j_rhs_with(g, &conn, &rc, j_minus)?.total()?
    } else {
        let gm = g.rebased(j_minus.backend())?;
        j_rhs(&gm, j_minus)?.total()?
    };
    Ok(GkDerivative { dg: b.dg, dh: b.dh, dj_plus, dj_minus })
}

/// ∂g = 2(q - s) for a Hermitian pair with J integrable and ω pluriclosed.
///
/// The result is J-invariant, so ∂ω = ∂g(J·, ·) is a real (1,1)-form.
pub fn pluriclosed_metric_rhs(
    g: &Metric,
    j: &AlmostComplexStructure,
    integrability_tol: f64,
    pluriclosed_tol: f64,
) -> Result<TensorField> {
    let w = kahler_form_unchecked(g, j);
    let ddc = exterior_derivative(&d_c(&w, j)?)?.max_abs();
    if !(ddc <= pluriclosed_tol) {
        return Err(Error::NotPluriclosed { residual: ddc, tol: pluriclosed_tol });
    }
    let c = chern_quantities(g, j, integrability_tol)?;
    Ok(j_invariant_part(&c.q.sub(&c.s)?.scale(2.0), j))
}

/// ½(b + b(J·, J·)), symmetrized; removes rounding drift off the J-invariant subspace.
pub(crate) fn j_invariant_part(b: &TensorField, j: &AlmostComplexStructure) -> TensorField {
    let n = b.dim();
    let jf = j.field();
    TensorField::from_fn(b.backend(), 2, 0, |p, out| {
        let jm = jf.at(p);
        let bv = b.at(p);
        for x in 0..n {
            for y in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for c in 0..n {
                        acc += jm[x * n + a] * jm[y * n + c] * bv[a * n + c];
                    }
                }
                out[x * n + y] = 0.5 * (bv[x * n + y] + acc);
            }
        }
    })
    .symmetrized()
}

/// Pluriclosed flow as an evolution of the Kähler form: ∂ω = (∂g)(J·, ·).
pub fn pluriclosed_rhs(
    g: &Metric,
    j: &AlmostComplexStructure,
    integrability_tol: f64,
    pluriclosed_tol: f64,
) -> Result<TensorField> {
    let dg = pluriclosed_metric_rhs(g, j, integrability_tol, pluriclosed_tol)?;
    let n = g.dim();
    let jf = j.field();
    let t = TensorField::from_fn(g.backend(), 2, 0, |p, out| {
        let jm = jf.at(p);
        let b = dg.at(p);
        for x in 0..n {
            for y in 0..n {
                out[x * n + y] = (0..n).map(|a| jm[x * n + a] * b[a * n + y]).sum();
            }
        }
    });
    Ok(as_form(t.antisymmetrized()))
}

/// X_g^k = g^{ij}(Γ^k_{ij} - Γ⁰^k_{ij}).
pub fn deturck_vector(g: &Metric, reference: &Connection) -> Result<TensorField> {
    let gam = levi_civita(g);
    deturck_vector_with(g, &gam, reference)
}

fn deturck_vector_with(g: &Metric, gam: &Connection, reference: &Connection) -> Result<TensorField> {
    let n = g.dim();
    let (a, b) = (gam.coefficients(), reference.coefficients());
    if !a.backend().same_points(b.backend()) {
        return Err(Error::BackendMismatch("reference connection".into()));
    }
    Ok(TensorField::from_fn(g.backend(), 0, 1, |p, out| {
        let gi = g.inv_at(p);
        let (x, y) = (a.at(p), b.at(p));
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let f = (i * n + j) * n + k;
                    s += gi[i * n + j] * (x[f] - y[f]);
                }
            }
            out[k] = s;
        }
    }))
}

/// Coupled system plus the Lie derivative along the DeTurck vector field in every equation.
pub fn deturck_gauge_rhs(
    g: &Metric,
    h: &TensorField,
    j_plus: &TensorField,
    j_minus: &TensorField,
    reference: &Connection,
) -> Result<GkDerivative> {
    let base = gk_coupled_rhs(g, h, j_plus, j_minus)?;
    let x = deturck_vector(g, reference)?;
    let xm = if **j_minus.backend() == **x.backend() { x.clone() } else { x.rebased(j_minus.backend())? };
    Ok(GkDerivative {
        dg: base.dg.add(&lie_derivative(&x, g.field())?)?.symmetrized(),
        dh: as_form(base.dh.add(&lie_derivative(&x, h)?)?),
        dj_plus: base.dj_plus.add(&lie_derivative(&x, j_plus)?)?,
        dj_minus: base.dj_minus.add(&lie_derivative(&xm, j_minus)?)?,
    })
}
