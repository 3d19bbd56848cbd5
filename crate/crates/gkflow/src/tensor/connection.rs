use rayon::prelude::*;

use super::field::{flatten, unflatten, Symmetry, TensorField};
use super::metric::Metric;
use crate::error::{Error, Result};

/// Connection coefficients: `gamma[i][j][k] = Γ^k_{ij}` with D_{e_i} e_j = Γ^k_{ij} e_k.
#[derive(Debug, Clone)]
pub struct Connection {
    gamma: TensorField,
}

impl Connection {
    pub fn from_field(gamma: TensorField) -> Result<Self> {
        if gamma.lower() != 2 || gamma.upper() != 1 {
            return Err(Error::Shape("connection coefficients must be a (2,1) array".into()));
        }
        Ok(Self { gamma })
    }

    pub fn coefficients(&self) -> &TensorField {
        &self.gamma
    }

    /// Flat coordinate connection (all Γ = 0).
    pub fn flat(backend: &std::sync::Arc<super::backend::Backend>) -> Self {
        Self { gamma: TensorField::zeros(backend, 2, 1) }
    }
}

/// Levi-Civita connection by the Koszul formula in the backend's frame.
pub fn levi_civita(g: &Metric) -> Connection {
    let n = g.dim();
    let dg = g.field().frame_derivative();
    let alg = g.backend().structure_constants().cloned();
    let gamma = TensorField::from_fn(g.backend(), 2, 1, |p, out| {
        let gm = g.at(p);
        let gi = g.inv_at(p);
        let d = dg.at(p);
        let dgv = |k: usize, i: usize, j: usize| d[(k * n + i) * n + j];
        let cl = |a: usize, b: usize, c: usize| -> f64 {
            match &alg {
                Some(f) => (0..n).map(|m| f.c(a, b, m) * gm[m * n + c]).sum(),
                None => 0.0,
            }
        };
        let mut low = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    low[(i * n + j) * n + k] =
                        0.5 * (dgv(i, j, k) + dgv(j, i, k) - dgv(k, i, j) + cl(i, j, k) - cl(j, k, i) + cl(k, i, j));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out[(i * n + j) * n + l] = (0..n).map(|k| gi[l * n + k] * low[(i * n + j) * n + k]).sum();
                }
            }
        }
    });
    Connection { gamma }
}

/// Covariant derivative with the derivative index placed first.
pub fn covariant_derivative_with(conn: &Connection, t: &TensorField) -> Result<TensorField> {
    let gam = conn.coefficients();
    if !gam.backend().same_points(t.backend()) {
        return Err(Error::BackendMismatch("connection and tensor live on different backends".into()));
    }
    let n = t.dim();
    let (lo, up) = (t.lower(), t.upper());
    let r = lo + up;
    let nc = t.ncomp();
    let dt = t.frame_derivative();
    Ok(TensorField::from_fn(t.backend(), lo + 1, up, |p, out| {
        let g = gam.at(p);
        let src = t.at(p);
        let d = dt.at(p);
        let mut idx = vec![0usize; r];
        let mut tmp = vec![0usize; r];
        for i in 0..n {
            for c in 0..nc {
                unflatten(c, n, &mut idx);
                let mut s = d[i * nc + c];
                for slot in 0..r {
                    tmp.copy_from_slice(&idx);
                    for m in 0..n {
                        tmp[slot] = m;
                        let v = src[flatten(&tmp, n)];
                        if v == 0.0 {
                            continue;
                        }
                        if slot < lo {
                            s -= g[(i * n + idx[slot]) * n + m] * v;
                        } else {
                            s += g[(i * n + m) * n + idx[slot]] * v;
                        }
                    }
                }
                out[i * nc + c] = s;
            }
        }
    }))
}

/// Levi-Civita covariant derivative D T.
pub fn covariant_derivative(g: &Metric, t: &TensorField) -> Result<TensorField> {
    covariant_derivative_with(&levi_civita(g), t)
}

/// Curvature `R[i][j][k][l] = R_{ijk}^l` with R(e_i,e_j)e_k = R_{ijk}^l e_l.
pub fn riemann_with(conn: &Connection) -> TensorField {
    let gam = conn.coefficients();
    let n = gam.dim();
    let alg = gam.backend().structure_constants().cloned();
    let dgam = gam.frame_derivative();
    TensorField::from_fn(gam.backend(), 3, 1, |p, out| {
        let g = gam.at(p);
        let d = dgam.at(p);
        let gv = |i: usize, j: usize, k: usize| g[(i * n + j) * n + k];
        let dv = |a: usize, j: usize, k: usize, l: usize| d[((a * n + j) * n + k) * n + l];
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = dv(i, j, k, l) - dv(j, i, k, l);
                        for m in 0..n {
                            s += gv(j, k, m) * gv(i, m, l) - gv(i, k, m) * gv(j, m, l);
                            if let Some(f) = &alg {
                                s -= f.c(i, j, m) * gv(m, k, l);
                            }
                        }
                        out[((i * n + j) * n + k) * n + l] = s;
                        out[((j * n + i) * n + k) * n + l] = -s;
                    }
                }
            }
        }
    })
}

/// Riemann curvature of the Levi-Civita connection.
pub fn riemann(g: &Metric) -> TensorField {
    riemann_with(&levi_civita(g))
}

/// Unsymmetrized contraction Rc_{jk} = R_{ijk}^i.
pub fn ricci_contraction(rm: &TensorField) -> TensorField {
    let n = rm.dim();
    TensorField::from_fn(rm.backend(), 2, 0, |p, out| {
        let r = rm.at(p);
        for j in 0..n {
            for k in 0..n {
                out[j * n + k] = (0..n).map(|i| r[((i * n + j) * n + k) * n + i]).sum();
            }
        }
    })
}

/// Ricci tensor, projected to its symmetric part.
pub fn ricci(g: &Metric) -> TensorField {
    ricci_contraction(&riemann(g)).symmetrized()
}

/// Largest |Rc_{jk} - Rc_{kj}| of the raw contraction.
pub fn ricci_asymmetry(g: &Metric) -> f64 {
    ricci_contraction(&riemann(g)).symmetry_defect(false) * 2.0
}

/// Trace of a (0,2) field with respect to g.
pub fn trace(g: &Metric, t: &TensorField) -> Result<TensorField> {
    if t.lower() != 2 || t.upper() != 0 {
        return Err(Error::Shape("trace expects a (0,2) field".into()));
    }
    let n = g.dim();
    Ok(TensorField::from_fn(g.backend(), 0, 0, |p, out| {
        let gi = g.inv_at(p);
        let a = t.at(p);
        out[0] = (0..n * n).map(|ij| gi[ij] * a[ij]).sum();
    }))
}

pub fn scalar_curvature(g: &Metric) -> TensorField {
    trace(g, &ricci(g)).expect("ricci is (0,2)")
}

/// Pointwise |Rc|^2 and |Rm|^2.
pub fn curvature_norms(g: &Metric) -> (TensorField, TensorField) {
    curvature_norms_with(g, &riemann(g))
}

/// [`curvature_norms`] from a precomputed Riemann tensor of g.
pub fn curvature_norms_with(g: &Metric, rm: &TensorField) -> (TensorField, TensorField) {
    let rc = ricci_contraction(rm).symmetrized();
    let n = g.dim();
    let rc2 = TensorField::from_fn(g.backend(), 0, 0, |p, out| {
        let gi = g.inv_at(p);
        let a = rc.at(p);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += gi[i * n + k] * gi[j * n + l] * a[i * n + j] * a[k * n + l];
                    }
                }
            }
        }
        out[0] = s;
    });
    let rm2 = TensorField::from_fn(g.backend(), 0, 0, |p, out| {
        let gm = g.at(p);
        let gi = g.inv_at(p);
        let r = rm.at(p);
        // fully covariant R_{ijkm} = R_{ijk}^l g_{lm}
        let mut low = vec![0.0; n * n * n * n];
        for ijk in 0..n * n * n {
            for m in 0..n {
                low[ijk * n + m] = (0..n).map(|l| r[ijk * n + l] * gm[l * n + m]).sum();
            }
        }
        // raise all four indices
        let mut up = low.clone();
        for slot in 0..4 {
            let mut next = vec![0.0; up.len()];
            let stride = n.pow(3 - slot as u32);
            for f in 0..up.len() {
                let a = (f / stride) % n;
                let base = f - a * stride;
                next[f] = (0..n).map(|b| gi[a * n + b] * up[base + b * stride]).sum();
            }
            up = next;
        }
        out[0] = low.iter().zip(&up).map(|(a, b)| a * b).sum();
    });
    (rc2, rm2)
}

/// Largest |R_{ijk}^l + R_{jki}^l + R_{kij}^l|.
pub fn bianchi_defect(rm: &TensorField) -> f64 {
    let n = rm.dim();
    (0..rm.npoints())
        .into_par_iter()
        .map(|p| {
            let r = rm.at(p);
            let v = |i: usize, j: usize, k: usize, l: usize| r[((i * n + j) * n + k) * n + l];
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            worst = worst.max((v(i, j, k, l) + v(j, k, i, l) + v(k, i, j, l)).abs());
                        }
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Symmetric part of Γ in its lower slots, as declared symmetry for coordinate charts.
pub fn christoffel_symmetry_defect(conn: &Connection) -> f64 {
    let g = conn.coefficients();
    let n = g.dim();
    let mut worst: f64 = 0.0;
    for p in 0..g.npoints() {
        let a = g.at(p);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((a[(i * n + j) * n + k] - a[(j * n + i) * n + k]).abs());
                }
            }
        }
    }
    worst
}

impl TensorField {
    /// Declares the lower group symmetric when it already is bit-for-bit.
    pub fn checked_symmetric(self) -> Result<TensorField> {
        if self.symmetry_defect(false) != 0.0 {
            return Err(Error::InvalidArgument("field is not exactly symmetric".into()));
        }
        Ok(self.assume_symmetry(Symmetry::Symmetric, Symmetry::None))
    }
}
