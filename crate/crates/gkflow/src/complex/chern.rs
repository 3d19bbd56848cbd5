use super::acs::AlmostComplexStructure;
use super::kahler::kahler_form;
use super::nijenhuis::nijenhuis;
use crate::error::{Error, Result};
use crate::tensor::forms::as_form;
use crate::tensor::{exterior_derivative, levi_civita, riemann_with, Connection, Metric, TensorField};

/// Integrability tolerance used when none is given.
pub const INTEGRABILITY_TOL: f64 = 1e-8;

/// Chern-connection data of a Hermitian pair (g, J).
#[derive(Debug, Clone)]
pub struct ChernQuantities {
    /// Chern connection, g(∇_X Y, Z) = g(D_X Y, Z) - ½ dω(JX, Y, Z).
    pub connection: Connection,
    /// T^k_{ij} = T(e_i, e_j)^k.
    pub torsion: TensorField,
    /// s(Y, W) = g(J K Y, W) with K = ½ g^{ab} Ω(e_a, J e_b).
    pub s: TensorField,
    /// q(Y, W) = g^{ab} g(T(Y, e_a), T(W, e_b)).
    pub q: TensorField,
    /// ½ g^{ac} g^{bd} g(T(e_a, e_b), T(e_c, e_d)) at each point.
    pub torsion_norm_sq: TensorField,
}

impl ChernQuantities {
    /// Curvature trace as a (1,1)-form, S(X, Y) = s(JX, Y).
    pub fn s_form(&self, j: &AlmostComplexStructure) -> TensorField {
        into_form(&self.s, j)
    }

    /// Torsion quadratic as a (1,1)-form, Q(X, Y) = q(JX, Y).
    pub fn q_form(&self, j: &AlmostComplexStructure) -> TensorField {
        into_form(&self.q, j)
    }
}

fn into_form(b: &TensorField, j: &AlmostComplexStructure) -> TensorField {
    let n = b.dim();
    let jf = j.field();
    let t = TensorField::from_fn(b.backend(), 2, 0, |p, out| {
        let jm = jf.at(p);
        let bv = b.at(p);
        for x in 0..n {
            for y in 0..n {
                out[x * n + y] = (0..n).map(|a| jm[x * n + a] * bv[a * n + y]).sum();
            }
        }
    });
    as_form(t.antisymmetrized())
}

/// Chern connection, torsion, curvature trace S and torsion quadratic Q.
pub fn chern_quantities(g: &Metric, j: &AlmostComplexStructure, integrability_tol: f64) -> Result<ChernQuantities> {
    let nj = nijenhuis(j).max_abs();
    if !(nj <= integrability_tol) {
        return Err(Error::NotIntegrable { residual: nj, tol: integrability_tol });
    }
    chern_quantities_unchecked(g, j, &kahler_form(g, j)?)
}

/// Chern data without the integrability check; the caller vouches for J.
/// Used on patches, where only the centre point carries valid jets.
pub(crate) fn chern_quantities_unchecked(
    g: &Metric,
    j: &AlmostComplexStructure,
    w: &TensorField,
) -> Result<ChernQuantities> {
    let n = g.dim();
    let dw = exterior_derivative(w)?;
    let lc = levi_civita(g);
    let jf = j.field();
    let alg = g.backend().structure_constants().cloned();
    let gamma = lc.coefficients();
    let cc = TensorField::from_fn(g.backend(), 2, 1, |p, out| {
        let gi = g.inv_at(p);
        let jm = jf.at(p);
        let d = dw.at(p);
        let gm = gamma.at(p);
        // A_{xyz} = -½ J_x^a dω_{ayz}
        let mut a = vec![0.0; n * n * n];
        for x in 0..n {
            for yz in 0..n * n {
                a[x * n * n + yz] = -0.5 * (0..n).map(|aa| jm[x * n + aa] * d[aa * n * n + yz]).sum::<f64>();
            }
        }
        for i in 0..n {
            for jj in 0..n {
                for k in 0..n {
                    let corr: f64 = (0..n).map(|z| gi[k * n + z] * a[(i * n + jj) * n + z]).sum();
                    out[(i * n + jj) * n + k] = gm[(i * n + jj) * n + k] + corr;
                }
            }
        }
    });
    let torsion = TensorField::from_fn(g.backend(), 2, 1, |p, out| {
        let c = cc.at(p);
        for i in 0..n {
            for jj in 0..n {
                for k in 0..n {
                    let br = alg.as_ref().map_or(0.0, |f| f.c(i, jj, k));
                    out[(i * n + jj) * n + k] = c[(i * n + jj) * n + k] - c[(jj * n + i) * n + k] - br;
                }
            }
        }
    });
    let connection = Connection::from_field(cc)?;
    let omega = riemann_with(&connection);
    let s = TensorField::from_fn(g.backend(), 2, 0, |p, out| {
        let gi = g.inv_at(p);
        let jm = jf.at(p);
        let gm = g.at(p);
        let r = omega.at(p);
        // K_k^l = ½ g^{ab} J_b^m Ω_{amk}^l
        let mut kk = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        let gab = gi[a * n + b];
                        if gab == 0.0 {
                            continue;
                        }
                        for m in 0..n {
                            acc += gab * jm[b * n + m] * r[((a * n + m) * n + k) * n + l];
                        }
                    }
                }
                kk[k * n + l] = 0.5 * acc;
            }
        }
        for y in 0..n {
            for wv in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    for m in 0..n {
                        acc += kk[y * n + l] * jm[l * n + m] * gm[m * n + wv];
                    }
                }
                out[y * n + wv] = acc;
            }
        }
    })
    .symmetrized();
    let q = TensorField::from_fn(g.backend(), 2, 0, |p, out| {
        let gi = g.inv_at(p);
        let gm = g.at(p);
        let t = torsion.at(p);
        for y in 0..n {
            for wv in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        let gab = gi[a * n + b];
                        if gab == 0.0 {
                            continue;
                        }
                        for k in 0..n {
                            for l in 0..n {
                                acc += gab * gm[k * n + l] * t[(y * n + a) * n + k] * t[(wv * n + b) * n + l];
                            }
                        }
                    }
                }
                out[y * n + wv] = acc;
            }
        }
    })
    .symmetrized();
    let torsion_norm_sq = TensorField::from_fn(g.backend(), 0, 0, |p, out| {
        let gi = g.inv_at(p);
        let gm = g.at(p);
        let t = torsion.at(p);
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let w = gi[a * n + c] * gi[b * n + d];
                        if w == 0.0 {
                            continue;
                        }
                        for k in 0..n {
                            for l in 0..n {
                                acc += w * gm[k * n + l] * t[(a * n + b) * n + k] * t[(c * n + d) * n + l];
                            }
                        }
                    }
                }
            }
        }
        out[0] = 0.5 * acc;
    });
    Ok(ChernQuantities { connection, torsion, s, q, torsion_norm_sq })
}
