use super::acs::AlmostComplexStructure;
use crate::error::Result;
use crate::tensor::{covariant_derivative_with, Connection, TensorField};

/// N(e_j, e_k) = [Je_j, Je_k] - [e_j, e_k] - J[Je_j, e_k] - J[e_j, Je_k], stored `[j][k][i]`.
///
/// Evaluated from frame brackets, so it needs no metric.
pub fn nijenhuis(j: &AlmostComplexStructure) -> TensorField {
    let jf = j.field();
    let n = jf.dim();
    let dj = jf.frame_derivative();
    let alg = jf.backend().structure_constants().cloned();
    let c = |a: usize, b: usize, k: usize| alg.as_ref().map_or(0.0, |f| f.c(a, b, k));
    TensorField::from_fn(jf.backend(), 2, 1, |p, out| {
        let jm = jf.at(p);
        let d = dj.at(p);
        let jv = |k: usize, l: usize| jm[k * n + l];
        // e_a(J_k^l)
        let dv = |a: usize, k: usize, l: usize| d[(a * n + k) * n + l];
        for jj in 0..n {
            for kk in 0..n {
                for i in 0..n {
                    let mut s = -c(jj, kk, i);
                    for a in 0..n {
                        s += jv(jj, a) * dv(a, kk, i) - jv(kk, a) * dv(a, jj, i);
                        for b in 0..n {
                            s += jv(jj, a) * jv(kk, b) * c(a, b, i);
                        }
                    }
                    for q in 0..n {
                        // [Je_j, e_k]^q and [e_j, Je_k]^q
                        let mut b1 = -dv(kk, jj, q);
                        let mut b2 = dv(jj, kk, q);
                        for a in 0..n {
                            b1 += jv(jj, a) * c(a, kk, q);
                            b2 += jv(kk, a) * c(jj, a, q);
                        }
                        s -= jv(q, i) * (b1 + b2);
                    }
                    out[(jj * n + kk) * n + i] = s;
                }
            }
        }
    })
}

/// The same tensor from a torsion-free connection:
/// N_{jk}^i = J_j^p D_pJ_k^i - J_k^p D_pJ_j^i - J_p^i D_jJ_k^p + J_p^i D_kJ_j^p.
pub fn nijenhuis_with_connection(j: &AlmostComplexStructure, conn: &Connection) -> Result<TensorField> {
    let jf = j.field();
    let n = jf.dim();
    let dj = covariant_derivative_with(conn, jf)?;
    Ok(TensorField::from_fn(jf.backend(), 2, 1, |p, out| {
        let jm = jf.at(p);
        let d = dj.at(p);
        let jv = |k: usize, l: usize| jm[k * n + l];
        let dv = |a: usize, k: usize, l: usize| d[(a * n + k) * n + l];
        for jj in 0..n {
            for kk in 0..n {
                for i in 0..n {
                    let mut s = 0.0;
                    for q in 0..n {
                        s += jv(jj, q) * dv(q, kk, i) - jv(kk, q) * dv(q, jj, i) - jv(q, i) * dv(jj, kk, q)
                            + jv(q, i) * dv(kk, jj, q);
                    }
                    out[(jj * n + kk) * n + i] = s;
                }
            }
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Backend, FrameAlgebra, Stencil, TorusChart};

    #[test]
    fn constant_standard_structure_is_integrable() {
        let b = Backend::torus(TorusChart::cube(4, 8, 1.0, Stencil::Fd(4)).unwrap());
        let j = AlmostComplexStructure::standard(&b).unwrap();
        assert_eq!(nijenhuis(&j).max_abs(), 0.0);
    }

    #[test]
    fn left_invariant_structure_on_su2_u1_is_integrable() {
        let b = Backend::frame(FrameAlgebra::su2_u1(1.0));
        let j = AlmostComplexStructure::standard(&b).unwrap();
        assert!(nijenhuis(&j).max_abs() < 1e-15);
    }
}
