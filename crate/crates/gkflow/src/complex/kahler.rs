use super::acs::AlmostComplexStructure;
use crate::error::{Error, Result};
use crate::tensor::field::{flatten, unflatten};
use crate::tensor::forms::as_form;
use crate::tensor::{exterior_derivative, Metric, TensorField};

/// Compatibility tolerance used when none is given.
pub const COMPAT_TOL: f64 = 1e-9;

pub(crate) fn kahler_form_unchecked(g: &Metric, j: &AlmostComplexStructure) -> TensorField {
    let n = g.dim();
    let jf = j.field();
    let w = TensorField::from_fn(g.backend(), 2, 0, |p, out| {
        let jm = jf.at(p);
        let gm = g.at(p);
        for i in 0..n {
            for k in 0..n {
                out[i * n + k] = (0..n).map(|l| jm[i * n + l] * gm[l * n + k]).sum();
            }
        }
    });
    as_form(w.antisymmetrized())
}

/// ω(X, Y) = g(JX, Y), i.e. ω_{ij} = J_i^l g_{lj}.
pub fn kahler_form(g: &Metric, j: &AlmostComplexStructure) -> Result<TensorField> {
    kahler_form_tol(g, j, COMPAT_TOL)
}

pub fn kahler_form_tol(g: &Metric, j: &AlmostComplexStructure, tol: f64) -> Result<TensorField> {
    if !g.backend().same_points(j.backend()) {
        return Err(Error::BackendMismatch("metric and complex structure".into()));
    }
    let c = j.compatibility_defect(g);
    if !(c <= tol) {
        return Err(Error::Incompatible { residual: c, tol });
    }
    Ok(kahler_form_unchecked(g, j))
}

/// Inserts J into every slot: (J^*α)(X, ...) = α(JX, ...).
pub fn j_slots(a: &TensorField, j: &AlmostComplexStructure) -> Result<TensorField> {
    if a.upper() != 0 {
        return Err(Error::Shape("expected a covariant tensor".into()));
    }
    let n = a.dim();
    let k = a.lower();
    let nc = a.ncomp();
    let jf = j.field();
    let t = TensorField::from_fn(a.backend(), k, 0, |p, out| {
        let jm = jf.at(p);
        let mut buf = a.at(p).to_vec();
        let mut idx = vec![0usize; k];
        for slot in 0..k {
            let mut next = vec![0.0; nc];
            for (f, o) in next.iter_mut().enumerate() {
                unflatten(f, n, &mut idx);
                let a0 = idx[slot];
                let mut s = 0.0;
                for i in 0..n {
                    idx[slot] = i;
                    s += jm[a0 * n + i] * buf[flatten(&idx, n)];
                }
                *o = s;
            }
            buf = next;
        }
        out.copy_from_slice(&buf);
    });
    Ok(t.assume_symmetry(a.lower_symmetry(), crate::tensor::Symmetry::None))
}

/// d^c α = -(dα)(J·, ..., J·).
pub fn d_c(a: &TensorField, j: &AlmostComplexStructure) -> Result<TensorField> {
    let da = exterior_derivative(a)?;
    Ok(as_form(j_slots(&da, j)?.neg()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Backend, FrameAlgebra, Stencil, TorusChart};

    #[test]
    fn flat_kahler_form() {
        let b = Backend::torus(TorusChart::cube(4, 8, 1.0, Stencil::Fd(4)).unwrap());
        let g = Metric::euclidean(&b);
        let j = AlmostComplexStructure::standard(&b).unwrap();
        let w = kahler_form(&g, &j).unwrap();
        let want = crate::tensor::form_from_fn(&b, 2, |_, t| if t == [0, 1] || t == [2, 3] { 1.0 } else { 0.0 });
        assert_eq!(w.max_abs_diff(&want).unwrap(), 0.0);
        assert_eq!(d_c(&w, &j).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn incompatible_pair_rejected() {
        let b = Backend::frame(FrameAlgebra::abelian(2));
        let g = Metric::new(TensorField::constant(&b, 2, 0, &[2.0, 0.0, 0.0, 1.0]).unwrap()).unwrap();
        let j = AlmostComplexStructure::standard(&b).unwrap();
        assert!(matches!(kahler_form(&g, &j), Err(Error::Incompatible { .. })));
    }
}
