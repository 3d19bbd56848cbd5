use super::backend::Backend;
use super::field::{flatten, unflatten, TensorField};
use crate::error::{Error, Result};

fn check_vector(x: &TensorField) -> Result<()> {
    if x.lower() != 0 || x.upper() != 1 {
        return Err(Error::Shape("expected a vector field".into()));
    }
    Ok(())
}

/// Lie derivative L_X T.
///
/// Uses only frame derivatives and structure constants: with
/// A^k_a = [X, e_a]^k = X^i c^k_{ia} - e_a(X^k), each covariant slot
/// contributes -T_{..k..} A^k_a and each contravariant slot +T^{..a..} A^b_a.
pub fn lie_derivative(x: &TensorField, t: &TensorField) -> Result<TensorField> {
    check_vector(x)?;
    if **x.backend() != **t.backend() {
        return Err(Error::BackendMismatch("vector field and tensor".into()));
    }
    let n = t.dim();
    let (lo, up) = (t.lower(), t.upper());
    let r = lo + up;
    let nc = t.ncomp();
    let dx = x.frame_derivative();
    let dt = t.frame_derivative();
    let alg = t.backend().structure_constants().cloned();
    let out = TensorField::from_fn(t.backend(), lo, up, |p, out| {
        let xv = x.at(p);
        let dxv = dx.at(p);
        let src = t.at(p);
        let d = dt.at(p);
        // A[k*n + a] = [X, e_a]^k
        let mut a = vec![0.0; n * n];
        for k in 0..n {
            for aa in 0..n {
                let mut s = -dxv[aa * n + k];
                if let Some(f) = &alg {
                    for i in 0..n {
                        s += xv[i] * f.c(i, aa, k);
                    }
                }
                a[k * n + aa] = s;
            }
        }
        let mut idx = vec![0usize; r];
        let mut tmp = vec![0usize; r];
        for c in 0..nc {
            unflatten(c, n, &mut idx);
            let mut s: f64 = (0..n).map(|m| xv[m] * d[m * nc + c]).sum();
            for slot in 0..r {
                tmp.copy_from_slice(&idx);
                for m in 0..n {
                    tmp[slot] = m;
                    let v = src[flatten(&tmp, n)];
                    if slot < lo {
                        s -= v * a[m * n + idx[slot]];
                    } else {
                        s += v * a[idx[slot] * n + m];
                    }
                }
            }
            out[c] = s;
        }
    });
    Ok(out.assume_symmetry(t.lower_symmetry(), t.upper_symmetry()))
}

/// Lie bracket [X, Y] = L_X Y.
pub fn lie_bracket(x: &TensorField, y: &TensorField) -> Result<TensorField> {
    check_vector(y)?;
    lie_derivative(x, y)
}

/// Largest |L_{e_i} T| over frame directions; zero exactly for ad-invariant tensors.
pub fn ad_invariance_defect(t: &TensorField) -> Result<f64> {
    let n = t.dim();
    if !matches!(**t.backend(), Backend::Frame(_)) {
        return Err(Error::BackendMismatch("ad-invariance only defined on frame backends".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let x = TensorField::constant(t.backend(), 0, 1, &e)?;
        worst = worst.max(lie_derivative(&x, t)?.max_abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::backend::{FrameAlgebra, Stencil, TorusChart};
    use std::f64::consts::PI;

    #[test]
    fn translation_preserves_constant_metric() {
        let b = Backend::torus(TorusChart::cube(2, 16, 1.0, Stencil::Fd(4)).unwrap());
        let x = TensorField::constant(&b, 0, 1, &[0.3, -0.2]).unwrap();
        let g = TensorField::constant(&b, 2, 0, &[2.0, 0.1, 0.1, 1.0]).unwrap();
        assert_eq!(lie_derivative(&x, &g).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn bracket_of_coordinate_fields() {
        let b = Backend::torus(TorusChart::cube(2, 32, 1.0, Stencil::Spectral).unwrap());
        // X = sin(2 pi x) d_y, Y = d_x  =>  [Y, X] = 2 pi cos(2 pi x) d_y
        let x = TensorField::from_fn(&b, 0, 1, |p, out| {
            out[0] = 0.0;
            out[1] = (2.0 * PI * b.coords(p)[0]).sin();
        });
        let y = TensorField::constant(&b, 0, 1, &[1.0, 0.0]).unwrap();
        let br = lie_bracket(&y, &x).unwrap();
        for p in 0..b.npoints() {
            let want = 2.0 * PI * (2.0 * PI * b.coords(p)[0]).cos();
            assert!((br.at(p)[1] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn frame_bracket_matches_structure_constants() {
        let b = Backend::frame(FrameAlgebra::su2(1.0));
        let e = |i: usize| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            TensorField::constant(&b, 0, 1, &v).unwrap()
        };
        let br = lie_bracket(&e(0), &e(1)).unwrap();
        assert_eq!(br.at(0), &[0.0, 0.0, 2.0]);
    }
}
