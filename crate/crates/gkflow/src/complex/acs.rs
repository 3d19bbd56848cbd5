use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{Backend, Metric, TensorField};

/// Endomorphism field `J[k][l] = J_k^l`, acting by (JY)^l = J_k^l Y^k, with J² = -Id.
#[derive(Debug, Clone)]
pub struct AlmostComplexStructure {
    j: TensorField,
}

/// Tolerance asserted on J² + Id after construction.
pub const SQUARE_TOL: f64 = 1e-12;

fn check_endo(j: &TensorField) -> Result<()> {
    if j.lower() != 1 || j.upper() != 1 {
        return Err(Error::Shape("almost-complex structure must be a (1,1) field".into()));
    }
    if !j.dim().is_multiple_of(2) {
        return Err(Error::InvalidArgument("almost-complex structure needs even dimension".into()));
    }
    Ok(())
}

/// Pointwise J ← J (-J²)^{-1/2}; returns the projected field and the largest change.
pub fn project_complex(j: &TensorField) -> Result<(TensorField, f64)> {
    check_endo(j)?;
    let n = j.dim();
    let out = TensorField::from_fn(j.backend(), 1, 1, |p, out| {
        let m = DMatrix::from_row_slice(n, n, j.at(p));
        let s = -(&m * &m);
        let r = inv_sqrt(&s);
        let proj = &m * r;
        for k in 0..n {
            for l in 0..n {
                out[k * n + l] = proj[(k, l)];
            }
        }
    });
    if !out.is_finite() {
        return Err(Error::NotComplex { residual: f64::INFINITY, tol: SQUARE_TOL });
    }
    let size = out.max_abs_diff(j)?;
    Ok((out, size))
}

/// Inverse principal square root by the Denman-Beavers iteration.
fn inv_sqrt(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut y = s.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..60 {
        let yi = match y.clone().try_inverse() {
            Some(v) => v,
            None => return DMatrix::from_element(n, n, f64::NAN),
        };
        let zi = match z.clone().try_inverse() {
            Some(v) => v,
            None => return DMatrix::from_element(n, n, f64::NAN),
        };
        let y1 = (&y + zi) * 0.5;
        let z1 = (&z + yi) * 0.5;
        let delta = (&z1 - &z).amax();
        y = y1;
        z = z1;
        if delta < 1e-16 {
            break;
        }
    }
    z
}

/// max over points of |J² + Id|.
pub fn square_defect(j: &TensorField) -> f64 {
    let n = j.dim();
    let mut worst: f64 = 0.0;
    for p in 0..j.npoints() {
        let a = j.at(p);
        for k in 0..n {
            for l in 0..n {
                let s: f64 = (0..n).map(|m| a[k * n + m] * a[m * n + l]).sum::<f64>() + if k == l { 1.0 } else { 0.0 };
                if s.is_nan() {
                    return f64::NAN;
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

impl AlmostComplexStructure {
    /// Projects onto J² = -Id and asserts the result.
    pub fn new(j: TensorField) -> Result<Self> {
        let before = square_defect(&j);
        if !(before < 0.5) {
            return Err(Error::NotComplex { residual: before, tol: 0.5 });
        }
        let (p, _) = project_complex(&j)?;
        Self::new_exact(p)
    }

    /// Wraps a field that must already satisfy J² = -Id.
    pub fn new_exact(j: TensorField) -> Result<Self> {
        check_endo(&j)?;
        let d = square_defect(&j);
        if !(d <= SQUARE_TOL) {
            return Err(Error::NotComplex { residual: d, tol: SQUARE_TOL });
        }
        Ok(Self { j })
    }

    /// Wraps without checks; used for intermediate stages of time integration.
    pub(crate) fn unchecked(j: TensorField) -> Self {
        Self { j }
    }

    /// e_0 -> e_1, e_2 -> e_3, ...
    pub fn standard(backend: &Arc<Backend>) -> Result<Self> {
        let n = backend.dim();
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument("odd dimension".into()));
        }
        let mut c = vec![0.0; n * n];
        for a in (0..n).step_by(2) {
            c[a * n + a + 1] = 1.0;
            c[(a + 1) * n + a] = -1.0;
        }
        Self::new_exact(TensorField::constant(backend, 1, 1, &c)?)
    }

    /// Standard structure with the orientation of the last pair reversed.
    pub fn standard_reversed(backend: &Arc<Backend>) -> Result<Self> {
        let n = backend.dim();
        let mut c = Self::standard(backend)?.j.at(0).to_vec();
        c[(n - 2) * n + n - 1] = -1.0;
        c[(n - 1) * n + n - 2] = 1.0;
        Self::new_exact(TensorField::constant(backend, 1, 1, &c)?)
    }

    pub fn field(&self) -> &TensorField {
        &self.j
    }
    pub fn backend(&self) -> &Arc<Backend> {
        self.j.backend()
    }
    pub fn into_field(self) -> TensorField {
        self.j
    }

    pub fn square_defect(&self) -> f64 {
        square_defect(&self.j)
    }

    pub fn negated(&self) -> Self {
        Self { j: self.j.neg() }
    }

    /// Applies J to a 1-form: (Jα)_q = J_q^r α_r.
    pub fn act_on_form(&self, a: &TensorField) -> Result<TensorField> {
        if a.lower() != 1 || a.upper() != 0 {
            return Err(Error::Shape("expected a 1-form".into()));
        }
        let n = self.j.dim();
        Ok(TensorField::from_fn(a.backend(), 1, 0, |p, out| {
            let jm = self.j.at(p);
            let av = a.at(p);
            for q in 0..n {
                out[q] = (0..n).map(|r| jm[q * n + r] * av[r]).sum();
            }
        }))
    }

    /// max over points of |g(J·, J·) - g|.
    pub fn compatibility_defect(&self, g: &Metric) -> f64 {
        let n = self.j.dim();
        let mut worst: f64 = 0.0;
        for p in 0..g.npoints() {
            let jm = self.j.at(p);
            let gm = g.at(p);
            for a in 0..n {
                for b in 0..n {
                    let mut s = -gm[a * n + b];
                    for k in 0..n {
                        for l in 0..n {
                            s += jm[a * n + k] * jm[b * n + l] * gm[k * n + l];
                        }
                    }
                    if s.is_nan() {
                        return f64::NAN;
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    pub fn rebased(&self, target: &Arc<Backend>) -> Result<Self> {
        Ok(Self { j: self.j.rebased(target)? })
    }

    /// +1 if the orientation induced by J agrees with the frame order, -1 otherwise.
    pub fn orientation(&self, g: &Metric) -> Result<f64> {
        let w = super::kahler::kahler_form_unchecked(g, self);
        let n = g.dim();
        let mut top = w.clone();
        for _ in 1..n / 2 {
            top = crate::tensor::wedge(&top, &w)?;
        }
        let v = top.at(0)[top.index(&(0..n).collect::<Vec<_>>())];
        Ok(if v >= 0.0 { 1.0 } else { -1.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{FrameAlgebra, Stencil, TorusChart};

    #[test]
    fn projection_restores_square() {
        let b = Backend::torus(TorusChart::cube(2, 8, 1.0, Stencil::Fd(4)).unwrap());
        let j = TensorField::from_fn(&b, 1, 1, |p, out| {
            let e = 0.05 * (p as f64).sin();
            out.copy_from_slice(&[e, 1.0 + e, -1.0, 0.3 * e]);
        });
        let acs = AlmostComplexStructure::new(j).unwrap();
        assert!(acs.square_defect() < 1e-13);
    }

    #[test]
    fn standard_structures() {
        let b = Backend::frame(FrameAlgebra::abelian(4));
        let j = AlmostComplexStructure::standard(&b).unwrap();
        assert_eq!(j.square_defect(), 0.0);
        let g = Metric::euclidean(&b);
        assert_eq!(j.compatibility_defect(&g), 0.0);
        assert_eq!(j.orientation(&g).unwrap(), 1.0);
        let r = AlmostComplexStructure::standard_reversed(&b).unwrap();
        assert_eq!(r.orientation(&g).unwrap(), -1.0);
    }

    #[test]
    fn far_from_complex_is_rejected() {
        let b = Backend::frame(FrameAlgebra::abelian(2));
        let j = TensorField::constant(&b, 1, 1, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(AlmostComplexStructure::new(j).is_err());
    }
}
