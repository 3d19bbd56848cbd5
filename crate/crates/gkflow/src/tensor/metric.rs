use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::backend::Backend;
use super::field::{Symmetry, TensorField};
use crate::error::{Error, Result};

/// Riemannian metric with cached pointwise inverse, volume density and smallest eigenvalue.
#[derive(Debug, Clone)]
pub struct Metric {
    g: TensorField,
    inv: Vec<f64>,
    sqrt_det: Vec<f64>,
    min_eig: Vec<f64>,
}

struct PointData {
    inv: Vec<f64>,
    sqrt_det: f64,
    min_eig: f64,
    ok: std::result::Result<(), PointFailure>,
}

enum PointFailure {
    Singular,
    NonPositive(f64),
}

impl Metric {
    /// Validates symmetry, positivity and invertibility at every point.
    pub fn new(g: TensorField) -> Result<Self> {
        if g.lower() != 2 || g.upper() != 0 {
            return Err(Error::Shape("metric must be a (0,2) tensor".into()));
        }
        let g = if g.lower_symmetry() == Symmetry::Symmetric {
            g
        } else {
            let defect = g.symmetry_defect(false);
            if defect != 0.0 {
                return Err(Error::InvalidArgument(format!("metric not symmetric (defect {defect:e})")));
            }
            g.assume_symmetry(Symmetry::Symmetric, Symmetry::None)
        };
        let n = g.dim();
        let pts: Vec<PointData> = (0..g.npoints())
            .into_par_iter()
            .map(|p| {
                let m = DMatrix::from_row_slice(n, n, g.at(p));
                let eig = m.clone().symmetric_eigen().eigenvalues;
                let min_eig = eig.min();
                let det: f64 = eig.iter().product();
                let inv = m.clone().try_inverse();
                let ok = match (&inv, min_eig > 0.0) {
                    (_, false) => Err(PointFailure::NonPositive(min_eig)),
                    (None, _) => Err(PointFailure::Singular),
                    (Some(mi), true) => {
                        let scale = m.norm() * mi.norm();
                        let err = (&m * mi - DMatrix::identity(n, n)).amax();
                        if err > 1e-10 * scale.max(1.0) {
                            Err(PointFailure::Singular)
                        } else {
                            Ok(())
                        }
                    }
                };
                let inv = inv.map(|mi| mi.transpose().as_slice().to_vec()).unwrap_or_else(|| vec![f64::NAN; n * n]);
                PointData { inv, sqrt_det: det.max(0.0).sqrt(), min_eig, ok }
            })
            .collect();
        let mut inv = Vec::with_capacity(n * n * pts.len());
        let mut sqrt_det = Vec::with_capacity(pts.len());
        let mut min_eig = Vec::with_capacity(pts.len());
        for (p, d) in pts.into_iter().enumerate() {
            match d.ok {
                Ok(()) => {}
                Err(PointFailure::Singular) => return Err(Error::SingularMetric { point: g.backend().point_index(p) }),
                Err(PointFailure::NonPositive(e)) => {
                    return Err(Error::NonPositiveMetric { point: g.backend().point_index(p), min_eig: e })
                }
            }
            // symmetrize the inverse exactly
            let mut iv = d.inv;
            for i in 0..n {
                for j in i + 1..n {
                    let s = 0.5 * (iv[i * n + j] + iv[j * n + i]);
                    iv[i * n + j] = s;
                    iv[j * n + i] = s;
                }
            }
            inv.extend_from_slice(&iv);
            sqrt_det.push(d.sqrt_det);
            min_eig.push(d.min_eig);
        }
        Ok(Self { g, inv, sqrt_det, min_eig })
    }

    /// Builds a metric from a field that may only be symmetric up to rounding.
    pub fn from_symmetrized(g: &TensorField) -> Result<Self> {
        Self::new(g.symmetrized())
    }

    /// Identity metric in the backend's frame.
    pub fn euclidean(backend: &Arc<Backend>) -> Self {
        let n = backend.dim();
        let id = super::backend::identity(n);
        Self::new(TensorField::constant(backend, 2, 0, &id).unwrap()).expect("identity metric")
    }

    pub fn field(&self) -> &TensorField {
        &self.g
    }
    pub fn backend(&self) -> &Arc<Backend> {
        self.g.backend()
    }
    pub fn dim(&self) -> usize {
        self.g.dim()
    }
    pub fn npoints(&self) -> usize {
        self.g.npoints()
    }

    #[inline]
    pub fn at(&self, p: usize) -> &[f64] {
        self.g.at(p)
    }

    /// Row-major g^{ij} at point `p`.
    #[inline]
    pub fn inv_at(&self, p: usize) -> &[f64] {
        let nn = self.dim() * self.dim();
        &self.inv[p * nn..(p + 1) * nn]
    }

    #[inline]
    pub fn sqrt_det_at(&self, p: usize) -> f64 {
        self.sqrt_det[p]
    }

    pub fn min_eig_at(&self, p: usize) -> f64 {
        self.min_eig[p]
    }

    /// Smallest eigenvalue over all points.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest operator norm of g^{-1} over all points.
    pub fn max_inverse_norm(&self) -> f64 {
        1.0 / self.min_eigenvalue()
    }

    /// g^{ij} as a (2,0) contravariant field.
    pub fn inverse_field(&self) -> TensorField {
        TensorField::from_fn(self.backend(), 0, 2, |p, out| out.copy_from_slice(self.inv_at(p)))
            .assume_symmetry(Symmetry::None, Symmetry::Symmetric)
    }

    /// Largest |g g^{-1} - I| over points.
    pub fn inverse_defect(&self) -> f64 {
        let n = self.dim();
        (0..self.npoints())
            .map(|p| {
                let g = self.at(p);
                let gi = self.inv_at(p);
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let s: f64 = (0..n).map(|k| g[i * n + k] * gi[k * n + j]).sum();
                        worst = worst.max((s - if i == j { 1.0 } else { 0.0 }).abs());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    /// Rebuilds on another backend with the same sample points (see [`TensorField::rebased`]).
    pub fn rebased(&self, target: &Arc<Backend>) -> Result<Metric> {
        let g = self.g.rebased(target)?;
        Ok(Metric { g, inv: self.inv.clone(), sqrt_det: self.sqrt_det.clone(), min_eig: self.min_eig.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::backend::{FrameAlgebra, Stencil, TorusChart};

    #[test]
    fn rejects_indefinite() {
        let b = Backend::frame(FrameAlgebra::abelian(2));
        let g = TensorField::constant(&b, 2, 0, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(Metric::new(g), Err(Error::NonPositiveMetric { .. })));
    }

    #[test]
    fn rejects_asymmetric() {
        let b = Backend::frame(FrameAlgebra::abelian(2));
        let g = TensorField::constant(&b, 2, 0, &[1.0, 0.1, 0.0, 1.0]).unwrap();
        assert!(Metric::new(g).is_err());
    }

    #[test]
    fn caches_inverse_and_volume() {
        let b = Backend::torus(TorusChart::cube(2, 8, 1.0, Stencil::Fd(4)).unwrap());
        let g = TensorField::constant(&b, 2, 0, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let m = Metric::new(g).unwrap();
        assert!(m.inverse_defect() < 1e-14);
        assert!((m.sqrt_det_at(5) - 1.75f64.sqrt()).abs() < 1e-14);
        assert!(m.min_eigenvalue() > 0.0);
    }
}
