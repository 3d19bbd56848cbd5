use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::complex::chern::chern_quantities_unchecked;
use crate::complex::kahler::kahler_form_unchecked;
use crate::complex::{nijenhuis, AlmostComplexStructure};
use crate::error::{Error, Result};
use crate::flows::rhs::j_invariant_part;
use crate::tensor::{
    curvature_norms, curvature_norms_with, ricci_contraction, riemann, scalar_curvature, trace, Backend, FrameAlgebra,
    Metric, PatchChart, TensorField,
};

/// Samples closer to the origin than this are rejected.
pub const MIN_RHO: f64 = 1e-3;

/// Metric and complex structure of the Hopf static metric at one point of C²∖{0}.
///
/// Real coordinates (x₀, x₁, x₂, x₃) with z₁ = x₀ + i x₁, z₂ = x₂ + i x₃. The
/// Hermitian form (1/ρ²)∂∂̄ρ², normalized so that i∂∂̄ρ² is the Euclidean
/// Kähler form, gives g = δ/ρ². J is the standard structure.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfSample {
    pub point: [f64; 4],
    pub g: [f64; 16],
    pub j: [f64; 16],
}

fn rho(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn hopf_g(x: &[f64]) -> [f64; 16] {
    let s = 1.0 / x.iter().map(|v| v * v).sum::<f64>();
    let mut g = [0.0; 16];
    for i in 0..4 {
        g[i * 5] = s;
    }
    g
}

fn standard_j() -> [f64; 16] {
    // J_k^l with J e₀ = e₁, J e₂ = e₃
    let mut j = [0.0; 16];
    j[1] = 1.0;
    j[4] = -1.0;
    j[2 * 4 + 3] = 1.0;
    j[3 * 4 + 2] = -1.0;
    j
}

/// Pointwise (g, J) of the static metric at each sample.
pub fn hopf_static_metric(samples: &[[f64; 4]]) -> Result<Vec<HopfSample>> {
    samples
        .iter()
        .map(|x| {
            let r = rho(x);
            if !(r >= MIN_RHO) {
                return Err(Error::NearOrigin { rho: r });
            }
            Ok(HopfSample { point: *x, g: hopf_g(x), j: standard_j() })
        })
        .collect()
}

/// Seeded samples with ρ uniform in [rho_min, rho_max] and uniform direction.
pub fn hopf_samples(count: usize, seed: u64, rho_min: f64, rho_max: f64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v = [0.0; 4];
            loop {
                for c in &mut v {
                    *c = rng.gen_range(-1.0..1.0);
                }
                let n = rho(&v);
                if n > 0.1 && n <= 1.0 {
                    let r = rng.gen_range(rho_min..=rho_max);
                    for c in &mut v {
                        *c *= r / n;
                    }
                    return v;
                }
            }
        })
        .collect()
}

/// Stencil of the local patches around each sample.
#[derive(Debug, Clone, Copy)]
pub struct PatchOptions {
    /// Grid spacing relative to ρ of the sample.
    pub relative_spacing: f64,
    pub order: usize,
}

impl Default for PatchOptions {
    fn default() -> Self {
        Self { relative_spacing: 0.003, order: 4 }
    }
}

/// Pointwise checks at one sample.
#[derive(Debug, Clone, Copy)]
pub struct HopfPointReport {
    pub rho: f64,
    /// max |s - q| at the sample.
    pub s_minus_q: f64,
    /// max |∂g| of the pluriclosed flow at the sample.
    pub pcf_rate: f64,
    /// |N| at the sample.
    pub nijenhuis: f64,
    pub scal: f64,
    pub ricci_sq: f64,
    pub riemann_sq: f64,
}

fn centre_max(t: &TensorField, c: usize) -> f64 {
    t.at(c).iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Staticity and curvature invariants at one sample, from jets on a small patch.
pub fn hopf_point_check(sample: &HopfSample, opts: PatchOptions) -> Result<HopfPointReport> {
    let r = rho(&sample.point);
    if !(r >= MIN_RHO) {
        return Err(Error::NearOrigin { rho: r });
    }
    let chart = PatchChart::for_second_jets(&sample.point, opts.relative_spacing * r, opts.order)?;
    let c = chart.center_index();
    let b = Backend::patch(chart.clone());
    let g = Metric::new(TensorField::from_fn(&b, 2, 0, |p, out| out.copy_from_slice(&hopf_g(&chart.coords(p)))))?;
    let j = AlmostComplexStructure::new_exact(TensorField::constant(&b, 1, 1, &sample.j)?)?;
    let nij = centre_max(&nijenhuis(&j), c);
    let cq = chern_quantities_unchecked(&g, &j, &kahler_form_unchecked(&g, &j))?;
    let diff = cq.q.sub(&cq.s)?;
    let rate = j_invariant_part(&diff.scale(2.0), &j);
    let rm = riemann(&g);
    let (rc2, rm2) = curvature_norms_with(&g, &rm);
    let scal = trace(&g, &ricci_contraction(&rm).symmetrized())?;
    Ok(HopfPointReport {
        rho: r,
        s_minus_q: centre_max(&diff, c),
        pcf_rate: centre_max(&rate, c),
        nijenhuis: nij,
        scal: scal.at(c)[0],
        ricci_sq: rc2.at(c)[0],
        riemann_sq: rm2.at(c)[0],
    })
}

/// Runs [`hopf_point_check`] on every sample in parallel.
pub fn hopf_staticity(samples: &[[f64; 4]], opts: PatchOptions) -> Result<Vec<HopfPointReport>> {
    let data = hopf_static_metric(samples)?;
    data.par_iter().map(|s| hopf_point_check(s, opts)).collect()
}

/// Curvature invariants (Scal, |Rc|², |Rm|²) of the round cylinder R×S³(1),
/// computed on the frame backend of S¹×S³.
pub fn cylinder_invariants() -> (f64, f64, f64) {
    let b = Backend::frame(FrameAlgebra::su2_u1(1.0));
    let g = Metric::euclidean(&b);
    let (rc2, rm2) = curvature_norms(&g);
    (scalar_curvature(&g).at(0)[0], rc2.at(0)[0], rm2.at(0)[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_origin() {
        assert!(matches!(hopf_static_metric(&[[1e-4, 0.0, 0.0, 0.0]]), Err(Error::NearOrigin { .. })));
    }

    #[test]
    fn dilation_invariance() {
        // the pullback of g by z ↦ 2z is 4 g(2z)
        let x = [0.3, -0.7, 0.2, 1.1];
        let y = x.map(|v| 2.0 * v);
        let s = hopf_static_metric(&[x, y]).unwrap();
        for (a, b) in s[0].g.iter().zip(&s[1].g) {
            assert!((a - 4.0 * b).abs() < 1e-15);
        }
        assert_eq!(s[0].j, s[1].j);
    }

    #[test]
    fn cylinder_constants() {
        let (scal, rc2, rm2) = cylinder_invariants();
        assert!((scal - 6.0).abs() < 1e-13);
        assert!((rc2 - 12.0).abs() < 1e-12);
        assert!((rm2 - 12.0).abs() < 1e-12);
    }

    #[test]
    fn one_point_is_static() {
        let s = hopf_static_metric(&[[0.4, 0.9, -0.3, 0.5]]).unwrap();
        let r = hopf_point_check(&s[0], PatchOptions::default()).unwrap();
        assert!(r.s_minus_q < 1e-7, "{r:?}");
        assert!((r.scal - 6.0).abs() < 1e-6, "{r:?}");
    }
}
