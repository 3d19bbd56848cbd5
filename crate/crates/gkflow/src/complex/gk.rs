use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use super::acs::AlmostComplexStructure;
use super::kahler::{d_c, kahler_form_unchecked};
use super::nijenhuis::nijenhuis;
use crate::error::{Error, Result};
use crate::tensor::snapshot::{load_field, save_field, Payload};
use crate::tensor::{exterior_derivative, Backend, Metric, TensorField};

/// A metric, closed 3-form and two complex structures.
///
/// `j_minus` may live on the opposite frame algebra of `g` (right-invariant
/// frame on a group); `g` and `h` are then moved there, which requires them
/// to be bi-invariant.
#[derive(Debug, Clone)]
pub struct GKState {
    pub g: Metric,
    pub h: TensorField,
    pub j_plus: AlmostComplexStructure,
    pub j_minus: AlmostComplexStructure,
}

/// Max-norm residuals of a candidate generalized Kähler structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkReport {
    pub compat_plus: f64,
    pub compat_minus: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    /// |d^c₊ω₊ - H|
    pub r1: f64,
    /// |d^c₋ω₋ + H|
    pub r2: f64,
    /// |dH|
    pub r3: f64,
    pub square_plus: f64,
    pub square_minus: f64,
}

impl GkReport {
    pub fn max(&self) -> f64 {
        [self.compat_plus, self.compat_minus, self.n_plus, self.n_minus, self.r1, self.r2, self.r3]
            .iter()
            .fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(*v) })
    }

    /// Generalized Kähler at tolerance `tol`.
    pub fn is_gk(&self, tol: f64) -> bool {
        self.max() <= tol
    }

    pub fn entries(&self) -> [(&'static str, f64); 9] {
        [
            ("compat_plus", self.compat_plus),
            ("compat_minus", self.compat_minus),
            ("N_plus", self.n_plus),
            ("N_minus", self.n_minus),
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("J2_plus", self.square_plus),
            ("J2_minus", self.square_minus),
        ]
    }
}

/// Residuals of one side: compatibility, Nijenhuis, and |d^cω - sign H|.
pub(crate) fn side_residuals(
    g: &Metric,
    h: &TensorField,
    j: &AlmostComplexStructure,
    sign: f64,
) -> Result<(f64, f64, f64)> {
    let target = j.backend();
    let (g, h) = (g.rebased(target)?, h.rebased(target)?);
    let compat = j.compatibility_defect(&g);
    let nj = nijenhuis(j).max_abs();
    let w = kahler_form_unchecked(&g, j);
    let r = d_c(&w, j)?.axpy(-sign, &h)?.max_abs();
    Ok((compat, nj, r))
}

impl GKState {
    pub fn new(
        g: Metric,
        h: TensorField,
        j_plus: AlmostComplexStructure,
        j_minus: AlmostComplexStructure,
    ) -> Result<Self> {
        if h.lower() != 3 || !h.is_form() {
            return Err(Error::Shape("H must be a 3-form".into()));
        }
        for (name, b) in [("H", h.backend()), ("J+", j_plus.backend()), ("J-", j_minus.backend())] {
            if !g.backend().same_points(b) {
                return Err(Error::BackendMismatch(format!("{name} does not share the metric's sample points")));
            }
        }
        if **j_plus.backend() != **g.backend() {
            return Err(Error::BackendMismatch("J+ must live on the metric's backend".into()));
        }
        Ok(Self { g, h, j_plus, j_minus })
    }

    pub fn backend(&self) -> &Arc<Backend> {
        self.g.backend()
    }

    pub fn residuals(&self) -> Result<GkReport> {
        gk_residuals(self)
    }

    /// (g, -H, J₋, J₊): the same structure with the roles of J₊ and J₋ exchanged.
    pub fn swapped(&self) -> Result<Self> {
        let target = self.j_minus.backend().clone();
        let g = self.g.rebased(&target)?;
        let h = self.h.rebased(&target)?.neg();
        Self::new(g, h, self.j_minus.clone(), self.j_plus.clone())
    }

    /// Writes `g.field`, `H.field`, `Jplus.field`, `Jminus.field` and `manifest.txt`.
    pub fn save(&self, dir: &Path, payload: Payload) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        save_field(&dir.join("g.field"), "g", self.g.field(), payload)?;
        save_field(&dir.join("H.field"), "H", &self.h, payload)?;
        save_field(&dir.join("Jplus.field"), "Jplus", self.j_plus.field(), payload)?;
        save_field(&dir.join("Jminus.field"), "Jminus", self.j_minus.field(), payload)?;
        let rep = self.residuals()?;
        let mut m = std::fs::File::create(dir.join("manifest.txt"))?;
        writeln!(m, "gkflow-gkstate 1")?;
        writeln!(m, "fields: g.field H.field Jplus.field Jminus.field")?;
        for (k, v) in rep.entries() {
            writeln!(m, "{k}: {v:.16e}")?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = std::fs::read_to_string(dir.join("manifest.txt"))?;
        if manifest.lines().next() != Some("gkflow-gkstate 1") {
            return Err(Error::Format("not a GK state manifest".into()));
        }
        let (_, g) = load_field(&dir.join("g.field"))?;
        let (_, h) = load_field(&dir.join("H.field"))?;
        let (_, jp) = load_field(&dir.join("Jplus.field"))?;
        let (_, jm) = load_field(&dir.join("Jminus.field"))?;
        let backend = g.backend().clone();
        let h = h.rebased(&backend)?;
        let jp = jp.rebased(&backend)?;
        let jm = if **jm.backend() == *backend { jm.rebased(&backend)? } else { jm };
        Self::new(Metric::new(g)?, h, AlmostComplexStructure::new_exact(jp)?, AlmostComplexStructure::new_exact(jm)?)
    }
}

/// compat±, N±, r₁ = |d^c₊ω₊ - H|, r₂ = |d^c₋ω₋ + H|, r₃ = |dH|.
pub fn gk_residuals(s: &GKState) -> Result<GkReport> {
    let (compat_plus, n_plus, r1) = side_residuals(&s.g, &s.h, &s.j_plus, 1.0)?;
    let (compat_minus, n_minus, r2) = side_residuals(&s.g, &s.h, &s.j_minus, -1.0)?;
    let r3 = exterior_derivative(&s.h)?.max_abs();
    Ok(GkReport {
        compat_plus,
        compat_minus,
        n_plus,
        n_minus,
        r1,
        r2,
        r3,
        square_plus: s.j_plus.square_defect(),
        square_minus: s.j_minus.square_defect(),
    })
}
