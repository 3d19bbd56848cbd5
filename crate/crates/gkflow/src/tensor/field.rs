use std::sync::Arc;

use rayon::prelude::*;

use super::backend::Backend;
use crate::error::{Error, Result};

/// Symmetry declared on an index group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    None,
    Symmetric,
    Antisymmetric,
}

impl Symmetry {
    pub fn name(&self) -> &'static str {
        match self {
            Symmetry::None => "none",
            Symmetry::Symmetric => "symmetric",
            Symmetry::Antisymmetric => "antisymmetric",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Symmetry::None),
            "symmetric" => Ok(Symmetry::Symmetric),
            "antisymmetric" => Ok(Symmetry::Antisymmetric),
            _ => Err(Error::Format(format!("unknown symmetry '{s}'"))),
        }
    }

    fn meet(self, other: Symmetry) -> Symmetry {
        if self == other {
            self
        } else {
            Symmetry::None
        }
    }
}

/// Components of a tensor with `lower` covariant and `upper` contravariant slots
/// sampled at every point of a backend.
///
/// Storage is point-major; within a point the index tuple is row-major with
/// the covariant indices first.
#[derive(Debug, Clone)]
pub struct TensorField {
    backend: Arc<Backend>,
    lower: usize,
    upper: usize,
    lower_sym: Symmetry,
    upper_sym: Symmetry,
    data: Vec<f64>,
}

impl TensorField {
    pub fn zeros(backend: &Arc<Backend>, lower: usize, upper: usize) -> Self {
        let ncomp = backend.dim().pow((lower + upper) as u32);
        Self {
            backend: backend.clone(),
            lower,
            upper,
            lower_sym: Symmetry::None,
            upper_sym: Symmetry::None,
            data: vec![0.0; ncomp * backend.npoints()],
        }
    }

    /// Builds a field by filling the components of each point in parallel.
    pub fn from_fn<F>(backend: &Arc<Backend>, lower: usize, upper: usize, f: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let mut t = Self::zeros(backend, lower, upper);
        let nc = t.ncomp();
        t.data.par_chunks_mut(nc).enumerate().for_each(|(p, out)| f(p, out));
        t
    }

    pub fn from_data(backend: &Arc<Backend>, lower: usize, upper: usize, data: Vec<f64>) -> Result<Self> {
        let mut t = Self::zeros(backend, lower, upper);
        if data.len() != t.data.len() {
            return Err(Error::Shape(format!("expected {} values, got {}", t.data.len(), data.len())));
        }
        t.data = data;
        Ok(t)
    }

    /// Same components at every point.
    pub fn constant(backend: &Arc<Backend>, lower: usize, upper: usize, comps: &[f64]) -> Result<Self> {
        let nc = backend.dim().pow((lower + upper) as u32);
        if comps.len() != nc {
            return Err(Error::Shape(format!("expected {nc} components, got {}", comps.len())));
        }
        Ok(Self::from_fn(backend, lower, upper, |_, out| out.copy_from_slice(comps)))
    }

    pub fn scalar(backend: &Arc<Backend>, values: Vec<f64>) -> Result<Self> {
        Self::from_data(backend, 0, 0, values)
    }

    pub fn backend(&self) -> &Arc<Backend> {
        &self.backend
    }
    pub fn dim(&self) -> usize {
        self.backend.dim()
    }
    pub fn npoints(&self) -> usize {
        self.backend.npoints()
    }
    pub fn lower(&self) -> usize {
        self.lower
    }
    pub fn upper(&self) -> usize {
        self.upper
    }
    pub fn rank(&self) -> usize {
        self.lower + self.upper
    }
    pub fn ncomp(&self) -> usize {
        self.dim().pow(self.rank() as u32)
    }
    pub fn lower_symmetry(&self) -> Symmetry {
        self.lower_sym
    }
    pub fn upper_symmetry(&self) -> Symmetry {
        self.upper_sym
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access; clears declared symmetries since they can no longer be vouched for.
    pub fn data_mut(&mut self) -> &mut [f64] {
        self.lower_sym = Symmetry::None;
        self.upper_sym = Symmetry::None;
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Components at point `p`.
    #[inline]
    pub fn at(&self, p: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[p * nc..(p + 1) * nc]
    }

    /// Flat component index of an index tuple.
    pub fn index(&self, idx: &[usize]) -> usize {
        let n = self.dim();
        idx.iter().fold(0, |acc, &i| acc * n + i)
    }

    /// True for a k-form (antisymmetric covariant field).
    pub fn is_form(&self) -> bool {
        self.upper == 0 && (self.lower <= 1 || self.lower_sym == Symmetry::Antisymmetric)
    }

    pub fn same_shape(&self, other: &TensorField) -> Result<()> {
        if self.lower != other.lower || self.upper != other.upper {
            return Err(Error::Shape(format!(
                "valence ({},{}) vs ({},{})",
                self.lower, self.upper, other.lower, other.upper
            )));
        }
        if !self.backend.same_points(&other.backend) {
            return Err(Error::BackendMismatch(format!("{} vs {}", self.backend.kind(), other.backend.kind())));
        }
        Ok(())
    }

    fn zip_with(&self, other: &TensorField, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Result<TensorField> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.data.par_iter_mut().zip(other.data.par_iter()).for_each(|(a, b)| *a = f(*a, *b));
        out.lower_sym = self.lower_sym.meet(other.lower_sym);
        out.upper_sym = self.upper_sym.meet(other.upper_sym);
        Ok(out)
    }

    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// self + s * other.
    pub fn axpy(&self, s: f64, other: &TensorField) -> Result<TensorField> {
        self.zip_with(other, move |a, b| a + s * b)
    }

    pub fn scale(&self, s: f64) -> TensorField {
        let mut out = self.clone();
        out.data.par_iter_mut().for_each(|a| *a *= s);
        out
    }

    pub fn neg(&self) -> TensorField {
        let mut out = self.clone();
        out.data.par_iter_mut().for_each(|a| *a = -*a);
        out
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar_field(&self, f: &TensorField) -> Result<TensorField> {
        if f.rank() != 0 || !self.backend.same_points(&f.backend) {
            return Err(Error::Shape("expected a scalar field on the same backend".into()));
        }
        let nc = self.ncomp();
        let mut out = self.clone();
        out.data.par_chunks_mut(nc).zip(f.data.par_iter()).for_each(|(c, s)| c.iter_mut().for_each(|v| *v *= s));
        Ok(out)
    }

    /// Largest absolute component over all points; NaN if any component is NaN.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for v in &self.data {
            if v.is_nan() {
                return f64::NAN;
            }
            m = m.max(v.abs());
        }
        m
    }

    pub fn max_abs_diff(&self, other: &TensorField) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Projects the covariant group onto its symmetric part.
    pub fn symmetrized(&self) -> TensorField {
        self.project_lower(false)
    }

    /// Projects the covariant group onto its antisymmetric part.
    pub fn antisymmetrized(&self) -> TensorField {
        self.project_lower(true)
    }

    fn project_lower(&self, anti: bool) -> TensorField {
        let k = self.lower;
        let n = self.dim();
        let perms = permutations(k);
        let inner = n.pow(self.upper as u32);
        let nlow = n.pow(k as u32);
        let norm = perms.len() as f64;
        let mut out = TensorField::from_fn(&self.backend, self.lower, self.upper, |p, out| {
            let src = self.at(p);
            let mut idx = vec![0usize; k];
            let mut pidx = vec![0usize; k];
            for li in 0..nlow {
                unflatten(li, n, &mut idx);
                for u in 0..inner {
                    let mut s = 0.0;
                    for (perm, sign) in &perms {
                        for (m, &q) in perm.iter().enumerate() {
                            pidx[m] = idx[q];
                        }
                        let pi = flatten(&pidx, n);
                        let w = if anti { *sign } else { 1.0 };
                        s += w * src[pi * inner + u];
                    }
                    out[li * inner + u] = s / norm;
                }
            }
        });
        out.lower_sym = if anti { Symmetry::Antisymmetric } else { Symmetry::Symmetric };
        out.upper_sym = self.upper_sym;
        out
    }

    /// Largest deviation of the covariant group from (anti)symmetry.
    pub fn symmetry_defect(&self, anti: bool) -> f64 {
        self.sub(&self.project_lower(anti)).map(|d| d.max_abs()).unwrap_or(f64::NAN)
    }

    /// Declares a symmetry without projecting; callers must have constructed it exactly.
    pub(crate) fn assume_symmetry(mut self, lower: Symmetry, upper: Symmetry) -> TensorField {
        self.lower_sym = lower;
        self.upper_sym = upper;
        self
    }

    /// Frame derivatives e_i(T), with the derivative index placed first.
    pub fn frame_derivative(&self) -> TensorField {
        let n = self.dim();
        let nc = self.ncomp();
        let np = self.npoints();
        if matches!(*self.backend, Backend::Frame(_)) {
            return TensorField::zeros(&self.backend, self.lower + 1, self.upper);
        }
        let cols: Vec<Vec<Vec<f64>>> = (0..nc)
            .into_par_iter()
            .map(|c| {
                let col: Vec<f64> = (0..np).map(|p| self.data[p * nc + c]).collect();
                (0..n).map(|a| self.backend.derivative(&col, a)).collect()
            })
            .collect();
        TensorField::from_fn(&self.backend, self.lower + 1, self.upper, |p, out| {
            for a in 0..n {
                for c in 0..nc {
                    out[a * nc + c] = cols[c][a][p];
                }
            }
        })
    }

    /// Same components on another backend with the same sample points.
    ///
    /// Moving between a frame algebra and its opposite (left vs right invariant
    /// frames) is only meaningful for bi-invariant tensors; this is checked.
    pub fn rebased(&self, target: &Arc<Backend>) -> Result<TensorField> {
        if Arc::ptr_eq(&self.backend, target) || *self.backend == **target {
            let mut t = self.clone();
            t.backend = target.clone();
            return Ok(t);
        }
        match (&*self.backend, &**target) {
            (Backend::Frame(a), Backend::Frame(b)) if a.is_opposite_of(b) => {
                let defect = crate::tensor::lie::ad_invariance_defect(self)?;
                if defect > 1e-12 {
                    return Err(Error::BackendMismatch(format!(
                        "tensor is not bi-invariant (defect {defect:e}); cannot move to the opposite frame"
                    )));
                }
                let mut t = self.clone();
                t.backend = target.clone();
                Ok(t)
            }
            _ => Err(Error::BackendMismatch(format!("{} vs {}", self.backend.kind(), target.kind()))),
        }
    }
}

/// All permutations of 0..k with their signs.
pub fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if rest.is_empty() {
            out.push((prefix.clone(), perm_sign(prefix)));
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..k).collect(), &mut out);
    out
}

/// Sign of a permutation given as an arrangement of distinct values; 0 on repeats.
pub fn perm_sign(p: &[usize]) -> f64 {
    let mut s = 1.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] == p[j] {
                return 0.0;
            }
            if p[i] > p[j] {
                s = -s;
            }
        }
    }
    s
}

/// Strictly increasing k-tuples from 0..n in lexicographic order.
pub fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[inline]
pub fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

#[inline]
pub fn unflatten(mut f: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = f % n;
        f /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::backend::{Stencil, TorusChart};

    fn chart() -> Arc<Backend> {
        Backend::torus(TorusChart::cube(2, 8, 1.0, Stencil::Fd(4)).unwrap())
    }

    #[test]
    fn antisymmetrize_is_exact_projection() {
        let b = chart();
        let t = TensorField::from_fn(&b, 2, 0, |p, out| {
            for (i, v) in out.iter_mut().enumerate() {
                *v = (p * 7 + i * 3) as f64 * 0.1;
            }
        });
        let a = t.antisymmetrized();
        assert_eq!(a.lower_symmetry(), Symmetry::Antisymmetric);
        assert_eq!(a.symmetry_defect(true), 0.0);
        let s = t.symmetrized();
        let back = a.add(&s).unwrap();
        assert!(back.max_abs_diff(&t).unwrap() < 1e-14);
    }

    #[test]
    fn sign_and_tuples() {
        assert_eq!(perm_sign(&[1, 0, 2]), -1.0);
        assert_eq!(perm_sign(&[1, 2, 0]), 1.0);
        assert_eq!(perm_sign(&[1, 1]), 0.0);
        assert_eq!(increasing_tuples(4, 2).len(), 6);
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn derivative_index_goes_first() {
        let b = chart();
        let t = TensorField::from_fn(&b, 1, 0, |p, out| {
            let x = b.coords(p);
            out[0] = x[0];
            out[1] = 0.0;
        });
        let d = t.frame_derivative();
        assert_eq!(d.lower(), 2);
        assert!(d.at(3)[2].abs() < 1e-12);
    }
}
