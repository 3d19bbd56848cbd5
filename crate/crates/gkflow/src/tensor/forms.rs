use super::field::{flatten, increasing_tuples, perm_sign, permutations, Symmetry, TensorField};
use super::metric::Metric;
use crate::error::{Error, Result};

/// Flat indices and signs of every arrangement of each increasing k-tuple.
pub(crate) struct AntisymLayout {
    pub tuples: Vec<Vec<usize>>,
    pub slots: Vec<Vec<(usize, f64)>>,
}

impl AntisymLayout {
    pub fn new(n: usize, k: usize) -> Self {
        let tuples = increasing_tuples(n, k);
        let perms = permutations(k);
        let slots = tuples
            .iter()
            .map(|t| {
                perms
                    .iter()
                    .map(|(perm, sign)| {
                        let idx: Vec<usize> = perm.iter().map(|&q| t[q]).collect();
                        (flatten(&idx, n), *sign)
                    })
                    .collect()
            })
            .collect();
        Self { tuples, slots }
    }

    /// Writes the value of each increasing tuple to all of its arrangements.
    pub fn fill(&self, out: &mut [f64], values: &[f64]) {
        for (slots, v) in self.slots.iter().zip(values) {
            for &(f, s) in slots {
                out[f] = s * v;
            }
        }
    }
}

fn check_form(a: &TensorField) -> Result<usize> {
    if !a.is_form() {
        return Err(Error::Shape(format!(
            "expected a differential form, got valence ({},{}) with {} lower symmetry",
            a.lower(),
            a.upper(),
            a.lower_symmetry().name()
        )));
    }
    Ok(a.lower())
}

pub(crate) fn as_form(t: TensorField) -> TensorField {
    let lo = t.lower();
    if lo >= 2 {
        t.assume_symmetry(Symmetry::Antisymmetric, Symmetry::None)
    } else {
        t
    }
}

/// Builds a k-form from its values on increasing index tuples.
pub fn form_from_fn<F>(backend: &std::sync::Arc<super::backend::Backend>, k: usize, f: F) -> TensorField
where
    F: Fn(usize, &[usize]) -> f64 + Sync + Send,
{
    let layout = AntisymLayout::new(backend.dim(), k);
    let t = TensorField::from_fn(backend, k, 0, |p, out| {
        let vals: Vec<f64> = layout.tuples.iter().map(|t| f(p, t)).collect();
        layout.fill(out, &vals);
    });
    as_form(t)
}

/// Exterior derivative, including the bracket terms of a non-holonomic frame.
pub fn exterior_derivative(a: &TensorField) -> Result<TensorField> {
    let k = check_form(a)?;
    let n = a.dim();
    if k + 1 > n {
        return Err(Error::DegreeOverflow { k, dim: n });
    }
    let da = a.frame_derivative();
    let nc = a.ncomp();
    let alg = a.backend().structure_constants().cloned();
    let layout = AntisymLayout::new(n, k + 1);
    let t = TensorField::from_fn(a.backend(), k + 1, 0, |p, out| {
        let src = a.at(p);
        let d = da.at(p);
        let mut rest = Vec::with_capacity(k);
        let vals: Vec<f64> = layout
            .tuples
            .iter()
            .map(|tup| {
                let mut s = 0.0;
                for j in 0..=k {
                    rest.clear();
                    rest.extend(tup.iter().enumerate().filter(|(q, _)| *q != j).map(|(_, &v)| v));
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    s += sign * d[tup[j] * nc + flatten(&rest, n)];
                }
                if let Some(f) = &alg {
                    for j in 0..=k {
                        for l in j + 1..=k {
                            let sign = if (j + l) % 2 == 0 { 1.0 } else { -1.0 };
                            let mut idx = Vec::with_capacity(k);
                            idx.push(0);
                            idx.extend(tup.iter().enumerate().filter(|(q, _)| *q != j && *q != l).map(|(_, &v)| v));
                            for m in 0..n {
                                let c = f.c(tup[j], tup[l], m);
                                if c != 0.0 {
                                    idx[0] = m;
                                    s += sign * c * src[flatten(&idx, n)];
                                }
                            }
                        }
                    }
                }
                s
            })
            .collect();
        layout.fill(out, &vals);
    });
    Ok(as_form(t))
}

/// Components α^I with all indices raised, on increasing tuples.
fn raised_on_tuples(g_inv: &[f64], src: &[f64], n: usize, k: usize, tuples: &[Vec<usize>]) -> Vec<f64> {
    let nk = n.pow(k as u32);
    let mut idx = vec![0usize; k];
    tuples
        .iter()
        .map(|t| {
            let mut s = 0.0;
            for f in 0..nk {
                let v = src[f];
                if v == 0.0 {
                    continue;
                }
                super::field::unflatten(f, n, &mut idx);
                let mut w = v;
                for q in 0..k {
                    w *= g_inv[t[q] * n + idx[q]];
                }
                s += w;
            }
            s
        })
        .collect()
}

/// Hodge star for the orientation given by the lexicographic order of the frame.
pub fn hodge_star(g: &Metric, a: &TensorField) -> Result<TensorField> {
    let k = check_form(a)?;
    let n = g.dim();
    if !g.backend().same_points(a.backend()) {
        return Err(Error::BackendMismatch("metric and form".into()));
    }
    let src_layout = increasing_tuples(n, k);
    let layout = AntisymLayout::new(n, n - k);
    let t = TensorField::from_fn(a.backend(), n - k, 0, |p, out| {
        let up = raised_on_tuples(g.inv_at(p), a.at(p), n, k, &src_layout);
        let vol = g.sqrt_det_at(p);
        let vals: Vec<f64> = layout
            .tuples
            .iter()
            .map(|jt| {
                let comp: Vec<usize> = (0..n).filter(|i| !jt.contains(i)).collect();
                let pos = src_layout.iter().position(|t| *t == comp).expect("complement tuple");
                let mut full = comp.clone();
                full.extend_from_slice(jt);
                vol * up[pos] * perm_sign(&full)
            })
            .collect();
        layout.fill(out, &vals);
    });
    Ok(as_form(t))
}

/// Codifferential d* = (-1)^{n(k+1)+1} ⋆d⋆, the L² adjoint of d.
pub fn codifferential(g: &Metric, a: &TensorField) -> Result<TensorField> {
    let k = check_form(a)?;
    if k == 0 {
        return Err(Error::InvalidArgument("codifferential of a 0-form".into()));
    }
    let n = g.dim();
    let s = hodge_star(g, &exterior_derivative(&hodge_star(g, a)?)?)?;
    let sign = if (n * (k + 1) + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(as_form(s.scale(sign)))
}

/// Hodge Laplacian with the sign convention Δ_d = -(dd* + d*d).
pub fn laplace_beltrami(g: &Metric, a: &TensorField) -> Result<TensorField> {
    let k = check_form(a)?;
    let n = g.dim();
    let mut acc = TensorField::zeros(a.backend(), k, 0);
    if k > 0 {
        acc = acc.add(&exterior_derivative(&codifferential(g, a)?)?)?;
    }
    if k < n {
        acc = acc.add(&codifferential(g, &exterior_derivative(a)?)?)?;
    }
    Ok(as_form(acc.neg()))
}

/// Pointwise inner product of forms, sum over increasing I of α_I β^I.
pub fn pointwise_inner(g: &Metric, a: &TensorField, b: &TensorField) -> Result<TensorField> {
    let k = check_form(a)?;
    if check_form(b)? != k {
        return Err(Error::Shape("forms of different degree".into()));
    }
    let n = g.dim();
    let tuples = increasing_tuples(n, k);
    Ok(TensorField::from_fn(g.backend(), 0, 0, |p, out| {
        let up = raised_on_tuples(g.inv_at(p), b.at(p), n, k, &tuples);
        let av = a.at(p);
        out[0] = tuples.iter().zip(&up).map(|(t, u)| av[flatten(t, n)] * u).sum();
    }))
}

/// L² pairing by uniform quadrature with density √det g; sequential sum for reproducibility.
pub fn l2_inner(g: &Metric, a: &TensorField, b: &TensorField) -> Result<f64> {
    let ip = pointwise_inner(g, a, b)?;
    let w = g.backend().cell_volume();
    let mut s = 0.0;
    for p in 0..g.npoints() {
        s += ip.at(p)[0] * g.sqrt_det_at(p);
    }
    Ok(s * w)
}

pub fn l2_norm(g: &Metric, a: &TensorField) -> Result<f64> {
    Ok(l2_inner(g, a, a)?.max(0.0).sqrt())
}

/// H²_{ij} = H_{ipq} H_j^{pq}.
pub fn h_squared(g: &Metric, h: &TensorField) -> Result<TensorField> {
    if check_form(h)? != 3 {
        return Err(Error::Shape("h_squared expects a 3-form".into()));
    }
    let n = g.dim();
    let t = TensorField::from_fn(g.backend(), 2, 0, |p, out| {
        let gi = g.inv_at(p);
        let a = h.at(p);
        // H_j^{pq}
        let mut up = vec![0.0; n * n * n];
        for j in 0..n {
            for p2 in 0..n {
                for q in 0..n {
                    let mut s = 0.0;
                    for r in 0..n {
                        for t in 0..n {
                            s += gi[p2 * n + r] * gi[q * n + t] * a[(j * n + r) * n + t];
                        }
                    }
                    up[(j * n + p2) * n + q] = s;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n * n).map(|pq| a[i * n * n + pq] * up[j * n * n + pq]).sum();
            }
        }
    });
    Ok(t.symmetrized())
}

/// Wedge product of a p-form and a q-form.
pub fn wedge(a: &TensorField, b: &TensorField) -> Result<TensorField> {
    let (p, q) = (check_form(a)?, check_form(b)?);
    let n = a.dim();
    if p + q > n {
        return Ok(as_form(TensorField::zeros(a.backend(), p + q, 0)));
    }
    let layout = AntisymLayout::new(n, p + q);
    let perms = permutations(p + q);
    let norm: f64 = (1..=p).product::<usize>() as f64 * (1..=q).product::<usize>() as f64;
    let t = TensorField::from_fn(a.backend(), p + q, 0, |pt, out| {
        let (av, bv) = (a.at(pt), b.at(pt));
        let vals: Vec<f64> = layout
            .tuples
            .iter()
            .map(|tup| {
                let mut s = 0.0;
                for (perm, sign) in &perms {
                    let idx: Vec<usize> = perm.iter().map(|&r| tup[r]).collect();
                    s += sign * av[flatten(&idx[..p], n)] * bv[flatten(&idx[p..], n)];
                }
                s / norm
            })
            .collect();
        layout.fill(out, &vals);
    });
    Ok(as_form(t))
}

/// Largest |d d α|, useful as a closedness floor.
pub fn d_squared_defect(a: &TensorField) -> Result<f64> {
    if a.lower() + 2 > a.dim() {
        return Ok(0.0);
    }
    Ok(exterior_derivative(&exterior_derivative(a)?)?.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::backend::{Backend, FrameAlgebra, Stencil, TorusChart};
    use std::f64::consts::PI;

    #[test]
    fn flat_star_of_dx12() {
        let b = Backend::torus(TorusChart::cube(4, 8, 1.0, Stencil::Fd(4)).unwrap());
        let g = Metric::euclidean(&b);
        let a = form_from_fn(&b, 2, |_, t| if t == [0, 1] { 1.0 } else { 0.0 });
        let s = hodge_star(&g, &a).unwrap();
        let want = form_from_fn(&b, 2, |_, t| if t == [2, 3] { 1.0 } else { 0.0 });
        assert!(s.max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn codifferential_of_one_form_is_minus_divergence() {
        let b = Backend::torus(TorusChart::cube(2, 32, 1.0, Stencil::Spectral).unwrap());
        let g = Metric::euclidean(&b);
        let a = form_from_fn(&b, 1, |p, t| {
            let x = b.coords(p);
            if t[0] == 0 {
                (2.0 * PI * x[0]).sin()
            } else {
                0.0
            }
        });
        let ds = codifferential(&g, &a).unwrap();
        for p in 0..b.npoints() {
            let x = b.coords(p);
            assert!((ds.at(p)[0] + 2.0 * PI * (2.0 * PI * x[0]).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn wedge_of_coframe() {
        let b = Backend::frame(FrameAlgebra::abelian(4));
        let e = |i: usize| form_from_fn(&b, 1, move |_, t| if t[0] == i { 1.0 } else { 0.0 });
        let w = wedge(&e(1), &e(0)).unwrap();
        assert_eq!(w.at(0)[1], -1.0);
        assert_eq!(w.at(0)[4], 1.0);
    }

    #[test]
    fn degree_overflow() {
        let b = Backend::frame(FrameAlgebra::abelian(2));
        let a = form_from_fn(&b, 2, |_, _| 1.0);
        assert!(matches!(exterior_derivative(&a), Err(Error::DegreeOverflow { .. })));
    }
}
