use super::acs::AlmostComplexStructure;
use super::kahler::{kahler_form, kahler_form_unchecked};
use crate::error::Result;
use crate::tensor::{codifferential, covariant_derivative_with, levi_civita, Connection, Metric, TensorField};

/// Raises a 1-form with g.
pub fn sharp(g: &Metric, a: &TensorField) -> TensorField {
    let n = g.dim();
    TensorField::from_fn(g.backend(), 0, 1, |p, out| {
        let gi = g.inv_at(p);
        let av = a.at(p);
        for i in 0..n {
            out[i] = (0..n).map(|j| gi[i * n + j] * av[j]).sum();
        }
    })
}

/// Lowers a vector field with g.
pub fn flat(g: &Metric, x: &TensorField) -> TensorField {
    let n = g.dim();
    TensorField::from_fn(g.backend(), 1, 0, |p, out| {
        let gm = g.at(p);
        let xv = x.at(p);
        for i in 0..n {
            out[i] = (0..n).map(|j| gm[i * n + j] * xv[j]).sum();
        }
    })
}

/// θ = J d*ω, with (Jα)(Y) = α(JY).
pub fn lee_form(g: &Metric, j: &AlmostComplexStructure) -> Result<TensorField> {
    let w = kahler_form(g, j)?;
    j.act_on_form(&codifferential(g, &w)?)
}

/// θ without the compatibility check, for diagnostics on drifting states.
pub(crate) fn lee_form_unchecked(g: &Metric, j: &AlmostComplexStructure) -> Result<TensorField> {
    j.act_on_form(&codifferential(g, &kahler_form_unchecked(g, j))?)
}

/// X = (-J d*ω)^♯.
pub fn gauge_vector_field(g: &Metric, j: &AlmostComplexStructure) -> Result<TensorField> {
    Ok(sharp(g, &lee_form(g, j)?).neg())
}

/// X^p = -J_t^p D^s J_s^t, using the Levi-Civita connection of g.
pub fn gauge_vector_field_coordinate(g: &Metric, j: &AlmostComplexStructure) -> Result<TensorField> {
    gauge_vector_field_with(g, &levi_civita(g), j)
}

pub fn gauge_vector_field_with(g: &Metric, conn: &Connection, j: &AlmostComplexStructure) -> Result<TensorField> {
    let jf = j.field();
    let n = g.dim();
    let dj = covariant_derivative_with(conn, jf)?;
    Ok(TensorField::from_fn(g.backend(), 0, 1, |p, out| {
        let gi = g.inv_at(p);
        let jm = jf.at(p);
        let d = dj.at(p);
        // v^t = D^s J_s^t = g^{sa} D_a J_s^t
        let mut v = vec![0.0; n];
        for (t, vt) in v.iter_mut().enumerate() {
            for s in 0..n {
                for a in 0..n {
                    *vt += gi[s * n + a] * d[(a * n + s) * n + t];
                }
            }
        }
        for pp in 0..n {
            out[pp] = -(0..n).map(|t| jm[t * n + pp] * v[t]).sum::<f64>();
        }
    }))
}
