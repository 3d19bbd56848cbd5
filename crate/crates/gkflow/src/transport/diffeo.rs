use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::interp::SpectralInterpolant;
use crate::error::{Error, Result};
use crate::tensor::backend::identity;
use crate::tensor::field::{flatten, unflatten};
use crate::tensor::forms::as_form;
use crate::tensor::snapshot::{
    backend_from_header, backend_header, parse_payload, payload_name, read_header, read_values, write_values, Payload,
};
use crate::tensor::{Backend, Symmetry, TensorField};

/// A vector field known at increasing sample times.
#[derive(Debug, Clone)]
pub struct SampledVectorField {
    times: Vec<f64>,
    fields: Vec<TensorField>,
}

impl SampledVectorField {
    pub fn new(times: Vec<f64>, fields: Vec<TensorField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::TimeGrid(format!("{} times for {} fields", times.len(), fields.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::TimeGrid("sample times must be strictly increasing".into()));
        }
        for f in &fields {
            if f.lower() != 0 || f.upper() != 1 {
                return Err(Error::Shape("expected vector fields".into()));
            }
            if **f.backend() != **fields[0].backend() {
                return Err(Error::BackendMismatch("samples live on different backends".into()));
            }
        }
        Ok(Self { times, fields })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[TensorField] {
        &self.fields
    }

    pub fn backend(&self) -> &Arc<Backend> {
        self.fields[0].backend()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { times: self.times.clone(), fields: self.fields.iter().map(|f| f.scale(s)).collect() }
    }

    /// Cubic Lagrange interpolation through the four nearest samples (fewer if unavailable).
    pub fn at(&self, t: f64) -> TensorField {
        let n = self.times.len();
        if n == 1 {
            return self.fields[0].clone();
        }
        let i = match self.times.iter().position(|&s| s > t) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => n - 2,
        };
        if let Some(k) = self.times.iter().position(|&s| s == t) {
            return self.fields[k].clone();
        }
        let m = n.min(4);
        let lo = i.saturating_sub(1).min(n - m);
        let idx: Vec<usize> = (lo..lo + m).collect();
        let mut out = self.fields[idx[0]].scale(0.0);
        for &a in &idx {
            let mut w = 1.0;
            for &b in &idx {
                if a != b {
                    w *= (t - self.times[b]) / (self.times[a] - self.times[b]);
                }
            }
            out = out.axpy(w, &self.fields[a]).expect("same shape");
        }
        out
    }
}

/// Flow maps φ_t and their differentials at the sample times.
///
/// On a torus, `maps[k]` holds unwrapped positions φ_t(x_p) and
/// `jacobians[k][p]` the matrix ∂φ^i/∂x^a (row-major, `[i][a]`). On a frame
/// backend there is one "point" and the Jacobian is the matrix M(t) by which
/// invariant tensors are pulled back; `maps` is empty.
#[derive(Debug, Clone)]
pub struct DiffeoFlow {
    backend: Arc<Backend>,
    times: Vec<f64>,
    maps: Vec<Vec<f64>>,
    jacobians: Vec<Vec<f64>>,
}

/// Controls for [`integrate_diffeo`].
#[derive(Debug, Clone, Copy)]
pub struct DiffeoOptions {
    /// Abort when a particle moves more than this many grid spacings in one step.
    pub max_step_cells: f64,
}

impl Default for DiffeoOptions {
    fn default() -> Self {
        Self { max_step_cells: 0.5 }
    }
}

impl DiffeoFlow {
    pub fn identity(backend: &Arc<Backend>, times: Vec<f64>) -> Self {
        let d = backend.dim();
        let np = backend.npoints();
        let pos: Vec<f64> = match &**backend {
            Backend::Torus(_) => (0..np).flat_map(|p| backend.coords(p)).collect(),
            _ => Vec::new(),
        };
        let jac: Vec<f64> = (0..np).flat_map(|_| identity(d)).collect();
        let k = times.len();
        Self { backend: backend.clone(), times, maps: vec![pos; k], jacobians: vec![jac; k] }
    }

    pub fn backend(&self) -> &Arc<Backend> {
        &self.backend
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    /// Positions φ_{t_k}(x_p), `[p][i]`.
    pub fn map(&self, k: usize) -> &[f64] {
        &self.maps[k]
    }
    /// Jacobians at sample k, `[p][i][a]`.
    pub fn jacobian(&self, k: usize) -> &[f64] {
        &self.jacobians[k]
    }

    /// Smallest det(dφ) over all samples.
    pub fn min_jacobian_det(&self) -> f64 {
        let d = self.backend.dim();
        self.jacobians
            .iter()
            .flat_map(|j| j.chunks(d * d).map(|m| DMatrix::from_row_slice(d, d, m).determinant()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes a header followed by one (φ, dφ) block per time.
    pub fn save(&self, path: &Path, payload: Payload) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "gkflow-diffeo 1")?;
        for (k, v) in backend_header(&self.backend) {
            writeln!(w, "{k}: {v}")?;
        }
        writeln!(w, "times: {}", self.times.len())?;
        writeln!(w, "payload: {}", payload_name(payload))?;
        writeln!(w, "end_header")?;
        for k in 0..self.times.len() {
            if payload == Payload::Text {
                writeln!(w, "time {:.16e}", self.times[k])?;
            } else {
                write_values(&mut w, &[self.times[k]], payload)?;
            }
            write_values(&mut w, &self.maps[k], payload)?;
            write_values(&mut w, &self.jacobians[k], payload)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let h = read_header(&mut r, "gkflow-diffeo 1")?;
        let backend = backend_from_header(&h)?;
        let count = h.usize("times")?;
        let payload = parse_payload(h.get("payload")?)?;
        let d = backend.dim();
        let np = backend.npoints();
        let nmap = if matches!(*backend, Backend::Torus(_)) { np * d } else { 0 };
        let (mut times, mut maps, mut jacobians) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..count {
            let t = if payload == Payload::Text {
                let mut line = String::new();
                r.read_line(&mut line)?;
                line.trim()
                    .strip_prefix("time ")
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Format(format!("bad time line {line:?}")))?
            } else {
                read_values(&mut r, 1, payload)?[0]
            };
            times.push(t);
            maps.push(read_values(&mut r, nmap, payload)?);
            jacobians.push(read_values(&mut r, np * d * d, payload)?);
        }
        Ok(Self { backend, times, maps, jacobians })
    }
}

fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

/// Integrates dφ/dt = X(φ, t) from φ₀ = Id over the sample times of `x`.
///
/// RK4 per sample interval with X at the midpoint from Lagrange interpolation;
/// dφ follows the variational equation d(dφ)/dt = (DX∘φ)·dφ. On a frame
/// backend the flow acts on invariant tensors through M' = -ad_X M.
pub fn integrate_diffeo(x: &SampledVectorField, opts: DiffeoOptions) -> Result<DiffeoFlow> {
    match &**x.backend() {
        Backend::Torus(_) => integrate_torus(x, opts),
        Backend::Frame(_) => Ok(integrate_frame(x)),
        Backend::Patch(_) => Err(Error::BackendMismatch("diffeomorphism flows need a torus or frame backend".into())),
    }
}

fn integrate_frame(x: &SampledVectorField) -> DiffeoFlow {
    let b = x.backend().clone();
    let alg = b.structure_constants().expect("frame backend").clone();
    let d = b.dim();
    let ad = |xf: &TensorField| -> Vec<f64> {
        let xv = xf.at(0);
        let mut m = vec![0.0; d * d];
        for k in 0..d {
            for j in 0..d {
                m[k * d + j] = (0..d).map(|i| xv[i] * alg.c(i, j, k)).sum();
            }
        }
        m
    };
    let rhs = |a: &[f64], m: &[f64]| -> Vec<f64> { mat_mul(a, m, d).iter().map(|v| -v).collect() };
    let times = x.times().to_vec();
    let mut m = identity(d);
    let mut jac = vec![m.clone()];
    for w in times.windows(2) {
        let h = w[1] - w[0];
        let (a0, a1, a2) = (ad(&x.at(w[0])), ad(&x.at(0.5 * (w[0] + w[1]))), ad(&x.at(w[1])));
        let k1 = rhs(&a0, &m);
        let y2: Vec<f64> = m.iter().zip(&k1).map(|(y, k)| y + 0.5 * h * k).collect();
        let k2 = rhs(&a1, &y2);
        let y3: Vec<f64> = m.iter().zip(&k2).map(|(y, k)| y + 0.5 * h * k).collect();
        let k3 = rhs(&a1, &y3);
        let y4: Vec<f64> = m.iter().zip(&k3).map(|(y, k)| y + h * k).collect();
        let k4 = rhs(&a2, &y4);
        for i in 0..d * d {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        jac.push(m.clone());
    }
    let k = times.len();
    DiffeoFlow { backend: b, times, maps: vec![Vec::new(); k], jacobians: jac }
}

fn integrate_torus(x: &SampledVectorField, opts: DiffeoOptions) -> Result<DiffeoFlow> {
    let b = x.backend().clone();
    let chart = match &*b {
        Backend::Torus(t) => t.clone(),
        _ => unreachable!(),
    };
    let d = b.dim();
    let np = b.npoints();
    let times = x.times().to_vec();
    let bound = opts.max_step_cells * chart.min_spacing();
    let mut flow = DiffeoFlow::identity(&b, vec![times[0]]);
    let mut pos = flow.maps[0].clone();
    let mut jac = flow.jacobians[0].clone();
    // (velocity, DX) of one stage for every particle
    let stage = |ip: &SpectralInterpolant, pos: &[f64]| -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..np)
            .into_par_iter()
            .map(|p| {
                let mut v = vec![0.0; d];
                let mut g = vec![0.0; d * d];
                ip.eval(&pos[p * d..(p + 1) * d], &mut v, Some(&mut g));
                (v, g)
            })
            .collect()
    };
    let mut ip0 = SpectralInterpolant::new(&x.at(times[0]))?;
    for (n, w) in times.windows(2).enumerate() {
        let h = w[1] - w[0];
        let ip_mid = SpectralInterpolant::new(&x.at(0.5 * (w[0] + w[1])))?;
        let ip1 = SpectralInterpolant::new(&x.at(w[1]))?;
        let advance = |pos: &[f64], jac: &[f64], s: &[(Vec<f64>, Vec<f64>)], c: f64| -> (Vec<f64>, Vec<f64>) {
            let mut p2 = pos.to_vec();
            let mut j2 = jac.to_vec();
            for p in 0..np {
                let (v, g) = &s[p];
                for i in 0..d {
                    p2[p * d + i] += c * v[i];
                }
                let dj = mat_mul(g, &jac[p * d * d..(p + 1) * d * d], d);
                for (o, v) in j2[p * d * d..(p + 1) * d * d].iter_mut().zip(&dj) {
                    *o += c * v;
                }
            }
            (p2, j2)
        };
        let s1 = stage(&ip0, &pos);
        let (p2, j2) = advance(&pos, &jac, &s1, 0.5 * h);
        let s2 = stage(&ip_mid, &p2);
        let (p3, j3) = advance(&pos, &jac, &s2, 0.5 * h);
        let s3 = stage(&ip_mid, &p3);
        let (p4, j4) = advance(&pos, &jac, &s3, h);
        let s4 = stage(&ip1, &p4);
        let mut newpos = pos.clone();
        let mut newjac = jac.clone();
        for p in 0..np {
            let pj = |s: &[(Vec<f64>, Vec<f64>)], jj: &[f64]| mat_mul(&s[p].1, &jj[p * d * d..(p + 1) * d * d], d);
            let (d1, d2, d3, d4) = (pj(&s1, &jac), pj(&s2, &j2), pj(&s3, &j3), pj(&s4, &j4));
            for i in 0..d {
                newpos[p * d + i] += h / 6.0 * (s1[p].0[i] + 2.0 * s2[p].0[i] + 2.0 * s3[p].0[i] + s4[p].0[i]);
            }
            for e in 0..d * d {
                newjac[p * d * d + e] += h / 6.0 * (d1[e] + 2.0 * d2[e] + 2.0 * d3[e] + d4[e]);
            }
            let disp = (0..d).map(|i| (newpos[p * d + i] - pos[p * d + i]).powi(2)).sum::<f64>().sqrt();
            if !(disp <= bound) {
                return Err(Error::Unresolved { t: w[1], point: p, displacement: disp });
            }
        }
        log::trace!("diffeo step {n}: t = {}", w[1]);
        pos = newpos;
        jac = newjac;
        flow.times.push(w[1]);
        flow.maps.push(pos.clone());
        flow.jacobians.push(jac.clone());
        ip0 = ip1;
    }
    Ok(flow)
}

/// φ_{t_k}⁻¹ by integrating the reversed field -X(T - s) from s = 0 to T = t_k.
pub fn inverse_at(x: &SampledVectorField, k: usize, opts: DiffeoOptions) -> Result<DiffeoFlow> {
    let ts = &x.times()[..=k];
    let tk = ts[k];
    let times: Vec<f64> = ts.iter().rev().map(|t| tk - t).collect();
    let fields: Vec<TensorField> = (0..=k).rev().map(|i| x.samples()[i].neg()).collect();
    let rev = SampledVectorField::new(times, fields)?;
    let f = integrate_diffeo(&rev, opts)?;
    let last = f.len() - 1;
    Ok(DiffeoFlow {
        backend: f.backend.clone(),
        times: vec![tk],
        maps: vec![f.maps[last].clone()],
        jacobians: vec![f.jacobians[last].clone()],
    })
}

/// Applies `lower`-slot matrix `a` ([i][a], contracted on i) and `upper`-slot matrix `b` ([b][j]).
fn transform_point(v: &[f64], n: usize, lower: usize, upper: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    let rank = lower + upper;
    let nc = v.len();
    let mut buf = v.to_vec();
    let mut idx = vec![0usize; rank];
    for slot in 0..rank {
        let mut next = vec![0.0; nc];
        for (f, o) in next.iter_mut().enumerate() {
            unflatten(f, n, &mut idx);
            let keep = idx[slot];
            let mut s = 0.0;
            for i in 0..n {
                idx[slot] = i;
                let m = if slot < lower { a[i * n + keep] } else { b[keep * n + i] };
                if m != 0.0 {
                    s += m * buf[flatten(&idx, n)];
                }
            }
            *o = s;
        }
        buf = next;
    }
    out.copy_from_slice(&buf);
}

/// φ_{t_k}^* T: covariant slots contract with dφ, contravariant slots with dφ⁻¹.
///
/// On a torus, T is evaluated at φ(x) by trigonometric interpolation.
pub fn pullback(flow: &DiffeoFlow, k: usize, t: &TensorField) -> Result<TensorField> {
    if *flow.backend != **t.backend() {
        return Err(Error::BackendMismatch("field and flow live on different backends".into()));
    }
    let d = t.dim();
    let (lower, upper) = (t.lower(), t.upper());
    let jac = &flow.jacobians[k];
    let inverses: Vec<Vec<f64>> = jac
        .chunks(d * d)
        .map(|m| {
            let inv =
                DMatrix::from_row_slice(d, d, m).try_inverse().unwrap_or_else(|| DMatrix::from_element(d, d, f64::NAN));
            (0..d * d).map(|e| inv[(e / d, e % d)]).collect()
        })
        .collect();
    let values: Vec<f64> = match &*flow.backend {
        Backend::Torus(_) => {
            let ip = SpectralInterpolant::new(t)?;
            let nc = t.ncomp();
            let pos = &flow.maps[k];
            (0..t.npoints())
                .into_par_iter()
                .flat_map_iter(|p| {
                    let mut v = vec![0.0; nc];
                    ip.eval(&pos[p * d..(p + 1) * d], &mut v, None);
                    v
                })
                .collect()
        }
        _ => t.data().to_vec(),
    };
    let nc = t.ncomp();
    let out = TensorField::from_fn(t.backend(), lower, upper, |p, out| {
        transform_point(
            &values[p * nc..(p + 1) * nc],
            d,
            lower,
            upper,
            &jac[p * d * d..(p + 1) * d * d],
            &inverses[p],
            out,
        );
    });
    Ok(match t.lower_symmetry() {
        Symmetry::Symmetric => out.symmetrized(),
        Symmetry::Antisymmetric if upper == 0 => as_form(out.antisymmetrized()),
        Symmetry::Antisymmetric => out.antisymmetrized(),
        Symmetry::None => out,
    })
}
