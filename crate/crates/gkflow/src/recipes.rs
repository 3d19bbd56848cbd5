//! Built-in initial data and seeded random fields.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{d_c, kahler_form, AlmostComplexStructure, GKState};
use crate::error::{Error, Result};
use crate::tensor::forms::as_form;
use crate::tensor::{Backend, FrameAlgebra, Metric, Stencil, TensorField, TorusChart};

/// Periodic grid with period 2π on every axis.
pub fn torus_backend(resolution: &[usize], stencil: Stencil) -> Result<Arc<Backend>> {
    Ok(Backend::torus(TorusChart::new(resolution, &vec![2.0 * PI; resolution.len()], stencil)?))
}

/// Flat metric, H = 0 and J₊ = J₋ = standard structure.
pub fn flat_kahler_torus(backend: &Arc<Backend>) -> Result<GKState> {
    let g = Metric::euclidean(backend);
    let j = AlmostComplexStructure::standard(backend)?;
    GKState::new(g, as_form(TensorField::zeros(backend, 3, 0)), j.clone(), j)
}

/// Random trigonometric polynomial with modes |k_i| ≤ `max_mode` on resolved axes.
///
/// On the frame backend the result is a random constant.
pub fn smooth_function(backend: &Arc<Backend>, rng: &mut ChaCha8Rng, amplitude: f64, max_mode: i64) -> TensorField {
    let chart = match &**backend {
        Backend::Torus(t) => t.clone(),
        _ => {
            let c = amplitude * rng.gen_range(-1.0..1.0);
            return TensorField::constant(backend, 0, 0, &[c]).unwrap();
        }
    };
    let d = chart.dim();
    let axes: Vec<usize> = (0..d).filter(|&a| chart.resolution()[a] > 1).collect();
    let mut modes: Vec<(Vec<i64>, f64, f64)> = Vec::new();
    let width = (2 * max_mode + 1) as usize;
    let total = width.pow(axes.len() as u32);
    for m in 0..total {
        let mut k = vec![0i64; d];
        let mut r = m;
        for &a in &axes {
            k[a] = (r % width) as i64 - max_mode;
            r /= width;
        }
        if k.iter().all(|&v| v == 0) {
            continue;
        }
        let norm: i64 = k.iter().map(|v| v * v).sum();
        let damp = 1.0 / (1.0 + norm as f64);
        modes.push((k, damp * rng.gen_range(-1.0..1.0), damp * rng.gen_range(-1.0..1.0)));
    }
    let scale = amplitude / modes.iter().map(|(_, a, b)| a.abs() + b.abs()).sum::<f64>().max(1e-300);
    let periods = chart.periods().to_vec();
    TensorField::from_fn(backend, 0, 0, |p, out| {
        let x = chart.coords(p);
        out[0] = modes
            .iter()
            .map(|(k, a, b)| {
                let ph: f64 = (0..d).map(|i| 2.0 * PI * k[i] as f64 * x[i] / periods[i]).sum();
                a * ph.cos() + b * ph.sin()
            })
            .sum::<f64>()
            * scale;
    })
}

/// g = δ + amplitude·(smooth symmetric perturbation); positive for amplitude < 1/dim.
pub fn random_metric(backend: &Arc<Backend>, seed: u64, amplitude: f64) -> Result<Metric> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = backend.dim();
    let mut comps = Vec::new();
    for i in 0..n {
        for j in i..n {
            comps.push(((i, j), smooth_function(backend, &mut rng, amplitude, 2)));
        }
    }
    let g = TensorField::from_fn(backend, 2, 0, |p, out| {
        for ((i, j), f) in &comps {
            let v = f.at(p)[0] + if i == j { 1.0 } else { 0.0 };
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    });
    Metric::from_symmetrized(&g)
}

/// Random smooth covariant tensor of rank `k` (no symmetry).
pub fn random_tensor(backend: &Arc<Backend>, lower: usize, upper: usize, seed: u64, amplitude: f64) -> TensorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = backend.dim().pow((lower + upper) as u32);
    let comps: Vec<TensorField> = (0..nc).map(|_| smooth_function(backend, &mut rng, amplitude, 2)).collect();
    TensorField::from_fn(backend, lower, upper, |p, out| {
        for (o, f) in out.iter_mut().zip(&comps) {
            *o = f.at(p)[0];
        }
    })
}

/// Random smooth k-form.
pub fn random_form(backend: &Arc<Backend>, k: usize, seed: u64, amplitude: f64) -> TensorField {
    if k <= 1 {
        return random_tensor(backend, k, 0, seed, amplitude);
    }
    as_form(random_tensor(backend, k, 0, seed, amplitude).antisymmetrized())
}

/// Random smooth vector field.
pub fn random_vector_field(backend: &Arc<Backend>, seed: u64, amplitude: f64) -> TensorField {
    random_tensor(backend, 0, 1, seed, amplitude)
}

/// Kähler perturbation of the flat torus with H = 0 and J₊ = J₋ = standard.
///
/// In real dimension 2 the metric is e^{2φ}δ. In higher even dimension each
/// complex line (x_{2a}, x_{2a+1}) gets its own conformal factor depending on
/// that line only, so the product metric stays Kähler. Lines with no resolved
/// axis stay flat.
pub fn perturbed_torus(backend: &Arc<Backend>, seed: u64, amplitude: f64) -> Result<GKState> {
    let n = backend.dim();
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument("perturbed torus needs even dimension".into()));
    }
    let chart = match &**backend {
        Backend::Torus(t) => t.clone(),
        _ => return Err(Error::InvalidArgument("perturbed torus needs a torus backend".into())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::new();
    for a in (0..n).step_by(2) {
        // restrict to the line's two axes
        let mut res = vec![1usize; n];
        res[a] = chart.resolution()[a];
        res[a + 1] = chart.resolution()[a + 1];
        if res.iter().all(|&r| r == 1) {
            // invariant line: stays flat
            factors.push(vec![1.0; backend.npoints()]);
            continue;
        }
        let line = Backend::torus(TorusChart::new(&res, chart.periods(), chart.stencil())?);
        let phi = smooth_function(&line, &mut rng, amplitude, 2);
        let idx_res = res.clone();
        let factor: Vec<f64> = (0..backend.npoints())
            .map(|p| {
                let ix = backend.point_index(p);
                let mut q = 0;
                for d in 0..n {
                    let i = if idx_res[d] > 1 { ix[d] } else { 0 };
                    q = q * idx_res[d] + i;
                }
                (2.0 * phi.at(q)[0]).exp()
            })
            .collect();
        factors.push(factor);
    }
    let g = TensorField::from_fn(backend, 2, 0, |p, out| {
        for a in 0..n {
            out[a * n + a] = factors[a / 2][p];
        }
    });
    let g = Metric::new(g)?;
    let j = AlmostComplexStructure::standard(backend)?;
    GKState::new(g, as_form(TensorField::zeros(backend, 3, 0)), j.clone(), j)
}

/// Non-Kähler generalized Kähler structure on T⁴ with commuting J₊, J₋.
///
/// g = a(dx₀² + dx₁²) + b(dx₂² + dx₃²) with a = 1 + ε∂₀²ψ and
/// b = 1 - ε(∂₂² + ∂₃²)ψ for ψ = ψ(x₀, x₂, x₃). J₊ is the standard structure,
/// J₋ reverses the second pair and H = d^c₊ω₊. The resolution must have
/// `resolution[1] == 1`: x₁ is a symmetry direction. With `resolution[3] == 1`
/// ψ drops its x₃ dependence as well.
pub fn commuting_gk_torus(resolution: [usize; 4], epsilon: f64, stencil: Stencil) -> Result<GKState> {
    if resolution[1] != 1 {
        return Err(Error::InvalidArgument("commuting GK torus needs resolution 1 along x1".into()));
    }
    let b = torus_backend(&resolution, stencil)?;
    let chart = match &*b {
        Backend::Torus(t) => t.clone(),
        _ => unreachable!(),
    };
    let k3 = if resolution[3] > 1 { 1.0 } else { 0.0 };
    // ψ = cos x₀ cos x₂ + u + v, u = 0.5 sin(x₀ + k₃x₃ + 0.3), v = 0.7 cos(x₂ - k₃x₃ + 1.1)
    let g = TensorField::from_fn(&b, 2, 0, |p, out| {
        let x = chart.coords(p);
        let cc = x[0].cos() * x[2].cos();
        let u = 0.5 * (x[0] + k3 * x[3] + 0.3).sin();
        let v = 0.7 * (x[2] - k3 * x[3] + 1.1).cos();
        let a = 1.0 + epsilon * (-cc - u);
        let bb = 1.0 - epsilon * (-cc - v - k3 * (u + v));
        out[0] = a;
        out[5] = a;
        out[10] = bb;
        out[15] = bb;
    });
    let g = Metric::new(g)?;
    let jp = AlmostComplexStructure::standard(&b)?;
    let jm = AlmostComplexStructure::standard_reversed(&b)?;
    let h = d_c(&kahler_form(&g, &jp)?, &jp)?;
    GKState::new(g, h, jp, jm)
}

/// S³×S¹ = SU(2)×U(1) with bi-invariant metric, H the Cartan 3-form, J₊
/// left-invariant and J₋ right-invariant.
///
/// The frame is orthonormal, e₀ tangent to the circle, and the S³ factor has
/// radius `radius`. H = d^c₊ω₊ equals ±(2/radius)e¹²³, which solves Rc = ¼H².
pub fn hopf_gk(radius: f64) -> Result<GKState> {
    let alg = FrameAlgebra::su2_u1(radius);
    let left = Backend::frame(alg.clone());
    let right = Backend::frame(alg.opposite());
    let g = Metric::euclidean(&left);
    let jp = AlmostComplexStructure::standard(&left)?;
    let jm = AlmostComplexStructure::standard(&right)?;
    let h = d_c(&kahler_form(&g, &jp)?, &jp)?;
    GKState::new(g, h, jp, jm)
}
