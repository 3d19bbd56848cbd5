use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Differentiation scheme of a grid chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// Centered finite differences of the given even order (2, 4, 6 or 8).
    Fd(usize),
    /// Fourier differentiation (periodic charts only).
    Spectral,
}

impl Stencil {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spectral" => Ok(Stencil::Spectral),
            "fd2" => Ok(Stencil::Fd(2)),
            "fd4" => Ok(Stencil::Fd(4)),
            "fd6" => Ok(Stencil::Fd(6)),
            "fd8" => Ok(Stencil::Fd(8)),
            other => Err(Error::InvalidArgument(format!("unknown stencil '{other}'"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Stencil::Fd(p) => format!("fd{p}"),
            Stencil::Spectral => "spectral".into(),
        }
    }
}

/// One-sided weights w_1..w_r of the centered first-derivative stencil
/// f'(x) ~ sum_s w_s (f(x + s h) - f(x - s h)) / h.
pub(crate) fn fd_weights(order: usize) -> Result<&'static [f64]> {
    match order {
        2 => Ok(&[0.5]),
        4 => Ok(&[2.0 / 3.0, -1.0 / 12.0]),
        6 => Ok(&[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0]),
        8 => Ok(&[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0]),
        _ => Err(Error::InvalidArgument(format!("unsupported stencil order {order}"))),
    }
}

/// Uniform periodic grid on a flat torus.
///
/// Axes of resolution 1 are invariant directions: fields are constant along
/// them and their derivative vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusChart {
    dim: usize,
    resolution: Vec<usize>,
    periods: Vec<f64>,
    spacing: Vec<f64>,
    stencil: Stencil,
}

impl TorusChart {
    pub fn new(resolution: &[usize], periods: &[f64], stencil: Stencil) -> Result<Self> {
        if resolution.is_empty() || resolution.len() != periods.len() {
            return Err(Error::Shape("resolution and periods must have equal nonzero length".into()));
        }
        for (a, (&n, &l)) in resolution.iter().zip(periods).enumerate() {
            if n != 1 && n < 8 {
                return Err(Error::InvalidArgument(format!(
                    "axis {a}: resolution {n} (need >= 8, or 1 for an invariant axis)"
                )));
            }
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument(format!("axis {a}: period must be positive")));
            }
        }
        if let Stencil::Fd(p) = stencil {
            fd_weights(p)?;
        }
        if resolution.iter().all(|&n| n == 1) {
            return Err(Error::InvalidArgument("at least one axis must be resolved".into()));
        }
        let spacing = resolution.iter().zip(periods).map(|(&n, &l)| l / n as f64).collect();
        Ok(Self { dim: resolution.len(), resolution: resolution.to_vec(), periods: periods.to_vec(), spacing, stencil })
    }

    /// Cube of side `period` with `n` points on every axis.
    pub fn cube(dim: usize, n: usize, period: f64, stencil: Stencil) -> Result<Self> {
        Self::new(&vec![n; dim], &vec![period; dim], stencil)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }
    pub fn periods(&self) -> &[f64] {
        &self.periods
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }
    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn npoints(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Smallest spacing over resolved axes.
    pub fn min_spacing(&self) -> f64 {
        self.resolution.iter().zip(&self.spacing).filter(|(&n, _)| n > 1).map(|(_, &h)| h).fold(f64::INFINITY, f64::min)
    }

    /// Coordinates of grid point `p` (row-major, last axis fastest).
    pub fn coords(&self, p: usize) -> Vec<f64> {
        unravel(p, &self.resolution).iter().zip(&self.spacing).map(|(&i, &h)| i as f64 * h).collect()
    }

    pub fn with_stencil(&self, stencil: Stencil) -> Result<Self> {
        Self::new(&self.resolution, &self.periods, stencil)
    }
}

/// Left-invariant frame of a Lie group: [e_i, e_j] = c^k_{ij} e_k.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlgebra {
    dim: usize,
    c: Vec<f64>,
    frame_metric: Vec<f64>,
    name: String,
}

impl FrameAlgebra {
    /// `c[(i*n + j)*n + k] = c^k_{ij}`; `frame_metric` is row-major n x n.
    pub fn new(name: &str, dim: usize, c: Vec<f64>, frame_metric: Vec<f64>) -> Result<Self> {
        if c.len() != dim * dim * dim || frame_metric.len() != dim * dim {
            return Err(Error::Shape("structure constants or frame metric have wrong length".into()));
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    if c[(i * dim + j) * dim + k] != -c[(j * dim + i) * dim + k] {
                        return Err(Error::InvalidArgument(format!(
                            "structure constants not antisymmetric at ({i},{j},{k})"
                        )));
                    }
                }
                if frame_metric[i * dim + j] != frame_metric[j * dim + i] {
                    return Err(Error::InvalidArgument("frame metric not symmetric".into()));
                }
            }
        }
        let alg = Self { dim, c, frame_metric, name: name.to_string() };
        let jac = alg.jacobi_residual();
        if jac > 1e-12 {
            return Err(Error::InvalidArgument(format!("Jacobi identity fails: residual {jac:e}")));
        }
        let m = nalgebra::DMatrix::from_row_slice(dim, dim, &alg.frame_metric);
        let eig = m.symmetric_eigen().eigenvalues.min();
        if eig <= 0.0 {
            return Err(Error::InvalidArgument("frame metric not positive definite".into()));
        }
        Ok(alg)
    }

    /// Abelian algebra (flat torus realized by invariant fields).
    pub fn abelian(dim: usize) -> Self {
        Self::new("abelian", dim, vec![0.0; dim * dim * dim], identity(dim)).expect("abelian algebra")
    }

    /// su(2) for the round 3-sphere of the given radius with orthonormal frame.
    pub fn su2(radius: f64) -> Self {
        let mut c = vec![0.0; 27];
        let s = 2.0 / radius;
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c[(i * 3 + j) * 3 + k] = s;
            c[(j * 3 + i) * 3 + k] = -s;
        }
        Self::new("su2", 3, c, identity(3)).expect("su2 algebra")
    }

    /// u(1) + su(2): frame e_0 spans the circle factor, e_1..e_3 the round 3-sphere.
    pub fn su2_u1(radius: f64) -> Self {
        let mut c = vec![0.0; 64];
        let s = 2.0 / radius;
        for (i, j, k) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
            c[(i * 4 + j) * 4 + k] = s;
            c[(j * 4 + i) * 4 + k] = -s;
        }
        Self::new("su2+u1", 4, c, identity(4)).expect("su2+u1 algebra")
    }

    /// Algebra of right-invariant fields of the same group (c -> -c).
    pub fn opposite(&self) -> Self {
        let name = match self.name.strip_suffix("^op") {
            Some(base) => base.to_string(),
            None => format!("{}^op", self.name),
        };
        Self { dim: self.dim, c: self.c.iter().map(|v| -v).collect(), frame_metric: self.frame_metric.clone(), name }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn structure_constants(&self) -> &[f64] {
        &self.c
    }
    pub fn frame_metric(&self) -> &[f64] {
        &self.frame_metric
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    /// max |sum_cyclic c^m_{ij} c^l_{mk}|.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += self.c(i, j, m) * self.c(m, k, l)
                                + self.c(j, k, m) * self.c(m, i, l)
                                + self.c(k, i, m) * self.c(m, j, l);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    pub fn is_opposite_of(&self, other: &FrameAlgebra) -> bool {
        self.dim == other.dim && self.c.iter().zip(&other.c).all(|(a, b)| *a == -*b)
    }
}

/// Small non-periodic cube of points centred at `center`, for jets at a point.
/// Derivatives whose stencil leaves the patch are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchChart {
    center: Vec<f64>,
    spacing: f64,
    half_width: usize,
    order: usize,
}

impl PatchChart {
    pub fn new(center: &[f64], spacing: f64, half_width: usize, order: usize) -> Result<Self> {
        fd_weights(order)?;
        if !(spacing > 0.0) || center.is_empty() {
            return Err(Error::InvalidArgument("patch needs positive spacing and nonempty center".into()));
        }
        Ok(Self { center: center.to_vec(), spacing, half_width, order })
    }

    /// Patch just large enough for two nested derivatives at the centre.
    pub fn for_second_jets(center: &[f64], spacing: f64, order: usize) -> Result<Self> {
        Self::new(center, spacing, order, order)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }
    pub fn npoints(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn center_index(&self) -> usize {
        let side = self.side();
        (0..self.dim()).fold(0, |acc, _| acc * side + self.half_width)
    }
    pub fn coords(&self, p: usize) -> Vec<f64> {
        let res = vec![self.side(); self.dim()];
        unravel(p, &res)
            .iter()
            .zip(&self.center)
            .map(|(&i, &c)| c + (i as f64 - self.half_width as f64) * self.spacing)
            .collect()
    }
}

/// Discretization backend shared by all fields of a computation.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Torus(TorusChart),
    Frame(FrameAlgebra),
    Patch(PatchChart),
}

impl Backend {
    pub fn torus(chart: TorusChart) -> Arc<Self> {
        Arc::new(Backend::Torus(chart))
    }
    pub fn frame(alg: FrameAlgebra) -> Arc<Self> {
        Arc::new(Backend::Frame(alg))
    }
    pub fn patch(chart: PatchChart) -> Arc<Self> {
        Arc::new(Backend::Patch(chart))
    }

    pub fn dim(&self) -> usize {
        match self {
            Backend::Torus(t) => t.dim(),
            Backend::Frame(f) => f.dim(),
            Backend::Patch(p) => p.dim(),
        }
    }

    pub fn npoints(&self) -> usize {
        match self {
            Backend::Torus(t) => t.npoints(),
            Backend::Frame(_) => 1,
            Backend::Patch(p) => p.npoints(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Backend::Torus(_) => "torus",
            Backend::Frame(_) => "frame",
            Backend::Patch(_) => "patch",
        }
    }

    /// Structure constants of the frame, `None` for coordinate frames.
    pub fn structure_constants(&self) -> Option<&FrameAlgebra> {
        match self {
            Backend::Frame(f) => Some(f),
            _ => None,
        }
    }

    /// Quadrature weight of one sample point.
    pub fn cell_volume(&self) -> f64 {
        match self {
            Backend::Torus(t) => t.spacing().iter().product(),
            Backend::Frame(_) => 1.0,
            Backend::Patch(p) => p.spacing().powi(p.dim() as i32),
        }
    }

    /// Coordinates of point `p` (empty for the frame backend).
    pub fn coords(&self, p: usize) -> Vec<f64> {
        match self {
            Backend::Torus(t) => t.coords(p),
            Backend::Frame(_) => Vec::new(),
            Backend::Patch(c) => c.coords(p),
        }
    }

    /// Multi-index of point `p`.
    pub fn point_index(&self, p: usize) -> Vec<usize> {
        match self {
            Backend::Torus(t) => unravel(p, t.resolution()),
            Backend::Frame(_) => Vec::new(),
            Backend::Patch(c) => unravel(p, &vec![c.side(); c.dim()]),
        }
    }

    /// Derivative along frame direction `axis` of a scalar sampled at every point.
    pub fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.npoints());
        match self {
            Backend::Frame(_) => vec![0.0; f.len()],
            Backend::Torus(t) => {
                let n = t.resolution()[axis];
                if n == 1 {
                    return vec![0.0; f.len()];
                }
                match t.stencil() {
                    Stencil::Fd(p) => fd_periodic(f, t.resolution(), axis, t.spacing()[axis], fd_weights(p).unwrap()),
                    Stencil::Spectral => spectral_derivative(f, t.resolution(), axis, t.periods()[axis]),
                }
            }
            Backend::Patch(c) => {
                let res = vec![c.side(); c.dim()];
                fd_patch(f, &res, axis, c.spacing(), fd_weights(c.order()).unwrap())
            }
        }
    }

    /// True when fields on `self` and `other` can be combined pointwise.
    pub fn same_points(&self, other: &Backend) -> bool {
        match (self, other) {
            (Backend::Frame(a), Backend::Frame(b)) => a == b || a.is_opposite_of(b),
            _ => self == other,
        }
    }
}

pub(crate) fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Row-major multi-index of flat index `p`.
pub fn unravel(mut p: usize, res: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; res.len()];
    for a in (0..res.len()).rev() {
        idx[a] = p % res[a];
        p /= res[a];
    }
    idx
}

fn axis_stride(res: &[usize], axis: usize) -> usize {
    res[axis + 1..].iter().product()
}

fn fd_periodic(f: &[f64], res: &[usize], axis: usize, h: f64, w: &[f64]) -> Vec<f64> {
    let n = res[axis];
    let stride = axis_stride(res, axis);
    let mut out = vec![0.0; f.len()];
    for (p, o) in out.iter_mut().enumerate() {
        let i = (p / stride) % n;
        let base = p - i * stride;
        let mut s = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let sh = k + 1;
            let ip = (i + sh) % n;
            let im = (i + n * sh - sh) % n;
            s += wk * (f[base + ip * stride] - f[base + im * stride]);
        }
        *o = s / h;
    }
    out
}

fn fd_patch(f: &[f64], res: &[usize], axis: usize, h: f64, w: &[f64]) -> Vec<f64> {
    let n = res[axis];
    let stride = axis_stride(res, axis);
    let r = w.len();
    let mut out = vec![0.0; f.len()];
    for (p, o) in out.iter_mut().enumerate() {
        let i = (p / stride) % n;
        if i < r || i + r >= n {
            *o = f64::NAN;
            continue;
        }
        let base = p - i * stride;
        let mut s = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let sh = k + 1;
            s += wk * (f[base + (i + sh) * stride] - f[base + (i - sh) * stride]);
        }
        *o = s / h;
    }
    out
}

fn spectral_derivative(f: &[f64], res: &[usize], axis: usize, period: f64) -> Vec<f64> {
    let n = res[axis];
    let stride = axis_stride(res, axis);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut out = vec![0.0; f.len()];
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let scale = 2.0 * PI / period;
    let outer = f.len() / (n * stride);
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for (i, v) in line.iter_mut().enumerate() {
                *v = Complex64::new(f[base + i * stride], 0.0);
            }
            fwd.process(&mut line);
            for (m, v) in line.iter_mut().enumerate() {
                let k = if 2 * m < n {
                    m as f64
                } else if 2 * m == n {
                    0.0
                } else {
                    m as f64 - n as f64
                };
                *v *= Complex64::new(0.0, k * scale / n as f64);
            }
            inv.process(&mut line);
            for (i, v) in line.iter().enumerate() {
                out[base + i * stride] = v.re;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(chart: &TorusChart, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..chart.npoints()).map(|p| f(&chart.coords(p))).collect()
    }

    #[test]
    fn rejects_coarse_axes() {
        assert!(TorusChart::new(&[4, 8], &[1.0, 1.0], Stencil::Fd(4)).is_err());
        assert!(TorusChart::new(&[16, 1], &[1.0, 1.0], Stencil::Fd(4)).is_ok());
    }

    #[test]
    fn spectral_derivative_exact_for_trig() {
        let chart = TorusChart::new(&[16, 8], &[2.0 * PI, 3.0], Stencil::Spectral).unwrap();
        let b = Backend::Torus(chart.clone());
        let f = sample(&chart, |x| (3.0 * x[0]).sin() * (2.0 * PI * x[1] / 3.0).cos());
        let d0 = b.derivative(&f, 0);
        let want = sample(&chart, |x| 3.0 * (3.0 * x[0]).cos() * (2.0 * PI * x[1] / 3.0).cos());
        for (a, w) in d0.iter().zip(&want) {
            assert!((a - w).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_orders_converge() {
        for order in [2usize, 4, 6] {
            let mut errs = Vec::new();
            for n in [16usize, 32] {
                let chart = TorusChart::new(&[n, 8], &[1.0, 1.0], Stencil::Fd(order)).unwrap();
                let b = Backend::Torus(chart.clone());
                let f = sample(&chart, |x| (2.0 * PI * x[0]).sin());
                let d = b.derivative(&f, 0);
                let e = d
                    .iter()
                    .zip(sample(&chart, |x| 2.0 * PI * (2.0 * PI * x[0]).cos()))
                    .map(|(a, w)| (a - w).abs())
                    .fold(0.0, f64::max);
                errs.push(e);
            }
            let rate = (errs[0] / errs[1]).log2();
            assert!((rate - order as f64).abs() < 0.3, "order {order}: rate {rate}");
        }
    }

    #[test]
    fn patch_boundary_is_nan() {
        let chart = PatchChart::new(&[1.0, 0.5], 0.01, 4, 4).unwrap();
        let b = Backend::Patch(chart.clone());
        let f: Vec<f64> = (0..chart.npoints()).map(|p| chart.coords(p)[0].powi(2)).collect();
        let d = b.derivative(&f, 0);
        assert!(d[0].is_nan());
        let c = chart.center_index();
        assert!((d[c] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn su2_jacobi_and_opposite() {
        let a = FrameAlgebra::su2_u1(1.0);
        assert!(a.jacobi_residual() < 1e-14);
        let op = a.opposite();
        assert!(op.is_opposite_of(&a));
        assert_eq!(op.opposite(), a);
    }
}
