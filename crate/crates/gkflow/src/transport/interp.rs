use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::tensor::{Backend, TensorField, TorusChart};

/// In-place forward DFT over every axis of a row-major grid.
pub(crate) fn fft_nd(data: &mut [Complex64], res: &[usize]) {
    let mut planner = FftPlanner::new();
    let total: usize = res.iter().product();
    for (axis, &n) in res.iter().enumerate() {
        if n == 1 {
            continue;
        }
        let stride: usize = res[axis + 1..].iter().product();
        let fft = planner.plan_fft_forward(n);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in 0..total {
            // visit each line once, from its first element
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[start + i * stride];
            }
            fft.process(&mut line);
            for (i, v) in line.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
}

/// Trigonometric interpolant of every component of a torus field.
///
/// The Nyquist mode of an even axis is represented by a cosine, so the
/// interpolant is real and reproduces the samples exactly.
#[derive(Debug, Clone)]
pub struct SpectralInterpolant {
    chart: TorusChart,
    ncomp: usize,
    /// `coeffs[m * ncomp + c]`
    coeffs: Vec<Complex64>,
    /// (angular wavenumber, nyquist) per axis and index
    modes: Vec<Vec<(f64, bool)>>,
}

impl SpectralInterpolant {
    pub fn new(field: &TensorField) -> Result<Self> {
        let chart = match &**field.backend() {
            Backend::Torus(t) => t.clone(),
            _ => return Err(Error::BackendMismatch("spectral interpolation needs a torus backend".into())),
        };
        let res = chart.resolution().to_vec();
        let np = chart.npoints();
        let ncomp = field.ncomp();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); np * ncomp];
        let mut buf = vec![Complex64::new(0.0, 0.0); np];
        for c in 0..ncomp {
            for (p, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(field.at(p)[c], 0.0);
            }
            fft_nd(&mut buf, &res);
            for (m, b) in buf.iter().enumerate() {
                coeffs[m * ncomp + c] = *b / np as f64;
            }
        }
        let modes = res
            .iter()
            .zip(chart.periods())
            .map(|(&n, &l)| {
                (0..n)
                    .map(|j| {
                        let nyq = n % 2 == 0 && n > 1 && j == n / 2;
                        let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                        (2.0 * PI * k / l, nyq)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { chart, ncomp, coeffs, modes })
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn chart(&self) -> &TorusChart {
        &self.chart
    }

    /// Values at `x`; with `grad = Some(g)` also g[c * dim + a] = ∂_a f_c.
    pub fn eval(&self, x: &[f64], out: &mut [f64], mut grad: Option<&mut [f64]>) {
        let d = self.chart.dim();
        let basis: Vec<Vec<(Complex64, Complex64)>> = self
            .modes
            .iter()
            .zip(x)
            .map(|(axis, &xa)| {
                axis.iter()
                    .map(|&(k, nyq)| {
                        if nyq {
                            let (s, c) = (k * xa).sin_cos();
                            (Complex64::new(c, 0.0), Complex64::new(-k * s, 0.0))
                        } else {
                            let e = Complex64::from_polar(1.0, k * xa);
                            (e, Complex64::new(0.0, k) * e)
                        }
                    })
                    .collect()
            })
            .collect();
        let res = self.chart.resolution();
        let nc = self.ncomp;
        let mut acc = vec![Complex64::new(0.0, 0.0); nc];
        let with_grad = grad.is_some();
        let mut gacc = vec![Complex64::new(0.0, 0.0); if with_grad { nc * d } else { 0 }];
        let mut idx = vec![0usize; d];
        let mut dfac = vec![Complex64::new(0.0, 0.0); d];
        for m in 0..self.chart.npoints() {
            let mut b = Complex64::new(1.0, 0.0);
            for a in 0..d {
                b *= basis[a][idx[a]].0;
            }
            if with_grad {
                for a in 0..d {
                    let mut f = basis[a][idx[a]].1;
                    for (o, bo) in basis.iter().enumerate() {
                        if o != a {
                            f *= bo[idx[o]].0;
                        }
                    }
                    dfac[a] = f;
                }
            }
            let c = &self.coeffs[m * nc..(m + 1) * nc];
            for (k, ck) in c.iter().enumerate() {
                acc[k] += ck * b;
                if with_grad {
                    for a in 0..d {
                        gacc[k * d + a] += ck * dfac[a];
                    }
                }
            }
            // advance the row-major counter
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < res[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        for (o, v) in out.iter_mut().zip(&acc) {
            *o = v.re;
        }
        if let Some(g) = grad.as_mut() {
            for (o, v) in g.iter_mut().zip(&gacc) {
                *o = v.re;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Stencil;

    #[test]
    fn reproduces_samples_and_band_limited_functions() {
        let chart = TorusChart::new(&[8, 1, 10], &[2.0 * PI, 1.0, 3.0], Stencil::Spectral).unwrap();
        let b = Backend::torus(chart.clone());
        let f = |x: &[f64]| (x[0]).cos() * (2.0 * PI * x[2] / 3.0).sin() + (4.0 * x[0]).cos();
        let t = TensorField::from_fn(&b, 0, 0, |p, out| out[0] = f(&chart.coords(p)));
        let ip = SpectralInterpolant::new(&t).unwrap();
        let mut v = [0.0];
        let mut g = [0.0; 3];
        for p in 0..b.npoints() {
            ip.eval(&chart.coords(p), &mut v, None);
            assert!((v[0] - t.at(p)[0]).abs() < 1e-13);
        }
        let x = [0.37, 0.2, 1.1];
        ip.eval(&x, &mut v, Some(&mut g));
        assert!((v[0] - f(&x)).abs() < 1e-13);
        let k = 2.0 * PI / 3.0;
        let dx0 = -(x[0]).sin() * (k * x[2]).sin() - 4.0 * (4.0 * x[0]).sin();
        let dx2 = (x[0]).cos() * k * (k * x[2]).cos();
        assert!((g[0] - dx0).abs() < 1e-12, "{} vs {}", g[0], dx0);
        assert_eq!(g[1], 0.0);
        assert!((g[2] - dx2).abs() < 1e-12);
    }
}
