//! Regridding of spectra sampled on polar and spherical frequency grids onto
//! Cartesian frequency grids, and the final Cartesian inverse transforms.
//!
//! Radial interpolation is a 4-point Lagrange cubic in `|Λ|` whose stencil is
//! clamped to the sampled rows (one-sided at `λ = 0` and at the band edge);
//! angular interpolation is linear in `φ` (2D) or bilinear in `(θ, φ)` (3D).
//! Row 0 of every spectrum is the dc value. Nodes beyond the last sampled
//! radius are set to zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::model::Image;
use crate::{Error, Result};

/// `f̂(λ_m, φ_q)` with `λ_m = m Δλ`, `φ_q = 2π q / n_phi`; row 0 is ignored in
/// favour of `dc`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSpectrum {
    pub d_lambda: f64,
    pub n_rows: usize,
    pub n_phi: usize,
    /// Row-major `[m][q]`.
    pub values: Vec<Complex64>,
    pub dc: Complex64,
}

impl PolarSpectrum {
    pub fn lambda_max(&self) -> f64 {
        (self.n_rows - 1) as f64 * self.d_lambda
    }

    #[inline]
    fn at(&self, m: usize, q: usize) -> Complex64 {
        if m == 0 {
            self.dc
        } else {
            self.values[m * self.n_phi + q]
        }
    }

    /// Interpolated value at polar coordinates `(rho, phi)`.
    pub fn interpolate(&self, rho: f64, phi: f64) -> Complex64 {
        if rho > self.lambda_max() * (1.0 + 1e-12) {
            return Complex64::new(0.0, 0.0);
        }
        if rho == 0.0 {
            return self.dc;
        }
        let (q0, q1, wq) = angular_bracket(phi, self.n_phi);
        let (base, w) = radial_stencil(rho / self.d_lambda, self.n_rows);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, wk) in w.iter().enumerate() {
            let m = base + k;
            acc += *wk * (self.at(m, q0) * (1.0 - wq) + self.at(m, q1) * wq);
        }
        acc
    }
}

/// `F(λ_m, θ_i, φ_j)` on the equiangular grid `θ_i = iπ/(n_theta-1)`,
/// `φ_j = 2πj/n_phi`; row 0 is ignored in favour of `dc`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSpectrum {
    pub d_lambda: f64,
    pub n_rows: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Row-major `[m][i][j]`.
    pub values: Vec<Complex64>,
    pub dc: Complex64,
}

impl SphericalSpectrum {
    pub fn lambda_max(&self) -> f64 {
        (self.n_rows - 1) as f64 * self.d_lambda
    }

    #[inline]
    fn at(&self, m: usize, i: usize, j: usize) -> Complex64 {
        if m == 0 {
            self.dc
        } else {
            self.values[(m * self.n_theta + i) * self.n_phi + j]
        }
    }

    /// Interpolated value at spherical coordinates `(rho, theta, phi)`.
    pub fn interpolate(&self, rho: f64, theta: f64, phi: f64) -> Complex64 {
        if rho > self.lambda_max() * (1.0 + 1e-12) {
            return Complex64::new(0.0, 0.0);
        }
        if rho == 0.0 {
            return self.dc;
        }
        let dth = PI / (self.n_theta - 1) as f64;
        let u = (theta / dth).clamp(0.0, (self.n_theta - 1) as f64);
        let i0 = (u.floor() as usize).min(self.n_theta - 2);
        let wt = u - i0 as f64;
        let (j0, j1, wp) = angular_bracket(phi, self.n_phi);
        let (base, w) = radial_stencil(rho / self.d_lambda, self.n_rows);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, wk) in w.iter().enumerate() {
            let m = base + k;
            let lo = self.at(m, i0, j0) * (1.0 - wp) + self.at(m, i0, j1) * wp;
            let hi = self.at(m, i0 + 1, j0) * (1.0 - wp) + self.at(m, i0 + 1, j1) * wp;
            acc += *wk * (lo * (1.0 - wt) + hi * wt);
        }
        acc
    }
}

/// Stencil start and Lagrange weights for fractional row `u`.
#[inline]
pub(crate) fn radial_stencil(u: f64, n_rows: usize) -> (usize, [f64; 4]) {
    debug_assert!(n_rows >= 4);
    let base = (u.floor() as isize - 1).clamp(0, n_rows as isize - 4) as usize;
    let x = u - base as f64;
    (
        base,
        [
            -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0,
            x * (x - 2.0) * (x - 3.0) / 2.0,
            -x * (x - 1.0) * (x - 3.0) / 2.0,
            x * (x - 1.0) * (x - 2.0) / 6.0,
        ],
    )
}

/// Neighbouring azimuth indices and the weight of the upper one.
#[inline]
pub(crate) fn angular_bracket(phi: f64, n_phi: usize) -> (usize, usize, f64) {
    let u = phi.rem_euclid(2.0 * PI) / (2.0 * PI) * n_phi as f64;
    let q0 = (u.floor() as usize).min(n_phi - 1);
    let w = (u - q0 as f64).clamp(0.0, 1.0);
    (q0, (q0 + 1) % n_phi, w)
}

/// Cartesian frequency grid dual to an image grid of `n` nodes on `[-L, L]`:
/// `Λ_q = (q - ⌊n/2⌋) ΔΛ`, `ΔΛ = 2π / (n h)`, `h = 2L / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianGrid {
    pub n: usize,
    pub extent: f64,
}

impl CartesianGrid {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < 2 || !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Config(format!("invalid Cartesian grid n={n}, extent={extent}")));
        }
        Ok(Self { n, extent })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.n - 1) as f64
    }

    pub fn d_freq(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.spacing())
    }

    #[inline]
    pub fn freq(&self, q: usize) -> f64 {
        (q as f64 - (self.n / 2) as f64) * self.d_freq()
    }
}

/// Cartesian samples of a polar spectrum, row-major `[q1][q2]`.
pub fn polar_to_cartesian(spec: &PolarSpectrum, grid: &CartesianGrid) -> Vec<Complex64> {
    let n = grid.n;
    let freqs: Vec<f64> = (0..n).map(|q| grid.freq(q)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(q1, row)| {
        let l1 = freqs[q1];
        for (v, &l2) in row.iter_mut().zip(&freqs) {
            *v = spec.interpolate(l1.hypot(l2), l2.atan2(l1));
        }
    });
    out
}

/// Cartesian samples of a spherical spectrum, row-major `[q1][q2][q3]`.
pub fn spherical_to_cartesian(spec: &SphericalSpectrum, grid: &CartesianGrid) -> Vec<Complex64> {
    let n = grid.n;
    let freqs: Vec<f64> = (0..n).map(|q| grid.freq(q)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
    out.par_chunks_mut(n * n).enumerate().for_each(|(q1, plane)| {
        let l1 = freqs[q1];
        for (q2, row) in plane.chunks_mut(n).enumerate() {
            let l2 = freqs[q2];
            let rho_xy = l1.hypot(l2);
            let phi = l2.atan2(l1);
            for (v, &l3) in row.iter_mut().zip(&freqs) {
                let rho = rho_xy.hypot(l3);
                *v = if rho == 0.0 { spec.dc } else { spec.interpolate(rho, rho_xy.atan2(l3), phi) };
            }
        }
    });
    out
}

/// Sign of the exponent in the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `f(x) = c ∫ F(Λ) e^{+i x·Λ} dΛ`
    Plus,
    /// `f(x) = c ∫ F(Λ) e^{-i x·Λ} dΛ`
    Minus,
}

/// Evaluate `scale * ΔΛ^dim * Σ_q F(Λ_q) e^{±i x·Λ_q}` at every image node,
/// in place, by separable FFTs along each axis.
pub fn cartesian_inverse(values: &mut [Complex64], dim: usize, grid: &CartesianGrid, kernel: Kernel, scale: f64) {
    let n = grid.n;
    assert_eq!(values.len(), n.pow(dim as u32));
    let sgn = match kernel {
        Kernel::Plus => 1.0,
        Kernel::Minus => -1.0,
    };
    // e^{±i x_j Λ_q} = e^{∓i L Λ_q} · e^{±2πi j q/n} · e^{∓2πi j c/n}
    let pre: Vec<Complex64> =
        (0..n).map(|q| Complex64::from_polar(1.0, -sgn * grid.extent * grid.freq(q))).collect();
    let c = (n / 2) as f64;
    let post: Vec<Complex64> =
        (0..n).map(|j| Complex64::from_polar(1.0, -sgn * 2.0 * PI * j as f64 * c / n as f64)).collect();
    let direction = match kernel {
        Kernel::Plus => FftDirection::Inverse,
        Kernel::Minus => FftDirection::Forward,
    };
    let fft = FftPlanner::new().plan_fft(n, direction);

    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        values.par_chunks_mut(block).for_each(|chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for offset in 0..stride {
                for (q, l) in line.iter_mut().enumerate() {
                    *l = chunk[q * stride + offset] * pre[q];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    chunk[j * stride + offset] = *l * post[j];
                }
            }
        });
    }
    let total = scale * grid.d_freq().powi(dim as i32);
    for v in values.iter_mut() {
        *v *= total;
    }
}

/// Real part as an image, plus `|Im| / |Re|` over all nodes.
pub fn real_image(values: &[Complex64], dim: usize, grid: &CartesianGrid) -> (Image, f64) {
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let nr = re.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ni = values.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    let ratio = if nr > 0.0 { ni / nr } else { 0.0 };
    (Image { dim, n: grid.n, extent: grid.extent, values: re }, ratio)
}
