//! Inversion for point detectors on a sphere.
//!
//! With `F(Λ) = (2π)^{-3/2} ∫ f(x) e^{+i x·Λ} dx`:
//!
//! 1. Temporal transform of every detector row (shared with the ring code).
//! 2. `P̂_{s,p}(λ) = ∫ P̂(Rŷ, λ) conj(Y_s^p(ŷ)) dŷ` by azimuthal FFT and
//!    Gauss-Legendre quadrature.
//! 3. `b_{s,p}(λ) = √(2/π) i^s P̂_{s,p}(λ) / (λ² h_s(λR))`.
//! 4. `F(λ, θ, φ) = Σ b_{s,p}(λ) Y_s^p(θ, φ)` on an equiangular grid.
//! 5. `F(0)` from the `(s, p) = (0, 0)` row.
//! 6. Regridding, then `f(x) = (2π)^{-3/2} ∫ F(Λ) e^{-i x·Λ} dΛ`.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::model::{DetectorSphere, GeometryTag, SeriesData};
use crate::recon2d::{check_series, smooth_size, time_fft_rows, DetectorSpectrum, FrequencyGrid, Reconstruction, SpectralConfig, DC_REFINE};
use crate::specfun::{spherical_h1_all, tri_index, HankelValue, LegendreTable};
use crate::specgrid::{cartesian_inverse, real_image, spherical_to_cartesian, CartesianGrid, Kernel, SphericalSpectrum};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `P̂_{s,p}(λ_m)` (or `b_{s,p}`) for `0 <= s <= S`, `|p| <= s`.
/// Row `m` holds `(S+1)^2` entries, `(s, p)` at `s^2 + s + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalHarmonicSpectrum {
    pub max_degree: usize,
    pub n_rows: usize,
    pub d_lambda: f64,
    pub coeffs: Vec<Complex64>,
}

impl SphericalHarmonicSpectrum {
    pub fn zeros(max_degree: usize, n_rows: usize, d_lambda: f64) -> Self {
        Self { max_degree, n_rows, d_lambda, coeffs: vec![ZERO; n_rows * Self::width_for(max_degree)] }
    }

    #[inline]
    pub fn width_for(max_degree: usize) -> usize {
        (max_degree + 1) * (max_degree + 1)
    }

    /// Offset of `(s, p)` within a row.
    #[inline]
    pub fn index(s: usize, p: i64) -> usize {
        packed(s, p)
    }

    pub fn width(&self) -> usize {
        Self::width_for(self.max_degree)
    }

    pub fn get(&self, m: usize, s: usize, p: i64) -> Complex64 {
        self.coeffs[m * self.width() + packed(s, p)]
    }

    pub fn set(&mut self, m: usize, s: usize, p: i64, v: Complex64) {
        let w = self.width();
        self.coeffs[m * w + packed(s, p)] = v;
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        let w = self.width();
        &self.coeffs[m * w..(m + 1) * w]
    }

    pub fn lambda(&self, m: usize) -> f64 {
        m as f64 * self.d_lambda
    }
}

#[inline]
fn packed(s: usize, p: i64) -> usize {
    debug_assert!(p.unsigned_abs() as usize <= s);
    ((s * s + s) as i64 + p) as usize
}

#[inline]
fn parity(q: usize) -> f64 {
    if q % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Spherical-harmonic coefficients up to degree `max_degree` of every
/// frequency row of `spec`, sampled on `sphere`. `table` must hold the
/// normalised Legendre values at the sphere's polar nodes.
pub fn sph_analysis(
    spec: &DetectorSpectrum,
    sphere: &DetectorSphere,
    table: &LegendreTable,
    max_degree: usize,
) -> Result<SphericalHarmonicSpectrum> {
    if max_degree > sphere.max_degree() {
        return Err(Error::Aliasing(format!(
            "degree {max_degree} exceeds the sphere grid limit {}",
            sphere.max_degree()
        )));
    }
    if table.max_degree() < max_degree || table.nodes() != sphere.cos_theta() {
        return Err(Error::Config("Legendre table does not match the sphere grid".into()));
    }
    if spec.count != sphere.count() {
        return Err(Error::Geometry(format!("{} rows for a {}-detector sphere", spec.count, sphere.count())));
    }
    let (n_theta, n_phi) = (sphere.n_theta, sphere.n_phi);
    let fft = FftPlanner::new().plan_fft_forward(n_phi);
    let width = SphericalHarmonicSpectrum::width_for(max_degree);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut coeffs = vec![ZERO; spec.n_rows * width];
    coeffs.par_chunks_mut(width).enumerate().for_each(|(m, out)| {
        let mut buf = vec![ZERO; n_phi];
        for i in 0..n_theta {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = spec.values[(i * n_phi + j) * spec.n_rows + m];
            }
            fft.process(&mut buf);
            let w = sphere.weights()[i] * dphi;
            let leg = table.row(i);
            for s in 0..=max_degree {
                for q in 0..=s {
                    let pl = w * leg[tri_index(s, q)];
                    out[packed(s, q as i64)] += pl * buf[q];
                    if q > 0 {
                        out[packed(s, -(q as i64))] += parity(q) * pl * buf[n_phi - q];
                    }
                }
            }
        }
    });
    Ok(SphericalHarmonicSpectrum { max_degree, n_rows: spec.n_rows, d_lambda: spec.d_lambda, coeffs })
}

/// `i^s`.
#[inline]
fn i_pow(s: usize) -> Complex64 {
    match s % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `b_{s,p}(λ) = √(2/π) i^s P̂_{s,p}(λ) / (λ² h_s(λR))`; row 0 and overflowing
/// degrees are zero.
pub fn spectral_filter_3d(spec: &SphericalHarmonicSpectrum, radius: f64) -> Result<SphericalHarmonicSpectrum> {
    let smax = spec.max_degree;
    let width = spec.width();
    let c = (2.0 / PI).sqrt();
    let mut coeffs = vec![ZERO; spec.coeffs.len()];
    let rows: Result<Vec<()>> = coeffs
        .par_chunks_mut(width)
        .enumerate()
        .skip(1)
        .map(|(m, out)| {
            let lambda = spec.lambda(m);
            let h = spherical_h1_all(smax, lambda * radius)?;
            let input = spec.row(m);
            for s in 0..=smax {
                let factor = match h[s] {
                    HankelValue::Finite(hs) => c * i_pow(s) / (lambda * lambda * hs),
                    HankelValue::Overflow => ZERO,
                };
                for idx in s * s..(s + 1) * (s + 1) {
                    out[idx] = factor * input[idx];
                }
            }
            Ok(())
        })
        .collect();
    rows?;
    Ok(SphericalHarmonicSpectrum { max_degree: smax, n_rows: spec.n_rows, d_lambda: spec.d_lambda, coeffs })
}

/// `Σ_{s,p} c_{s,p} Y_s^p` for every row on the grid `table.nodes() × n_phi`
/// azimuths, row-major `[m][i][j]`. Row 0 is skipped (left zero) when
/// `skip_dc` is set.
pub fn sph_synthesis_on(
    b: &SphericalHarmonicSpectrum,
    table: &LegendreTable,
    n_phi: usize,
    skip_dc: bool,
) -> Result<Vec<Complex64>> {
    let smax = b.max_degree;
    if n_phi < 2 * smax + 1 {
        return Err(Error::Aliasing(format!("{n_phi} azimuths cannot carry orders up to {smax}")));
    }
    if table.max_degree() < smax {
        return Err(Error::Config("Legendre table degree below the coefficient degree".into()));
    }
    let n_theta = table.nodes().len();
    let fft = FftPlanner::new().plan_fft_inverse(n_phi);
    let plane = n_theta * n_phi;
    let mut values = vec![ZERO; b.n_rows * plane];
    let start = usize::from(skip_dc);
    values.par_chunks_mut(plane).enumerate().skip(start).for_each(|(m, out)| {
        let row = b.row(m);
        for (i, line) in out.chunks_mut(n_phi).enumerate() {
            let leg = table.row(i);
            for s in 0..=smax {
                for q in 0..=s {
                    let pl = leg[tri_index(s, q)];
                    line[q] += pl * row[packed(s, q as i64)];
                    if q > 0 {
                        line[n_phi - q] += parity(q) * pl * row[packed(s, -(q as i64))];
                    }
                }
            }
            fft.process(line);
        }
    });
    Ok(values)
}

/// Polar nodes `θ_i = iπ/(n_theta - 1)` used by [`sph_synthesis`].
pub fn equiangular_cosines(n_theta: usize) -> Vec<f64> {
    (0..n_theta).map(|i| (PI * i as f64 / (n_theta - 1) as f64).cos()).collect()
}

/// `F(λ_m, θ_i, φ_j)` on the equiangular grid; `dc` is left zero.
pub fn sph_synthesis(b: &SphericalHarmonicSpectrum, n_theta: usize, n_phi: usize) -> Result<SphericalSpectrum> {
    if n_theta < 2 {
        return Err(Error::Config("need at least 2 polar nodes".into()));
    }
    let table = LegendreTable::new(b.max_degree, equiangular_cosines(n_theta))?;
    let values = sph_synthesis_on(b, &table, n_phi, true)?;
    Ok(SphericalSpectrum { d_lambda: b.d_lambda, n_rows: b.n_rows, n_theta, n_phi, values, dc: ZERO })
}

/// Trapezoid rule for
/// `F(0) = √(4π) i R² / (√2 π^{5/2}) ∫ P̂_{0,0}(λ) e^{-iλR} (sin(λR)/(λR) - cos(λR)) / λ dλ`
/// over rows `λ_m = m d_lambda`; the `λ = 0` node contributes zero.
pub fn dc_term_3d(p00: &[Complex64], d_lambda: f64, radius: f64) -> Complex64 {
    let n = p00.len();
    let mut acc = ZERO;
    for (m, v) in p00.iter().enumerate().skip(1) {
        let lambda = m as f64 * d_lambda;
        let x = lambda * radius;
        let g = *v * Complex64::from_polar(1.0, -x) * (x.sin() / x - x.cos()) / lambda;
        acc += if m == n - 1 { 0.5 * g } else { g };
    }
    let c = (4.0 * PI).sqrt() * radius * radius / (2.0f64.sqrt() * PI.powf(2.5));
    Complex64::new(0.0, c) * acc * d_lambda
}

/// `F(0)` from the `Y_0^0` projection of the record, transformed on a grid
/// [`DC_REFINE`] times finer than `grid`.
fn dc_from_sphere_mean(data: &SeriesData, sphere: &DetectorSphere, grid: &FrequencyGrid, band: f64) -> Complex64 {
    let nt = data.time.nt;
    let mut mean = vec![0.0; nt];
    let dphi = 2.0 * PI / sphere.n_phi as f64;
    let y00 = 1.0 / (4.0 * PI).sqrt();
    for i in 0..sphere.n_theta {
        let w = sphere.weights()[i] * dphi * y00;
        for j in 0..sphere.n_phi {
            for (m, v) in mean.iter_mut().zip(data.row(i * sphere.n_phi + j)) {
                *m += w * v;
            }
        }
    }
    let single = SeriesData { count: 1, values: mean, ..data.clone_header() };
    let fine = FrequencyGrid { dt: grid.dt, n_fft: grid.n_fft * DC_REFINE };
    let n_rows = ((band / fine.d_lambda()).floor() as usize + 1).min(fine.n_lambda());
    let p = time_fft_rows(&single, &fine, n_rows);
    dc_term_3d(&p.values, p.d_lambda, data.radius)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recon3dConfig {
    /// Image nodes per axis.
    pub n: usize,
    /// Half-width of the image cube; defaults to the sphere radius.
    pub extent: Option<f64>,
    pub spectral: SpectralConfig,
    /// Harmonic degree `S`; defaults to `min(n_theta - 1, ⌈e λ_max R / 2⌉)`.
    pub max_degree: Option<usize>,
    /// Synthesis grid nodes per degree of freedom in each angle.
    pub angular_oversample: usize,
}

impl Recon3dConfig {
    pub fn new(n: usize) -> Self {
        Self { n, extent: None, spectral: SpectralConfig::default(), max_degree: None, angular_oversample: 4 }
    }
}

/// Filtered harmonic coefficients and `F(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralStage3D {
    pub b: SphericalHarmonicSpectrum,
    pub dc: Complex64,
}

/// Steps 1-5 without the synthesis.
pub fn spectral_stage_3d(data: &SeriesData, sphere: &DetectorSphere, cfg: &Recon3dConfig) -> Result<SpectralStage3D> {
    check_series(data, "sphere", data.geometry == GeometryTag::Sphere, sphere.count(), sphere.radius)?;
    let radius = sphere.radius;
    if data.time.t_max() < 2.0 * radius * (1.0 - 1e-12) {
        return Err(Error::Config(format!(
            "3D records must cover [0, 2R]: t_max = {} < {}",
            data.time.t_max(),
            2.0 * radius
        )));
    }
    let grid = FrequencyGrid::new(&data.time, cfg.spectral.pad_factor)?;
    let s_det = sphere.max_degree();
    let band = cfg
        .spectral
        .band_limit
        .unwrap_or_else(|| grid.lambda_max().min(s_det as f64 / radius))
        .min(grid.lambda_max());
    if !(band > 0.0) {
        return Err(Error::Config(format!("band limit must be positive, got {band}")));
    }
    let n_rows = ((band / grid.d_lambda()).floor() as usize + 1).min(grid.n_lambda());
    if n_rows < 4 {
        return Err(Error::Config("record too short: fewer than 4 frequency rows in band".into()));
    }
    let smax = match cfg.max_degree {
        Some(s) if s > s_det => {
            return Err(Error::Aliasing(format!("degree {s} exceeds the sphere grid limit {s_det}")))
        }
        Some(s) => s,
        None => s_det.min((E * band * radius / 2.0).ceil() as usize),
    };
    let p_hat = time_fft_rows(data, &grid, n_rows);
    let table = LegendreTable::new(smax, sphere.cos_theta().to_vec())?;
    let harmonics = sph_analysis(&p_hat, sphere, &table, smax)?;
    let b = spectral_filter_3d(&harmonics, radius)?;
    let dc = dc_from_sphere_mean(data, sphere, &grid, band);
    Ok(SpectralStage3D { b, dc })
}

/// Full pipeline for sphere data.
pub fn reconstruct_3d(data: &SeriesData, sphere: &DetectorSphere, cfg: &Recon3dConfig) -> Result<Reconstruction> {
    let stage = spectral_stage_3d(data, sphere, cfg)?;
    let os = cfg.angular_oversample.max(1);
    let dof = stage.b.max_degree + 1;
    let n_theta = os * dof + 1;
    let n_phi = smooth_size((os * dof).max(2 * stage.b.max_degree + 1));
    let mut spec = sph_synthesis(&stage.b, n_theta, n_phi)?;
    spec.dc = Complex64::new(stage.dc.re, 0.0);
    let grid = CartesianGrid::new(cfg.n, cfg.extent.unwrap_or(sphere.radius))?;
    let mut cart = spherical_to_cartesian(&spec, &grid);
    drop(spec);
    cartesian_inverse(&mut cart, 3, &grid, Kernel::Minus, (2.0 * PI).powf(-1.5));
    let (image, imag_ratio) = real_image(&cart, 3, &grid);
    Ok(Reconstruction { image, imag_ratio, dc: stage.dc.re, dc_imag: stage.dc.im })
}
