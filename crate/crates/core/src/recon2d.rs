//! Fast inversion for point detectors on a circle.
//!
//! 1. Temporal transform `P̂(y, λ) = ∫ P(y, t) e^{itλ} dt` (zero-padded FFT).
//! 2. Angular Fourier coefficients `P̂_k(λ)` over the ring.
//! 3. Filter `b_k(λ) = 2 (-i)^{|k|} P̂_k(λ) / (π λ H_{|k|}(λR))`.
//! 4. Polar samples `f̂(λ, φ) = Σ_k b_k(λ) e^{ikφ}`.
//! 5. The dc value `f̂(0)` from a separate integral identity.
//! 6. Cubic/linear regridding onto a Cartesian frequency grid.
//! 7. `f(x) = (1/2π) ∫ f̂(Λ) e^{i x·Λ} dΛ` by FFT.
//!
//! Here `f̂(Λ) = (1/2π) ∫ f(x) e^{-i x·Λ} dx`, so `f̂(0)` is the mass over `2π`.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::model::{DetectorRing, GeometryTag, Image, SeriesData, TimeGrid};
use crate::specfun::{bessel_j, hankel1_all, HankelValue};
use crate::specgrid::{cartesian_inverse, polar_to_cartesian, real_image, CartesianGrid, Kernel, PolarSpectrum};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Equispaced frequencies `λ_m = m Δλ`, `Δλ = 2π / (n_fft dt)`, `m = 0..=n_fft/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub dt: f64,
    pub n_fft: usize,
}

impl FrequencyGrid {
    /// Zero-pad the record to the next power of two at least `pad_factor * nt`.
    pub fn new(time: &TimeGrid, pad_factor: usize) -> Result<Self> {
        if pad_factor < 2 {
            return Err(Error::Config(format!("pad factor must be at least 2, got {pad_factor}")));
        }
        Ok(Self { dt: time.dt, n_fft: (pad_factor * time.nt).next_power_of_two() })
    }

    pub fn d_lambda(&self) -> f64 {
        2.0 * PI / (self.n_fft as f64 * self.dt)
    }

    pub fn n_lambda(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn lambda(&self, m: usize) -> f64 {
        m as f64 * self.d_lambda()
    }

    /// Temporal Nyquist frequency `π / dt`.
    pub fn lambda_max(&self) -> f64 {
        PI / self.dt
    }
}

/// `P̂(y_j, λ_m)` for `m < n_rows`, row-major `[detector][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpectrum {
    pub count: usize,
    pub n_rows: usize,
    pub d_lambda: f64,
    pub values: Vec<Complex64>,
}

/// Trapezoid-rule temporal transform with the `e^{+itλ}` sign, all
/// `n_fft/2 + 1` frequencies.
pub fn time_fft(data: &SeriesData, grid: &FrequencyGrid) -> DetectorSpectrum {
    time_fft_rows(data, grid, grid.n_lambda())
}

/// As [`time_fft`] but keeping only the first `n_rows` frequencies.
pub fn time_fft_rows(data: &SeriesData, grid: &FrequencyGrid, n_rows: usize) -> DetectorSpectrum {
    let n = grid.n_fft;
    let nt = data.time.nt;
    let n_rows = n_rows.min(grid.n_lambda());
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let dt = data.time.dt;
    let mut values = vec![ZERO; data.count * n_rows];
    values.par_chunks_mut(n_rows).enumerate().for_each(|(j, out)| {
        let row = data.row(j);
        let mut buf = vec![ZERO; n];
        for (b, v) in buf.iter_mut().zip(row) {
            *b = Complex64::new(v * dt, 0.0);
        }
        buf[0] *= 0.5;
        buf[nt - 1] *= 0.5;
        fft.process(&mut buf);
        out.copy_from_slice(&buf[..n_rows]);
    });
    DetectorSpectrum { count: data.count, n_rows, d_lambda: grid.d_lambda(), values }
}

/// Angular position of ring detector `j`: `offset + sign * 2π j / count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingLayout {
    pub offset: f64,
    pub clockwise: bool,
}

impl Default for RingLayout {
    fn default() -> Self {
        Self { offset: 0.0, clockwise: false }
    }
}

/// `P̂_k(λ_m)` (or filtered `b_k(λ_m)`) for `|k| <= k_max`, row-major `[m][k + k_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum2D {
    pub k_max: usize,
    pub n_rows: usize,
    pub d_lambda: f64,
    pub coeffs: Vec<Complex64>,
}

impl HarmonicSpectrum2D {
    #[inline]
    pub fn get(&self, m: usize, k: i64) -> Complex64 {
        self.coeffs[m * (2 * self.k_max + 1) + (k + self.k_max as i64) as usize]
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        let w = 2 * self.k_max + 1;
        &self.coeffs[m * w..(m + 1) * w]
    }

    pub fn lambda(&self, m: usize) -> f64 {
        m as f64 * self.d_lambda
    }
}

/// `P̂_k(λ) = (1/count) Σ_j P̂(y_j, λ) e^{-ikφ_j}` for `|k| <= k_max`.
///
/// With an even detector count and `k_max = count/2`, the Nyquist coefficient
/// is split evenly between `k = ±count/2`.
pub fn angular_fourier(spec: &DetectorSpectrum, k_max: usize, layout: RingLayout) -> Result<HarmonicSpectrum2D> {
    let count = spec.count;
    if k_max > count / 2 {
        return Err(Error::Aliasing(format!(
            "angular order {k_max} exceeds the {count}-detector limit {}",
            count / 2
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(count);
    let width = 2 * k_max + 1;
    let nyquist_split = count % 2 == 0 && k_max == count / 2;
    let mut coeffs = vec![ZERO; spec.n_rows * width];
    coeffs.par_chunks_mut(width).enumerate().for_each(|(m, out)| {
        let mut buf: Vec<Complex64> = (0..count).map(|j| spec.values[j * spec.n_rows + m]).collect();
        fft.process(&mut buf);
        for (idx, o) in out.iter_mut().enumerate() {
            let k = idx as i64 - k_max as i64;
            let s = if layout.clockwise { -k } else { k };
            let mut v = buf[s.rem_euclid(count as i64) as usize] / count as f64;
            if layout.offset != 0.0 {
                v *= Complex64::from_polar(1.0, -(k as f64) * layout.offset);
            }
            if nyquist_split && k.unsigned_abs() as usize == k_max {
                v *= 0.5;
            }
            *o = v;
        }
    });
    Ok(HarmonicSpectrum2D { k_max, n_rows: spec.n_rows, d_lambda: spec.d_lambda, coeffs })
}

/// `(-i)^n`.
#[inline]
pub(crate) fn minus_i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `b_k(λ) = 2 (-i)^{|k|} P̂_k(λ) / (π λ H_{|k|}(λR))` for `λ > 0`; row 0 and
/// coefficients whose Hankel function overflows are zero.
pub fn spectral_filter_2d(spec: &HarmonicSpectrum2D, radius: f64) -> Result<HarmonicSpectrum2D> {
    let k_max = spec.k_max;
    let width = 2 * k_max + 1;
    let mut coeffs = vec![ZERO; spec.coeffs.len()];
    let rows: Result<Vec<()>> = coeffs
        .par_chunks_mut(width)
        .enumerate()
        .skip(1)
        .map(|(m, out)| {
            let lambda = spec.lambda(m);
            let h = hankel1_all(k_max, lambda * radius)?;
            let input = spec.row(m);
            for (idx, o) in out.iter_mut().enumerate() {
                let ak = (idx as i64 - k_max as i64).unsigned_abs() as usize;
                *o = match h[ak] {
                    HankelValue::Finite(hk) => 2.0 * minus_i_pow(ak) * input[idx] / (PI * lambda * hk),
                    HankelValue::Overflow => ZERO,
                };
            }
            Ok(())
        })
        .collect();
    rows?;
    Ok(HarmonicSpectrum2D { k_max, n_rows: spec.n_rows, d_lambda: spec.d_lambda, coeffs })
}

/// `f̂(λ_m, φ_q) = Σ_k b_k(λ_m) e^{ikφ_q}` on `n_phi >= 2K + 1` azimuths.
pub fn polar_synthesis(b: &HarmonicSpectrum2D, n_phi: usize) -> Result<PolarSpectrum> {
    let k_max = b.k_max;
    if n_phi < 2 * k_max + 1 {
        return Err(Error::Aliasing(format!("{n_phi} azimuths cannot carry orders up to {k_max}")));
    }
    let fft = FftPlanner::new().plan_fft_inverse(n_phi);
    let mut values = vec![ZERO; b.n_rows * n_phi];
    values.par_chunks_mut(n_phi).enumerate().skip(1).for_each(|(m, out)| {
        for (idx, c) in b.row(m).iter().enumerate() {
            let k = idx as i64 - k_max as i64;
            out[k.rem_euclid(n_phi as i64) as usize] = *c;
        }
        fft.process(out);
    });
    Ok(PolarSpectrum { d_lambda: b.d_lambda, n_rows: b.n_rows, n_phi, values, dc: ZERO })
}

/// Trapezoid rule for `f̂(0) = ∫_0^∞ 2 P̂_0(λ) R J_1(λR) / (π λ H_0(λR)) dλ`
/// over the sampled rows; the `λ = 0` node contributes zero.
pub fn dc_term_2d(spec: &HarmonicSpectrum2D, radius: f64) -> Result<Complex64> {
    let n = spec.n_rows;
    let mut acc = ZERO;
    for m in 1..n {
        let lambda = spec.lambda(m);
        let x = lambda * radius;
        let h0 = hankel1_all(0, x)?[0].recip_or_zero();
        let g = 2.0 * spec.get(m, 0) * radius * bessel_j(1, x)? * h0 / (PI * lambda);
        acc += if m == n - 1 { 0.5 * g } else { g };
    }
    Ok(acc * spec.d_lambda)
}

/// The dc integral is evaluated on a frequency grid this many times finer
/// than the other rows, from the ring-averaged series (which is exactly the
/// `k = 0` harmonic).
pub const DC_REFINE: usize = 4;

fn dc_from_ring_mean(data: &SeriesData, grid: &FrequencyGrid, band: f64) -> Result<Complex64> {
    let nt = data.time.nt;
    let mut mean = vec![0.0; nt];
    for j in 0..data.count {
        for (m, v) in mean.iter_mut().zip(data.row(j)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= data.count as f64;
    }
    let single = SeriesData { count: 1, values: mean, ..data.clone_header() };
    let fine = FrequencyGrid { dt: grid.dt, n_fft: grid.n_fft * DC_REFINE };
    let n_rows = ((band / fine.d_lambda()).floor() as usize + 1).min(fine.n_lambda());
    let p0 = time_fft_rows(&single, &fine, n_rows);
    let h0 = HarmonicSpectrum2D { k_max: 0, n_rows, d_lambda: p0.d_lambda, coeffs: p0.values };
    dc_term_2d(&h0, data.radius)
}

/// Parameters of the spectral stage (steps 1-5) shared with the line-detector
/// pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Temporal zero-padding factor (rounded up to a power of two).
    pub pad_factor: usize,
    /// Highest frequency processed; defaults to `min(π/dt, ⌊count/2⌋ / R)`.
    pub band_limit: Option<f64>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { pad_factor: 4, band_limit: None }
    }
}

/// Filtered coefficients `b_k(λ_m)` and the dc value.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralStage2D {
    pub b: HarmonicSpectrum2D,
    pub dc: Complex64,
}

/// Steps 1-5 without the polar synthesis.
pub fn spectral_stage_2d(data: &SeriesData, layout: RingLayout, cfg: &SpectralConfig) -> Result<SpectralStage2D> {
    let grid = FrequencyGrid::new(&data.time, cfg.pad_factor)?;
    let radius = data.radius;
    let k_det = data.count / 2;
    let band = cfg
        .band_limit
        .unwrap_or_else(|| grid.lambda_max().min(k_det as f64 / radius))
        .min(grid.lambda_max());
    if !(band > 0.0) {
        return Err(Error::Config(format!("band limit must be positive, got {band}")));
    }
    let n_rows = ((band / grid.d_lambda()).floor() as usize + 1).min(grid.n_lambda());
    if n_rows < 4 {
        return Err(Error::Config("record too short: fewer than 4 frequency rows in band".into()));
    }
    let k_max = k_det.min((E * band * radius / 2.0).ceil() as usize);
    let p_hat = time_fft_rows(data, &grid, n_rows);
    let harmonics = angular_fourier(&p_hat, k_max, layout)?;
    let dc = dc_from_ring_mean(data, &grid, band)?;
    let b = spectral_filter_2d(&harmonics, radius)?;
    Ok(SpectralStage2D { b, dc })
}

/// Smallest `2^a 3^b 5^c >= n`.
pub fn smooth_size(n: usize) -> usize {
    let is_smooth = |mut m: usize| {
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        m == 1
    };
    (n.max(1)..).find(|&m| is_smooth(m)).unwrap()
}

/// Azimuth count used for polar synthesis: the smallest FFT-friendly size
/// at least `oversample * (2K + 1)`.
pub fn polar_size(k_max: usize, oversample: usize) -> usize {
    smooth_size(oversample.max(1) * (2 * k_max + 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recon2dConfig {
    /// Image nodes per axis.
    pub n: usize,
    /// Half-width of the image square; defaults to the ring radius.
    pub extent: Option<f64>,
    pub spectral: SpectralConfig,
    /// Polar azimuths per angular degree of freedom.
    pub angular_oversample: usize,
}

impl Recon2dConfig {
    pub fn new(n: usize) -> Self {
        Self { n, extent: None, spectral: SpectralConfig::default(), angular_oversample: 4 }
    }
}

/// Image plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub image: Image,
    /// `|Im f| / |Re f|` of the complex inverse transform.
    pub imag_ratio: f64,
    /// Real dc value used (`f̂(0)`, or `F(0)` in 3D).
    pub dc: f64,
    /// Discarded imaginary part of the dc estimate.
    pub dc_imag: f64,
}

pub(crate) fn check_series(data: &SeriesData, expected: &str, ok: bool, count: usize, radius: f64) -> Result<()> {
    if !ok {
        return Err(Error::Geometry(format!("expected {expected} data, got {:?}", data.geometry)));
    }
    if data.count != count {
        return Err(Error::Geometry(format!("data has {} detectors, geometry has {count}", data.count)));
    }
    if (data.radius - radius).abs() > 1e-9 * radius {
        return Err(Error::Geometry(format!("data radius {} differs from geometry radius {radius}", data.radius)));
    }
    Ok(())
}

/// Full pipeline for ring data.
pub fn reconstruct_2d(data: &SeriesData, ring: &DetectorRing, cfg: &Recon2dConfig) -> Result<Reconstruction> {
    check_series(data, "ring", data.geometry == GeometryTag::Ring, ring.count, ring.radius)?;
    let stage = spectral_stage_2d(data, RingLayout::default(), &cfg.spectral)?;
    let mut polar = polar_synthesis(&stage.b, polar_size(stage.b.k_max, cfg.angular_oversample))?;
    polar.dc = Complex64::new(stage.dc.re, 0.0);
    let grid = CartesianGrid::new(cfg.n, cfg.extent.unwrap_or(ring.radius))?;
    let mut cart = polar_to_cartesian(&polar, &grid);
    cartesian_inverse(&mut cart, 2, &grid, Kernel::Plus, 1.0 / (2.0 * PI));
    let (image, imag_ratio) = real_image(&cart, 2, &grid);
    Ok(Reconstruction { image, imag_ratio, dc: stage.dc.re, dc_imag: stage.dc.im })
}
