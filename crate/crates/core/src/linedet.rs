//! Inversion for integrating line detectors rotated about `e2`.
//!
//! Line integrals along `D(α)` solve the 2D wave equation in the plane
//! spanned by `N(α)` and `e2`, so each rotation angle is a ring problem in
//! that plane. Its spectrum `f̂_{α,2D}(μ1, μ2)` equals `√(2π) f̂_3D(μ1 N(α) + μ2 e2)`
//! with `f̂_3D = (2π)^{-3/2} ∫ f e^{-i x·Λ} dx`. The planes all contain the
//! `e2` frequency axis; a node `Λ` lies between two sampled planes and is
//! interpolated cubic/linear within each, then linearly across `α`.

use std::borrow::Borrow;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::{GeometryTag, LineDetectorGeometry, SeriesData};
use crate::recon2d::{check_series, polar_size, polar_synthesis, spectral_stage_2d, Reconstruction, RingLayout, SpectralConfig};
use crate::specgrid::{cartesian_inverse, real_image, CartesianGrid, Kernel, PolarSpectrum};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Ring layout of a slice: detector `j` at `(R sin β_j, R cos β_j)` in the
/// `(N, e2)` plane, i.e. polar angle `π/2 - β_j`.
pub const SLICE_LAYOUT: RingLayout = RingLayout { offset: PI / 2.0, clockwise: true };

/// Per-angle polar spectra `f̂_{α,2D}(λ_m, φ_q)` with their dc values.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatingPlaneSpectrum {
    pub alphas: Vec<f64>,
    pub planes: Vec<PolarSpectrum>,
}

impl RotatingPlaneSpectrum {
    pub fn dc_values(&self) -> Vec<f64> {
        self.planes.iter().map(|p| p.dc.re).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinedetConfig {
    /// Image nodes per axis.
    pub n: usize,
    /// Half-width of the image cube; defaults to the detector radius.
    pub extent: Option<f64>,
    pub spectral: SpectralConfig,
    /// Polar azimuths per angular degree of freedom.
    pub angular_oversample: usize,
}

impl LinedetConfig {
    pub fn new(n: usize) -> Self {
        Self { n, extent: None, spectral: SpectralConfig::default(), angular_oversample: 4 }
    }
}

fn check_scan(scan: &[SeriesData], geom: &LineDetectorGeometry) -> Result<()> {
    if scan.len() != geom.alphas.len() {
        return Err(Error::Geometry(format!("scan has {} slices, geometry has {} angles", scan.len(), geom.alphas.len())));
    }
    for (k, (slice, &alpha)) in scan.iter().zip(&geom.alphas).enumerate() {
        let ok = matches!(slice.geometry, GeometryTag::LineSlice { alpha: a } if (a - alpha).abs() <= 1e-12);
        check_series(slice, &format!("line-slice (alpha = {alpha})"), ok, geom.n_beta, geom.radius)
            .map_err(|e| annotate(e, k, alpha))?;
    }
    Ok(())
}

fn annotate(e: Error, k: usize, alpha: f64) -> Error {
    match e {
        Error::Geometry(m) => Error::Geometry(format!("slice {k} (alpha = {alpha}): {m}")),
        Error::Config(m) => Error::Config(format!("slice {k} (alpha = {alpha}): {m}")),
        Error::Aliasing(m) => Error::Aliasing(format!("slice {k} (alpha = {alpha}): {m}")),
        other => other,
    }
}

/// Steps 1-5 of the ring inversion plus polar synthesis for one slice.
pub fn slice_spectrum(slice: &SeriesData, cfg: &LinedetConfig) -> Result<PolarSpectrum> {
    let stage = spectral_stage_2d(slice, SLICE_LAYOUT, &cfg.spectral)?;
    let mut polar = polar_synthesis(&stage.b, polar_size(stage.b.k_max, cfg.angular_oversample))?;
    polar.dc = Complex64::new(stage.dc.re, 0.0);
    Ok(polar)
}

/// All per-angle spectra held in memory at once.
pub fn per_alpha_spectra(
    scan: &[SeriesData],
    geom: &LineDetectorGeometry,
    cfg: &LinedetConfig,
) -> Result<RotatingPlaneSpectrum> {
    check_scan(scan, geom)?;
    let planes = scan
        .iter()
        .zip(&geom.alphas)
        .enumerate()
        .map(|(k, (slice, &alpha))| slice_spectrum(slice, cfg).map_err(|e| annotate(e, k, alpha)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RotatingPlaneSpectrum { alphas: geom.alphas.clone(), planes })
}

/// Where a Cartesian frequency node falls relative to the sampled planes.
#[derive(Debug, Clone, Copy)]
struct Placement {
    /// Interval `k` lies between plane `k` and plane `k + 1` (or the
    /// reflected plane 0 for the last interval).
    interval: usize,
    weight: f64,
    mu1: f64,
    mu2: f64,
}

/// In-plane coordinates of `Λ` relative to `α* ∈ [0, π)`: `Λ = μ1 N(α*) + μ2 e2`.
fn plane_coordinates(l1: f64, l2: f64, l3: f64) -> (f64, f64, f64) {
    let rho = l1.hypot(l3);
    // N(α) points at polar angle α + π/2 in the (x1, x3) plane.
    let a = (l3.atan2(l1) - PI / 2.0).rem_euclid(2.0 * PI);
    if a < PI {
        (a, rho, l2)
    } else {
        ((a - PI).clamp(0.0, PI.next_down()), -rho, l2)
    }
}

fn place(alphas: &[f64], alpha: f64, mu1: f64, mu2: f64) -> Placement {
    let n = alphas.len();
    // Last interval wraps to α_0 + π, where plane 0 appears with μ1 reflected.
    let (interval, lo, hi, a) = if alpha < alphas[0] {
        (n - 1, alphas[n - 1], alphas[0] + PI, alpha + PI)
    } else {
        let k = alphas.partition_point(|&x| x <= alpha) - 1;
        let hi = if k + 1 < n { alphas[k + 1] } else { alphas[0] + PI };
        (k, alphas[k], hi, alpha)
    };
    Placement { interval, weight: ((a - lo) / (hi - lo)).clamp(0.0, 1.0), mu1, mu2 }
}

#[inline]
fn in_plane(spec: &PolarSpectrum, mu1: f64, mu2: f64) -> Complex64 {
    spec.interpolate(mu1.hypot(mu2), mu2.atan2(mu1))
}

/// Cartesian samples of `f̂_3D`, row-major `[q1][q2][q3]`, from planes that
/// are produced on demand in angle order; at most two are alive at a time.
pub fn assemble_streaming<P, F>(alphas: &[f64], grid: &CartesianGrid, mut plane: F) -> Result<Vec<Complex64>>
where
    P: Borrow<PolarSpectrum>,
    F: FnMut(usize) -> Result<P>,
{
    let n_alpha = alphas.len();
    if n_alpha < 2 {
        return Err(Error::Config("line-detector assembly needs at least 2 rotation angles".into()));
    }
    let n = grid.n;
    let freqs: Vec<f64> = (0..n).map(|q| grid.freq(q)).collect();
    let mut out = vec![ZERO; n * n * n];

    let first = plane(0)?;
    let lambda_max = first.borrow().lambda_max();

    // Bucket the off-axis nodes by interval; axis nodes (Λ1 = Λ3 = 0) are
    // averaged over all planes.
    let mut buckets: Vec<Vec<(u32, Placement)>> = vec![Vec::new(); n_alpha];
    let mut axis: Vec<(u32, f64)> = Vec::new();
    for (q1, &l1) in freqs.iter().enumerate() {
        for (q2, &l2) in freqs.iter().enumerate() {
            for (q3, &l3) in freqs.iter().enumerate() {
                if (l1 * l1 + l2 * l2 + l3 * l3).sqrt() > lambda_max * (1.0 + 1e-12) {
                    continue;
                }
                let idx = ((q1 * n + q2) * n + q3) as u32;
                if l1 == 0.0 && l3 == 0.0 {
                    axis.push((idx, l2));
                    continue;
                }
                let (alpha, mu1, mu2) = plane_coordinates(l1, l2, l3);
                let p = place(alphas, alpha, mu1, mu2);
                buckets[p.interval].push((idx, p));
            }
        }
    }

    let mut axis_acc = vec![ZERO; axis.len()];
    let add_axis = |spec: &PolarSpectrum, acc: &mut [Complex64]| {
        for ((_, l2), a) in axis.iter().zip(acc.iter_mut()) {
            *a += in_plane(spec, 0.0, *l2) / n_alpha as f64;
        }
    };
    add_axis(first.borrow(), &mut axis_acc);

    let mut current = None::<P>;
    for k in 0..n_alpha {
        let lo_owned = current.take();
        let lo: &PolarSpectrum = match &lo_owned {
            Some(p) => p.borrow(),
            None => first.borrow(),
        };
        let hi_owned = if k + 1 < n_alpha {
            let p = plane(k + 1)?;
            add_axis(p.borrow(), &mut axis_acc);
            Some(p)
        } else {
            None
        };
        let (hi, sign) = match &hi_owned {
            Some(p) => (p.borrow(), 1.0),
            None => (first.borrow(), -1.0),
        };
        let values: Vec<Complex64> = buckets[k]
            .par_iter()
            .map(|(_, p)| {
                (1.0 - p.weight) * in_plane(lo, p.mu1, p.mu2) + p.weight * in_plane(hi, sign * p.mu1, p.mu2)
            })
            .collect();
        for ((idx, _), v) in buckets[k].iter().zip(values) {
            out[*idx as usize] = v;
        }
        buckets[k] = Vec::new();
        current = hi_owned;
    }
    for ((idx, _), v) in axis.iter().zip(axis_acc) {
        out[*idx as usize] = v;
    }
    let scale = (2.0 * PI).sqrt().recip();
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}

/// Cartesian `f̂_3D` from in-memory plane spectra.
pub fn assemble_3d_spectrum(spectra: &RotatingPlaneSpectrum, grid: &CartesianGrid) -> Result<Vec<Complex64>> {
    if spectra.planes.len() != spectra.alphas.len() {
        return Err(Error::Config("one plane spectrum per angle required".into()));
    }
    assemble_streaming(&spectra.alphas, grid, |k| Ok(&spectra.planes[k]))
}

/// Full pipeline: per-angle spectra (computed one or two at a time), spectral
/// assembly, 3D inverse transform.
pub fn reconstruct_linedet(
    scan: &[SeriesData],
    geom: &LineDetectorGeometry,
    cfg: &LinedetConfig,
) -> Result<Reconstruction> {
    check_scan(scan, geom)?;
    let grid = CartesianGrid::new(cfg.n, cfg.extent.unwrap_or(geom.radius))?;
    let mut dc_sum = 0.0;
    let mut cart = assemble_streaming(&geom.alphas, &grid, |k| {
        let spec = slice_spectrum(&scan[k], cfg).map_err(|e| annotate(e, k, geom.alphas[k]))?;
        dc_sum += spec.dc.re;
        Ok(spec)
    })?;
    cartesian_inverse(&mut cart, 3, &grid, Kernel::Plus, (2.0 * PI).powf(-1.5));
    let (image, imag_ratio) = real_image(&cart, 3, &grid);
    Ok(Reconstruction { image, imag_ratio, dc: dc_sum / geom.alphas.len() as f64, dc_imag: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_from(f: impl Fn(f64, f64) -> Complex64, d_lambda: f64, n_rows: usize, n_phi: usize) -> PolarSpectrum {
        let mut values = vec![ZERO; n_rows * n_phi];
        for m in 0..n_rows {
            for q in 0..n_phi {
                let (l, p) = (m as f64 * d_lambda, 2.0 * PI * q as f64 / n_phi as f64);
                values[m * n_phi + q] = f(l * p.cos(), l * p.sin());
            }
        }
        PolarSpectrum { d_lambda, n_rows, n_phi, values, dc: f(0.0, 0.0) }
    }

    /// Planes sampled from a 3D function `g(Λ)`, scaled by `√(2π)`.
    fn planes(g: &dyn Fn([f64; 3]) -> Complex64, alphas: &[f64], d_lambda: f64, n_rows: usize, n_phi: usize) -> RotatingPlaneSpectrum {
        let planes = alphas
            .iter()
            .map(|&a| {
                let nrm = crate::model::normal(a);
                plane_from(
                    |m1, m2| (2.0 * PI).sqrt() * g([m1 * nrm[0], m2, m1 * nrm[2]]),
                    d_lambda,
                    n_rows,
                    n_phi,
                )
            })
            .collect();
        RotatingPlaneSpectrum { alphas: alphas.to_vec(), planes }
    }

    fn uniform(n: usize) -> Vec<f64> {
        (0..n).map(|k| PI * k as f64 / n as f64).collect()
    }

    #[test]
    fn constants_are_reproduced_inside_the_ball() {
        let spectra = planes(&|_| Complex64::new(1.0, 0.0), &uniform(6), 0.5, 12, 32);
        let grid = CartesianGrid::new(16, 1.0).unwrap();
        let cart = assemble_3d_spectrum(&spectra, &grid).unwrap();
        let lmax = spectra.planes[0].lambda_max();
        for (idx, v) in cart.iter().enumerate() {
            let l = [grid.freq(idx / 256), grid.freq((idx / 16) % 16), grid.freq(idx % 16)];
            let r = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
            let expected = if r <= lmax { 1.0 } else { 0.0 };
            assert!((v.re - expected).abs() < 1e-13 && v.im.abs() < 1e-13, "{idx}");
        }
    }

    #[test]
    fn placement_handles_wrap_and_reflection() {
        let alphas = uniform(4);
        // Exactly on plane 1 (α = π/4): N = (-sin, 0, cos).
        let (a, m1, _) = plane_coordinates(-(PI / 4.0).sin(), 0.3, (PI / 4.0).cos());
        assert!((a - PI / 4.0).abs() < 1e-14 && (m1 - 1.0).abs() < 1e-14);
        // Opposite direction is the same plane with μ1 negated.
        let (a, m1, _) = plane_coordinates((PI / 4.0).sin(), 0.3, -(PI / 4.0).cos());
        assert!((a - PI / 4.0).abs() < 1e-12 && (m1 + 1.0).abs() < 1e-14);
        let p = place(&alphas, 0.9 * PI, 1.0, 0.0);
        assert_eq!(p.interval, 3);
        assert!((p.weight - 0.6).abs() < 1e-12);
        let p = place(&[0.2, 1.0, 2.0], 0.1, 1.0, 0.0);
        assert_eq!(p.interval, 2);
        assert!((p.weight - (0.1 + PI - 2.0) / (0.2 + PI - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn nodes_on_sampled_planes_are_exact() {
        // Grid freq spacing 2π/(n h) with n = 8, L = π·7/8 gives ΔΛ = 1;
        // α = 0 and α = π/2 planes then contain Cartesian nodes.
        let g = |l: [f64; 3]| Complex64::new((0.3 * l[0]).cos() + l[2], 0.2 * l[1] * l[1]);
        let spectra = planes(&g, &uniform(4), 0.5, 20, 64);
        let grid = CartesianGrid::new(8, PI * 7.0 / 8.0).unwrap();
        assert!((grid.d_freq() - 1.0).abs() < 1e-14);
        let cart = assemble_3d_spectrum(&spectra, &grid).unwrap();
        // Node on plane α = 0 (Λ1 = 0, μ1 = Λ3) lying on a polar ring and spoke:
        // Λ = (0, 0, 2) → λ = 2 = 4Δλ, φ = 0.
        let (q1, q2, q3) = (4usize, 4usize, 6usize);
        let l = [grid.freq(q1), grid.freq(q2), grid.freq(q3)];
        assert_eq!(l, [0.0, 0.0, 2.0]);
        assert!((cart[(q1 * 8 + q2) * 8 + q3] - g(l)).norm() < 1e-12);
        // Vertical axis: average over planes of the same sample.
        let l = [0.0, grid.freq(7), 0.0];
        assert!((cart[(4 * 8 + 7) * 8 + 4] - g(l)).norm() < 1e-12);
    }

    fn assembly_error(d_lambda: f64, n_alpha: usize, n_phi: usize) -> f64 {
        let g = |l: [f64; 3]| {
            let r2 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
            Complex64::new((-r2 / 30.0).exp(), 0.0)
        };
        let spectra = planes(&g, &uniform(n_alpha), d_lambda, (8.0 / d_lambda).round() as usize + 1, n_phi);
        let grid = CartesianGrid::new(16, 2.0).unwrap();
        let cart = assemble_3d_spectrum(&spectra, &grid).unwrap();
        let mut err = 0.0f64;
        for (idx, v) in cart.iter().enumerate() {
            let l = [grid.freq(idx / 256), grid.freq((idx / 16) % 16), grid.freq(idx % 16)];
            if (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt() <= 7.9 {
                err = err.max((v - g(l)).norm());
            }
        }
        err
    }

    #[test]
    fn radial_refinement_converges() {
        // Radially symmetric g is constant in angle, so only the radial
        // stencil contributes.
        let e1 = assembly_error(0.4, 3, 8);
        let e2 = assembly_error(0.2, 3, 8);
        assert!(e1 / e2 >= 3.5, "{e1} {e2}");
    }

    #[test]
    fn needs_two_planes() {
        let spectra = planes(&|_| Complex64::new(1.0, 0.0), &[0.0], 0.5, 12, 32);
        let grid = CartesianGrid::new(8, 1.0).unwrap();
        assert!(matches!(assemble_3d_spectrum(&spectra, &grid), Err(Error::Config(_))));
    }
}
