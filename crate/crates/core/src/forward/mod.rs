//! Semi-analytic forward simulation of the free-space wave equation
//! `u_tt = Δu`, `u(0) = f`, `u_t(0) = 0`, sampled at detectors.
//!
//! Nothing here shares code with the inversions: 2D data come from the
//! Poisson formula with per-primitive circular means, 3D data from closed
//! forms, and line-detector data from the method of descent.

mod wave2d;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::model::{
    normal, DetectorRing, DetectorSphere, GeometryTag, LineDetectorGeometry, Phantom, Primitive, PrimitiveKind, SeriesData,
    TimeGrid,
};
use crate::{Error, Result};

use wave2d::{disk_circular_mean, disk_series, gaussian_circular_mean, GaussianTable};

/// Fraction of the record covered by the closing raised-cosine taper.
pub const TAPER_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    /// Fade the last 5% of every record to zero.
    pub taper: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self { taper: true }
    }
}

/// Noise level (noise norm over signal norm) and PRNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

/// Average of a 2D phantom over the circle of radius `t` about `center`.
pub fn circular_mean(phantom: &Phantom, center: [f64; 2], t: f64) -> f64 {
    assert_eq!(phantom.dimension(), 2, "circular mean needs a 2D phantom");
    if t == 0.0 {
        return phantom.eval(&center);
    }
    phantom
        .primitives()
        .iter()
        .map(|p| {
            let d = (center[0] - p.center[0]).hypot(center[1] - p.center[1]);
            match p.kind {
                PrimitiveKind::Gaussian => gaussian_circular_mean(p.amplitude, p.size, d, t),
                _ => disk_circular_mean(p.amplitude, p.size, d, t),
            }
        })
        .sum()
}

/// Raised-cosine weights: 1 except over the last `TAPER_FRACTION` of the
/// record, where they fall to exactly 0 at the final sample.
pub fn taper_weights(nt: usize) -> Vec<f64> {
    let len = ((TAPER_FRACTION * nt as f64).ceil() as usize).min(nt);
    let start = nt - len;
    (0..nt)
        .map(|i| {
            if i < start {
                1.0
            } else {
                let k = (i - start + 1) as f64;
                0.5 * (1.0 + (std::f64::consts::PI * k / len as f64).cos())
            }
        })
        .collect()
}

pub(crate) fn apply_taper(values: &mut [f64], nt: usize) {
    let w = taper_weights(nt);
    for row in values.chunks_mut(nt) {
        for (v, wi) in row.iter_mut().zip(&w) {
            *v *= wi;
        }
    }
}

/// Row-major `[point][time]` pressure of a 2D phantom at arbitrary points.
pub fn pressure_2d_points(phantom: &Phantom, points: &[[f64; 2]], time: &TimeGrid) -> Vec<f64> {
    assert_eq!(phantom.dimension(), 2, "2D propagation needs a 2D phantom");
    let nt = time.nt;
    let mut out = vec![0.0; points.len() * nt];
    for p in phantom.primitives() {
        let dist: Vec<f64> = points.iter().map(|y| (y[0] - p.center[0]).hypot(y[1] - p.center[1])).collect();
        match p.kind {
            PrimitiveKind::Gaussian => {
                let lo = dist.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = dist.iter().cloned().fold(0.0, f64::max);
                let table = GaussianTable::new(p.amplitude, p.size, lo, hi, time);
                out.par_chunks_mut(nt).zip(&dist).for_each(|(row, &d)| table.add_into(d, row));
            }
            _ => {
                out.par_chunks_mut(nt).zip(&dist).for_each(|(row, &d)| {
                    let mut tmp = vec![0.0; nt];
                    disk_series(p.amplitude, p.size, d, time, &mut tmp);
                    for (o, v) in row.iter_mut().zip(&tmp) {
                        *o += v;
                    }
                });
            }
        }
    }
    out
}

fn check_dimension(phantom: &Phantom, dim: usize) -> Result<()> {
    if phantom.dimension() != dim {
        return Err(Error::Phantom(format!("expected a {dim}D phantom, got {}D", phantom.dimension())));
    }
    Ok(())
}

/// Ring data with the default options.
pub fn forward_2d(phantom: &Phantom, ring: &DetectorRing, time: &TimeGrid) -> Result<SeriesData> {
    forward_2d_with(phantom, ring, time, ForwardOptions::default())
}

pub fn forward_2d_with(
    phantom: &Phantom,
    ring: &DetectorRing,
    time: &TimeGrid,
    opts: ForwardOptions,
) -> Result<SeriesData> {
    check_dimension(phantom, 2)?;
    phantom.check_inside(ring.radius)?;
    let points: Vec<[f64; 2]> = (0..ring.count).map(|j| ring.position(j)).collect();
    let mut values = pressure_2d_points(phantom, &points, time);
    if opts.taper {
        apply_taper(&mut values, time.nt);
    }
    SeriesData::new(GeometryTag::Ring, ring.radius, ring.count, *time, values)
}

/// Pressure of a 3D phantom at detector `y` and time `t` (closed forms).
pub fn pressure_3d(phantom: &Phantom, y: [f64; 3], t: f64) -> f64 {
    phantom.primitives().iter().map(|p| pressure_3d_primitive(p, y, t)).sum()
}

fn pressure_3d_primitive(p: &Primitive, y: [f64; 3], t: f64) -> f64 {
    let d = dist3(y, &p.center);
    let amp = p.amplitude;
    match p.kind {
        PrimitiveKind::Gaussian => {
            let s2 = 2.0 * p.size * p.size;
            if d < 1e-12 {
                // Limit d -> 0 of the expression below.
                amp * (1.0 - 2.0 * t * t / s2) * (-t * t / s2).exp()
            } else {
                amp / (2.0 * d) * ((d - t) * (-(t - d).powi(2) / s2).exp() + (t + d) * (-(t + d).powi(2) / s2).exp())
            }
        }
        _ => {
            let a = p.size;
            if t <= a - d {
                amp
            } else if (d - t).abs() <= a {
                amp * (d - t) / (2.0 * d)
            } else {
                0.0
            }
        }
    }
}

/// `∫_0^u` of the ball trace, extended as an odd function of `u`.
fn ball_trace_integral(amp: f64, a: f64, d: f64, u: f64) -> f64 {
    if u < 0.0 {
        return -ball_trace_integral(amp, a, d, -u);
    }
    let plateau = amp * u.min((a - d).max(0.0));
    let (lo, hi) = ((d - a).abs(), d + a);
    if u <= lo || d <= 0.0 {
        return plateau;
    }
    let e = u.min(hi);
    let g = |t: f64| d * t - 0.5 * t * t;
    plateau + amp / (2.0 * d) * (g(e) - g(lo))
}

/// Pressure sampled at time `t` as recorded over `[t - dt/2, t + dt/2]`:
/// Gaussian traces are point values, ball traces (which jump at
/// `t = |d ± a|`) are exact cell averages.
pub fn pressure_3d_sample(phantom: &Phantom, y: [f64; 3], t: f64, dt: f64) -> f64 {
    phantom
        .primitives()
        .iter()
        .map(|p| match p.kind {
            PrimitiveKind::Gaussian => pressure_3d_primitive(p, y, t),
            _ => {
                let d = dist3(y, &p.center);
                let h = 0.5 * dt;
                (ball_trace_integral(p.amplitude, p.size, d, t + h) - ball_trace_integral(p.amplitude, p.size, d, t - h))
                    / dt
            }
        })
        .sum()
}

fn dist3(y: [f64; 3], c: &[f64]) -> f64 {
    ((y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2) + (y[2] - c[2]).powi(2)).sqrt()
}

pub fn forward_3d(phantom: &Phantom, sphere: &DetectorSphere, time: &TimeGrid) -> Result<SeriesData> {
    forward_3d_with(phantom, sphere, time, ForwardOptions::default())
}

pub fn forward_3d_with(
    phantom: &Phantom,
    sphere: &DetectorSphere,
    time: &TimeGrid,
    opts: ForwardOptions,
) -> Result<SeriesData> {
    check_dimension(phantom, 3)?;
    phantom.check_inside(sphere.radius)?;
    if time.t_max() < 2.0 * sphere.radius {
        return Err(Error::Config(format!(
            "3D records must cover [0, 2R]: t_max = {} < {}",
            time.t_max(),
            2.0 * sphere.radius
        )));
    }
    let nt = time.nt;
    let mut values = vec![0.0; sphere.count() * nt];
    values.par_chunks_mut(nt).enumerate().for_each(|(j, row)| {
        let y = sphere.position(j);
        for (i, v) in row.iter_mut().enumerate() {
            *v = pressure_3d_sample(phantom, y, time.t(i), time.dt);
        }
    });
    if opts.taper {
        apply_taper(&mut values, nt);
    }
    SeriesData::new(GeometryTag::Sphere, sphere.radius, sphere.count(), *time, values)
}

/// Line integral of the 3D field of a ball along a line at distance `rho`
/// from its centre.
fn ball_line_pressure(amp: f64, a: f64, rho: f64, t: f64) -> f64 {
    let rho = rho.max(1e-12);
    let hi = t + a;
    if hi <= rho {
        return 0.0;
    }
    let lo = (t - a).abs().max(rho);
    let mut p = 0.0;
    if hi > lo {
        let s_hi = (hi * hi - rho * rho).sqrt();
        let s_lo = (lo * lo - rho * rho).max(0.0).sqrt();
        p += amp * ((s_hi - s_lo) - t * ((s_hi / rho).asinh() - (s_lo / rho).asinh()));
    }
    if t < a && a - t > rho {
        p += 2.0 * amp * ((a - t).powi(2) - rho * rho).sqrt();
    }
    p
}

pub fn forward_linedet(phantom: &Phantom, geom: &LineDetectorGeometry, time: &TimeGrid) -> Result<Vec<SeriesData>> {
    forward_linedet_with(phantom, geom, time, ForwardOptions::default())
}

/// One series per rotation angle. Gaussians project to 2D Gaussians that
/// share a tabulated 2D field across all angles; balls use the exact
/// method-of-descent integral of the 3D closed form.
pub fn forward_linedet_with(
    phantom: &Phantom,
    geom: &LineDetectorGeometry,
    time: &TimeGrid,
    opts: ForwardOptions,
) -> Result<Vec<SeriesData>> {
    check_dimension(phantom, 3)?;
    phantom.check_inside(geom.radius)?;
    let nt = time.nt;
    let n_beta = geom.n_beta;
    let plane: Vec<[f64; 2]> = (0..n_beta).map(|j| geom.plane_position(j)).collect();

    let projected = |c: &[f64], alpha: f64| {
        let n = normal(alpha);
        [c[0] * n[0] + c[1] * n[1] + c[2] * n[2], c[1]]
    };

    let mut slices: Vec<Vec<f64>> = vec![vec![0.0; n_beta * nt]; geom.alphas.len()];
    for p in phantom.primitives() {
        match p.kind {
            PrimitiveKind::Gaussian => {
                let amp2 = p.amplitude * p.size * (2.0 * std::f64::consts::PI).sqrt();
                // A detector at radius R sees the projected centre (norm <= |c|)
                // at a distance within [R - |c|, R + |c|].
                let c_norm = p.center.iter().map(|c| c * c).sum::<f64>().sqrt();
                let table =
                    GaussianTable::new(amp2, p.size, geom.radius - c_norm, geom.radius + c_norm, time);
                slices.par_iter_mut().zip(&geom.alphas).for_each(|(slice, &alpha)| {
                    let c = projected(&p.center, alpha);
                    for (row, y) in slice.chunks_mut(nt).zip(&plane) {
                        table.add_into((y[0] - c[0]).hypot(y[1] - c[1]), row);
                    }
                });
            }
            _ => {
                slices.par_iter_mut().zip(&geom.alphas).for_each(|(slice, &alpha)| {
                    let c = projected(&p.center, alpha);
                    for (row, y) in slice.chunks_mut(nt).zip(&plane) {
                        let rho = (y[0] - c[0]).hypot(y[1] - c[1]);
                        for (i, v) in row.iter_mut().enumerate() {
                            *v += ball_line_pressure(p.amplitude, p.size, rho, time.t(i));
                        }
                    }
                });
            }
        }
    }
    slices
        .into_iter()
        .zip(&geom.alphas)
        .map(|(mut values, &alpha)| {
            if opts.taper {
                apply_taper(&mut values, nt);
            }
            SeriesData::new(GeometryTag::LineSlice { alpha }, geom.radius, n_beta, *time, values)
        })
        .collect()
}

/// Add i.i.d. Gaussian noise scaled so that `|noise| / |signal| = level`.
/// Samples come from ChaCha20 seeded with `seed`, in row-major order.
pub fn add_noise(data: &SeriesData, spec: &NoiseSpec) -> Result<SeriesData> {
    if !(spec.level.is_finite() && spec.level >= 0.0) {
        return Err(Error::Config(format!("noise level must be >= 0, got {}", spec.level)));
    }
    if spec.level == 0.0 {
        return Ok(data.clone());
    }
    let signal = data.norm();
    if signal == 0.0 {
        return Err(Error::ZeroSignal("cannot scale noise relative to an all-zero signal".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let noise: Vec<f64> = (0..data.values.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nn = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = spec.level * signal / nn;
    let mut out = data.clone();
    for (v, n) in out.values.iter_mut().zip(&noise) {
        *v += scale * n;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{standard_phantom_2d, Primitive};

    #[test]
    fn circular_mean_examples() {
        let p = Phantom::new(2, vec![Primitive::disk([0.0, 0.0], 0.3, 1.0)]).unwrap();
        assert_eq!(circular_mean(&p, [1.05, 0.0], 0.5), 0.0);
        let expected = ((1.05f64.powi(2) * 2.0 - 0.09) / (2.0 * 1.05 * 1.05)).acos() / std::f64::consts::PI;
        assert!((circular_mean(&p, [1.05, 0.0], 1.05) - expected).abs() < 1e-15);
        assert_eq!(circular_mean(&p, [0.1, 0.0], 0.1), 1.0);
        assert_eq!(circular_mean(&p, [0.1, 0.0], 0.0), 1.0);
    }

    #[test]
    fn gaussian_circular_mean_matches_sampling() {
        let p = standard_phantom_2d();
        let (c, t) = ([1.05, 0.0], 1.3);
        let n = 4096;
        let oracle: f64 = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                p.eval(&[c[0] + t * th.cos(), c[1] + t * th.sin()])
            })
            .sum::<f64>()
            / n as f64;
        assert!((circular_mean(&p, c, t) - oracle).abs() < 1e-12);
    }

    #[test]
    fn ball_closed_forms() {
        let p = Phantom::new(3, vec![Primitive::ball([0.0; 3], 0.2, 1.0)]).unwrap();
        let y = [1.05, 0.0, 0.0];
        assert_eq!(pressure_3d(&p, y, 0.5), 0.0);
        assert!(pressure_3d(&p, y, 1.05).abs() < 1e-15);
        assert!((pressure_3d(&p, y, 0.9) - 0.15 / 2.1).abs() < 1e-12);
        // Finite difference of t * (cap-area spherical mean).
        let mean = |t: f64| {
            let (d, a) = (1.05f64, 0.2f64);
            if t <= d - a || t >= d + a {
                return 0.0;
            }
            (a * a - (d - t).powi(2)) / (4.0 * d * t)
        };
        let h = 1e-6;
        let fd = ((0.9 + h) * mean(0.9 + h) - (0.9 - h) * mean(0.9 - h)) / (2.0 * h);
        assert!((fd - pressure_3d(&p, y, 0.9)).abs() < 1e-8);
    }

    #[test]
    fn ball_cell_averages_match_midpoint_sums() {
        let dt = 0.01;
        for &(centre, a) in &[([0.3, 0.1, 0.0], 0.25), ([0.0; 3], 0.4), ([0.0, 0.0, 0.9], 0.3)] {
            let p = Phantom::new(3, vec![Primitive::ball(centre, a, 1.3)]).unwrap();
            let y = [0.0, 0.0, 1.0];
            for k in 0..150 {
                let t = k as f64 * dt;
                let n = 20_000;
                let brute = (0..n)
                    .map(|i| pressure_3d(&p, y, (t - 0.5 * dt + (i as f64 + 0.5) * dt / n as f64).abs()))
                    .sum::<f64>()
                    / n as f64;
                assert!((pressure_3d_sample(&p, y, t, dt) - brute).abs() < 1e-4, "t={t}");
            }
        }
    }

    #[test]
    fn gaussian_3d_matches_spherical_mean_derivative() {
        let p = Phantom::new(3, vec![Primitive::gaussian(&[0.3, 0.0, 0.0], 0.1, 1.0)]).unwrap();
        let y = [1.05, 0.0, 0.0];
        let d = 0.75f64;
        let s = 0.1f64;
        // Spherical mean by quadrature over the polar angle.
        let mean = |t: f64| {
            let n = 20_000;
            let h = 2.0 / n as f64;
            (0..n)
                .map(|k| {
                    let mu = -1.0 + (k as f64 + 0.5) * h;
                    (-(t * t + d * d - 2.0 * t * d * mu) / (2.0 * s * s)).exp()
                })
                .sum::<f64>()
                * h
                / 2.0
        };
        for &t in &[0.6, 0.7, 0.75, 0.82] {
            let e = 1e-5;
            let fd = ((t + e) * mean(t + e) - (t - e) * mean(t - e)) / (2.0 * e);
            assert!((fd - pressure_3d(&p, y, t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn ball_line_integral_matches_brute_force() {
        let (a, rho) = (0.2, 0.6);
        for &t in &[0.45, 0.55, 0.7, 0.79] {
            // Integrate the 3D closed form along the line.
            let n = 400_000;
            let smax = 1.2;
            let h = 2.0 * smax / n as f64;
            let oracle: f64 = (0..n)
                .map(|k| {
                    let s = -smax + (k as f64 + 0.5) * h;
                    let d = (rho * rho + s * s).sqrt();
                    if (d - t).abs() <= a {
                        (d - t) / (2.0 * d) * h
                    } else {
                        0.0
                    }
                })
                .sum();
            assert!((ball_line_pressure(1.0, a, rho, t) - oracle).abs() < 1e-5, "t={t}");
        }
    }

    #[test]
    fn taper_shape() {
        let w = taper_weights(100);
        assert_eq!(w[94], 1.0);
        assert!(w[95] < 1.0 && w[95] > 0.9);
        assert!(w[99].abs() < 1e-15);
    }

    #[test]
    fn noise_examples() {
        let p = standard_phantom_2d();
        let ring = DetectorRing::new(1.05, 16).unwrap();
        let time = TimeGrid::new(0.02, 200).unwrap();
        let data = forward_2d(&p, &ring, &time).unwrap();
        let same = add_noise(&data, &NoiseSpec { level: 0.0, seed: 1 }).unwrap();
        assert_eq!(same, data);
        let a = add_noise(&data, &NoiseSpec { level: 0.5, seed: 7 }).unwrap();
        let b = add_noise(&data, &NoiseSpec { level: 0.5, seed: 7 }).unwrap();
        assert_eq!(a, b);
        let diff: f64 = a.values.iter().zip(&data.values).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!((diff / data.norm() - 0.5).abs() < 1e-12);
        let zero = SeriesData::zeros(GeometryTag::Ring, 1.05, 16, time);
        assert!(matches!(add_noise(&zero, &NoiseSpec { level: 0.1, seed: 0 }), Err(Error::ZeroSignal(_))));
    }
}
