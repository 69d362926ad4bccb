//! 2D free-space wave fields of radial primitives via the Poisson formula
//! `u(t) = d/dt int_0^t r M(r) / sqrt(t^2 - r^2) dr`, with `M` the circular
//! mean of the initial datum about the observation point.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::model::TimeGrid;
use crate::specfun::{bessel_i0e, bessel_i1e, gauss_legendre};

/// Gaussians are cut off `WIDTH` standard deviations from their centre.
const WIDTH: f64 = 8.0;
const PANELS: usize = 8;
const ORDER: usize = 8;
const DISK_NODES: usize = 96;

/// Gauss-Legendre rule on `[-1, 1]` shared by the 2D integrators.
#[derive(Debug, Clone)]
pub(crate) struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Rule {
    pub(crate) fn new(order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        Self { x, w }
    }

    /// `int_lo^hi g` with this rule on a single panel.
    #[inline]
    fn integrate(&self, lo: f64, hi: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.x.iter().zip(&self.w) {
            acc += w * g(mid + half * x);
        }
        acc * half
    }
}

/// Circular mean of `A exp(-|x-c|^2/2 sigma^2)` over the circle of radius `r`
/// about a point at distance `d` from `c`, and its `r`-derivative.
#[inline]
fn gaussian_mean(amp: f64, sigma: f64, d: f64, r: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let z = r * d / s2;
    let g = amp * (-(r - d) * (r - d) / (2.0 * s2)).exp();
    let i0 = bessel_i0e(z);
    let i1 = bessel_i1e(z);
    (g * i0, g * (d * i1 - r * i0) / s2)
}

pub(crate) fn gaussian_circular_mean(amp: f64, sigma: f64, d: f64, r: f64) -> f64 {
    gaussian_mean(amp, sigma, d, r).0
}

/// Pressure time series at distance `d` from the centre of a 2D Gaussian.
pub(crate) fn gaussian_series(amp: f64, sigma: f64, d: f64, time: &TimeGrid, out: &mut [f64]) {
    let rule = Rule::new(ORDER);
    let a = (d - WIDTH * sigma).max(0.0);
    let b = d + WIDTH * sigma;

    // After the trailing edge has passed, the r-integral covers the whole
    // support with fixed nodes, so cache w * r * M(r).
    let mut tail: Option<(Vec<f64>, Vec<f64>)> = None;

    for (i, o) in out.iter_mut().enumerate() {
        let t = time.t(i);
        *o = if t <= a {
            0.0
        } else if t < b {
            // r = t sin(psi) removes the Abel singularity; panels are uniform
            // in r so each spans at most one standard deviation.
            let mut acc = 0.0;
            for k in 0..PANELS {
                let r0 = a + (t - a) * k as f64 / PANELS as f64;
                let r1 = a + (t - a) * (k + 1) as f64 / PANELS as f64;
                let p0 = (r0 / t).min(1.0).asin();
                let p1 = (r1 / t).min(1.0).asin();
                acc += rule.integrate(p0, p1, |psi| {
                    let s = psi.sin();
                    let (m, dm) = gaussian_mean(amp, sigma, d, t * s);
                    s * m + t * s * s * dm
                });
            }
            acc
        } else {
            let (r, wrm) = tail.get_or_insert_with(|| {
                let mut r = Vec::with_capacity(PANELS * ORDER);
                let mut wrm = Vec::with_capacity(PANELS * ORDER);
                let width = (b - a) / PANELS as f64;
                for k in 0..PANELS {
                    let lo = a + k as f64 * width;
                    for (x, w) in rule.x.iter().zip(&rule.w) {
                        let rr = lo + 0.5 * width * (x + 1.0);
                        r.push(rr);
                        wrm.push(0.5 * width * w * rr * gaussian_mean(amp, sigma, d, rr).0);
                    }
                }
                (r, wrm)
            });
            let t2 = t * t;
            let s: f64 = r
                .iter()
                .zip(wrm.iter())
                .map(|(rr, c)| {
                    let q = t2 - rr * rr;
                    c / (q * q.sqrt())
                })
                .sum();
            -t * s
        };
    }
}

/// Pressure series of one Gaussian tabulated on a uniform grid of distances
/// and interpolated with 4-point Lagrange cubics.
pub(crate) struct GaussianTable {
    d0: f64,
    h: f64,
    nt: usize,
    rows: Vec<f64>,
    n_rows: usize,
}

impl GaussianTable {
    pub(crate) fn new(amp: f64, sigma: f64, d_min: f64, d_max: f64, time: &TimeGrid) -> Self {
        let h = sigma / 16.0;
        let d0 = (d_min - 2.0 * h).max(0.0);
        let n_rows = ((d_max - d0) / h).ceil() as usize + 4;
        let nt = time.nt;
        let mut rows = vec![0.0; n_rows * nt];
        rows.par_chunks_mut(nt).enumerate().for_each(|(k, row)| {
            gaussian_series(amp, sigma, d0 + k as f64 * h, time, row);
        });
        Self { d0, h, nt, rows, n_rows }
    }

    /// Add the interpolated series at distance `d` to `out`.
    pub(crate) fn add_into(&self, d: f64, out: &mut [f64]) {
        let u = (d - self.d0) / self.h;
        let base = (u.floor() as isize - 1).clamp(0, self.n_rows as isize - 4) as usize;
        let x = u - base as f64;
        // Lagrange weights for nodes 0, 1, 2, 3.
        let w = [
            -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0,
            x * (x - 2.0) * (x - 3.0) / 2.0,
            -x * (x - 1.0) * (x - 3.0) / 2.0,
            x * (x - 1.0) * (x - 2.0) / 6.0,
        ];
        for (m, wm) in w.iter().enumerate() {
            let row = &self.rows[(base + m) * self.nt..(base + m + 1) * self.nt];
            for (o, v) in out.iter_mut().zip(row) {
                *o += wm * v;
            }
        }
    }
}

/// Circular mean of a disk indicator (radius `a`, amplitude `amp`) over the
/// circle of radius `r` about a point at distance `d` from its centre.
pub(crate) fn disk_circular_mean(amp: f64, a: f64, d: f64, r: f64) -> f64 {
    if r <= a - d {
        return amp;
    }
    if r <= (d - a).abs() || r >= d + a {
        return 0.0;
    }
    let c = ((r * r + d * d - a * a) / (2.0 * r * d)).clamp(-1.0, 1.0);
    amp * c.acos() / PI
}

/// `G(t) = int_0^t r M(r) / sqrt(t^2 - r^2) dr` for a disk.
fn disk_abel(rule: &Rule, amp: f64, a: f64, d: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let mut g = 0.0;
    if d < a {
        let c = (a - d).min(t);
        g += amp * (t - (t * t - c * c).max(0.0).sqrt());
    }
    let lo = (d - a).abs();
    let hi = (d + a).min(t);
    if hi > lo && d > 0.0 {
        let p0 = (lo / t).min(1.0).asin();
        let p1 = (hi / t).min(1.0).asin();
        // psi = p0 + (p1 - p0)(1 - cos s)/2 clusters nodes at both ends where
        // the integrand has square-root behaviour.
        let span = p1 - p0;
        g += rule.integrate(0.0, PI, |s| {
            let psi = p0 + 0.5 * span * (1.0 - s.cos());
            let jac = 0.5 * span * s.sin();
            let sp = psi.sin();
            t * sp * disk_circular_mean(amp, a, d, t * sp) * jac
        });
    }
    g
}

/// Pressure series of a disk at distance `d`, by centred differences of the
/// Abel integral with step `dt / 8`.
pub(crate) fn disk_series(amp: f64, a: f64, d: f64, time: &TimeGrid, out: &mut [f64]) {
    let rule = Rule::new(DISK_NODES);
    let delta = time.dt / 8.0;
    for (i, o) in out.iter_mut().enumerate() {
        let t = time.t(i);
        *o = (disk_abel(&rule, amp, a, d, t + delta) - disk_abel(&rule, amp, a, d, t - delta)) / (2.0 * delta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense composite trapezoid in `s` with `r = t - s^2`, then a centred
    /// difference in `t`: an independent route to the same Poisson integral.
    fn abel_oracle(mean: impl Fn(f64) -> f64, t: f64, delta: f64) -> f64 {
        let g = |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let n = 200_000;
            let smax = t.sqrt();
            let h = smax / n as f64;
            let f = |s: f64| {
                let r = (t - s * s).max(0.0);
                2.0 * r * mean(r) / (t + r).sqrt()
            };
            let mut acc = 0.5 * (f(0.0) + f(smax));
            for k in 1..n {
                acc += f(k as f64 * h);
            }
            acc * h
        };
        (g(t + delta) - g(t - delta)) / (2.0 * delta)
    }

    #[test]
    fn gaussian_series_matches_independent_quadrature() {
        let time = TimeGrid::new(0.01, 200).unwrap();
        let (amp, sigma, d) = (1.0, 0.1, 1.0);
        let mut out = vec![0.0; time.nt];
        gaussian_series(amp, sigma, d, &time, &mut out);
        for &i in &[30usize, 90, 100, 110, 150, 199] {
            let t = time.t(i);
            let oracle = abel_oracle(|r| gaussian_circular_mean(amp, sigma, d, r), t, 1e-4);
            assert!((out[i] - oracle).abs() < 1e-5, "t={t}: {} vs {oracle}", out[i]);
        }
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn table_interpolation_matches_direct_series() {
        let time = TimeGrid::new(0.005, 400).unwrap();
        let table = GaussianTable::new(0.7, 0.06, 0.6, 1.4, &time);
        let peak;
        let mut direct = vec![0.0; time.nt];
        gaussian_series(0.7, 0.06, 1.0123, &time, &mut direct);
        peak = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut interp = vec![0.0; time.nt];
        table.add_into(1.0123, &mut interp);
        let err = direct.iter().zip(&interp).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-4 * peak, "err {err} peak {peak}");
    }

    #[test]
    fn disk_mean_matches_circle_sampling() {
        let (a, d, r) = (0.3, 1.05, 1.05);
        let n = 1_000_000;
        let mut inside = 0usize;
        for k in 0..n {
            let th = 2.0 * PI * (k as f64 + 0.5) / n as f64;
            let (x, y) = (d + r * th.cos(), r * th.sin());
            if x * x + y * y <= a * a {
                inside += 1;
            }
        }
        let oracle = inside as f64 / n as f64;
        let expected = ((r * r + d * d - a * a) / (2.0 * r * d)).acos() / PI;
        assert!((disk_circular_mean(1.0, a, d, r) - expected).abs() < 1e-15);
        assert!((expected - oracle).abs() < 1e-4);
        assert_eq!(disk_circular_mean(1.0, a, d, 0.5), 0.0);
        assert_eq!(disk_circular_mean(1.0, 0.3, 0.1, 0.1), 1.0);
    }

    #[test]
    fn disk_series_matches_independent_quadrature() {
        let time = TimeGrid::new(0.01, 150).unwrap();
        let (a, d) = (0.25, 0.8);
        let mut out = vec![0.0; time.nt];
        disk_series(1.0, a, d, &time, &mut out);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in (0..time.nt).step_by(7) {
            let t = time.t(i);
            let oracle = abel_oracle(|r| disk_circular_mean(1.0, a, d, r), t, time.dt / 8.0);
            num += (out[i] - oracle).powi(2);
            den += oracle * oracle;
        }
        assert!((num / den).sqrt() < 1e-3, "rel {}", (num / den).sqrt());
    }
}
