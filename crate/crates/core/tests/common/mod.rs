//! Special-function identity checks shared by the property tests and the
//! acceptance report. Each returns the deviation measured in the norm its
//! tolerance refers to.

#![allow(dead_code)]

use std::f64::consts::{E, PI};

use tatrecon::recon2d::{spectral_filter_2d, HarmonicSpectrum2D};
use tatrecon::recon3d::{spectral_filter_3d, SphericalHarmonicSpectrum};
use tatrecon::specfun::{
    bessel_j, bessel_j_all, bessel_y, composite_gauss, gauss_legendre, hankel1, hankel1_all, normalized_legendre_into,
    sph_harm, spherical_h1, spherical_h1_all, spherical_j, spherical_j_all, tri_index, tri_len, HankelValue,
};
use tatrecon::Complex64;

pub const R: f64 = 1.05;

pub const ADDITION_TOL: f64 = 1e-6;
pub const JACOBI_ANGER_TOL: f64 = 1e-8;
pub const FUNK_HECKE_TOL: f64 = 1e-6;
pub const WRONSKIAN_TOL: f64 = 1e-10;
pub const ORTHONORMALITY_TOL: f64 = 1e-8;
pub const HANKEL_PAIR_TOL: f64 = 1e-3;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn i_pow(k: usize) -> Complex64 {
    [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)][k % 4]
}

fn finite(h: HankelValue) -> Option<Complex64> {
    match h {
        HankelValue::Finite(v) => Some(v),
        HankelValue::Overflow => None,
    }
}

/// Truncation for the Jacobi-Anger check.
pub fn series_order(lambda: f64) -> usize {
    (E * lambda * R).ceil() as usize + 20
}

/// The Neumann part of an addition series only decays like `(r/R)^k`, so the
/// truncation adds the `ln(1e-8) / ln(0.9 / R)` terms needed at `r = 0.9`.
pub fn addition_order(lambda: f64) -> usize {
    series_order(lambda) + ((1e-8f64).ln() / (0.9 / R).ln()).ceil() as usize
}

pub fn sphere_quadrature(n: usize, g: impl Fn(f64, f64) -> Complex64) -> Complex64 {
    let (x, w) = gauss_legendre(n);
    let n_phi = 2 * n + 2;
    let mut acc = c(0.0, 0.0);
    for (xi, wi) in x.iter().zip(&w) {
        let theta = xi.acos();
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            acc += g(theta, phi) * (wi * 2.0 * PI / n_phi as f64);
        }
    }
    acc
}

/// `|Σ_k H_|k|(λR) J_|k|(λr) e^{ik(φ-θ)} - H_0(λ|y - x|)|`.
pub fn addition_2d(lambda: f64, r: f64, theta: f64, phi: f64) -> f64 {
    let k_max = addition_order(lambda);
    let h = hankel1_all(k_max, lambda * R).unwrap();
    let j = bessel_j_all(k_max, lambda * r).unwrap();
    let mut sum = c(0.0, 0.0);
    for k in -(k_max as i64)..=k_max as i64 {
        let a = k.unsigned_abs() as usize;
        if let Some(hk) = finite(h[a]) {
            sum += hk * j[a] * Complex64::from_polar(1.0, k as f64 * (phi - theta));
        }
    }
    let d = (R * R + r * r - 2.0 * R * r * (phi - theta).cos()).sqrt();
    (sum - finite(hankel1(0, lambda * d).unwrap()).unwrap()).norm()
}

/// `|4π Σ_s j_s(λr) h_s(λR) Σ_p Y_s^p(x̂) conj(Y_s^p(ŷ)) - h_0(λ|y - x|)|`
/// with `x̂ = (cx, px)`, `ŷ = (cy, py)` in (cos θ, φ).
pub fn addition_3d(lambda: f64, r: f64, cx: f64, px: f64, cy: f64, py: f64) -> f64 {
    let s_max = addition_order(lambda);
    let h = spherical_h1_all(s_max, lambda * R).unwrap();
    let j = spherical_j_all(s_max, lambda * r).unwrap();
    let mut lx = vec![0.0; tri_len(s_max)];
    let mut ly = vec![0.0; tri_len(s_max)];
    normalized_legendre_into(s_max, cx, &mut lx);
    normalized_legendre_into(s_max, cy, &mut ly);
    let mut sum = c(0.0, 0.0);
    for s in 0..=s_max {
        let Some(hs) = finite(h[s]) else { continue };
        // Σ_p Y_s^p(x̂) conj(Y_s^p(ŷ)) from the p >= 0 half.
        let mut ang = lx[tri_index(s, 0)] * ly[tri_index(s, 0)];
        for p in 1..=s {
            ang += 2.0 * lx[tri_index(s, p)] * ly[tri_index(s, p)] * (p as f64 * (px - py)).cos();
        }
        sum += 4.0 * PI * j[s] * hs * ang;
    }
    let sx = (1.0 - cx * cx).sqrt();
    let sy = (1.0 - cy * cy).sqrt();
    let x = [r * sx * px.cos(), r * sx * px.sin(), r * cx];
    let y = [R * sy * py.cos(), R * sy * py.sin(), R * cy];
    let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
    // h_0(z) = -i e^{iz} / z.
    let exact = c(0.0, -1.0) * Complex64::from_polar(1.0, lambda * d) / (lambda * d);
    (sum - exact).norm()
}

/// `|Σ_k i^|k| J_|k|(λr) e^{ik(θ-φ)} - e^{iλr cos(θ-φ)}|`.
pub fn jacobi_anger(lambda: f64, r: f64, theta: f64, phi: f64) -> f64 {
    let k_max = series_order(lambda);
    let j = bessel_j_all(k_max, lambda * r).unwrap();
    let mut sum = c(0.0, 0.0);
    for k in -(k_max as i64)..=k_max as i64 {
        let a = k.unsigned_abs() as usize;
        sum += i_pow(a) * j[a] * Complex64::from_polar(1.0, k as f64 * (theta - phi));
    }
    (sum - Complex64::from_polar(1.0, lambda * r * (theta - phi).cos())).norm()
}

/// `|∫ e^{-i x·ẑ} Y_s^p(ẑ) dẑ - 4π (-i)^s j_s(|x|) Y_s^p(x̂)|` with
/// `x = lr (sin θ cos φ, sin θ sin φ, ct)`.
pub fn funk_hecke(s: usize, p: i64, lr: f64, ct: f64, ph: f64) -> f64 {
    let st = (1.0 - ct * ct).sqrt();
    let x = [lr * st * ph.cos(), lr * st * ph.sin(), lr * ct];
    let lhs = sphere_quadrature(48, |t, f| {
        let z = [t.sin() * f.cos(), t.sin() * f.sin(), t.cos()];
        let dot = x[0] * z[0] + x[1] * z[1] + x[2] * z[2];
        Complex64::from_polar(1.0, -dot) * sph_harm(s, p, t, f).unwrap()
    });
    let rhs = 4.0 * PI * i_pow(3 * s) * spherical_j(s, lr).unwrap() * sph_harm(s, p, ct.acos(), ph).unwrap();
    (lhs - rhs).norm()
}

/// `|J_{k+1} Y_k - J_k Y_{k+1} - 2/(πx)|`; `None` where `Y` overflows.
pub fn cylindrical_wronskian(k: usize, x: f64) -> Option<f64> {
    let (yk, yk1) = (bessel_y(k, x).unwrap()?, bessel_y(k + 1, x).unwrap()?);
    let w = bessel_j(k + 1, x).unwrap() * yk - bessel_j(k, x).unwrap() * yk1;
    Some((w - 2.0 / (PI * x)).abs())
}

/// `|j_s y_{s-1} - j_{s-1} y_s - 1/x²| / max(1, 1/x²)`; `None` on overflow.
pub fn spherical_wronskian(s: usize, x: f64) -> Option<f64> {
    let a = finite(spherical_h1(s, x).unwrap())?;
    let b = finite(spherical_h1(s - 1, x).unwrap())?;
    let w = a.re * b.im - b.re * a.im;
    Some((w - 1.0 / (x * x)).abs() / (1.0 / (x * x)).max(1.0))
}

/// `|<Y_{s1}^{p1}, Y_{s2}^{p2}> - δ|` by exact product quadrature.
pub fn orthonormality(s1: usize, p1: i64, s2: usize, p2: i64) -> f64 {
    let g = sphere_quadrature(20, |t, f| sph_harm(s1, p1, t, f).unwrap() * sph_harm(s2, p2, t, f).unwrap().conj());
    let expect = if (s1, p1) == (s2, p2) { 1.0 } else { 0.0 };
    (g - expect).norm()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

const SIGMA: f64 = 0.12;
const D_LAMBDA: f64 = 0.05;
const N_ROWS: usize = 1201;

fn profile(k: usize, r: f64) -> f64 {
    r.powi(k as i32) * (-r * r / (2.0 * SIGMA * SIGMA)).exp()
}

/// Trapezoid weights on the λ grid.
fn lambda_weight(m: usize) -> f64 {
    if m == 0 || m == N_ROWS - 1 {
        0.5 * D_LAMBDA
    } else {
        D_LAMBDA
    }
}

fn eval_radii() -> Vec<f64> {
    (0..=90).map(|i| 0.01 * i as f64).collect()
}

/// Relative L2 error on `[0, 0.9]` of the order-`k` profile after simulating
/// `P̂_k = (π/2) i^k λ H_k(λR) F_k` from its Hankel transform `F_k`, applying
/// the library filter and inverting the Hankel transform.
pub fn hankel_pair_2d(k: usize) -> f64 {
    let (rq, wq) = composite_gauss(0.0, R, 40, 8);
    let width = 2 * k + 1;
    let mut spec =
        HarmonicSpectrum2D { k_max: k, n_rows: N_ROWS, d_lambda: D_LAMBDA, coeffs: vec![c(0.0, 0.0); N_ROWS * width] };
    for m in 1..N_ROWS {
        let lambda = m as f64 * D_LAMBDA;
        let f: f64 = rq.iter().zip(&wq).map(|(&r, &w)| w * profile(k, r) * bessel_j(k, lambda * r).unwrap() * r).sum();
        if let Some(h) = finite(hankel1(k, lambda * R).unwrap()) {
            spec.coeffs[m * width + 2 * k] = 0.5 * PI * i_pow(k) * lambda * h * f;
        }
    }
    let b = spectral_filter_2d(&spec, R).unwrap();
    let radii = eval_radii();
    let rec: Vec<f64> = radii
        .iter()
        .map(|&r| {
            (1..N_ROWS)
                .map(|m| {
                    let lambda = m as f64 * D_LAMBDA;
                    lambda_weight(m) * b.get(m, k as i64).re * bessel_j(k, lambda * r).unwrap() * lambda
                })
                .sum()
        })
        .collect();
    let exact: Vec<f64> = radii.iter().map(|&r| profile(k, r)).collect();
    rel_l2(&rec, &exact)
}

/// 3D analogue with `P̂_{s,0} = (-i)^s λ² h_s(λR) F_s / √(2/π)` and
/// `F_s = √(2/π) ∫ f j_s(λr) r² dr`.
pub fn hankel_pair_3d(s: usize) -> f64 {
    let (rq, wq) = composite_gauss(0.0, R, 40, 8);
    let norm = (2.0 / PI).sqrt();
    let mut spec = SphericalHarmonicSpectrum::zeros(s, N_ROWS, D_LAMBDA);
    for m in 1..N_ROWS {
        let lambda = m as f64 * D_LAMBDA;
        let f: f64 = norm
            * rq.iter().zip(&wq).map(|(&r, &w)| w * profile(s, r) * spherical_j(s, lambda * r).unwrap() * r * r).sum::<f64>();
        if let Some(h) = finite(spherical_h1(s, lambda * R).unwrap()) {
            spec.set(m, s, 0, i_pow(3 * s) * lambda * lambda * h * f / norm);
        }
    }
    let b = spectral_filter_3d(&spec, R).unwrap();
    let radii = eval_radii();
    let rec: Vec<f64> = radii
        .iter()
        .map(|&r| {
            norm * (1..N_ROWS)
                .map(|m| {
                    let lambda = m as f64 * D_LAMBDA;
                    lambda_weight(m) * b.get(m, s, 0).re * spherical_j(s, lambda * r).unwrap() * lambda * lambda
                })
                .sum::<f64>()
        })
        .collect();
    let exact: Vec<f64> = radii.iter().map(|&r| profile(s, r)).collect();
    rel_l2(&rec, &exact)
}

/// Map `frac ∈ [0, 1)` to an order `p ∈ [-s, s]`.
pub fn order_from(s: usize, frac: f64) -> i64 {
    ((2 * s + 1) as f64 * frac).floor() as i64 - s as i64
}
