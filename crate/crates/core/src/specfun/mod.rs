//! Special functions used by every pipeline: cylindrical and spherical
//! Bessel/Hankel functions, normalised Legendre functions, spherical
//! harmonics, scaled modified Bessel functions and Gauss-Legendre quadrature.

mod bessel;
mod legendre;
mod modified;
mod spherical;

use std::f64::consts::E;

pub use bessel::{bessel_j, bessel_j_all, bessel_y, bessel_y01, hankel1, hankel1_all, HankelValue, MAX_ORDER, OVERFLOW_LIMIT};
pub use legendre::{normalized_legendre_into, sph_harm, tri_index, tri_len, LegendreTable};
pub use modified::{bessel_i0e, bessel_i1e};
pub use spherical::{spherical_h1, spherical_h1_all, spherical_j, spherical_j_all};

/// Harmonic truncation order `ceil(e * lambda * radius / 2) + 20`: beyond it
/// `J_k(lambda r)` for `r <= radius` is negligible.
pub fn truncation_order(lambda: f64, radius: f64) -> usize {
    (E * lambda * radius / 2.0).ceil() as usize + 20
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess for the i-th largest root.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped onto `[a, b]`, split into `panels` equal panels
/// of `order` nodes each.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let lo = a + k as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * width * (xi + 1.0));
            weights.push(0.5 * width * wi);
        }
    }
    (nodes, weights)
}
