//! Normalised associated Legendre functions and orthonormal spherical
//! harmonics.
//!
//! Convention: `Y_s^p(theta, phi) = Pbar_s^p(cos theta) e^{i p phi}` for
//! `p >= 0`, with the Condon-Shortley phase folded into `Pbar`, and
//! `Y_s^{-p} = (-1)^p conj(Y_s^p)`. The harmonics are orthonormal on the
//! unit sphere.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Index of `(s, p)`, `0 <= p <= s`, in a packed triangular table.
#[inline]
pub fn tri_index(s: usize, p: usize) -> usize {
    s * (s + 1) / 2 + p
}

/// Number of `(s, p)` pairs with `0 <= p <= s <= max_degree`.
#[inline]
pub fn tri_len(max_degree: usize) -> usize {
    (max_degree + 1) * (max_degree + 2) / 2
}

/// Fill `out` (length `tri_len(max_degree)`) with `Pbar_s^p(x)`, `x = cos theta`.
pub fn normalized_legendre_into(max_degree: usize, x: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), tri_len(max_degree));
    let sin_theta = (1.0 - x * x).max(0.0).sqrt();
    let mut diag = 1.0 / (4.0 * PI).sqrt();
    for p in 0..=max_degree {
        if p > 0 {
            diag *= -((2 * p + 1) as f64 / (2 * p) as f64).sqrt() * sin_theta;
        }
        out[tri_index(p, p)] = diag;
        if p == max_degree {
            break;
        }
        let mut lower = diag;
        let mut cur = (2 * p + 3) as f64;
        cur = cur.sqrt() * x * diag;
        out[tri_index(p + 1, p)] = cur;
        for s in p + 2..=max_degree {
            let s2 = (s * s) as f64;
            let p2 = (p * p) as f64;
            let a = ((4.0 * s2 - 1.0) / (s2 - p2)).sqrt();
            let sm1 = ((s - 1) * (s - 1)) as f64;
            let b = ((sm1 - p2) / (4.0 * sm1 - 1.0)).sqrt();
            let next = a * (x * cur - b * lower);
            lower = cur;
            cur = next;
            out[tri_index(s, p)] = next;
        }
    }
}

/// Dense table of `Pbar_s^p(x_i)` for a fixed set of nodes.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    max_degree: usize,
    nodes: Vec<f64>,
    /// `values[i * tri_len + tri_index(s, p)]`
    values: Vec<f64>,
}

impl LegendreTable {
    /// `nodes` are polar-angle cosines in `[-1, 1]`.
    pub fn new(max_degree: usize, nodes: Vec<f64>) -> Result<Self> {
        if nodes.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
            return Err(Error::Domain("Legendre nodes must be cosines in [-1, 1]".into()));
        }
        let len = tri_len(max_degree);
        let mut values = vec![0.0; len * nodes.len()];
        for (i, &x) in nodes.iter().enumerate() {
            normalized_legendre_into(max_degree, x, &mut values[i * len..(i + 1) * len]);
        }
        Ok(Self { max_degree, nodes, values })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn get(&self, node: usize, s: usize, p: usize) -> f64 {
        self.values[node * tri_len(self.max_degree) + tri_index(s, p)]
    }

    /// All `(s, p)` values at one node, packed by [`tri_index`].
    #[inline]
    pub fn row(&self, node: usize) -> &[f64] {
        let len = tri_len(self.max_degree);
        &self.values[node * len..(node + 1) * len]
    }
}

/// Orthonormal complex spherical harmonic `Y_degree^order(theta, phi)`.
pub fn sph_harm(degree: usize, order: i64, theta: f64, phi: f64) -> Result<Complex64> {
    if order.unsigned_abs() as usize > degree {
        return Err(Error::Index(format!("|order| = {} exceeds degree {degree}", order.abs())));
    }
    let p = order.unsigned_abs() as usize;
    let mut table = vec![0.0; tri_len(degree)];
    normalized_legendre_into(degree, theta.cos(), &mut table);
    let value = table[tri_index(degree, p)] * Complex64::from_polar(1.0, p as f64 * phi);
    if order < 0 {
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * value.conj())
    } else {
        Ok(value)
    }
}
