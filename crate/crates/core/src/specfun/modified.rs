//! Exponentially scaled modified Bessel functions `I0e(z) = e^{-z} I0(z)` and
//! `I1e(z) = e^{-z} I1(z)` for `z >= 0`.

use std::f64::consts::PI;

const SWITCH: f64 = 20.0;

/// `e^{-z} I_0(z)`.
pub fn bessel_i0e(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < SWITCH {
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-z).exp()
    } else {
        asymptotic(0.0, z)
    }
}

/// `e^{-z} I_1(z)`.
pub fn bessel_i1e(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < SWITCH {
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * (k + 1.0));
            sum += term;
            k += 1.0;
        }
        0.5 * z * sum * (-z).exp()
    } else {
        asymptotic(1.0, z)
    }
}

fn asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}
