//! Cylindrical Bessel functions `J_n`, `Y_n` and Hankel functions
//! `H_n^(1) = J_n + i Y_n` of non-negative integer order and real argument.
//!
//! `J_n` is always obtained from Miller's normalised downward recurrence.
//! `Y_0` and `Y_1` come from Neumann series over the same `J` table for
//! moderate arguments and from the Hankel asymptotic expansion for large
//! ones; higher orders use the (stable) upward recurrence.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Largest order accepted by the public evaluators.
pub const MAX_ORDER: usize = 100_000;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ASYMPTOTIC_THRESHOLD: f64 = 25.0;
const RESCALE_LIMIT: f64 = 1e250;

/// Magnitude beyond which a Hankel value is reported as [`HankelValue::Overflow`].
pub const OVERFLOW_LIMIT: f64 = 1e250;

/// Value of a Hankel function, or a flag that its modulus is beyond the
/// representable range.
///
/// Overflow happens for orders well above the argument, where `|Y_n|` grows
/// super-exponentially. Spectral filters divide by the Hankel value, so an
/// overflowed entry simply means "this coefficient is zero".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HankelValue {
    Finite(Complex64),
    Overflow,
}

impl HankelValue {
    pub fn is_overflow(&self) -> bool {
        matches!(self, HankelValue::Overflow)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            HankelValue::Finite(v) => Some(v),
            HankelValue::Overflow => None,
        }
    }

    /// `1 / value`, with overflow mapped to zero.
    pub fn recip_or_zero(&self) -> Complex64 {
        match *self {
            HankelValue::Finite(v) => v.inv(),
            HankelValue::Overflow => Complex64::new(0.0, 0.0),
        }
    }
}

fn check_argument(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::Domain(format!("order {order} exceeds the supported maximum {MAX_ORDER}")));
    }
    Ok(())
}

/// Normalised Miller table `J_0(x) ..= J_top(x)` for `x > 0`, with `top`
/// comfortably above both `min_order` and `x`.
fn miller_table(min_order: usize, x: f64) -> Vec<f64> {
    debug_assert!(x > 0.0);
    let reach = min_order.max(x.ceil() as usize).max(1);
    let mut start = reach + 30 + (200.0 * reach as f64).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut table = vec![0.0; start + 1];
    table[start] = 1.0;
    let mut upper = 0.0;
    for k in (1..=start).rev() {
        let lower = 2.0 * k as f64 / x * table[k] - upper;
        upper = table[k];
        table[k - 1] = lower;
        if lower.abs() > RESCALE_LIMIT {
            for v in &mut table[k - 1..] {
                *v /= RESCALE_LIMIT;
            }
            upper /= RESCALE_LIMIT;
        }
    }
    let even_sum: f64 = table.iter().skip(2).step_by(2).sum();
    let norm = table[0] + 2.0 * even_sum;
    for v in &mut table {
        *v /= norm;
    }
    table
}

/// `J_0(x) ..= J_max_order(x)`.
pub fn bessel_j_all(max_order: usize, x: f64) -> Result<Vec<f64>> {
    check_argument(x)?;
    check_order(max_order)?;
    if x == 0.0 {
        let mut out = vec![0.0; max_order + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    let mut table = miller_table(max_order, x);
    table.truncate(max_order + 1);
    Ok(table)
}

/// `J_order(x)` for `x >= 0`.
pub fn bessel_j(order: usize, x: f64) -> Result<f64> {
    Ok(bessel_j_all(order, x)?[order])
}

/// Hankel asymptotic expansion of `(J_nu, Y_nu)` for large `x`.
fn asymptotic_jy(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut previous = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > previous || term == 0.0 {
            break;
        }
        previous = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    let (s, c) = chi.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// `(Y_0(x), Y_1(x))` for `x > 0`.
pub fn bessel_y01(x: f64) -> (f64, f64) {
    if x >= ASYMPTOTIC_THRESHOLD {
        return (asymptotic_jy(0.0, x).1, asymptotic_jy(1.0, x).1);
    }
    let j = miller_table(2, x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut sum0 = 0.0;
    let mut sum1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum0 += sign * j[2 * k] / k as f64;
        sum1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = 2.0 / PI * log_term * j[0] - 4.0 / PI * sum0;
    let y1 = 2.0 / PI * (log_term * j[1] - j[0] / x) + 2.0 / PI * sum1;
    (y0, y1)
}

/// `Y_0(x) ..= Y_max_order(x)` by upward recurrence, `None` once the
/// magnitude exceeds [`OVERFLOW_LIMIT`].
fn bessel_y_all(max_order: usize, x: f64) -> Vec<Option<f64>> {
    let (y0, y1) = bessel_y01(x);
    let mut out = Vec::with_capacity(max_order + 1);
    out.push(Some(y0));
    if max_order == 0 {
        return out;
    }
    let mut prev = y0;
    let mut cur = y1;
    let mut overflowed = cur.abs() > OVERFLOW_LIMIT || !cur.is_finite();
    out.push(if overflowed { None } else { Some(cur) });
    for k in 1..max_order {
        if overflowed {
            out.push(None);
            continue;
        }
        let next = 2.0 * k as f64 / x * cur - prev;
        prev = cur;
        cur = next;
        overflowed = cur.abs() > OVERFLOW_LIMIT || !cur.is_finite();
        out.push(if overflowed { None } else { Some(cur) });
    }
    out
}

/// `H_0^(1)(x) ..= H_max_order^(1)(x)` for `x > 0`.
pub fn hankel1_all(max_order: usize, x: f64) -> Result<Vec<HankelValue>> {
    check_argument(x)?;
    check_order(max_order)?;
    if x == 0.0 {
        return Err(Error::Domain("Hankel function requires a positive argument".into()));
    }
    let j = miller_table(max_order, x);
    let y = bessel_y_all(max_order, x);
    Ok(y
        .into_iter()
        .enumerate()
        .map(|(k, yk)| match yk {
            Some(yk) => HankelValue::Finite(Complex64::new(j[k], yk)),
            None => HankelValue::Overflow,
        })
        .collect())
}

/// `H_order^(1)(x)` for `x > 0`.
pub fn hankel1(order: usize, x: f64) -> Result<HankelValue> {
    Ok(hankel1_all(order, x)?[order])
}

/// `Y_order(x)` for `x > 0`; `None` signals overflow.
pub fn bessel_y(order: usize, x: f64) -> Result<Option<f64>> {
    check_argument(x)?;
    check_order(order)?;
    if x == 0.0 {
        return Err(Error::Domain("Y_n is singular at zero".into()));
    }
    Ok(bessel_y_all(order, x)[order])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series of `J_n`, accurate for small arguments.
    fn j_series(n: usize, x: f64) -> f64 {
        let mut term = (0.5 * x).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for m in 1..60 {
            term *= -(0.25 * x * x) / (m as f64 * (m + n) as f64);
            sum += term;
        }
        sum
    }

    /// Power series of `Y_0`.
    fn y0_series(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = 1.0;
        let mut harmonic = 0.0;
        for m in 1..60 {
            harmonic += 1.0 / m as f64;
            term *= -(0.25 * x * x) / (m as f64 * m as f64);
            sum += term * harmonic;
        }
        2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j_series(0, x) - sum)
    }

    #[test]
    fn trivial_values_at_zero() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_argument_is_rejected() {
        assert!(matches!(bessel_j(0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(hankel1(0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(hankel1(2, -0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn first_zero_of_j0() {
        // Bisection on the power-series oracle.
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j_series(0, lo) * j_series(0, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let zero = 0.5 * (lo + hi);
        assert!((zero - 2.404825557695773).abs() < 1e-12);
        assert!(bessel_j(0, 2.404825557695773).unwrap().abs() < 1e-10);
    }

    #[test]
    fn hankel_at_one_matches_series() {
        let h = hankel1(0, 1.0).unwrap().finite().unwrap();
        assert!((h.re - j_series(0, 1.0)).abs() < 1e-12);
        assert!((h.im - y0_series(1.0)).abs() < 1e-12);
        assert!((h.re - 0.765_197_686_557_966_6).abs() < 1e-8);
        assert!((h.im - 0.088_256_964_215_676_96).abs() < 1e-8);
    }

    #[test]
    fn j_matches_series_for_small_arguments() {
        for n in 0..12 {
            for &x in &[0.01, 0.3, 1.0, 2.5, 5.0, 7.5] {
                let a = bessel_j(n, x).unwrap();
                let b = j_series(n, x);
                assert!((a - b).abs() < 1e-13, "n={n} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn y1_reference_value() {
        let (y0, y1) = bessel_y01(1.0);
        assert!((y0 - 0.088_256_964_215_676_96).abs() < 1e-13);
        assert!((y1 + 0.781_212_821_300_288_7).abs() < 1e-13);
    }

    #[test]
    fn neumann_and_asymptotic_routes_agree_near_switch() {
        for i in 0..40 {
            let x = 18.0 + 0.37 * i as f64;
            let j = miller_table(2, x);
            let (ja0, ya0) = asymptotic_jy(0.0, x);
            let (ja1, ya1) = asymptotic_jy(1.0, x);
            assert!((j[0] - ja0).abs() < 1e-13);
            assert!((j[1] - ja1).abs() < 1e-13);
            // Force the Neumann route below the switch point.
            let log_term = (0.5 * x).ln() + EULER_GAMMA;
            let mut sum0 = 0.0;
            let mut sum1 = 0.0;
            let mut k = 1;
            while 2 * k + 1 < j.len() {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sum0 += sign * j[2 * k] / k as f64;
                sum1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
                k += 1;
            }
            let y0 = 2.0 / PI * log_term * j[0] - 4.0 / PI * sum0;
            let y1 = 2.0 / PI * (log_term * j[1] - j[0] / x) + 2.0 / PI * sum1;
            assert!((y0 - ya0).abs() < 1e-12, "x={x}");
            assert!((y1 - ya1).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn wronskian_identity() {
        for &x in &[0.05, 0.7, 3.0, 12.0, 24.9, 25.1, 80.0, 400.0, 1000.0] {
            let top = 60usize.max(x as usize + 20);
            let h = hankel1_all(top, x).unwrap();
            for k in 0..top {
                let (Some(a), Some(b)) = (h[k].finite(), h[k + 1].finite()) else {
                    continue;
                };
                let w = b.re * a.im - a.re * b.im;
                let expected = 2.0 / (PI * x);
                let scale = (b.re * a.im).abs().max(1.0);
                assert!(
                    (w - expected).abs() < 1e-10 * scale,
                    "x={x} k={k}: {w} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn large_order_flags_overflow() {
        let h = hankel1_all(400, 0.5).unwrap();
        assert!(h[0].finite().is_some());
        assert!(h[400].is_overflow());
        assert_eq!(h[400].recip_or_zero(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn large_argument_and_order_stay_accurate() {
        // Sum rule J_0 + 2 sum J_2k = 1 and addition J_{n-1}+J_{n+1} = 2n/x J_n.
        for &x in &[150.0, 999.0] {
            let j = bessel_j_all(1000, x).unwrap();
            for n in 1..1000 {
                let lhs = j[n - 1] + j[n + 1];
                let rhs = 2.0 * n as f64 / x * j[n];
                assert!((lhs - rhs).abs() < 1e-12, "x={x} n={n}");
            }
            let (ja, _) = asymptotic_jy(0.0, x);
            assert!((j[0] - ja).abs() < 1e-12);
        }
    }

    #[test]
    fn hankel_modulus_never_vanishes() {
        for i in 1..=400 {
            let x = 0.25 * i as f64;
            for k in [0usize, 1, 5, 20] {
                if let HankelValue::Finite(v) = hankel1(k, x).unwrap() {
                    assert!(v.norm() > 0.0);
                }
            }
        }
    }
}
