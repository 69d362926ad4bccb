//! Spherical Bessel functions `j_s`, `y_s` and `h_s^(1) = j_s + i y_s`.

use num_complex::Complex64;

use super::bessel::{HankelValue, MAX_ORDER, OVERFLOW_LIMIT};
use crate::{Error, Result};

const RESCALE_LIMIT: f64 = 1e250;

fn check(order: usize, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("spherical Bessel argument must be finite and >= 0, got {x}")));
    }
    if order > MAX_ORDER {
        return Err(Error::Domain(format!("order {order} exceeds the supported maximum {MAX_ORDER}")));
    }
    Ok(())
}

fn j0_closed(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

fn j1_closed(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
    } else {
        (x.sin() / x - x.cos()) / x
    }
}

/// `j_0(x) ..= j_max_order(x)`.
pub fn spherical_j_all(max_order: usize, x: f64) -> Result<Vec<f64>> {
    check(max_order, x)?;
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    if (max_order as f64) <= x {
        out[0] = j0_closed(x);
        if max_order >= 1 {
            out[1] = j1_closed(x);
        }
        for k in 1..max_order {
            out[k + 1] = (2 * k + 1) as f64 / x * out[k] - out[k - 1];
        }
        return Ok(out);
    }
    // Miller: downward recurrence from well above max(order, x), then
    // normalise against whichever of j_0, j_1 is larger in magnitude.
    let reach = max_order.max(x.ceil() as usize).max(1);
    let start = reach + 30 + (200.0 * reach as f64).sqrt() as usize;
    let mut table = vec![0.0; start + 1];
    table[start] = 1.0;
    let mut upper = 0.0;
    for k in (1..=start).rev() {
        let lower = (2 * k + 1) as f64 / x * table[k] - upper;
        upper = table[k];
        table[k - 1] = lower;
        if lower.abs() > RESCALE_LIMIT {
            for v in &mut table[k - 1..] {
                *v /= RESCALE_LIMIT;
            }
            upper /= RESCALE_LIMIT;
        }
    }
    let (j0, j1) = (j0_closed(x), j1_closed(x));
    let scale = if j0.abs() >= j1.abs() { j0 / table[0] } else { j1 / table[1] };
    for (o, t) in out.iter_mut().zip(&table) {
        *o = t * scale;
    }
    Ok(out)
}

/// `j_order(x)` for `x >= 0`.
pub fn spherical_j(order: usize, x: f64) -> Result<f64> {
    Ok(spherical_j_all(order, x)?[order])
}

/// `h_0^(1)(x) ..= h_max_order^(1)(x)` for `x > 0`.
pub fn spherical_h1_all(max_order: usize, x: f64) -> Result<Vec<HankelValue>> {
    check(max_order, x)?;
    if x == 0.0 {
        return Err(Error::Domain("spherical Hankel function requires a positive argument".into()));
    }
    let j = spherical_j_all(max_order, x)?;
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(max_order + 1);
    let mut prev = -c / x;
    out.push(HankelValue::Finite(Complex64::new(j[0], prev)));
    if max_order == 0 {
        return Ok(out);
    }
    let mut cur = -c / (x * x) - s / x;
    let mut overflowed = false;
    for k in 1..=max_order {
        if k > 1 && !overflowed {
            let next = (2 * k - 1) as f64 / x * cur - prev;
            prev = cur;
            cur = next;
        }
        overflowed = overflowed || cur.abs() > OVERFLOW_LIMIT || !cur.is_finite();
        out.push(if overflowed {
            HankelValue::Overflow
        } else {
            HankelValue::Finite(Complex64::new(j[k], cur))
        });
    }
    Ok(out)
}

/// `h_order^(1)(x)` for `x > 0`. `h_0^(1)(x) = -i e^{ix} / x`.
pub fn spherical_h1(order: usize, x: f64) -> Result<HankelValue> {
    Ok(spherical_h1_all(order, x)?[order])
}
