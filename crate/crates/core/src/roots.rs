//! Bracketing root finder for strictly monotone scalar maps.

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const TOLERANCE: f64 = 1e-12;

/// Finds `x` with `f(x) = 0` for an increasing `f`, starting from the guess
/// bracket `[lo, hi]` and growing it geometrically until the sign changes.
pub fn increasing_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::NoRoot(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut step = hi - lo;
    let mut grown = 0;
    while f(lo) > 0.0 {
        lo -= step;
        step *= 2.0;
        grown += 1;
        if grown > 200 || !lo.is_finite() {
            return Err(Error::NoRoot("lower bracket escaped".into()));
        }
    }
    step = hi - lo;
    grown = 0;
    while f(hi) < 0.0 {
        hi += step;
        step *= 2.0;
        grown += 1;
        if grown > 200 || !hi.is_finite() {
            return Err(Error::NoRoot("upper bracket escaped".into()));
        }
    }
    bisect(f, lo, hi)
}

/// Plain bisection on a bracket where `f(lo) <= 0 <= f(hi)`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo.is_nan() || fhi.is_nan() || flo > 0.0 || fhi < 0.0 {
        return Err(Error::NoRoot(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= TOLERANCE * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximizes a concave function on `[lo, hi]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..MAX_ITERATIONS {
        if hi - lo < 1e-12 {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two_by_growth() {
        let r = increasing_root(|x| x * x * x - 2.0, 0.0, 0.1).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-11);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-6 && (v - 2.0).abs() < 1e-10);
    }
}
