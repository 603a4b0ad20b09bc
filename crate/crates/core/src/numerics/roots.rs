//! Bracketing root finders for monotone scalar maps.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]`, `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::NotBracketed { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Safeguarded Newton iteration: Newton steps that leave the current bracket
/// (or stall) are replaced by bisection. `f` returns `(value, derivative)`.
///
/// Stops when `|value| <= f_tol` or the bracket is narrower than `x_tol`.
pub fn newton_bisect<F>(mut f: F, lo: f64, hi: f64, x_tol: f64, f_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NotBracketed { lo: a, hi: b });
    }
    if fa.abs() <= f_tol {
        return Ok(a);
    }
    if fb.abs() <= f_tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NotBracketed { lo: a, hi: b });
    }
    let increasing = fb > 0.0;
    let mut x = 0.5 * (a + b);
    let mut dx_old = b - a;
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if !fx.is_finite() {
            return Err(Error::NonFinite { x });
        }
        if fx.abs() <= f_tol {
            return Ok(x);
        }
        if (fx > 0.0) == increasing {
            b = x;
        } else {
            a = x;
        }
        if b - a <= x_tol {
            return Ok(0.5 * (a + b));
        }
        let newton = if dfx != 0.0 && dfx.is_finite() { x - fx / dfx } else { f64::NAN };
        let step_ok = newton.is_finite() && newton > a && newton < b && (newton - x).abs() < 0.5 * dx_old.abs();
        let next = if step_ok { newton } else { 0.5 * (a + b) };
        dx_old = next - x;
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::NoConvergence(format!("newton_bisect on [{lo}, {hi}]")))
}

/// Grows `hi` geometrically from `start` until `f(hi) >= target` for an
/// increasing `f`; returns the first such point.
pub fn expand_upper<F>(mut f: F, start: f64, target: f64, max_doublings: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut hi = start.max(f64::MIN_POSITIVE);
    for _ in 0..max_doublings {
        let v = f(hi);
        if v.is_finite() && v >= target {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(Error::NotBracketed { lo: start, hi })
}
