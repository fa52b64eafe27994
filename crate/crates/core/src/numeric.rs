//! Small scalar numerics: adaptive Simpson quadrature, monotone bisection and
//! golden-section search.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// `tol` is relative to the magnitude of the integral, with an absolute
/// floor far below anything the callers care about. Integrands here are
/// smooth on each call (callers split at kinks), so the recursion stays
/// shallow.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // One refinement gives a scale estimate for the relative tolerance.
    let scale = {
        let l = 0.5 * (a + m);
        let r = 0.5 * (m + b);
        let est = (b - a) / 12.0 * (fa + 4.0 * f(l) + 2.0 * fm + 4.0 * f(r) + fb);
        est.abs().max(whole.abs())
    };
    let eps = (tol * scale).max(1e-300);
    let v = simpson_rec(f, a, b, fa, fm, fb, whole, eps, MAX_DEPTH);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature(format!("non-finite integral on [{a}, {b}]")))
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

/// Root of a nondecreasing function on `[lo, hi]` by bisection.
///
/// Requires `g(lo) <= 0 <= g(hi)`. Iterates until the bracket can no
/// longer be split in floating point or its width drops below `xtol`.
pub fn bisect_increasing<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let glo = g(lo);
    let ghi = g(hi);
    if glo.is_nan() || ghi.is_nan() {
        return Err(Error::Numerical("NaN at bisection bracket".into()));
    }
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::Range(format!(
            "bracket [{lo}, {hi}] does not enclose a root (g = {glo}, {ghi})"
        )));
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= xtol {
            break;
        }
        let gm = g(mid);
        if gm.is_nan() {
            return Err(Error::Numerical(format!("NaN during bisection at {mid}")));
        }
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of a nondecreasing function on `[lo, hi]` by the Illinois variant of
/// regula falsi, falling back to bisection whenever the bracket shrinks too
/// slowly. Same contract as [`bisect_increasing`], far fewer evaluations on
/// smooth `g`.
pub fn illinois_increasing<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let mut glo = g(lo);
    let mut ghi = g(hi);
    if glo.is_nan() || ghi.is_nan() {
        return Err(Error::Numerical("NaN at bracket".into()));
    }
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::Range(format!(
            "bracket [{lo}, {hi}] does not enclose a root (g = {glo}, {ghi})"
        )));
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    let mut side = 0i8;
    for it in 0..2200 {
        let width = hi - lo;
        if width <= xtol {
            break;
        }
        let mut x = (lo * ghi - hi * glo) / (ghi - glo);
        if it % 4 == 3 || !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        if x <= lo || x >= hi {
            break;
        }
        let gx = g(x);
        if gx.is_nan() {
            return Err(Error::Numerical(format!("NaN during root search at {x}")));
        }
        if gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
            glo = gx;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            ghi = gx;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if -glo < ghi { lo } else { hi })
}

/// Maximizer of a concave function on `[lo, hi]` by golden-section search.
pub fn golden_max<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut gc = g(c);
    let mut gd = g(d);
    while hi - lo > tol {
        if gc >= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - inv_phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + inv_phi * (hi - lo);
            gd = g(d);
        }
        if c >= d {
            break;
        }
    }
    // The interval endpoints are candidates too when the maximum sits on
    // the boundary.
    let mid = 0.5 * (lo + hi);
    [mid, lo, hi]
        .into_iter()
        .map(|x| (x, g(x)))
        .fold((mid, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// `(e^{c L} - 1) / c`, continuous at `c = 0`.
pub fn exp_ratio(c: f64, len: f64) -> f64 {
    let x = c * len;
    if x.abs() < 1e-300 {
        len
    } else {
        x.exp_m1() / c
    }
}

/// `|u|^e` with an integer fast path.
#[inline]
pub fn abs_pow(u: f64, e: f64) -> f64 {
    let a = u.abs();
    if e == e.trunc() && e.abs() <= 16.0 {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}

/// Evenly spaced points including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
                .collect()
        }
    }
}
