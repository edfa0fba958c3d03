//! Bracketing scan plus Brent refinement for scalar transcendental equations.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootError {
    /// `f(a)` and `f(b)` do not differ in sign.
    NotBracketed,
    /// An evaluation returned NaN or infinity.
    NonFinite,
    /// Iteration budget exhausted.
    MaxIterations,
}

/// Samples `f` at `samples` uniformly spaced interior points of `(lo, hi)`
/// and returns every adjacent pair whose values change sign, ordered from
/// `lo` to `hi`. Non-finite samples never participate in a bracket.
pub fn scan_sign_changes<T, F>(mut f: F, lo: T, hi: T, samples: usize) -> Vec<(T, T)>
where
    T: Real,
    F: FnMut(T) -> T,
{
    assert!(samples >= 2, "need at least two samples");
    let n = T::from_usize_lossy(samples + 1);
    let step = (hi - lo) / n;
    let mut out = Vec::new();
    let mut prev: Option<(T, T)> = None;
    for i in 1..=samples {
        let x = lo + step * T::from_usize_lossy(i);
        let y = f(x);
        if !y.is_finite() {
            prev = None;
            continue;
        }
        if let Some((px, py)) = prev {
            if (py < T::zero()) != (y < T::zero()) || y == T::zero() {
                out.push((px, x));
            }
        }
        prev = Some((x, y));
    }
    out
}

/// Brent's method on a sign-changing bracket `[a, b]`.
///
/// Terminates when the bracket shrinks below `xtol` (absolute) or an exact
/// zero is hit.
pub fn brent<T, F>(mut f: F, a: T, b: T, xtol: T, max_iter: usize) -> Result<T, RootError>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(RootError::NonFinite);
    }
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa < T::zero()) == (fb < T::zero()) {
        return Err(RootError::NotBracketed);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + half * xtol;
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let min1 = T::lit(3.0) * m * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else if m > T::zero() {
            b + tol
        } else {
            b - tol
        };
        fb = f(b);
        if !fb.is_finite() {
            return Err(RootError::NonFinite);
        }
    }
    Err(RootError::MaxIterations)
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
/// Returns `(x_min, f(x_min))`.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
