//! Integer-order Bessel functions of the first kind `J_n` and modified Bessel
//! functions of the second kind `K_n` for real arguments.
//!
//! `J_n` uses the ascending series for `|x| <= 1` and Miller's backward
//! recurrence (normalized with `J_0 + 2 sum J_2k = 1`) above; this keeps the
//! absolute error near machine epsilon on the whole real line. `K_0`/`K_1`
//! use the logarithmic ascending series for `x <= 2` and Steed's continued
//! fraction (Temme's CF2) above; higher orders follow from the upward
//! recurrence, which is stable for `K_n`.
//!
//! In `f64` the relative error is below `1e-13` for `K_n` and for `J_n` away
//! from its zeros (absolute error below `1e-15`) on `0 < x <= 50`.

use crate::scalar::Real;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_SERIES_TERMS: usize = 200;

/// Returns `(J_0(x), J_1(x))`.
pub fn j01<T: Real>(x: T) -> (T, T) {
    if x.is_nan() {
        return (T::nan(), T::nan());
    }
    if x.is_infinite() {
        return (T::zero(), T::zero());
    }
    let ax = x.abs();
    let (j0, j1) = if ax <= T::one() {
        j01_series(ax)
    } else {
        let (j0, j1, _) = miller(ax, 1);
        (j0, j1)
    };
    // J_1 is odd.
    (j0, if x < T::zero() { -j1 } else { j1 })
}

pub fn j0<T: Real>(x: T) -> T {
    j01(x).0
}

pub fn j1<T: Real>(x: T) -> T {
    j01(x).1
}

/// `J_n(x)` for integer order `n >= 0`.
pub fn jn<T: Real>(n: u32, x: T) -> T {
    match n {
        0 => return j0(x),
        1 => return j1(x),
        _ => {}
    }
    if x.is_nan() {
        return T::nan();
    }
    if x == T::zero() || x.is_infinite() {
        return T::zero();
    }
    let ax = x.abs();
    let (_, _, jn) = miller(ax, n);
    if x < T::zero() && n % 2 == 1 {
        -jn
    } else {
        jn
    }
}

fn j01_series<T: Real>(x: T) -> (T, T) {
    let t = -(x * x) / T::lit(4.0);
    let mut term0 = T::one();
    let mut term1 = T::one();
    let mut s0 = T::one();
    let mut s1 = T::one();
    for k in 1..MAX_SERIES_TERMS {
        let kf = T::from_usize_lossy(k);
        term0 = term0 * t / (kf * kf);
        term1 = term1 * t / (kf * (kf + T::one()));
        s0 = s0 + term0;
        s1 = s1 + term1;
        if term0.abs() <= T::epsilon() * s0.abs() && term1.abs() <= T::epsilon() * s1.abs() {
            break;
        }
    }
    (s0, s1 * x / T::lit(2.0))
}

/// Miller's backward recurrence. Returns `(J_0, J_1, J_order)` for `x > 0`.
fn miller<T: Real>(x: T, order: u32) -> (T, T, T) {
    let xf = x.to_f64_lossy();
    let start = (xf.max(order as f64) + 30.0 + 5.0 * xf.sqrt()).ceil() as u32;
    let m = start + start % 2;
    let big = T::lit(1e10);
    let inv_big = T::one() / big;
    let two_over_x = T::lit(2.0) / x;

    let mut j_next = T::zero();
    let mut j = T::one();
    // The sum accumulates J_0 + 2 (J_2 + J_4 + ...); m is even.
    let mut norm = T::lit(2.0) * j;
    let mut j_one = T::zero();
    let mut j_order = if order == m { j } else { T::zero() };
    for k in (1..=m).rev() {
        let j_prev = T::from_u32(k).unwrap() * two_over_x * j - j_next;
        j_next = j;
        j = j_prev;
        let idx = k - 1;
        if idx == 1 {
            j_one = j;
        }
        if idx == order {
            j_order = j;
        }
        if idx > 0 && idx % 2 == 0 {
            norm = norm + T::lit(2.0) * j;
        }
        if j.abs() > big {
            j = j * inv_big;
            j_next = j_next * inv_big;
            norm = norm * inv_big;
            j_one = j_one * inv_big;
            j_order = j_order * inv_big;
        }
    }
    norm = norm + j;
    (j / norm, j_one / norm, j_order / norm)
}

/// Returns `(K_0(x), K_1(x))` for `x > 0`; NaN for `x <= 0`.
pub fn k01<T: Real>(x: T) -> (T, T) {
    if x.is_nan() || x <= T::zero() {
        return (T::nan(), T::nan());
    }
    if x.is_infinite() {
        return (T::zero(), T::zero());
    }
    if x <= T::lit(2.0) {
        k01_series(x)
    } else {
        k01_continued_fraction(x)
    }
}

pub fn k0<T: Real>(x: T) -> T {
    k01(x).0
}

pub fn k1<T: Real>(x: T) -> T {
    k01(x).1
}

/// `K_n(x)` for integer order `n >= 0` and `x > 0`.
pub fn kn<T: Real>(n: u32, x: T) -> T {
    let (mut k_prev, mut k) = k01(x);
    if n == 0 {
        return k_prev;
    }
    for i in 1..n {
        let k_next = k_prev + T::lit(2.0 * i as f64) / x * k;
        k_prev = k;
        k = k_next;
    }
    k
}

fn k01_series<T: Real>(x: T) -> (T, T) {
    let gamma = T::lit(EULER_GAMMA);
    let t = x * x / T::lit(4.0);
    let log_half = (x / T::lit(2.0)).ln();

    // k = 0 terms
    let mut c0 = T::one(); // t^k / (k!)^2
    let mut c1 = T::one(); // t^k / (k! (k+1)!)
    let mut harmonic = T::zero(); // H_k
    let mut i0 = T::one();
    let mut i1 = T::one();
    let mut sum0 = T::zero(); // sum c0 * H_k
                              // sum c1 * (psi(k+1) + psi(k+2)) with psi(k+1) = -gamma + H_k
    let mut sum1 = c1 * (-gamma - gamma + T::one());

    for k in 1..MAX_SERIES_TERMS {
        let kf = T::from_usize_lossy(k);
        c0 = c0 * t / (kf * kf);
        c1 = c1 * t / (kf * (kf + T::one()));
        harmonic = harmonic + T::one() / kf;
        let harmonic_next = harmonic + T::one() / (kf + T::one());
        i0 = i0 + c0;
        i1 = i1 + c1;
        let d0 = c0 * harmonic;
        let d1 = c1 * (harmonic + harmonic_next - gamma - gamma);
        sum0 = sum0 + d0;
        sum1 = sum1 + d1;
        if c0 <= T::epsilon() * i0 && d1.abs() <= T::epsilon() * sum1.abs() {
            break;
        }
    }
    let i1 = i1 * x / T::lit(2.0);
    let k0 = -(log_half + gamma) * i0 + sum0;
    let k1 = T::one() / x + log_half * i1 - x / T::lit(4.0) * sum1;
    (k0, k1)
}

/// Steed's algorithm for Temme's CF2, specialized to order 0.
fn k01_continued_fraction<T: Real>(x: T) -> (T, T) {
    let two = T::lit(2.0);
    let mut b = two * (T::one() + x);
    let mut d = T::one() / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = T::zero();
    let mut q2 = T::one();
    let a1 = T::lit(0.25);
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = T::one() + q * delh;
    for i in 2..10_000usize {
        let fi = T::from_usize_lossy(i);
        a = a - two * (fi - T::one());
        c = -a * c / fi;
        let q_new = (q1 - b * q2) / a;
        q1 = q2;
        q2 = q_new;
        q = q + c * q_new;
        b = b + two;
        d = T::one() / (b + a * d);
        delh = (b * d - T::one()) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).abs() < T::epsilon() {
            break;
        }
    }
    h = a1 * h;
    let k0 = (T::PI() / (two * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + T::lit(0.5) - h) / x;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn special_points() {
        assert_eq!(j0(0.0_f64), 1.0);
        assert_eq!(j1(0.0_f64), 0.0);
        assert_eq!(jn(3, 0.0_f64), 0.0);
        assert!(k0(0.0_f64).is_nan());
        assert!(k1(-1.0_f64).is_nan());
        assert_eq!(k0(f64::INFINITY), 0.0);
        assert_eq!(j0(f64::INFINITY), 0.0);
    }

    #[test]
    fn parity() {
        for &x in &[0.3, 1.7, 4.2, 11.0] {
            assert_eq!(j0(-x), j0(x));
            assert_eq!(j1(-x), -j1(x));
            assert_eq!(jn(2, -x), jn(2, x));
            assert_eq!(jn(3, -x), -jn(3, x));
        }
    }

    #[test]
    fn wronskian_and_recurrence() {
        // I_1 K_0 + I_0 K_1 = 1/x is awkward without I_n; use the J recurrence
        // and the K recurrence against the generic-order routines instead.
        for &x in &[0.5_f64, 1.0, 2.4, 3.9, 7.5, 20.0] {
            let (a, b) = j01(x);
            assert_relative_eq!(jn(2, x), 2.0 * b / x - a, epsilon = 1e-14);
            let (k0v, k1v) = k01(x);
            assert_relative_eq!(kn(2, x), k0v + 2.0 * k1v / x, max_relative = 1e-14);
        }
    }

    #[test]
    fn continuous_across_branch_switch() {
        let below = k01(2.0_f64);
        let above = k01(2.0_f64 + 1e-12);
        assert_relative_eq!(below.0, above.0, max_relative = 1e-11);
        assert_relative_eq!(below.1, above.1, max_relative = 1e-11);
        let below = j01(1.0_f64);
        let above = j01(1.0_f64 + 1e-12);
        assert_relative_eq!(below.0, above.0, max_relative = 1e-11);
        assert_relative_eq!(below.1, above.1, max_relative = 1e-11);
    }

    #[test]
    fn single_precision_instantiation() {
        assert_relative_eq!(j0(2.0_f32), 0.223_890_78_f32, max_relative = 1e-5);
        assert_relative_eq!(k1(1.5_f32), 0.277_387_8_f32, max_relative = 1e-5);
    }
}
