//! Closed-form time-averaged probabilities for the four lowest modes.
//!
//! `G(z) = 2F2(1,1;2,5/2;-z)`, `F` the Dawson integral, `B = 1 + 4 tau` and
//! `x1 = x / sqrt(B)`. The expressions are differences of order-one terms
//! divided by `tau`, so they are evaluated in double-double arithmetic.
//!
//! Two variants are kept. [`published`] reproduces the expressions as they
//! circulate in the literature; [`corrected`] is what the quadrature oracle
//! supports. They differ in `p00` (the factor 2 applies to the `x²` term only)
//! and in the overall sign of `p11`; `p10` is unchanged.

use crate::scalar::Real;

/// Which of the three distinct low-order probabilities (`p01 = p10`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowMode {
    P00,
    P10,
    P11,
}

struct Common<T> {
    b: T,
    x2: T,
    g: T,
    g1: T,
    log_b: T,
}

fn common<T: Real>(x: T, tau: T) -> Common<T> {
    let one = T::from_f64(1.0);
    let b = one + tau.scale(4.0);
    let x2 = x * x;
    Common {
        b,
        x2,
        g: (-x2).hyp2f2(),
        g1: (-(x2 / b)).hyp2f2(),
        log_b: b.ln(),
    }
}

fn p00<T: Real>(c: &Common<T>, tau: T, printed: bool) -> T {
    let diff = c.x2 * (c.g1 / c.b - c.g);
    let three_log = c.log_b.scale(3.0);
    let bracket = if printed {
        (diff + three_log).scale(2.0)
    } else {
        diff.scale(2.0) + three_log
    };
    bracket / tau.scale(12.0)
}

fn p10<T: Real>(x: T, c: &Common<T>, tau: T) -> T {
    let sb = c.b.sqrt();
    let f = x.dawson();
    let f1 = (x / sb).dawson();
    let inner = (x * c.x2).scale(2.0) * (c.g1 / c.b - c.g) + f1.scale(3.0) / sb - f.scale(3.0);
    (inner.scale(2.0) / x + c.log_b.scale(6.0)) / tau.scale(48.0)
}

fn p11<T: Real>(x: T, c: &Common<T>, tau: T, printed: bool) -> T {
    let one = T::from_f64(1.0);
    let b = c.b;
    let sb = b.sqrt();
    let f = x.dawson();
    let f1 = (x / sb).dawson();
    let first = (b * c.x2 * c.g).scale(8.0) - (c.x2 * c.g1).scale(8.0) - (b * c.log_b).scale(12.0);
    let first = first / (tau.scale(12.0) + T::from_f64(3.0));
    let b52 = b * b * sb;
    let second = (b * (tau.scale(32.0) + T::from_f64(7.0)) + c.x2.scale(2.0)) * f1 / (b52 * x);
    let third = (x.scale(2.0) + T::from_f64(7.0) / x) * f;
    let bracket = first - second + third + one / (b * b) - one;
    let v = bracket / tau.scale(64.0);
    if printed {
        v
    } else {
        -v
    }
}

/// Corrected closed form.
pub fn corrected<T: Real>(mode: LowMode, x: T, tau: T) -> T {
    let c = common(x, tau);
    match mode {
        LowMode::P00 => p00(&c, tau, false),
        LowMode::P10 => p10(x, &c, tau),
        LowMode::P11 => p11(x, &c, tau, false),
    }
}

/// Closed form exactly as published.
pub fn published<T: Real>(mode: LowMode, x: T, tau: T) -> T {
    let c = common(x, tau);
    match mode {
        LowMode::P00 => p00(&c, tau, true),
        LowMode::P10 => p10(x, &c, tau),
        LowMode::P11 => p11(x, &c, tau, true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{DoubleF64, Dual};

    fn dd(v: f64) -> DoubleF64 {
        DoubleF64::from_f64(v)
    }

    #[test]
    fn zero_separation_limit_of_p00() {
        for tau in [0.01, 0.25, 1.0] {
            let p = corrected(LowMode::P00, dd(1e-6), dd(tau)).to_f64();
            let want = (1.0f64 + 4.0 * tau).ln() / (4.0 * tau);
            assert!((p - want).abs() < 1e-11, "tau={tau} {p} {want}");
            let printed = published(LowMode::P00, dd(1e-6), dd(tau)).to_f64();
            assert!((printed / want - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn published_and_corrected_relation() {
        let (x, tau) = (dd(0.3), dd(0.02));
        let a = corrected(LowMode::P10, x, tau).to_f64();
        let b = published(LowMode::P10, x, tau).to_f64();
        assert_eq!(a, b);
        let a = corrected(LowMode::P11, x, tau).to_f64();
        let b = published(LowMode::P11, x, tau).to_f64();
        assert_eq!(a, -b);
        assert!(a > 0.0);
    }

    #[test]
    fn double_double_removes_small_tau_cancellation() {
        let (x, tau) = (0.02, 1e-4);
        let hi = corrected(LowMode::P11, dd(x), dd(tau)).to_f64();
        let lo = corrected(LowMode::P11, x, tau);
        // f64 loses several digits here; double-double must not
        assert!(((lo - hi) / hi).abs() > 1e-8);
        let check = corrected(LowMode::P11, dd(x), dd(tau * (1.0 + 1e-12))).to_f64();
        assert!(((check - hi) / hi).abs() < 1e-10);
    }

    #[test]
    fn dual_derivative_matches_differences() {
        let tau = dd(0.01);
        for mode in [LowMode::P00, LowMode::P10, LowMode::P11] {
            let x0 = 0.15;
            let d = corrected(mode, Dual::var(dd(x0)), Dual::constant(tau));
            let h = 1e-6;
            let up = corrected(mode, dd(x0 + h), tau).to_f64();
            let dn = corrected(mode, dd(x0 - h), tau).to_f64();
            let fd = (up - dn) / (2.0 * h);
            assert!((d.d.to_f64() - fd).abs() < 1e-8 * fd.abs().max(1e-6), "{mode:?}");
        }
    }
}
