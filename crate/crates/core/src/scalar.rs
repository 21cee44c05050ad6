//! Scalar types the closed-form probabilities are generic over.
//!
//! The time-averaged closed forms are differences of antiderivatives divided
//! by `tau`, so they cancel catastrophically for small `tau` and small `x`.
//! [`DoubleF64`] (double-double, ~32 significant digits) evaluates them with
//! enough headroom; [`Dual`] carries an exact first derivative through the same
//! code path for the Fisher information.

use core::cmp::Ordering;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Float;

use crate::special;

/// Minimal real-number interface used by the generic probability kernels.
pub trait Real:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Relative precision of the underlying arithmetic.
    const EPS: f64;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    /// Dawson integral `F(x)`.
    fn dawson(self) -> Self;
    /// `2F2(1,1;2,5/2;z)`.
    fn hyp2f2(self) -> Self;

    fn abs(self) -> Self {
        if self.to_f64() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn scale(self, k: f64) -> Self {
        self * Self::from_f64(k)
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::from_f64(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

/// Real types that can also return `d/dz 2F2(1,1;2,5/2;z)`; needed to lift
/// them into [`Dual`].
pub trait HypergeometricSlope: Real {
    fn hyp2f2_with_slope(self) -> (Self, Self);
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }
    fn ln(self) -> Self {
        Float::ln(self)
    }
    fn exp(self) -> Self {
        Float::exp(self)
    }
    fn dawson(self) -> Self {
        special::dawson_f64(self)
    }
    fn hyp2f2(self) -> Self {
        special::hyp2f2_f64(self).0
    }
}

impl HypergeometricSlope for f64 {
    fn hyp2f2_with_slope(self) -> (Self, Self) {
        special::hyp2f2_f64_with_slope(self)
    }
}

// ---------------------------------------------------------------------------
// double-double

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct DoubleF64 {
    pub hi: f64,
    pub lo: f64,
}

const LN2_DD: DoubleF64 = DoubleF64 {
    hi: core::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    // Veltkamp split; exact for |a| < 2^996.
    let t = 134_217_729.0 * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

impl DoubleF64 {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    fn mul_pow2(self, k: i32) -> Self {
        // split large exponents so that each factor is a normal power of two
        let mut out = self;
        let mut k = k;
        while k != 0 {
            let step = k.clamp(-1000, 1000);
            let f = pow2(step);
            out = Self::new(out.hi * f, out.lo * f);
            k -= step;
        }
        out
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self { hi, lo }
    }

    fn dd_exp(self) -> Self {
        if self.hi > 709.7 {
            return Self::new(f64::INFINITY, 0.0);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Self::ONE;
        }
        let k = Float::round(self.hi / LN2_DD.hi);
        let r = (self - LN2_DD.mul_f64(k)).mul_pow2(-10);
        // expm1(r) by Taylor; |r| < 3.4e-4 so 14 terms exceed double-double precision
        let mut term = r;
        let mut sum = r;
        for i in 2..16 {
            term = term * r / Self::from_f64(i as f64);
            sum = sum + term;
            if Float::abs(term.hi) < 1e-36 * Float::abs(sum.hi) {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum.mul_f64(2.0) + sum * sum;
        }
        (sum + Self::ONE).mul_pow2(k as i32)
    }

    fn dd_ln(self) -> Self {
        if self.hi <= 0.0 {
            return Self::new(f64::NAN, 0.0);
        }
        let mut y = Self::from_f64(Float::ln(self.hi));
        for _ in 0..2 {
            y = y + self * (-y).dd_exp() - Self::ONE;
        }
        y
    }

    fn dd_sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Self::ZERO
            } else {
                Self::new(f64::NAN, 0.0)
            };
        }
        let x = Self::from_f64(Float::sqrt(self.hi));
        x + (self - x * x) / x.mul_f64(2.0)
    }
}

impl Add for DoubleF64 {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Neg for DoubleF64 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }
}

impl Sub for DoubleF64 {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleF64 {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleF64 {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }
}

impl PartialOrd for DoubleF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Real for DoubleF64 {
    const EPS: f64 = 4.93e-32;

    fn from_f64(v: f64) -> Self {
        Self::new(v, 0.0)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn sqrt(self) -> Self {
        self.dd_sqrt()
    }
    fn ln(self) -> Self {
        self.dd_ln()
    }
    fn exp(self) -> Self {
        self.dd_exp()
    }
    fn dawson(self) -> Self {
        special::dawson_dd(self)
    }
    fn hyp2f2(self) -> Self {
        special::hyp2f2_series(self).0
    }
}

impl HypergeometricSlope for DoubleF64 {
    fn hyp2f2_with_slope(self) -> (Self, Self) {
        special::hyp2f2_series(self)
    }
}

// ---------------------------------------------------------------------------
// forward-mode dual numbers

/// `v + d·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: T,
}

impl<T: Real> Dual<T> {
    /// Independent variable: derivative seed 1.
    pub fn var(v: T) -> Self {
        Self {
            v,
            d: T::from_f64(1.0),
        }
    }

    pub fn constant(v: T) -> Self {
        Self {
            v,
            d: T::from_f64(0.0),
        }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        Self {
            v: self.v + b.v,
            d: self.d + b.d,
        }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        Self {
            v: self.v - b.v,
            d: self.d - b.d,
        }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        Self {
            v: self.v * b.v,
            d: self.d * b.v + self.v * b.d,
        }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q = self.v / b.v;
        Self {
            v: q,
            d: (self.d - q * b.d) / b.v,
        }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d: -self.d,
        }
    }
}

impl<T: Real> PartialOrd for Dual<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.v.partial_cmp(&other.v)
    }
}

impl<T: HypergeometricSlope> Real for Dual<T> {
    const EPS: f64 = T::EPS;

    fn from_f64(v: f64) -> Self {
        Self::constant(T::from_f64(v))
    }
    fn to_f64(self) -> f64 {
        self.v.to_f64()
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Self {
            v: s,
            d: self.d / s.scale(2.0),
        }
    }
    fn ln(self) -> Self {
        Self {
            v: self.v.ln(),
            d: self.d / self.v,
        }
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Self { v: e, d: e * self.d }
    }
    fn dawson(self) -> Self {
        // F'(x) = 1 - 2 x F(x)
        let f = self.v.dawson();
        let slope = T::from_f64(1.0) - self.v.scale(2.0) * f;
        Self {
            v: f,
            d: slope * self.d,
        }
    }
    fn hyp2f2(self) -> Self {
        let (g, slope) = self.v.hyp2f2_with_slope();
        Self {
            v: g,
            d: slope * self.d,
        }
    }
}
