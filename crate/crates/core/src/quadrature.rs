//! Numerical integration rules.
//!
//! * [`integrate`]: globally adaptive 7/15-point Gauss-Kronrod with the
//!   QUADPACK error heuristic, generic over scalar and small vector integrands.
//! * [`gauss_legendre`]: nodes and weights by Newton iteration on `P_n`.
//! * [`periodic_mean`]: trapezoid rule on a full period, exact for trigonometric
//!   polynomials of degree below the point count.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use num_traits::Float;

use crate::error::{Error, Result};

/// Integrand values: anything that is a vector space over `f64` and can
/// expose its components for error control.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn components(&self) -> &[f64];
    fn components_mut(&mut self) -> &mut [f64];
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn components(&self) -> &[f64] {
        core::slice::from_ref(self)
    }
    fn components_mut(&mut self) -> &mut [f64] {
        core::slice::from_mut(self)
    }
}

/// Fixed-size vector integrand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vector<const N: usize>(pub [f64; N]);

impl<const N: usize> Add for Vector<N> {
    type Output = Self;
    fn add(mut self, b: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(b.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Vector<N> {
    type Output = Self;
    fn sub(mut self, b: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(b.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for Vector<N> {
    type Output = Self;
    fn mul(mut self, k: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= k;
        }
        self
    }
}

impl<const N: usize> QuadValue for Vector<N> {
    fn zero() -> Self {
        Vector([0.0; N])
    }
    fn components(&self) -> &[f64] {
        &self.0
    }
    fn components_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 400,
        }
    }
}

impl QuadOptions {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOutput<V> {
    pub value: V,
    pub abs_error: f64,
    pub evaluations: usize,
}

// Kronrod abscissae on [0, 1], centre first; odd indices are Kronrod-only.
#[allow(clippy::excessive_precision)]
const XK: [f64; 8] = [
    0.0,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.991_455_371_120_812_639_206_854_697_526_329,
];
#[allow(clippy::excessive_precision)]
const WK: [f64; 8] = [
    0.209_482_141_084_727_828_012_999_174_891_714,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.022_935_322_010_529_224_963_732_008_058_970,
];
// Gauss weights at XK[0], XK[2], XK[4], XK[6].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.417_959_183_673_469_387_755_102_040_816_327,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.129_484_966_168_869_693_270_611_432_679_082,
];

#[derive(Clone, Copy)]
struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    // componentwise error estimate and ∫|f|
    error: V,
    resabs: V,
}

fn gk15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> Segment<V> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [V::zero(); 15];
    fv[0] = f(c);
    for i in 1..8 {
        fv[2 * i - 1] = f(c - h * XK[i]);
        fv[2 * i] = f(c + h * XK[i]);
    }
    let mut kron = fv[0] * WK[0];
    let mut gauss = fv[0] * WG[0];
    for i in 1..8 {
        let pair = fv[2 * i - 1] + fv[2 * i];
        kron = kron + pair * WK[i];
        if i % 2 == 0 {
            gauss = gauss + pair * WG[i / 2];
        }
    }

    let mut error = V::zero();
    let mut abs_int = V::zero();
    let ncomp = kron.components().len();
    for j in 0..ncomp {
        let k = kron.components()[j];
        let mean = 0.5 * k;
        let mut resasc = WK[0] * Float::abs(fv[0].components()[j] - mean);
        let mut resabs = WK[0] * Float::abs(fv[0].components()[j]);
        for i in 1..8 {
            let l = fv[2 * i - 1].components()[j];
            let r = fv[2 * i].components()[j];
            resasc += WK[i] * (Float::abs(l - mean) + Float::abs(r - mean));
            resabs += WK[i] * (Float::abs(l) + Float::abs(r));
        }
        let resasc = resasc * Float::abs(h);
        let resabs = resabs * Float::abs(h);
        let mut err = Float::abs((k - gauss.components()[j]) * h);
        if resasc != 0.0 && err != 0.0 {
            err = resasc * Float::min(1.0, Float::powf(200.0 * err / resasc, 1.5));
        }
        let round = 50.0 * f64::EPSILON * resabs;
        if round > f64::MIN_POSITIVE {
            err = Float::max(err, round);
        }
        error.components_mut()[j] = err;
        abs_int.components_mut()[j] = resabs;
    }
    Segment {
        a,
        b,
        value: kron * h,
        error,
        resabs: abs_int,
    }
}

fn max_component<V: QuadValue>(v: &V) -> f64 {
    v.components().iter().fold(0.0, |m, c| Float::max(m, Float::abs(*c)))
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`.
///
/// Every component must satisfy `err_j <= max(abs_tol, rel_tol·|I_j|)`;
/// components whose error sits at the rounding floor of `∫|f_j|` are accepted.
pub fn integrate<V, F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadOutput<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite {
            what: "integration limit",
        });
    }
    if a == b {
        return Ok(QuadOutput {
            value: V::zero(),
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let mut segs: Vec<Segment<V>> = Vec::with_capacity(opts.max_intervals.min(64));
    segs.push(gk15(&mut f, a, b));
    let mut evaluations = 15;
    loop {
        let (mut total, mut err, mut resabs) = (V::zero(), V::zero(), V::zero());
        for s in &segs {
            total = total + s.value;
            err = err + s.error;
            resabs = resabs + s.resabs;
        }
        let ncomp = total.components().len();
        let mut target = V::zero();
        let mut done = true;
        for j in 0..ncomp {
            let t = Float::max(
                Float::max(opts.abs_tol, opts.rel_tol * Float::abs(total.components()[j])),
                100.0 * f64::EPSILON * resabs.components()[j],
            );
            target.components_mut()[j] = t;
            done &= err.components()[j] <= t;
        }
        if done {
            return Ok(QuadOutput {
                value: total,
                abs_error: max_component(&err),
                evaluations,
            });
        }
        // bisect the segment that contributes most relative to the per-component targets
        let mut worst = 0;
        let mut worst_score = -1.0;
        for (i, s) in segs.iter().enumerate() {
            let mut score = 0.0_f64;
            for j in 0..ncomp {
                score = Float::max(score, s.error.components()[j] / target.components()[j]);
            }
            if score > worst_score {
                worst_score = score;
                worst = i;
            }
        }
        let s = segs[worst];
        let mid = 0.5 * (s.a + s.b);
        if segs.len() >= opts.max_intervals || mid <= s.a || mid >= s.b {
            let mut ratio = 0.0_f64;
            let mut achieved = 0.0;
            let mut requested = 0.0;
            for j in 0..ncomp {
                let r = err.components()[j] / target.components()[j];
                if r > ratio {
                    ratio = r;
                    achieved = err.components()[j];
                    requested = target.components()[j];
                }
            }
            return Err(Error::QuadratureNotConverged {
                partial: max_component(&total),
                achieved,
                requested,
            });
        }
        segs[worst] = gk15(&mut f, s.a, mid);
        segs.push(gk15(&mut f, mid, s.b));
        evaluations += 30;
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = Float::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if Float::abs(dz) < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule with `panels` equal panels over `[a, b]`.
pub fn gauss_legendre_composite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let width = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let c = lo + 0.5 * width;
        let mut s = 0.0;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            s += w * f(c + 0.5 * width * x);
        }
        sum += 0.5 * width * s;
    }
    sum
}

/// Mean of a `2π`-periodic function over one period from `n` equispaced points.
pub fn periodic_mean<V: QuadValue, F: FnMut(f64) -> V>(mut f: F, n: usize) -> V {
    let step = 2.0 * PI / n as f64;
    let mut acc = V::zero();
    for i in 0..n {
        acc = acc + f(step * i as f64);
    }
    acc * (1.0 / n as f64)
}
