//! Dawson integral, `2F2(1,1;2,5/2;z)` and exponentially scaled Bessel `I0`, `I1`.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_composite};
use crate::scalar::{DoubleF64, Real};

/// A function value together with a bound on its absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalResult {
    pub value: f64,
    pub abs_error_bound: f64,
}

const SERIES_CAP: usize = 500;
const DAWSON_SERIES_MAX: f64 = 4.0;
const HYP_SERIES_MIN: f64 = -8.0;

/// Dawson integral `F(x) = exp(-x²) ∫₀ˣ exp(t²) dt`.
pub fn dawson(x: f64) -> Result<EvalResult> {
    if !x.is_finite() {
        return Err(Error::Domain {
            what: "dawson argument",
            value: x,
        });
    }
    let value = dawson_f64(x);
    Ok(EvalResult {
        value,
        abs_error_bound: 8.0 * f64::EPSILON * Float::abs(value) + 1e-300,
    })
}

pub(crate) fn dawson_f64(x: f64) -> f64 {
    let a = Float::abs(x);
    let v = if a < DAWSON_SERIES_MAX {
        dawson_series(a)
    } else {
        dawson_cf_lentz(a)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

// exp(-y²) Σ y^(2k+1) / (k! (2k+1)); all terms positive
fn dawson_series<T: Real>(y: T) -> T {
    let y2 = y * y;
    let mut power = y;
    let mut sum = y;
    let mut k = 0.0;
    loop {
        power = power * y2 / T::from_f64(k + 1.0);
        let term = power / T::from_f64(2.0 * k + 3.0);
        sum = sum + term;
        k += 1.0;
        if term.to_f64() <= T::EPS * 0.25 * sum.to_f64() || k > 2000.0 {
            break;
        }
    }
    sum * (-y2).exp()
}

// F(x) = x / (1 + 2x² - 4x²/(3 + 2x² - 8x²/(5 + 2x² - ...)))
fn dawson_cf_lentz(x: f64) -> f64 {
    let x2 = x * x;
    let tiny = 1e-300;
    let mut f = 1.0 + 2.0 * x2;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..5000 {
        let kf = k as f64;
        let a = -4.0 * kf * x2;
        let b = 2.0 * kf + 1.0 + 2.0 * x2;
        d = b + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if Float::abs(delta - 1.0) < 0.5 * f64::EPSILON {
            break;
        }
    }
    x / f
}

fn dawson_cf_backward<T: Real>(x: T, depth: usize) -> T {
    let x2 = x * x;
    let mut t = T::from_f64(2.0 * depth as f64 + 1.0) + x2.scale(2.0);
    for k in (1..=depth).rev() {
        let kf = k as f64;
        let b = T::from_f64(2.0 * kf - 1.0) + x2.scale(2.0);
        t = b - x2.scale(4.0 * kf) / t;
    }
    x / t
}

pub(crate) fn dawson_dd(x: DoubleF64) -> DoubleF64 {
    let neg = x.hi < 0.0;
    let a = if neg { -x } else { x };
    let v = if a.hi < 10.0 {
        dawson_series(a)
    } else {
        dawson_cf_backward(a, 400)
    };
    if neg {
        -v
    } else {
        v
    }
}

struct SeriesSum<T> {
    value: T,
    slope: T,
    terms: usize,
    last_term: f64,
    abs_sum: f64,
    converged: bool,
}

// Σ z^k / ((k+1) (5/2)_k) and its z-derivative, Kahan-compensated.
fn hyp2f2_terms<T: Real>(z: T) -> SeriesSum<T> {
    let zero = T::from_f64(0.0);
    let (mut sum, mut comp) = (T::from_f64(1.0), zero);
    let (mut dsum, mut dcomp) = (zero, zero);
    let mut term = T::from_f64(1.0);
    // u_k = (k+1) c_{k+1} z^k, the k-th term of the derivative series
    let mut du = T::from_f64(0.2);
    let mut abs_sum = 1.0;
    let mut converged = false;
    let mut k = 0usize;
    let mut last = 1.0;
    while k < SERIES_CAP {
        let kf = k as f64;
        term = term * z.scale(kf + 1.0) / T::from_f64((kf + 2.0) * (kf + 2.5));
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;

        let y = du - dcomp;
        let t = dsum + y;
        dcomp = (t - dsum) - y;
        dsum = t;
        du = du * z.scale((kf + 2.0) * (kf + 2.0)) / T::from_f64((kf + 1.0) * (kf + 3.0) * (kf + 3.5));

        k += 1;
        last = Float::abs(term.to_f64());
        abs_sum += last;
        let scale = Float::abs(sum.to_f64());
        if last <= T::EPS * 0.1 * scale && Float::abs(du.to_f64()) <= T::EPS * 0.1 * Float::abs(dsum.to_f64()) {
            converged = true;
            break;
        }
    }
    SeriesSum {
        value: sum,
        slope: dsum,
        terms: k,
        last_term: last,
        abs_sum,
        converged,
    }
}

/// Value and derivative of `2F2(1,1;2,5/2;z)` by direct summation.
pub(crate) fn hyp2f2_series<T: Real>(z: T) -> (T, T) {
    let s = hyp2f2_terms(z);
    (s.value, s.slope)
}

/// `2F2(1,1;2,5/2;z)`.
///
/// For `z >= -8` the power series is summed directly. Below that the series
/// cancels badly and the identity `y² G(-y²) = 3 ∫₀^y (t - F(t))/t² dt` is
/// used instead, split at `y = 2` where the series still is accurate.
pub fn hyp2f2_1_1_2_5h(z: f64) -> Result<EvalResult> {
    if !z.is_finite() {
        return Err(Error::Domain {
            what: "2F2 argument",
            value: z,
        });
    }
    if z >= HYP_SERIES_MIN {
        let s = hyp2f2_terms(z);
        if !s.converged || !s.value.is_finite() {
            return Err(Error::SeriesNotConverged {
                partial: s.value,
                terms: s.terms,
                last_term: s.last_term,
            });
        }
        return Ok(EvalResult {
            value: s.value,
            abs_error_bound: s.last_term + 4.0 * f64::EPSILON * s.abs_sum,
        });
    }
    let (value, _) = hyp2f2_integral_route(z);
    Ok(EvalResult {
        value,
        abs_error_bound: 1e-14,
    })
}

/// `(value, error bound)`; never fails, used by the generic scalar layer.
pub(crate) fn hyp2f2_f64(z: f64) -> (f64, f64) {
    match hyp2f2_1_1_2_5h(z) {
        Ok(r) => (r.value, r.abs_error_bound),
        Err(Error::SeriesNotConverged { partial, .. }) => (partial, f64::INFINITY),
        Err(_) => (f64::NAN, f64::INFINITY),
    }
}

/// `(value, d/dz value)`.
pub(crate) fn hyp2f2_f64_with_slope(z: f64) -> (f64, f64) {
    if z >= HYP_SERIES_MIN {
        hyp2f2_series(z)
    } else {
        hyp2f2_integral_route(z)
    }
}

// h(t) = (t - F(t)) / t²
fn kernel(t: f64) -> f64 {
    (t - dawson_f64(t)) / (t * t)
}

const SPLIT: f64 = 2.0;
const ASYMPTOTIC_FROM: f64 = 30.0;

fn hyp2f2_integral_route(z: f64) -> (f64, f64) {
    let y = Float::sqrt(-z);
    let g_split = hyp2f2_series(-SPLIT * SPLIT).0;
    let mut j = SPLIT * SPLIT * g_split / 3.0;
    let top = Float::min(y, ASYMPTOTIC_FROM);
    let panels = Float::ceil((top - SPLIT) / 0.5) as usize;
    let rule = gauss_legendre(20);
    j += gauss_legendre_composite(kernel, SPLIT, top, panels.max(1), &rule);
    if y > ASYMPTOTIC_FROM {
        // ∫ h = log + Σ_k c_k t^-(2k+2) / (2k+2) with F(t) ~ Σ c_k t^-(2k+1)
        j += Float::ln(y / ASYMPTOTIC_FROM);
        let mut c = 0.5;
        for k in 0..12 {
            let p = 2.0 * k as f64 + 2.0;
            j -= c * (Float::powf(ASYMPTOTIC_FROM, -p) - Float::powf(y, -p)) / p;
            c *= (2.0 * k as f64 + 1.0) / 2.0;
        }
    }
    let value = 3.0 * j / (y * y);
    let dg_dy = 3.0 * kernel(y) / (y * y) - 2.0 * value / y;
    (value, -dg_dy / (2.0 * y))
}

/// `exp(-|z|) I0(z)`.
pub fn bessel_i0e(z: f64) -> f64 {
    bessel_ie(Float::abs(z), 0)
}

/// `exp(-|z|) I1(z)`.
pub fn bessel_i1e(z: f64) -> f64 {
    let v = bessel_ie(Float::abs(z), 1);
    if z < 0.0 {
        -v
    } else {
        v
    }
}

fn bessel_ie(z: f64, order: u32) -> f64 {
    if z < 30.0 {
        let q = 0.25 * z * z;
        let mut term = if order == 0 { 1.0 } else { 0.5 * z };
        let mut sum = term;
        let mut k = 0.0;
        loop {
            term *= q / ((k + 1.0) * (k + 1.0 + order as f64));
            sum += term;
            k += 1.0;
            if term <= 1e-17 * sum {
                break;
            }
        }
        sum * Float::exp(-z)
    } else {
        let nu2 = 4.0 * (order * order) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= -(nu2 - (2.0 * kf - 1.0) * (2.0 * kf - 1.0)) / (8.0 * kf * z);
            sum += term;
            if Float::abs(term) < 1e-17 * Float::abs(sum) {
                break;
            }
        }
        sum / Float::sqrt(2.0 * core::f64::consts::PI * z)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // 30-digit references computed offline from the integral definitions
    const DAWSON_REF: [(f64, f64); 6] = [
        (0.5, 0.424_436_383_502_022_295_93),
        (1.0, 0.538_079_506_912_768_419_14),
        (3.9, 0.132_927_291_081_089_300_72),
        (4.1, 0.125_964_658_434_345_938_77),
        (10.0, 0.050_253_847_187_598_528_033),
        (100.0, 0.005_000_250_037_509_378_282_7),
    ];

    const HYP_REF: [(f64, f64, f64); 8] = [
        (-0.25, 0.952_285_241_130_741_122_35, 0.182_087_372_620_034_694_22),
        (-4.0, 0.557_283_453_114_171_886_73, 0.059_696_194_009_345_720_092),
        (-8.0, 0.395_202_804_883_436_213_04, 0.027_547_203_906_211_179_363),
        (-9.0, 0.369_677_066_293_710_074_75, 0.023_657_149_530_230_491_56),
        (-20.0, 0.223_842_910_956_874_931_49, 0.007_538_442_133_182_444_746_2),
        (-100.0, 0.068_605_392_591_322_108_136, 0.000_536_807_733_621_035_059_28),
        (-2000.0, 0.005_673_496_887_621_859_132_4, 2.461_842_217_266_029_702_4e-6),
        (3.0, 2.231_914_456_146_724_746_2, 0.777_697_048_117_839_684_75),
    ];

    #[test]
    fn dawson_matches_reference_values() {
        assert_eq!(dawson(0.0).unwrap().value, 0.0);
        for (x, f) in DAWSON_REF {
            let r = dawson(x).unwrap();
            assert!((r.value - f).abs() <= 1e-15, "x={x} got {} want {f}", r.value);
            assert!(r.abs_error_bound <= 1e-13);
            assert_eq!(dawson(-x).unwrap().value, -r.value);
        }
    }

    #[test]
    fn dawson_branches_agree_at_the_seam() {
        for x in [3.999_999, 4.0, 4.000_001] {
            let s = dawson_series(x);
            let c = dawson_cf_lentz(x);
            assert!((s - c).abs() < 1e-15, "x={x} series={s} cf={c}");
        }
    }

    #[test]
    fn dawson_double_double_agrees_with_f64() {
        for x in [0.01, 0.7, 2.5, 3.99, 9.0, 12.0, 40.0] {
            let d = dawson_dd(DoubleF64::from_f64(x)).to_f64();
            assert_relative_eq!(d, dawson_f64(x), max_relative = 4e-16);
        }
        // the extra limb must actually carry information
        let x = DoubleF64::from_f64(0.3);
        let f = dawson_dd(x) - DoubleF64::new(0.282_631_665_021_311_93, -9.130_282_695_627_485e-18);
        assert!(f.to_f64().abs() < 1e-30, "{f:?}");
    }

    #[test]
    fn hyp2f2_matches_reference_values_and_slopes() {
        assert_eq!(hyp2f2_1_1_2_5h(0.0).unwrap().value, 1.0);
        for (z, g, dg) in HYP_REF {
            let r = hyp2f2_1_1_2_5h(z).unwrap();
            assert!((r.value - g).abs() <= 1e-14, "z={z} got {} want {g}", r.value);
            assert!(r.abs_error_bound <= 1e-12, "z={z} bound {}", r.abs_error_bound);
            let (_, slope) = hyp2f2_f64_with_slope(z);
            assert!((slope - dg).abs() <= 1e-13 * dg.abs().max(1e-3), "z={z} slope {slope}");
        }
    }

    #[test]
    fn hyp2f2_evaluation_routes_agree() {
        for z in [-4.0, -7.9, -8.0, -8.1, -12.0] {
            let series = hyp2f2_series(z).0;
            let split = hyp2f2_integral_route(z).0;
            assert!((series - split).abs() < 1e-10, "z={z} {series} vs {split}");
        }
        let (dd, _) = hyp2f2_series(DoubleF64::from_f64(-4.0));
        assert!((dd.to_f64() - 0.557_283_453_114_171_886_73).abs() < 2e-16);
    }

    #[test]
    fn hyp2f2_partial_sums_are_bounded_by_first_omitted_term() {
        let z = -0.8_f64;
        let exact = hyp2f2_1_1_2_5h(z).unwrap().value;
        let mut term = 1.0;
        let mut partial = 1.0;
        for k in 0..30 {
            let kf = k as f64;
            term *= z * (kf + 1.0) / ((kf + 2.0) * (kf + 2.5));
            assert!((exact - partial).abs() <= term.abs() * (1.0 + 1e-12) + 4e-16);
            partial += term;
        }
    }

    #[test]
    fn hyp2f2_reports_runaway_positive_arguments() {
        assert!(matches!(
            hyp2f2_1_1_2_5h(5e5),
            Err(Error::SeriesNotConverged { .. })
        ));
        assert!(hyp2f2_1_1_2_5h(f64::NAN).is_err());
        assert!(dawson(f64::INFINITY).is_err());
    }

    #[test]
    fn bessel_scaled_matches_reference_values() {
        let refs = [
            (0.1, 0.907_100_925_782_301_091_65, 0.045_298_446_808_809_327_277),
            (2.0, 0.308_508_322_553_671_039_53, 0.215_269_289_248_937_659_16),
            (29.0, 0.074_407_468_222_225_585_054, 0.073_113_117_939_388_365_104),
            (31.0, 0.071_946_496_696_983_832_763, 0.070_776_392_834_385_680_169),
            (100.0, 0.039_944_379_299_096_682_648, 0.039_744_153_025_130_252_674),
        ];
        for (z, i0, i1) in refs {
            assert_relative_eq!(bessel_i0e(z), i0, max_relative = 1e-14);
            assert_relative_eq!(bessel_i1e(z), i1, max_relative = 1e-14);
        }
        assert_eq!(bessel_i0e(0.0), 1.0);
        assert_eq!(bessel_i1e(0.0), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn dawson_solves_its_ode(x in -10.0f64..10.0) {
            let h = 1e-5;
            let fp = (dawson_f64(x + h) - dawson_f64(x - h)) / (2.0 * h);
            prop_assert!((fp + 2.0 * x * dawson_f64(x) - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn special_functions_are_deterministic(x in -50.0f64..50.0) {
            prop_assert_eq!(dawson(x).unwrap().value.to_bits(), dawson(x).unwrap().value.to_bits());
            let z = -x.abs() * 10.0;
            let a = hyp2f2_1_1_2_5h(z).unwrap().value;
            let b = hyp2f2_1_1_2_5h(z).unwrap().value;
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
