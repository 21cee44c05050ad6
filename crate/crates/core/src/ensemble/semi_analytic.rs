//! Mode probabilities with the misalignment and orientation averages done
//! analytically, leaving a single integral over the emission time.
//!
//! For a fixed emission time the misalignment is Gaussian with per-axis
//! variance `2 tau s` (PSF units). Multiplying by `exp(-|a|²)` from the
//! overlap tilts it into another Gaussian, so with `beta = 1 + 4 tau s`
//!
//! ```text
//! E|f_nm|² = exp(-|c|²/beta) / beta · M_2n(c_x/beta, v) M_2m(c_y/beta, v) / (n! m!)
//! ```
//!
//! where `c` is the source offset, `v = (beta - 1) / (2 beta)` and `M_k` are
//! raw Gaussian moments. Averaging `phi` gives beta-functions of the powers
//! of `cos`, `sin`; averaging `u = cos(theta)` leaves
//! `I_k(a) = ∫₀¹ (1-u²)^k exp(-a (1-u²)) du` with `a = x²/beta`.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions, Vector};
use crate::special::dawson_f64;

/// Largest cutoff `M` handled by the vectorised evaluators.
pub const MAX_CUTOFF: u32 = 3;
/// Slots per vector: values first, then x-derivatives.
pub(crate) const SLOTS: usize = 16;
const IK_LEN: usize = 2 * MAX_CUTOFF as usize + 2;

pub(crate) type ModeVector = Vector<{ 2 * SLOTS }>;

pub(crate) fn slot(n: u32, m: u32) -> usize {
    (n * (MAX_CUTOFF + 1) + m) as usize
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub(crate) fn double_factorial_odd(j: u32) -> f64 {
    // (2j - 1)!!, with (-1)!! = 1
    (1..=j).fold(1.0, |acc, i| acc * (2 * i - 1) as f64)
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `I_0 .. I_{IK_LEN-1}` at `a`.
pub(crate) fn orientation_integrals(a: f64) -> Result<[f64; IK_LEN]> {
    let mut out = [0.0; IK_LEN];
    if a <= 2.0 {
        // I_k = Σ_j (-a)^j / j! · M_{k+j}, M_n = ∫(1-u²)^n = 4^n (n!)² / (2n+1)!
        const NM: usize = IK_LEN + 48;
        let mut moments = [0.0; NM];
        moments[0] = 1.0;
        for n in 1..NM {
            moments[n] = moments[n - 1] * (2 * n) as f64 / (2 * n + 1) as f64;
        }
        for (k, slot) in out.iter_mut().enumerate() {
            let mut coeff = 1.0;
            let mut sum = moments[k];
            for j in 1..(NM - k) {
                coeff *= -a / j as f64;
                let t = coeff * moments[k + j];
                sum += t;
                if Float::abs(t) < 1e-18 * Float::abs(sum) {
                    break;
                }
            }
            *slot = sum;
        }
    } else if a <= 12.0 {
        let y = Float::sqrt(a);
        out[0] = dawson_f64(y) / y;
        out[1] = out[0] + (out[0] - 1.0) / (2.0 * a);
        for k in 1..IK_LEN - 1 {
            let kf = k as f64;
            out[k + 1] = ((1.0 + 2.0 * kf + 2.0 * a) * out[k] - 2.0 * kf * out[k - 1]) / (2.0 * a);
        }
    } else {
        let r = integrate(
            |u: f64| {
                let w = 1.0 - u * u;
                let e = Float::exp(-a * w);
                let mut v = Vector([0.0; IK_LEN]);
                let mut p = e;
                for slot in v.0.iter_mut() {
                    *slot = p;
                    p *= w;
                }
                v
            },
            0.0,
            1.0,
            QuadOptions::tol(1e-16, 1e-14),
        )?;
        out = r.value.0;
    }
    Ok(out)
}

/// Orientation-averaged `E|f_nm|²` at fixed `beta`, with x-derivatives.
pub(crate) fn orientation_average(x: f64, beta: f64, cutoff: u32) -> Result<ModeVector> {
    if cutoff > MAX_CUTOFF {
        return Err(Error::ModeOrder {
            n: cutoff,
            m: cutoff,
            cap: MAX_CUTOFF,
        });
    }
    let a = x * x / beta;
    let ik = orientation_integrals(a)?;
    let v = (beta - 1.0) / (2.0 * beta);
    let mut out = ModeVector::zero_vec();
    for n in 0..=cutoff {
        for m in 0..=cutoff {
            let (mut val, mut der) = (0.0, 0.0);
            for i in 0..=n {
                for j in 0..=m {
                    let (p, q) = (n - i, m - j);
                    let k = (p + q) as usize;
                    let phi_avg = double_factorial_odd(p) * double_factorial_odd(q)
                        / (Float::powi(2.0, k as i32) * factorial(p + q));
                    let coeff = binomial(2 * n, 2 * i)
                        * binomial(2 * m, 2 * j)
                        * double_factorial_odd(i)
                        * double_factorial_odd(j)
                        * Float::powi(v, (i + j) as i32)
                        * phi_avg;
                    let xb = Float::powi(x / beta, 2 * k as i32);
                    val += coeff * xb * ik[k];
                    let mut d = -2.0 * x / beta * xb * ik[k + 1];
                    if k > 0 {
                        d += 2.0 * k as f64 * Float::powi(x, 2 * k as i32 - 1)
                            / Float::powi(beta, 2 * k as i32)
                            * ik[k];
                    }
                    der += coeff * d;
                }
            }
            let norm = 1.0 / (factorial(n) * factorial(m) * beta);
            out.0[slot(n, m)] = val * norm;
            out.0[SLOTS + slot(n, m)] = der * norm;
        }
    }
    Ok(out)
}

impl ModeVector {
    pub(crate) fn zero_vec() -> Self {
        Vector([0.0; 2 * SLOTS])
    }
}

/// Time-averaged probabilities and x-derivatives over `s ∈ [ta, 1]`.
pub(crate) fn time_averaged(
    x: f64,
    tau: f64,
    ta_fraction: f64,
    cutoff: u32,
    tol: f64,
) -> Result<(ModeVector, f64)> {
    if tau == 0.0 {
        return Ok((orientation_average(x, 1.0, cutoff)?, 1e-15));
    }
    let mut failure = None;
    let r = integrate(
        |s: f64| match orientation_average(x, 1.0 + 4.0 * tau * s, cutoff) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                ModeVector::zero_vec()
            }
        },
        ta_fraction,
        1.0,
        QuadOptions::tol(tol, tol),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let span = 1.0 - ta_fraction;
    Ok((r.value * (1.0 / span), r.abs_error / span))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ik_by_quadrature(a: f64, k: usize) -> f64 {
        integrate(
            |u: f64| {
                let w = 1.0 - u * u;
                Float::powi(w, k as i32) * Float::exp(-a * w)
            },
            0.0,
            1.0,
            QuadOptions::tol(1e-17, 1e-15),
        )
        .unwrap()
        .value
    }

    #[test]
    fn orientation_integrals_agree_across_branches() {
        for a in [0.0, 0.3, 1.99, 2.01, 5.0, 10.0, 11.99, 12.01, 40.0] {
            let t = orientation_integrals(a).unwrap();
            for (k, v) in t.iter().enumerate() {
                let q = ik_by_quadrature(a, k);
                assert!((v - q).abs() < 1e-13 * q.max(1e-3), "a={a} k={k} {v} vs {q}");
            }
        }
    }

    #[test]
    fn fundamental_mode_without_separation() {
        // x = 0: only the misalignment blur remains, E|f00|² = 1/beta
        let v = orientation_average(0.0, 1.7, 1).unwrap();
        assert!((v.0[slot(0, 0)] - 1.0 / 1.7).abs() < 1e-15);
        let (p, _) = time_averaged(0.0, 0.25, 0.0, 1, 1e-14).unwrap();
        assert!((p.0[slot(0, 0)] - 2.0f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn static_orientation_average_small_cases() {
        // beta = 1 (no motion): p00 = I_0(x²), p10 = x² I_1(x²) / 2
        let x = 0.4_f64;
        let v = orientation_average(x, 1.0, 1).unwrap();
        let ik = orientation_integrals(x * x).unwrap();
        assert!((v.0[slot(0, 0)] - ik[0]).abs() < 1e-15);
        assert!((v.0[slot(1, 0)] - 0.5 * x * x * ik[1]).abs() < 1e-15);
        assert!((v.0[slot(1, 0)] - v.0[slot(0, 1)]).abs() < 1e-16);
    }

    #[test]
    fn derivatives_match_central_differences() {
        for &(x, beta) in &[(0.05, 1.0), (0.3, 1.2), (1.1, 3.0), (2.0, 1.01), (4.5, 1.5)] {
            let v = orientation_average(x, beta, MAX_CUTOFF).unwrap();
            let h = 1e-5 * x.max(0.1);
            let up = orientation_average(x + h, beta, MAX_CUTOFF).unwrap();
            let dn = orientation_average(x - h, beta, MAX_CUTOFF).unwrap();
            for s in 0..SLOTS {
                let fd = (up.0[s] - dn.0[s]) / (2.0 * h);
                let an = v.0[SLOTS + s];
                assert!((fd - an).abs() < 1e-7 * an.abs().max(1e-3), "x={x} b={beta} s={s} {fd} {an}");
            }
        }
    }
}
