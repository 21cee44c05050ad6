//! Probabilities averaged over Brownian misalignment, random orientation and
//! the counting window.
//!
//! Three evaluators are available:
//!
//! * closed forms for `n, m <= 1` (double-double, exact x-derivative);
//! * a semi-analytic route valid for any `n, m <= 3`, integrating only over
//!   the emission time;
//! * the nested-quadrature reference in [`averaged_prob_quadrature`].
//!
//! [`mode_probabilities`] picks the closed forms where they are well
//! conditioned and the semi-analytic route elsewhere.

mod closed_form;
mod oracle;
mod semi_analytic;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

pub use closed_form::LowMode;
pub use semi_analytic::MAX_CUTOFF;

use crate::error::{ensure_finite, Error, Result};
use crate::optics::{ModeIndex, Point2};
use crate::scalar::{DoubleF64, Dual, Real};
use semi_analytic::{slot, SLOTS};

/// Closed forms are used for `x` in this range ...
pub const CLOSED_FORM_X: (f64, f64) = (1e-4, 4.0);
/// ... and `tau` at least this large.
pub const CLOSED_FORM_TAU_MIN: f64 = 1e-7;

const REFERENCE_TOL: f64 = 1e-11;
const SEMI_ANALYTIC_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// One averaged probability with its provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub method: Method,
}

/// Averaged probabilities of all detected modes plus the undetected remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragedProbabilities {
    pub probs: BTreeMap<ModeIndex, f64>,
    pub residual: f64,
    pub x: f64,
    pub tau: f64,
    pub method: Method,
    pub error_estimate: f64,
}

impl AveragedProbabilities {
    pub fn get(&self, idx: ModeIndex) -> Option<f64> {
        self.probs.get(&idx).copied()
    }

    pub fn detected(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// Detection probability of one mode and its derivative in `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSlope {
    pub mode: ModeIndex,
    pub p: f64,
    pub dp_dx: f64,
}

/// Output of [`mode_probabilities`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    pub entries: Vec<ModeSlope>,
    pub method: Method,
    pub error_estimate: f64,
}

impl ModeSet {
    pub fn get(&self, mode: ModeIndex) -> Option<&ModeSlope> {
        self.entries.iter().find(|e| e.mode == mode)
    }

    pub fn residual(&self) -> f64 {
        1.0 - self.entries.iter().map(|e| e.p).sum::<f64>()
    }
}

/// Isotropic 2D heat kernel: density of the misalignment after time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrownianKernel {
    pub diffusion_d: f64,
    pub time_t: f64,
}

impl BrownianKernel {
    pub fn new(diffusion_d: f64, time_t: f64) -> Result<Self> {
        if !(diffusion_d > 0.0 && diffusion_d.is_finite()) {
            return Err(Error::Domain {
                what: "diffusion coefficient",
                value: diffusion_d,
            });
        }
        if !(time_t > 0.0 && time_t.is_finite()) {
            return Err(Error::Domain {
                what: "time",
                value: time_t,
            });
        }
        Ok(Self { diffusion_d, time_t })
    }

    /// Per-axis variance `2 D t`.
    pub fn axis_variance(&self) -> f64 {
        2.0 * self.diffusion_d * self.time_t
    }

    pub fn density(&self, mu: Point2) -> f64 {
        let s = 4.0 * self.diffusion_d * self.time_t;
        Float::exp(-(mu.x * mu.x + mu.y * mu.y) / s) / (PI * s)
    }
}

/// `(E[mu], Var[mu])` of the misalignment magnitude over a cycle, in units of
/// `w` and `w²`.
pub fn misalignment_moments(tau: f64) -> Result<(f64, f64)> {
    ensure_finite(tau, "tau")?;
    if tau < 0.0 {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
        });
    }
    Ok((
        2.0 / 3.0 * Float::sqrt(PI * tau),
        (2.0 - 4.0 * PI / 9.0) * tau,
    ))
}

fn check_args(x: f64, tau: f64, ta_fraction: f64) -> Result<()> {
    ensure_finite(x, "x")?;
    ensure_finite(tau, "tau")?;
    if x < 0.0 {
        return Err(Error::Domain { what: "x", value: x });
    }
    if tau < 0.0 {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
        });
    }
    if !(0.0..1.0).contains(&ta_fraction) {
        return Err(Error::Domain {
            what: "alignment fraction",
            value: ta_fraction,
        });
    }
    Ok(())
}

fn check_mode(idx: ModeIndex) -> Result<()> {
    if idx.n > MAX_CUTOFF || idx.m > MAX_CUTOFF {
        return Err(Error::ModeOrder {
            n: idx.n,
            m: idx.m,
            cap: MAX_CUTOFF,
        });
    }
    Ok(())
}

/// Reference value by nested quadrature over emission time, orientation and
/// azimuth, at brightness `nu = 1/2`.
pub fn averaged_prob_quadrature(
    idx: ModeIndex,
    x: f64,
    tau: f64,
    ta_fraction: f64,
) -> Result<ProbabilityEstimate> {
    averaged_prob_quadrature_nu(idx, x, tau, ta_fraction, 0.5)
}

/// As [`averaged_prob_quadrature`] with explicit brightness split.
pub fn averaged_prob_quadrature_nu(
    idx: ModeIndex,
    x: f64,
    tau: f64,
    ta_fraction: f64,
    nu: f64,
) -> Result<ProbabilityEstimate> {
    check_mode(idx)?;
    let all = averaged_quadrature_all(x, tau, ta_fraction, nu, idx.n.max(idx.m))?;
    let value = all.get(idx).unwrap_or(0.0);
    Ok(ProbabilityEstimate {
        value,
        error_estimate: all.error_estimate,
        method: Method::Quadrature,
    })
}

/// All modes `n, m <= cutoff` by nested quadrature.
pub fn averaged_quadrature_all(
    x: f64,
    tau: f64,
    ta_fraction: f64,
    nu: f64,
    cutoff: u32,
) -> Result<AveragedProbabilities> {
    check_args(x, tau, ta_fraction)?;
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain {
            what: "brightness",
            value: nu,
        });
    }
    let (v, err) = oracle::averaged(x, tau, ta_fraction, nu, cutoff, REFERENCE_TOL)?;
    let probs: BTreeMap<_, _> = ModeIndex::up_to(cutoff).map(|i| (i, v.0[slot(i.n, i.m)])).collect();
    let residual = 1.0 - probs.values().sum::<f64>();
    Ok(AveragedProbabilities {
        probs,
        residual,
        x,
        tau,
        method: Method::Quadrature,
        error_estimate: err,
    })
}

fn low_mode(idx: ModeIndex) -> Option<LowMode> {
    match (idx.n, idx.m) {
        (0, 0) => Some(LowMode::P00),
        (1, 0) | (0, 1) => Some(LowMode::P10),
        (1, 1) => Some(LowMode::P11),
        _ => None,
    }
}

fn closed_form_covers(x: f64, tau: f64) -> bool {
    (CLOSED_FORM_X.0..=CLOSED_FORM_X.1).contains(&x) && tau >= CLOSED_FORM_TAU_MIN
}

// error model for the double-double evaluation: the bracket cancels by a
// factor of order tau·p
fn closed_form_error(p: f64, tau: f64, x: f64) -> f64 {
    4.0 * f64::EPSILON * Float::abs(p) + 1e-28 / (tau * Float::min(1.0, x * x))
}

fn closed_with_slope(mode: LowMode, x: f64, tau: f64) -> (f64, f64) {
    let xv = Dual::var(DoubleF64::from_f64(x));
    let t = Dual::constant(DoubleF64::from_f64(tau));
    let r = closed_form::corrected(mode, xv, t);
    (r.v.to_f64(), r.d.to_f64())
}

/// Closed form, corrected normalisation. Falls back to the semi-analytic
/// route outside the well-conditioned region.
pub fn averaged_prob_closed_form(idx: ModeIndex, x: f64, tau: f64) -> Result<ProbabilityEstimate> {
    let mode = low_mode(idx).ok_or(Error::ModeOrder {
        n: idx.n,
        m: idx.m,
        cap: 1,
    })?;
    check_args(x, tau, 0.0)?;
    if closed_form_covers(x, tau) {
        let (p, _) = closed_with_slope(mode, x, tau);
        return Ok(ProbabilityEstimate {
            value: p,
            error_estimate: closed_form_error(p, tau, x),
            method: Method::ClosedForm,
        });
    }
    let set = mode_probabilities(x, tau, 1, 0.0)?;
    let e = set.get(idx).expect("mode within cutoff");
    Ok(ProbabilityEstimate {
        value: e.p,
        error_estimate: set.error_estimate,
        method: set.method,
    })
}

/// The closed form exactly as published, without the normalisation audit.
pub fn published_closed_form(idx: ModeIndex, x: f64, tau: f64) -> Result<f64> {
    let mode = low_mode(idx).ok_or(Error::ModeOrder {
        n: idx.n,
        m: idx.m,
        cap: 1,
    })?;
    check_args(x, tau, 0.0)?;
    if !(x > 0.0 && tau > 0.0) {
        return Err(Error::Domain {
            what: "closed form needs x > 0 and tau > 0",
            value: x.min(tau),
        });
    }
    Ok(closed_form::published(mode, DoubleF64::from_f64(x), DoubleF64::from_f64(tau)).to_f64())
}

/// Probabilities and x-derivatives of all modes `n, m <= cutoff`, counting
/// over `[ta_fraction·T, T]`.
pub fn mode_probabilities(x: f64, tau: f64, cutoff: u32, ta_fraction: f64) -> Result<ModeSet> {
    check_args(x, tau, ta_fraction)?;
    if cutoff > MAX_CUTOFF {
        return Err(Error::ModeOrder {
            n: cutoff,
            m: cutoff,
            cap: MAX_CUTOFF,
        });
    }
    let tau_a = tau * ta_fraction;
    let closed = cutoff <= 1
        && closed_form_covers(x, tau)
        && (ta_fraction == 0.0 || closed_form_covers(x, tau_a));
    if closed {
        let mut entries = Vec::with_capacity(4);
        let mut err: f64 = 0.0;
        for mode in ModeIndex::up_to(cutoff) {
            let low = low_mode(mode).expect("cutoff <= 1");
            let (mut p, mut dp) = closed_with_slope(low, x, tau);
            let mut e = closed_form_error(p, tau, x);
            if ta_fraction > 0.0 {
                // counting starts at t_a: remove the [0, t_a] part of the average
                let (pa, dpa) = closed_with_slope(low, x, tau_a);
                p = (p - ta_fraction * pa) / (1.0 - ta_fraction);
                dp = (dp - ta_fraction * dpa) / (1.0 - ta_fraction);
                e = (e + ta_fraction * closed_form_error(pa, tau_a, x)) / (1.0 - ta_fraction);
            }
            err = err.max(e);
            entries.push(ModeSlope { mode, p, dp_dx: dp });
        }
        return Ok(ModeSet {
            entries,
            method: Method::ClosedForm,
            error_estimate: err,
        });
    }
    let (v, err) = semi_analytic::time_averaged(x, tau, ta_fraction, cutoff, SEMI_ANALYTIC_TOL)?;
    let entries = ModeIndex::up_to(cutoff)
        .map(|mode| ModeSlope {
            mode,
            p: v.0[slot(mode.n, mode.m)],
            dp_dx: v.0[SLOTS + slot(mode.n, mode.m)],
        })
        .collect();
    Ok(ModeSet {
        entries,
        method: Method::Quadrature,
        error_estimate: err.max(1e-15),
    })
}

/// [`mode_probabilities`] repackaged as an [`AveragedProbabilities`].
pub fn averaged_probabilities(x: f64, tau: f64, cutoff: u32, ta_fraction: f64) -> Result<AveragedProbabilities> {
    let set = mode_probabilities(x, tau, cutoff, ta_fraction)?;
    let residual = set.residual();
    Ok(AveragedProbabilities {
        probs: set.entries.iter().map(|e| (e.mode, e.p)).collect(),
        residual,
        x,
        tau,
        method: set.method,
        error_estimate: set.error_estimate,
    })
}

/// Probability when counting starts after `t_a = T / k`: the full-cycle
/// average minus the `[0, t_a]` part, each from the cycle-time formulas.
pub fn aligned_prob_with_ta(idx: ModeIndex, x: f64, tau: f64, k: f64) -> Result<f64> {
    check_mode(idx)?;
    if !(k > 1.0) {
        return Err(Error::Domain {
            what: "alignment ratio k",
            value: k,
        });
    }
    let cutoff = idx.n.max(idx.m);
    let full = mode_probabilities(x, tau, cutoff, 0.0)?;
    let p_full = full.get(idx).expect("mode within cutoff").p;
    if k.is_infinite() {
        return Ok(p_full);
    }
    let early = mode_probabilities(x, tau / k, cutoff, 0.0)?;
    let p_early = early.get(idx).expect("mode within cutoff").p;
    Ok((p_full - p_early / k) / (1.0 - 1.0 / k))
}

/// Per-mode comparison of the published closed forms against the reference.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditRow {
    pub mode: ModeIndex,
    /// Least-squares factor `c` minimising `Σ (c·published/reference - 1)²`.
    pub fitted_factor: f64,
    /// Spread of `reference/published` over the grid; zero for a pure
    /// normalisation error.
    pub factor_spread: f64,
    pub max_rel_dev_published: f64,
    pub max_rel_dev_corrected: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub grid: Vec<(f64, f64)>,
    pub rows: Vec<AuditRow>,
}

/// Ten grid points used by [`normalisation_audit`].
pub const AUDIT_GRID: [(f64, f64); 10] = [
    (0.02, 1e-3),
    (0.05, 1e-2),
    (0.1, 1e-4),
    (0.1, 0.1),
    (0.2, 1e-2),
    (0.2, 1.0),
    (0.3, 0.05),
    (0.5, 1e-3),
    (0.5, 0.25),
    (0.8, 0.5),
];

/// Fit one constant per mode between the published closed forms and the
/// quadrature reference.
pub fn normalisation_audit(grid: &[(f64, f64)]) -> Result<AuditReport> {
    let modes = [
        ModeIndex::new(0, 0),
        ModeIndex::new(1, 0),
        ModeIndex::new(0, 1),
        ModeIndex::new(1, 1),
    ];
    let mut refs = Vec::with_capacity(grid.len());
    for &(x, tau) in grid {
        refs.push(averaged_quadrature_all(x, tau, 0.0, 0.5, 1)?);
    }
    let mut rows = Vec::new();
    for mode in modes {
        let (mut num, mut den) = (0.0, 0.0);
        let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut dev_pub, mut dev_cor) = (0.0_f64, 0.0_f64);
        for (&(x, tau), r) in grid.iter().zip(&refs) {
            let q = r.get(mode).expect("cutoff 1");
            let p = published_closed_form(mode, x, tau)?;
            let c = averaged_prob_closed_form(mode, x, tau)?.value;
            let ratio = p / q;
            num += ratio;
            den += ratio * ratio;
            rmin = rmin.min(q / p);
            rmax = rmax.max(q / p);
            dev_pub = dev_pub.max(Float::abs(ratio - 1.0));
            dev_cor = dev_cor.max(Float::abs(c / q - 1.0));
        }
        rows.push(AuditRow {
            mode,
            fitted_factor: num / den,
            factor_spread: rmax - rmin,
            max_rel_dev_published: dev_pub,
            max_rel_dev_corrected: dev_cor,
        });
    }
    Ok(AuditReport {
        grid: grid.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const XS: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.5];
    const TAUS: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

    #[test]
    fn kernel_is_normalised_with_negative_exponent() {
        let k = BrownianKernel::new(0.3, 0.7).unwrap();
        let (g, w) = crate::quadrature::gauss_legendre(200);
        let rmax = 12.0 * k.axis_variance().sqrt();
        let total: f64 = g
            .iter()
            .zip(&w)
            .map(|(g, w)| {
                let r = 0.5 * rmax * (g + 1.0);
                0.5 * rmax * w * 2.0 * PI * r * k.density(Point2::new(r, 0.0))
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn misalignment_moment_values() {
        assert_eq!(misalignment_moments(0.0).unwrap(), (0.0, 0.0));
        let (_, var) = misalignment_moments(1.0).unwrap();
        assert!((var - 0.6040).abs() < 5e-4);
        assert!((var - (2.0 - 4.0 * PI / 9.0)).abs() < 1e-15);
        assert!(misalignment_moments(-1.0).is_err());
    }

    #[test]
    fn quadrature_reproduces_zero_separation_limit() {
        for tau in [0.01, 0.25, 1.0] {
            let p = averaged_prob_quadrature(ModeIndex::new(0, 0), 0.0, tau, 0.0).unwrap();
            let want = (1.0 + 4.0 * tau).ln() / (4.0 * tau);
            assert!((p.value - want).abs() < 1e-8, "tau={tau}");
        }
        let p = averaged_prob_quadrature(ModeIndex::new(0, 0), 0.0, 1e-12, 0.0).unwrap();
        assert!((p.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_forms_match_quadrature_on_grid() {
        for &x in &XS {
            for &tau in &TAUS {
                let reference = averaged_quadrature_all(x, tau, 0.0, 0.5, 1).unwrap();
                for idx in ModeIndex::up_to(1) {
                    let q = reference.get(idx).unwrap();
                    let c = averaged_prob_closed_form(idx, x, tau).unwrap();
                    assert_eq!(c.method, Method::ClosedForm);
                    assert!(((c.value - q) / q).abs() < 1e-6, "{idx} x={x} tau={tau}: {} vs {q}", c.value);
                }
            }
        }
    }

    #[test]
    fn isotropy_and_brightness_independence() {
        for &(x, tau) in &[(0.2, 0.01), (0.05, 0.3)] {
            let a = averaged_quadrature_all(x, tau, 0.0, 0.1, 2).unwrap();
            let b = averaged_quadrature_all(x, tau, 0.0, 0.5, 2).unwrap();
            let c = averaged_quadrature_all(x, tau, 0.0, 0.9, 2).unwrap();
            for idx in ModeIndex::up_to(2) {
                let (pa, pb, pc) = (a.get(idx).unwrap(), b.get(idx).unwrap(), c.get(idx).unwrap());
                assert!((pa - pc).abs() <= 1e-9 && (pa - pb).abs() <= 1e-9);
                let swapped = a.get(ModeIndex::new(idx.m, idx.n)).unwrap();
                assert!((pa - swapped).abs() <= 1e-12);
            }
        }
        let p10 = averaged_prob_closed_form(ModeIndex::new(1, 0), 0.2, 0.01).unwrap();
        let p01 = averaged_prob_closed_form(ModeIndex::new(0, 1), 0.2, 0.01).unwrap();
        assert_eq!(p10.value, p01.value);
    }

    #[test]
    fn semi_analytic_route_matches_reference_for_higher_modes() {
        for &(x, tau, ta) in &[(0.2, 0.01, 0.0), (1.3, 0.4, 0.2), (0.05, 1e-9, 0.0), (2.5, 2.0, 0.0)] {
            let reference = averaged_quadrature_all(x, tau, ta, 0.5, 3).unwrap();
            let semi = semi_analytic::time_averaged(x, tau, ta, 3, 1e-13).unwrap().0;
            for idx in ModeIndex::up_to(3) {
                let q = reference.get(idx).unwrap();
                let s = semi.0[slot(idx.n, idx.m)];
                assert!((s - q).abs() <= 1e-10 * q.max(1e-6), "{idx} x={x} tau={tau}: {s} vs {q}");
            }
        }
    }

    #[test]
    fn fallback_agrees_with_closed_form_at_the_seam() {
        for &(x, tau) in &[(1e-4, 1e-3), (0.1, 1e-7), (4.0, 0.1)] {
            let closed = mode_probabilities(x, tau, 1, 0.0).unwrap();
            assert_eq!(closed.method, Method::ClosedForm);
            let (semi, _) = semi_analytic::time_averaged(x, tau, 0.0, 1, 1e-14).unwrap();
            for e in &closed.entries {
                let s = semi.0[slot(e.mode.n, e.mode.m)];
                let ds = semi.0[SLOTS + slot(e.mode.n, e.mode.m)];
                assert!((e.p - s).abs() <= 1e-9 * s.abs().max(1e-12), "{} x={x} tau={tau} {} {s}", e.mode, e.p);
                assert!((e.dp_dx - ds).abs() <= 1e-7 * ds.abs().max(1e-10), "{} slope {} {ds}", e.mode, e.dp_dx);
            }
        }
    }

    #[test]
    fn normalisation_over_many_modes() {
        let set = mode_probabilities(0.3, 0.05, 3, 0.0).unwrap();
        let detected: f64 = set.entries.iter().map(|e| e.p).sum();
        assert!(detected <= 1.0 && detected > 0.999);
        let low = averaged_probabilities(0.3, 0.05, 1, 0.0).unwrap();
        assert!((low.detected() + low.residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alignment_window_matches_direct_average() {
        for k in [5.0, 10.0, 100.0] {
            for idx in ModeIndex::up_to(1) {
                let combined = aligned_prob_with_ta(idx, 0.1, 0.01, k).unwrap();
                let direct = averaged_prob_quadrature(idx, 0.1, 0.01, 1.0 / k).unwrap().value;
                assert!((combined - direct).abs() < 1e-7, "k={k} {idx}");
            }
        }
        let idx = ModeIndex::new(0, 0);
        let inf = aligned_prob_with_ta(idx, 0.1, 0.01, f64::INFINITY).unwrap();
        assert_eq!(inf, averaged_prob_closed_form(idx, 0.1, 0.01).unwrap().value);
        assert!(aligned_prob_with_ta(idx, 0.1, 0.01, 1.0).is_err());
        // later counting sees more misalignment, so less light in the fundamental
        let k5 = aligned_prob_with_ta(idx, 0.1, 0.01, 5.0).unwrap();
        let k50 = aligned_prob_with_ta(idx, 0.1, 0.01, 50.0).unwrap();
        assert!(k5 < k50);
    }

    #[test]
    fn audit_identifies_published_factors() {
        let report = normalisation_audit(&AUDIT_GRID).unwrap();
        let row = |n, m| report.rows.iter().find(|r| r.mode == ModeIndex::new(n, m)).unwrap();
        assert!((row(1, 0).fitted_factor - 1.0).abs() < 1e-8);
        assert!((row(1, 1).fitted_factor + 1.0).abs() < 1e-8);
        assert!(row(0, 0).factor_spread > 1e-3);
        for r in &report.rows {
            assert!(r.max_rel_dev_corrected < 1e-7, "{:?}", r);
        }
    }
}
