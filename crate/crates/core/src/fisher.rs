//! Fisher information about the separation, resolution limits and the
//! comparison with direct imaging.
//!
//! All values are per detected photon and scaled by `w²`, so the quantum
//! limit is 1. With `d = 2 w x`, `w² F = Σ (∂ₓp)² / (4 p)`.

use core::f64::consts::PI;

use num_traits::Float;

use crate::ensemble::{mode_probabilities, Method, ModeSet, MAX_CUTOFF};
use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{gauss_legendre, integrate, QuadOptions};
use crate::special::{bessel_i0e, bessel_i1e};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FisherMethod {
    ClosedFormDerivative,
    FiniteDifference,
    Quadrature,
    Asymptotic,
    MonteCarlo,
}

impl FisherMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FisherMethod::ClosedFormDerivative => "closed_form_derivative",
            FisherMethod::FiniteDifference => "finite_difference",
            FisherMethod::Quadrature => "quadrature",
            FisherMethod::Asymptotic => "asymptotic",
            FisherMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// Fisher information per photon in units of `w⁻²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherResult {
    pub fi_per_photon: f64,
    pub method: FisherMethod,
    pub x: f64,
    pub tau: f64,
    pub modes_m: u32,
    pub error_estimate: f64,
}

impl FisherResult {
    /// `w² F <= 1` up to the error estimate.
    pub fn within_quantum_bound(&self) -> bool {
        self.fi_per_photon <= 1.0 + self.error_estimate
    }
}

/// How the undetected remainder enters the information sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BucketPolicy {
    /// Sum over detected modes only.
    #[default]
    Excluded,
    /// Count the remainder as one more Poisson channel.
    Included,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Derivative {
    /// Exact x-derivative of the probabilities.
    #[default]
    Analytic,
    /// Central differences with one Richardson step.
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpadeOptions {
    pub cutoff: u32,
    pub k_alignment: Option<f64>,
    pub bucket: BucketPolicy,
    pub derivative: Derivative,
}

impl SpadeOptions {
    pub fn new(cutoff: u32) -> Self {
        Self {
            cutoff,
            k_alignment: None,
            bucket: BucketPolicy::Excluded,
            derivative: Derivative::Analytic,
        }
    }
}

fn ta_fraction(k: Option<f64>) -> Result<f64> {
    match k {
        None => Ok(0.0),
        Some(k) if k > 1.0 => Ok(if k.is_infinite() { 0.0 } else { 1.0 / k }),
        Some(k) => Err(Error::Domain {
            what: "alignment ratio k",
            value: k,
        }),
    }
}

fn check_x_tau(x: f64, tau: f64) -> Result<()> {
    ensure_finite(x, "x")?;
    ensure_finite(tau, "tau")?;
    if !(x > 0.0) {
        return Err(Error::Domain { what: "x", value: x });
    }
    if tau < 0.0 {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
        });
    }
    Ok(())
}

// (value, error) of Σ s² / (4 p) given per-channel (p, slope, slope error)
fn information_sum(
    channels: impl Iterator<Item = (f64, f64, f64)>,
    p_err: f64,
) -> (f64, f64) {
    let (mut fi, mut err) = (0.0, 0.0);
    for (p, s, ds) in channels {
        if p <= 0.0 {
            continue;
        }
        let term = s * s / (4.0 * p);
        fi += term;
        err += Float::abs(s) * ds / (2.0 * p) + term * p_err / p;
    }
    (fi, err)
}

fn with_bucket(set: &ModeSet, slopes: &[(f64, f64)], bucket: BucketPolicy) -> (f64, f64, f64) {
    // (p_bucket, slope, slope error); zero when excluded
    if bucket == BucketPolicy::Excluded {
        return (0.0, 0.0, 0.0);
    }
    let pb = set.residual();
    let sb: f64 = -slopes.iter().map(|s| s.0).sum::<f64>();
    let eb: f64 = slopes.iter().map(|s| s.1).sum();
    (pb, sb, eb)
}

/// Mode-sorting Fisher information with default options.
pub fn fi_spade(x: f64, tau: f64, cutoff: u32, k_alignment: Option<f64>) -> Result<FisherResult> {
    fi_spade_with(
        x,
        tau,
        &SpadeOptions {
            k_alignment,
            ..SpadeOptions::new(cutoff)
        },
    )
}

pub fn fi_spade_with(x: f64, tau: f64, opts: &SpadeOptions) -> Result<FisherResult> {
    check_x_tau(x, tau)?;
    if opts.cutoff == 0 || opts.cutoff > MAX_CUTOFF {
        return Err(Error::ModeOrder {
            n: opts.cutoff,
            m: opts.cutoff,
            cap: MAX_CUTOFF,
        });
    }
    let ta = ta_fraction(opts.k_alignment)?;
    let set = mode_probabilities(x, tau, opts.cutoff, ta)?;
    let p_err = set.error_estimate;

    let (slopes, method): (alloc::vec::Vec<(f64, f64)>, FisherMethod) = match opts.derivative {
        Derivative::Analytic => {
            let method = match set.method {
                Method::ClosedForm => FisherMethod::ClosedFormDerivative,
                _ => FisherMethod::Quadrature,
            };
            let slope_err = p_err / x.max(1e-3);
            (set.entries.iter().map(|e| (e.dp_dx, slope_err)).collect(), method)
        }
        Derivative::FiniteDifference => {
            let h = Float::max(1e-6, 1e-3 * x);
            if x - h <= 0.0 {
                return Err(Error::DerivativeStep { x });
            }
            let eval = |xx: f64| mode_probabilities(xx, tau, opts.cutoff, ta);
            let (p1, m1) = (eval(x + h)?, eval(x - h)?);
            let (p2, m2) = (eval(x + 0.5 * h)?, eval(x - 0.5 * h)?);
            let mut v = alloc::vec::Vec::with_capacity(set.entries.len());
            for i in 0..set.entries.len() {
                let coarse = (p1.entries[i].p - m1.entries[i].p) / (2.0 * h);
                let fine = (p2.entries[i].p - m2.entries[i].p) / h;
                let rich = (4.0 * fine - coarse) / 3.0;
                let noise = 2.0 * p_err / h;
                v.push((rich, Float::abs(fine - coarse) / 3.0 + noise));
            }
            (v, FisherMethod::FiniteDifference)
        }
    };

    let bucket = with_bucket(&set, &slopes, opts.bucket);
    let channels = set
        .entries
        .iter()
        .zip(&slopes)
        .map(|(e, s)| (e.p, s.0, s.1))
        .chain(core::iter::once(bucket));
    let (fi, err) = information_sum(channels, p_err);
    Ok(FisherResult {
        fi_per_photon: fi,
        method,
        x,
        tau,
        modes_m: opts.cutoff,
        error_estimate: err,
    })
}

/// Direct-imaging Fisher information.
///
/// The image-plane density is radially symmetric after the orientation
/// average, so only `p(ρ)` on a ray is needed; each source lobe convolved
/// with the misalignment is a Gaussian of per-axis variance `1/4 + 2 tau s`.
pub fn fi_direct_imaging(x: f64, tau: f64) -> Result<FisherResult> {
    check_x_tau(x, tau)?;
    let nodes = 32;
    let (g, w) = gauss_legendre(nodes);
    // u = cos(theta) on [0, 1], s on [0, 1]
    let mut grid = alloc::vec::Vec::with_capacity(nodes * nodes);
    for i in 0..nodes {
        let s = 0.5 * (g[i] + 1.0);
        let sigma2 = 0.25 + 2.0 * tau * s;
        for j in 0..nodes {
            let u = 0.5 * (g[j] + 1.0);
            let r = Float::sqrt(1.0 - u * u);
            grid.push((sigma2, r, 0.25 * w[i] * w[j]));
        }
    }
    let density = |rho: f64| -> (f64, f64) {
        let (mut p, mut dp) = (0.0, 0.0);
        for &(s2, r, wt) in &grid {
            let c = x * r;
            let z = rho * c / s2;
            let gauss = Float::exp(-(rho - c) * (rho - c) / (2.0 * s2)) / (2.0 * PI * s2);
            let (i0, i1) = (bessel_i0e(z), bessel_i1e(z));
            p += wt * gauss * i0;
            dp += wt * gauss * (rho * r * i1 - x * r * r * i0) / s2;
        }
        (p, dp)
    };
    let integrand = |rho: f64| {
        let (p, dp) = density(rho);
        if p <= 0.0 {
            0.0
        } else {
            2.0 * PI * rho * dp * dp / (4.0 * p)
        }
    };
    let rmax = 8.0 * Float::sqrt(1.0 + 4.0 * tau);
    let r = integrate(integrand, 0.0, rmax, QuadOptions::tol(1e-15, 1e-10))?;
    // the tail beyond rmax decays like a Gaussian; bound it by one more
    // radius step of the edge value
    let tail = integrand(rmax) * rmax;
    Ok(FisherResult {
        fi_per_photon: r.value,
        method: FisherMethod::Quadrature,
        x,
        tau,
        modes_m: 0,
        error_estimate: r.abs_error + tail,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `sqrt(tau) << x`.
    Short,
    /// `x << sqrt(tau)`.
    Long,
}

/// Two-term expansions of the mode-sorting information.
pub fn fi_asymptotic_spade(x: f64, tau: f64, regime: Regime, k_alignment: Option<f64>) -> f64 {
    match (regime, k_alignment) {
        (Regime::Short, None) => 2.0 / 3.0 - 2.0 * tau / (x * x),
        (Regime::Short, Some(k)) => 2.0 / 3.0 - 2.0 * (k + 1.0) * tau / (k * x * x),
        (Regime::Long, None) => (2.0 / (9.0 * tau) - 43.0 / 27.0) * x * x,
        (Regime::Long, Some(k)) => {
            (2.0 / (9.0 * tau) + 2.0 / (9.0 * k * tau) - 43.0 / 27.0 - 23.0 / (27.0 * k)) * x * x
        }
    }
}

/// Small-`x`, small-`tau` expansion of the direct-imaging information.
pub fn fi_asymptotic_direct(x: f64, tau: f64) -> f64 {
    let x2 = x * x;
    16.0 * x2 / 9.0 - 128.0 * tau * x2 / 9.0 + 1792.0 * tau * tau * x2 / 27.0
}

/// Cycle time tied to the separation: `sqrt(tau) = kappa x^q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingSpec {
    pub q: f64,
    pub kappa: f64,
}

impl ScalingSpec {
    pub fn new(q: f64, kappa: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Domain { what: "q", value: q });
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::Domain {
                what: "kappa",
                value: kappa,
            });
        }
        Ok(Self { q, kappa })
    }

    pub fn tau(&self, x: f64) -> f64 {
        self.kappa * self.kappa * Float::powf(x, 2.0 * self.q)
    }
}

pub fn fi_with_scaling(x: f64, scaling: ScalingSpec, cutoff: u32) -> Result<FisherResult> {
    fi_spade(x, scaling.tau(x), cutoff, None)
}

/// Cycle time for a resolution problem: fixed or tied to the trial separation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauSpec {
    Fixed(f64),
    Scaling(ScalingSpec),
}

impl TauSpec {
    pub fn tau(&self, x: f64) -> f64 {
        match self {
            TauSpec::Fixed(t) => *t,
            TauSpec::Scaling(s) => s.tau(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DminResult {
    /// `d_min / w`.
    pub d_min: f64,
    /// `w² F` at the solution.
    pub fi: f64,
    pub iterations: u32,
}

/// Lower and upper end of the `d / w` search range.
pub const DMIN_BRACKET: (f64, f64) = (1e-6, 10.0);

/// Smallest `d` with `d = 1 / sqrt(N F(d))`.
///
/// The range is scanned on a log grid for the first upward crossing of
/// `g(d) = d sqrt(N F(d)) - 1`, which is then refined by bisection.
pub fn min_resolvable_distance(n_photons: u64, tau: TauSpec, cutoff: u32) -> Result<DminResult> {
    if n_photons == 0 {
        return Err(Error::Domain {
            what: "photon number",
            value: 0.0,
        });
    }
    if let TauSpec::Fixed(t) = tau {
        check_x_tau(1.0, t)?;
    }
    let n = n_photons as f64;
    let g = |d: f64| -> Result<(f64, f64)> {
        let x = 0.5 * d;
        let f = fi_spade(x, tau.tau(x), cutoff, None)?.fi_per_photon;
        Ok((d * Float::sqrt(n * f) - 1.0, f))
    };
    let (lo, hi) = DMIN_BRACKET;
    let steps = 80;
    let ratio = Float::powf(hi / lo, 1.0 / steps as f64);
    let (g_lo, _) = g(lo)?;
    let mut a = lo;
    let mut ga = g_lo;
    let mut bracket = None;
    for i in 1..=steps {
        let b = if i == steps { hi } else { lo * Float::powi(ratio, i) };
        let (gb, _) = g(b)?;
        if ga < 0.0 && gb >= 0.0 {
            bracket = Some((a, b));
            break;
        }
        a = b;
        ga = gb;
    }
    let (mut a, mut b) = match bracket {
        Some(br) => br,
        None => {
            return Err(Error::Unresolvable {
                g_low: g_lo,
                g_high: g(hi)?.0,
            })
        }
    };
    let mut iterations = 0;
    while (b - a) > 1e-9 * b && iterations < 200 {
        let mid = 0.5 * (a + b);
        if g(mid)?.0 < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    let d = 0.5 * (a + b);
    Ok(DminResult {
        d_min: d,
        fi: g(d)?.1,
        iterations,
    })
}

fn crossover_poly(t: f64) -> f64 {
    ((1792.0 * t - 384.0) * t + 91.0) * t - 6.0
}

/// `(sqrt(tau), polynomial residual)` where the long-cycle coefficients of
/// mode sorting and direct imaging coincide.
pub fn spade_di_crossover() -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.2);
    debug_assert!(crossover_poly(a) < 0.0 && crossover_poly(b) > 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if crossover_poly(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let mut t = 0.5 * (a + b);
    for _ in 0..3 {
        let d = (5376.0 * t - 768.0) * t + 91.0;
        t -= crossover_poly(t) / d;
    }
    (Float::sqrt(t), crossover_poly(t))
}

/// Per-photon information from one set of detection probabilities; used by
/// the simulation to turn empirical frequencies into an estimate.
pub fn information_from_probabilities(p: &[f64], dp: &[f64]) -> f64 {
    information_sum(p.iter().zip(dp).map(|(&p, &d)| (p, d, 0.0)), 0.0).0
}
