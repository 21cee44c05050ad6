//! Separation estimates from simulated counts.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::{assign_mode, sample_trajectory, stream_rng, ExperimentRecord};
use crate::ensemble::{mode_probabilities, MAX_CUTOFF};
use crate::error::{Error, Result};
use crate::fisher::{fi_spade_with, BucketPolicy, FisherMethod, FisherResult, SpadeOptions};
use crate::optics::{ModeIndex, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Likelihood {
    /// Independent Poisson counts in the sorted modes, mean photon number
    /// known from the record. The bucket is not observed.
    #[default]
    PoissonDetected,
    /// Multinomial over the sorted modes plus the bucket, conditioned on the
    /// total photon number.
    MultinomialWithBucket,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    pub model_tau: f64,
    pub cutoff: u32,
    pub likelihood: Likelihood,
    /// Upper end of the search range in `x`.
    pub x_max: f64,
    pub max_iterations: u32,
}

impl MleOptions {
    pub fn new(model_tau: f64, cutoff: u32) -> Self {
        Self {
            model_tau,
            cutoff,
            likelihood: Likelihood::PoissonDetected,
            x_max: 5.0,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleResult {
    /// Estimated separation, in length units.
    pub d_hat: f64,
    pub x_hat: f64,
    pub loglik: f64,
    pub converged: bool,
    /// `1 / sqrt(N F(d_hat))`, in length units.
    pub stderr_estimate: f64,
    pub iterations: u32,
}

const SCAN_POINTS: usize = 64;
const X_MIN: f64 = 1e-4;

pub fn mle_separation(record: &ExperimentRecord, model_tau: f64, cutoff: u32) -> Result<MleResult> {
    mle_separation_with(record, &MleOptions::new(model_tau, cutoff))
}

/// Maximum-likelihood separation: log-grid scan over `(0, x_max]`, then
/// golden-section refinement around the best grid point. A maximum on the
/// edge of the range is returned with `converged = false`.
pub fn mle_separation_with(record: &ExperimentRecord, opts: &MleOptions) -> Result<MleResult> {
    if opts.cutoff == 0 || opts.cutoff > MAX_CUTOFF.min(record.cutoff) {
        return Err(Error::ModeOrder {
            n: opts.cutoff,
            m: opts.cutoff,
            cap: MAX_CUTOFF.min(record.cutoff),
        });
    }
    if !(opts.model_tau >= 0.0 && opts.model_tau.is_finite()) {
        return Err(Error::Domain {
            what: "model tau",
            value: opts.model_tau,
        });
    }
    let modes: Vec<(ModeIndex, f64)> = ModeIndex::up_to(opts.cutoff)
        .map(|m| (m, record.counts.get(&m).copied().unwrap_or(0) as f64))
        .collect();
    let detected: f64 = modes.iter().map(|m| m.1).sum();
    let bucket = record.total_photons() as f64 - detected;
    if detected == 0.0 {
        return Err(Error::Config("record has no photons in the sorted modes"));
    }
    let ta = record.truth.ta_fraction();
    let exposure = record.exposure();

    let loglik = |x: f64| -> Result<f64> {
        let set = mode_probabilities(x, opts.model_tau, opts.cutoff, ta)?;
        let mut ll = 0.0;
        let mut sum_p = 0.0;
        for (e, (_, c)) in set.entries.iter().zip(&modes) {
            sum_p += e.p;
            if *c > 0.0 {
                ll += c * Float::ln(e.p);
            }
        }
        match opts.likelihood {
            Likelihood::PoissonDetected => ll -= exposure * sum_p,
            Likelihood::MultinomialWithBucket => {
                if bucket > 0.0 {
                    ll += bucket * Float::ln(Float::max(1.0 - sum_p, 0.0));
                }
            }
        }
        Ok(if ll.is_nan() { f64::NEG_INFINITY } else { ll })
    };

    let ratio = Float::powf(opts.x_max / X_MIN, 1.0 / (SCAN_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| X_MIN * Float::powi(ratio, i as i32)).collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &x) in grid.iter().enumerate() {
        let v = loglik(x)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let w = record.truth.psf_width_w;
    let (i, v) = best;
    let (x_hat, ll, converged, iterations) = if i == 0 || i == SCAN_POINTS - 1 {
        (grid[i], v, false, 0)
    } else {
        golden_max(&loglik, grid[i - 1], grid[i + 1], opts.max_iterations)?
    };

    let bucket_policy = match opts.likelihood {
        Likelihood::PoissonDetected => BucketPolicy::Excluded,
        Likelihood::MultinomialWithBucket => BucketPolicy::Included,
    };
    let n_eff = match opts.likelihood {
        Likelihood::PoissonDetected => exposure,
        Likelihood::MultinomialWithBucket => record.total_photons() as f64,
    };
    let fi = fi_spade_with(
        x_hat,
        opts.model_tau,
        &SpadeOptions {
            bucket: bucket_policy,
            k_alignment: record.truth.k(),
            ..SpadeOptions::new(opts.cutoff)
        },
    )?;
    Ok(MleResult {
        d_hat: 2.0 * x_hat * w,
        x_hat,
        loglik: ll,
        converged: converged && x_hat > 0.0,
        stderr_estimate: w / Float::sqrt(n_eff * fi.fi_per_photon),
        iterations,
    })
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, cap: u32) -> Result<(f64, f64, bool, u32)> {
    let g = 0.5 * (Float::sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut it = 0;
    while (b - a) > 1e-10 * (a + b) {
        if it >= cap {
            let (x, v) = if fc > fd { (c, fc) } else { (d, fd) };
            return Ok((x, v, false, it));
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
        it += 1;
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?, true, it))
}

/// Fisher information from simulated frequencies at `x ± delta`.
///
/// Both sides reuse the same photons (common random numbers), so the
/// difference of counts only sees photons whose mode changes with `x`. The
/// squared-slope bias from shot noise is subtracted.
pub fn empirical_fisher(
    config: &SystemConfig,
    n_photons: u64,
    delta: f64,
    cutoff: u32,
    seed: u64,
) -> Result<FisherResult> {
    config.validate()?;
    let x = config.x();
    if !(delta > 0.0 && delta < x) {
        return Err(Error::Domain {
            what: "finite-difference step",
            value: delta,
        });
    }
    if n_photons == 0 {
        return Err(Error::Domain {
            what: "photon number",
            value: 0.0,
        });
    }
    if cutoff == 0 || cutoff > crate::optics::MAX_ORDER {
        return Err(Error::ModeOrder {
            n: cutoff,
            m: cutoff,
            cap: crate::optics::MAX_ORDER,
        });
    }
    let side = cutoff as usize + 1;
    let nm = side * side;
    let (mut plus, mut minus) = (alloc::vec![0u64; nm], alloc::vec![0u64; nm]);
    let mut disagree = alloc::vec![0u64; nm];
    let w = config.psf_width_w;
    let mut rng = stream_rng(seed, 0);
    for _ in 0..n_photons {
        let s = sample_trajectory(config, &mut rng);
        let u: f64 = rng.random();
        let a = assign_mode(s.offset(x + delta, w), cutoff, u);
        let b = assign_mode(s.offset(x - delta, w), cutoff, u);
        if let Some(i) = a {
            plus[i] += 1;
        }
        if let Some(i) = b {
            minus[i] += 1;
        }
        if a != b {
            for i in [a, b].into_iter().flatten() {
                disagree[i] += 1;
            }
        }
    }
    let n = n_photons as f64;
    let (mut fi, mut var) = (0.0, 0.0);
    for i in 0..nm {
        let p = (plus[i] + minus[i]) as f64 / (2.0 * n);
        if p == 0.0 {
            continue;
        }
        let mean_d = (plus[i] as f64 - minus[i] as f64) / n;
        let var_d = Float::max(disagree[i] as f64 / n - mean_d * mean_d, 0.0) / n;
        let slope = mean_d / (2.0 * delta);
        let slope_var = var_d / (4.0 * delta * delta);
        fi += (slope * slope - slope_var) / (4.0 * p);
        let ds = Float::sqrt(slope_var);
        let t = Float::abs(slope) * ds / (2.0 * p);
        var += t * t;
    }
    let noise = Float::sqrt(var);
    if !(fi > noise) {
        return Err(Error::NoisyEstimate { signal: fi, noise });
    }
    Ok(FisherResult {
        fi_per_photon: fi,
        method: FisherMethod::MonteCarlo,
        x,
        tau: config.tau(),
        modes_m: cutoff,
        error_estimate: noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::fi_spade;
    use crate::monte_carlo::simulate_cycles;

    fn cfg(x: f64, tau: f64) -> SystemConfig {
        SystemConfig::dimensionless(x, tau, 0.5, 0.0).unwrap()
    }

    #[test]
    fn estimate_lands_near_truth() {
        let (x, tau) = (0.2, 0.001);
        let rec = simulate_cycles(&cfg(x, tau), 100, 10_000.0, 1, 9).unwrap();
        let r = mle_separation(&rec, tau, 1).unwrap();
        assert!(r.converged);
        assert!((r.d_hat - 2.0 * x).abs() < 5.0 * r.stderr_estimate, "{r:?}");
        let m = mle_separation_with(
            &rec,
            &MleOptions {
                likelihood: Likelihood::MultinomialWithBucket,
                ..MleOptions::new(tau, 1)
            },
        )
        .unwrap();
        assert!((m.d_hat - 2.0 * x).abs() < 5.0 * m.stderr_estimate);
        assert!(m.stderr_estimate <= r.stderr_estimate * 1.001);
    }

    #[test]
    fn all_photons_in_fundamental_mode_pins_estimate_to_boundary() {
        let mut rec = simulate_cycles(&cfg(0.2, 0.001), 1, 1000.0, 1, 1).unwrap();
        for (k, v) in rec.counts.iter_mut() {
            *v = if *k == ModeIndex::new(0, 0) { 1000 } else { 0 };
        }
        rec.bucket_count = 0;
        let r = mle_separation(&rec, 0.001, 1).unwrap();
        assert!(!r.converged);
        assert!(r.x_hat <= 2.0 * X_MIN);
    }

    #[test]
    fn mle_argument_checks() {
        let rec = simulate_cycles(&cfg(0.2, 0.001), 1, 10.0, 1, 1).unwrap();
        assert!(mle_separation(&rec, 0.001, 2).is_err());
        assert!(mle_separation(&rec, -1.0, 1).is_err());
    }

    #[test]
    fn empirical_information_short_cycle() {
        let r = empirical_fisher(&cfg(0.2, 1e-6), 1_000_000, 0.02, 1, 3).unwrap();
        assert!((r.fi_per_photon / (2.0 / 3.0) - 1.0).abs() < 0.1, "{r:?}");
        let exact = fi_spade(0.2, 1e-6, 1, None).unwrap().fi_per_photon;
        assert!((r.fi_per_photon - exact).abs() < 4.0 * r.error_estimate + 0.01 * exact);
    }

    #[test]
    fn empirical_information_long_cycle() {
        let (x, tau) = (0.02, 0.01);
        let r = empirical_fisher(&cfg(x, tau), 4_000_000, 0.015, 1, 4).unwrap();
        let want = (2.0 / (9.0 * tau) - 43.0 / 27.0) * x * x;
        assert!((r.fi_per_photon / want - 1.0).abs() < 0.15, "{} vs {want} ± {}", r.fi_per_photon, r.error_estimate);
    }

    #[test]
    fn empirical_information_rejects_bad_steps() {
        let c = cfg(0.2, 0.01);
        assert!(matches!(empirical_fisher(&c, 1000, 0.0, 1, 1), Err(Error::Domain { .. })));
        assert!(matches!(empirical_fisher(&c, 1000, 0.3, 1, 1), Err(Error::Domain { .. })));
        assert!(matches!(
            empirical_fisher(&cfg(0.02, 0.01), 1000, 1e-5, 1, 1),
            Err(Error::NoisyEstimate { .. })
        ));
    }
}
