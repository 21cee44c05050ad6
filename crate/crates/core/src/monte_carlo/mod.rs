//! Simulation of repeated measurement cycles.
//!
//! Every photon is an independent draw from the time-averaged ensemble:
//! emission time uniform on `[t_a, T]`, misalignment Gaussian with per-axis
//! variance `2 D t`, isotropic pair orientation, source chosen with
//! probability `nu`. The photon is then sorted into a mode by a categorical
//! draw over `|f_nm|²` for its own source, with the remainder going to the
//! bucket. [`PathModel::Correlated`] instead follows one Brownian path and one
//! orientation per cycle.
//!
//! Random numbers come from ChaCha8 with one stream per cycle, so a cycle's
//! counts depend only on `(seed, cycle index)` and cycles can be simulated in
//! any order or in parallel.

mod estimate;

pub use estimate::{empirical_fisher, mle_separation, mle_separation_with, Likelihood, MleOptions, MleResult};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::optics::{ModeIndex, Point2, Pose, Source, SystemConfig, MAX_ORDER};

pub type SimRng = ChaCha8Rng;

/// Generator for one independent stream of a seeded experiment.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One emission event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub emission_time: f64,
    /// Misalignment, in length units.
    pub mu_vec: Point2,
    pub phi: f64,
    pub theta: f64,
    pub source: Source,
}

impl TrajectorySample {
    pub fn pose(&self) -> Pose {
        Pose {
            mu: Float::hypot(self.mu_vec.x, self.mu_vec.y),
            psi: Float::atan2(self.mu_vec.y, self.mu_vec.x),
            phi: self.phi,
            theta: self.theta,
        }
    }

    /// Displacement of the emitting source from the sorter axis, in PSF
    /// units, for half-separation `x`.
    pub fn offset(&self, x: f64, w: f64) -> Point2 {
        let s = match self.source {
            Source::First => -1.0,
            Source::Second => 1.0,
        };
        let half = s * x * Float::sin(self.theta);
        Point2::new(
            self.mu_vec.x / w + half * Float::cos(self.phi),
            self.mu_vec.y / w + half * Float::sin(self.phi),
        )
    }
}

fn isotropic<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let phi = 2.0 * PI * rng.random::<f64>();
    let cos_theta = 2.0 * rng.random::<f64>() - 1.0;
    (phi, Float::acos(cos_theta))
}

fn pick_source<R: Rng + ?Sized>(rng: &mut R, nu: f64) -> Source {
    if rng.random::<f64>() < nu {
        Source::First
    } else {
        Source::Second
    }
}

fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Point2 {
    let s = Float::sqrt(var);
    let gx: f64 = StandardNormal.sample(rng);
    let gy: f64 = StandardNormal.sample(rng);
    Point2::new(s * gx, s * gy)
}

/// Draw one emission event from the time-averaged ensemble.
pub fn sample_trajectory<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> TrajectorySample {
    let (ta, t) = (config.alignment_time_ta, config.cycle_time_t);
    let emission_time = ta + (t - ta) * rng.random::<f64>();
    let mu_vec = gaussian_pair(rng, 2.0 * config.diffusion_d * emission_time);
    let (phi, theta) = isotropic(rng);
    let source = pick_source(rng, config.brightness_nu);
    TrajectorySample {
        emission_time,
        mu_vec,
        phi,
        theta,
        source,
    }
}

/// Per-mode detection probabilities `|f_nm(a)|²` for `n, m <= cutoff`,
/// row-major, written into `out`.
pub fn mode_weights(a: Point2, cutoff: u32, out: &mut [f64]) {
    let side = cutoff as usize + 1;
    debug_assert!(out.len() >= side * side && cutoff <= MAX_ORDER);
    let g = Float::exp(-(a.x * a.x + a.y * a.y));
    let mut px = [0.0; MAX_ORDER as usize + 1];
    let mut py = [0.0; MAX_ORDER as usize + 1];
    // a^(2n) / n!
    let (ax2, ay2) = (a.x * a.x, a.y * a.y);
    px[0] = 1.0;
    py[0] = 1.0;
    for k in 1..side {
        px[k] = px[k - 1] * ax2 / k as f64;
        py[k] = py[k - 1] * ay2 / k as f64;
    }
    for n in 0..side {
        for m in 0..side {
            out[n * side + m] = g * px[n] * py[m];
        }
    }
}

/// Index of the mode selected by the uniform `u`, or `None` for the bucket.
pub fn assign_mode(a: Point2, cutoff: u32, u: f64) -> Option<usize> {
    let side = cutoff as usize + 1;
    let mut w = [0.0; (MAX_ORDER as usize + 1) * (MAX_ORDER as usize + 1)];
    mode_weights(a, cutoff, &mut w);
    let mut acc = 0.0;
    for (i, p) in w[..side * side].iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(i);
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PathModel {
    /// Each photon draws its own time, misalignment and orientation.
    #[default]
    Independent,
    /// One Brownian path and one orientation per cycle; photons arrive at
    /// uniform times along it.
    Correlated,
}

impl PathModel {
    pub fn as_str(self) -> &'static str {
        match self {
            PathModel::Independent => "independent",
            PathModel::Correlated => "correlated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationSpec {
    pub n_cycles: u64,
    pub mean_photons_per_cycle: f64,
    pub cutoff: u32,
    pub path: PathModel,
}

impl SimulationSpec {
    pub fn new(n_cycles: u64, mean_photons_per_cycle: f64, cutoff: u32) -> Self {
        Self {
            n_cycles,
            mean_photons_per_cycle,
            cutoff,
            path: PathModel::Independent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cycles == 0 {
            return Err(Error::Config("at least one cycle is required"));
        }
        if !(self.mean_photons_per_cycle >= 0.0 && self.mean_photons_per_cycle.is_finite()) {
            return Err(Error::Domain {
                what: "mean photons per cycle",
                value: self.mean_photons_per_cycle,
            });
        }
        if self.cutoff > MAX_ORDER {
            return Err(Error::ModeOrder {
                n: self.cutoff,
                m: self.cutoff,
                cap: MAX_ORDER,
            });
        }
        Ok(())
    }
}

/// Counts from one or more cycles: row-major modes then the bucket.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleCounts {
    pub modes: Vec<u64>,
    pub bucket: u64,
}

impl CycleCounts {
    pub fn zero(cutoff: u32) -> Self {
        let side = cutoff as usize + 1;
        Self {
            modes: alloc::vec![0; side * side],
            bucket: 0,
        }
    }

    pub fn merge(mut self, other: &CycleCounts) -> Self {
        for (a, b) in self.modes.iter_mut().zip(&other.modes) {
            *a += b;
        }
        self.bucket += other.bucket;
        self
    }

    fn record(&mut self, slot: Option<usize>) {
        match slot {
            Some(i) => self.modes[i] += 1,
            None => self.bucket += 1,
        }
    }
}

fn photon_number<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // mean is finite and positive, so construction cannot fail
    let k: f64 = Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0);
    k as u64
}

/// Counts of cycle number `cycle` of the experiment seeded with `seed`.
pub fn simulate_cycle(config: &SystemConfig, spec: &SimulationSpec, seed: u64, cycle: u64) -> CycleCounts {
    let mut rng = stream_rng(seed, cycle);
    let mut out = CycleCounts::zero(spec.cutoff);
    let k = photon_number(&mut rng, spec.mean_photons_per_cycle);
    let (x, w) = (config.x(), config.psf_width_w);
    match spec.path {
        PathModel::Independent => {
            for _ in 0..k {
                let s = sample_trajectory(config, &mut rng);
                let u: f64 = rng.random();
                out.record(assign_mode(s.offset(x, w), spec.cutoff, u));
            }
        }
        PathModel::Correlated => {
            let (ta, t) = (config.alignment_time_ta, config.cycle_time_t);
            let (phi, theta) = isotropic(&mut rng);
            let mut times: Vec<f64> = (0..k).map(|_| ta + (t - ta) * rng.random::<f64>()).collect();
            times.sort_unstable_by(|a, b| a.total_cmp(b));
            let (mut now, mut mu) = (0.0, Point2::default());
            for te in times {
                let step = gaussian_pair(&mut rng, 2.0 * config.diffusion_d * (te - now));
                mu = Point2::new(mu.x + step.x, mu.y + step.y);
                now = te;
                let s = TrajectorySample {
                    emission_time: te,
                    mu_vec: mu,
                    phi,
                    theta,
                    source: pick_source(&mut rng, config.brightness_nu),
                };
                let u: f64 = rng.random();
                out.record(assign_mode(s.offset(x, w), spec.cutoff, u));
            }
        }
    }
    out
}

/// Aggregated outcome of a simulated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub counts: BTreeMap<ModeIndex, u64>,
    pub bucket_count: u64,
    pub n_cycles: u64,
    pub truth: SystemConfig,
    pub seed: u64,
    pub mean_photons_per_cycle: f64,
    pub cutoff: u32,
    pub path: PathModel,
}

impl ExperimentRecord {
    pub fn from_counts(config: &SystemConfig, spec: &SimulationSpec, seed: u64, counts: &CycleCounts) -> Self {
        let map = ModeIndex::up_to(spec.cutoff).zip(counts.modes.iter().copied()).collect();
        Self {
            counts: map,
            bucket_count: counts.bucket,
            n_cycles: spec.n_cycles,
            truth: *config,
            seed,
            mean_photons_per_cycle: spec.mean_photons_per_cycle,
            cutoff: spec.cutoff,
            path: spec.path,
        }
    }

    /// Photons counted in the sorted modes.
    pub fn detected(&self) -> u64 {
        self.counts.values().sum()
    }

    /// All emitted photons including the bucket.
    pub fn total_photons(&self) -> u64 {
        self.detected() + self.bucket_count
    }

    /// Expected number of emitted photons.
    pub fn exposure(&self) -> f64 {
        self.n_cycles as f64 * self.mean_photons_per_cycle
    }

    /// Empirical probability of each mode, `counts / total`.
    pub fn frequencies(&self) -> BTreeMap<ModeIndex, f64> {
        let n = self.total_photons().max(1) as f64;
        self.counts.iter().map(|(k, &c)| (*k, c as f64 / n)).collect()
    }
}

/// Run `spec.n_cycles` cycles sequentially.
pub fn simulate_with(config: &SystemConfig, spec: &SimulationSpec, seed: u64) -> Result<ExperimentRecord> {
    config.validate()?;
    spec.validate()?;
    let total = (0..spec.n_cycles).fold(CycleCounts::zero(spec.cutoff), |acc, c| {
        acc.merge(&simulate_cycle(config, spec, seed, c))
    });
    Ok(ExperimentRecord::from_counts(config, spec, seed, &total))
}

pub fn simulate_cycles(
    config: &SystemConfig,
    n_cycles: u64,
    mean_photons_per_cycle: f64,
    cutoff: u32,
    seed: u64,
) -> Result<ExperimentRecord> {
    simulate_with(config, &SimulationSpec::new(n_cycles, mean_photons_per_cycle, cutoff), seed)
}
