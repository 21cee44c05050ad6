//! Data-parallel drivers. Results never depend on the thread count: cycles
//! draw from their own RNG streams and sweeps are collected in grid order.

use rayon::prelude::*;
use spade_core::monte_carlo::{
    mle_separation_with, simulate_cycle, CycleCounts, ExperimentRecord, MleOptions, MleResult, SimulationSpec,
};
use spade_core::{Result, SystemConfig};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "SPADE_THREADS";

/// Size the global pool from `SPADE_THREADS` if it is set. Safe to call
/// more than once; only the first call has an effect.
pub fn configure_threads() {
    let n = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Same result as [`spade_core::monte_carlo::simulate_with`], cycles in parallel.
pub fn simulate(config: &SystemConfig, spec: &SimulationSpec, seed: u64) -> Result<ExperimentRecord> {
    config.validate()?;
    spec.validate()?;
    let total = (0..spec.n_cycles)
        .into_par_iter()
        .map(|c| simulate_cycle(config, spec, seed, c))
        .reduce(|| CycleCounts::zero(spec.cutoff), |a, b| a.merge(&b));
    Ok(ExperimentRecord::from_counts(config, spec, seed, &total))
}

/// Map over a grid in parallel, keeping grid order.
pub fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// One simulated experiment and estimate per seed.
pub fn repeated_estimates(
    config: &SystemConfig,
    spec: &SimulationSpec,
    seeds: &[u64],
    opts: &MleOptions,
) -> Result<Vec<MleResult>> {
    seeds
        .par_iter()
        .map(|&s| {
            let rec = spade_core::monte_carlo::simulate_with(config, spec, s)?;
            mle_separation_with(&rec, opts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use spade_core::monte_carlo::simulate_with;

    #[test]
    fn parallel_and_sequential_agree() {
        let c = SystemConfig::dimensionless(0.2, 0.01, 0.5, 0.0).unwrap();
        let spec = SimulationSpec::new(37, 300.0, 2);
        assert_eq!(simulate(&c, &spec, 5).unwrap(), simulate_with(&c, &spec, 5).unwrap());
    }
}
