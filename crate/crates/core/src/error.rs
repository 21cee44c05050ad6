use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} must be finite")]
    NonFinite { what: &'static str },

    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("mode ({n},{m}) exceeds the supported order {cap}")]
    ModeOrder { n: u32, m: u32, cap: u32 },

    #[error("series did not converge after {terms} terms (partial {partial}, last term {last_term})")]
    SeriesNotConverged {
        partial: f64,
        terms: usize,
        last_term: f64,
    },

    #[error("quadrature did not converge (partial {partial}, achieved {achieved:e}, requested {requested:e})")]
    QuadratureNotConverged {
        partial: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("finite-difference step underflows at x = {x}")]
    DerivativeStep { x: f64 },

    #[error("separation is not resolvable in the search bracket (g(lo) = {g_low}, g(hi) = {g_high})")]
    Unresolvable { g_low: f64, g_high: f64 },

    #[error("empirical derivative is dominated by shot noise (signal {signal:e}, noise {noise:e}); increase the step or photon count")]
    NoisyEstimate { signal: f64, noise: f64 },

    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

pub(crate) fn ensure_finite(v: f64, what: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}
