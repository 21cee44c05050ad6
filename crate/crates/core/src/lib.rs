//! Separation estimation for two weak incoherent point sources whose centroid
//! diffuses between realignments of a Hermite-Gauss mode sorter.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`]: Dawson integral and the ₂F₂(1,1;2,5/2;z) series used by the
//!   closed-form probabilities.
//! * [`quadrature`]: adaptive Gauss-Kronrod, Gauss-Legendre and periodic rules.
//! * [`optics`]: Hermite-Gauss modes, overlap integrals and static (per-pose)
//!   detection probabilities.
//! * [`ensemble`]: probabilities averaged over the Brownian misalignment,
//!   random orientation and the measurement window.
//! * [`fisher`]: Fisher information for mode sorting and direct imaging,
//!   asymptotic expansions, minimal resolvable distance.
//! * [`monte_carlo`]: simulation of repeated measurement cycles and the
//!   maximum-likelihood separation estimator.
//!
//! Lengths are measured in units of the PSF width `w` throughout: the
//! half-separation is `x = d / 2w` and the cycle time enters through
//! `tau = D T / w^2`. Fisher information is reported as `w^2 F`.
//!
//! The crate is `no_std` (it needs `alloc`). IO, the CLI and parallel drivers
//! live in the `spade` companion crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(a > b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ensemble;
pub mod error;
pub mod fisher;
pub mod monte_carlo;
pub mod optics;
pub mod quadrature;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use optics::{ModeIndex, Point2, Pose, Source, SystemConfig};
