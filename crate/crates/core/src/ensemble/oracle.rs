//! Reference probabilities by nested quadrature: adaptive Gauss-Kronrod over
//! the emission time and `cos(theta)`, trapezoid over `phi`. Both sources are
//! carried with their brightness weights. Only the Gaussian misalignment
//! integral is done in closed form.

use num_traits::Float;

use super::semi_analytic::{binomial, double_factorial_odd, factorial, slot, MAX_CUTOFF, SLOTS};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, periodic_mean, QuadOptions, Vector};

pub(crate) type OracleVector = Vector<SLOTS>;

// E[(m + sqrt(v) Z)^(2n)]
fn even_moment(n: u32, mean: f64, var: f64) -> f64 {
    (0..=n)
        .map(|j| {
            binomial(2 * n, 2 * j)
                * Float::powi(mean, (2 * (n - j)) as i32)
                * Float::powi(var, j as i32)
                * double_factorial_odd(j)
        })
        .sum()
}

/// Misalignment-averaged `|f_nm|²` for a source whose undisturbed offset is `c`.
pub(crate) fn blurred_overlap_sq(n: u32, m: u32, cx: f64, cy: f64, beta: f64) -> f64 {
    let v = (beta - 1.0) / (2.0 * beta);
    Float::exp(-(cx * cx + cy * cy) / beta) / beta
        * even_moment(n, cx / beta, v)
        * even_moment(m, cy / beta, v)
        / (factorial(n) * factorial(m))
}

fn pose_integrand(x: f64, beta: f64, u: f64, nu: f64, cutoff: u32) -> OracleVector {
    let half = x * Float::sqrt(Float::max(0.0, 1.0 - u * u));
    let points = 4 * cutoff as usize + 8;
    periodic_mean(
        |phi: f64| {
            let (cx, cy) = (half * Float::cos(phi), half * Float::sin(phi));
            let mut out = Vector([0.0; SLOTS]);
            for n in 0..=cutoff {
                for m in 0..=cutoff {
                    let first = blurred_overlap_sq(n, m, -cx, -cy, beta);
                    let second = blurred_overlap_sq(n, m, cx, cy, beta);
                    out.0[slot(n, m)] = nu * first + (1.0 - nu) * second;
                }
            }
            out
        },
        points,
    )
}

/// `(probabilities, absolute error)` for all modes `n, m <= cutoff`.
pub(crate) fn averaged(
    x: f64,
    tau: f64,
    ta_fraction: f64,
    nu: f64,
    cutoff: u32,
    tol: f64,
) -> Result<(OracleVector, f64)> {
    if cutoff > MAX_CUTOFF {
        return Err(Error::ModeOrder {
            n: cutoff,
            m: cutoff,
            cap: MAX_CUTOFF,
        });
    }
    let inner_opts = QuadOptions::tol(0.1 * tol, 0.1 * tol);
    let mut failure: Option<Error> = None;
    let mut inner_err = 0.0_f64;
    let mut orientation = |beta: f64| -> OracleVector {
        // theta is uniform on the sphere, so cos(theta) is uniform; the
        // integrand is even in cos(theta)
        match integrate(|u: f64| pose_integrand(x, beta, u, nu, cutoff), 0.0, 1.0, inner_opts) {
            Ok(r) => {
                inner_err = Float::max(inner_err, r.abs_error);
                r.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                Vector([0.0; SLOTS])
            }
        }
    };
    if tau == 0.0 {
        let v = orientation(1.0);
        return match failure {
            Some(e) => Err(e),
            None => Ok((v, inner_err)),
        };
    }
    let outer = integrate(
        |s: f64| orientation(1.0 + 4.0 * tau * s),
        ta_fraction,
        1.0,
        QuadOptions::tol(tol, tol),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let span = 1.0 - ta_fraction;
    Ok((outer.value * (1.0 / span), outer.abs_error / span + inner_err))
}
