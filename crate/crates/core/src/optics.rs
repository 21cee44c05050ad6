//! Hermite-Gauss modes and static detection probabilities for two sources.
//!
//! Internally every length is in units of the PSF width `w`. A source
//! displaced by `r` from the sorter axis excites mode `(n, m)` with amplitude
//! `exp(-|a|²/2) a_x^n a_y^m / sqrt(n! m!)`, `a = r / w`.

use core::f64::consts::PI;

use num_traits::Float;

use crate::error::{ensure_finite, Error, Result};

/// Highest Hermite order supported by [`hg_mode`].
pub const MAX_ORDER: u32 = 10;

/// Physical parameters of one experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    pub separation_d: f64,
    pub psf_width_w: f64,
    pub diffusion_d: f64,
    pub cycle_time_t: f64,
    pub brightness_nu: f64,
    pub alignment_time_ta: f64,
}

impl SystemConfig {
    pub fn new(
        separation_d: f64,
        psf_width_w: f64,
        diffusion_d: f64,
        cycle_time_t: f64,
        brightness_nu: f64,
        alignment_time_ta: f64,
    ) -> Result<Self> {
        let c = Self {
            separation_d,
            psf_width_w,
            diffusion_d,
            cycle_time_t,
            brightness_nu,
            alignment_time_ta,
        };
        c.validate()?;
        Ok(c)
    }

    /// Config in PSF units: `w = 1`, `T = 1`, `d = 2x`, `D = tau`.
    pub fn dimensionless(x: f64, tau: f64, nu: f64, ta_fraction: f64) -> Result<Self> {
        Self::new(2.0 * x, 1.0, tau, 1.0, nu, ta_fraction)
    }

    pub fn validate(&self) -> Result<()> {
        for (v, what) in [
            (self.separation_d, "separation"),
            (self.psf_width_w, "PSF width"),
            (self.diffusion_d, "diffusion coefficient"),
            (self.cycle_time_t, "cycle time"),
            (self.brightness_nu, "brightness"),
            (self.alignment_time_ta, "alignment time"),
        ] {
            ensure_finite(v, what)?;
        }
        if self.separation_d <= 0.0 {
            return Err(Error::Domain {
                what: "separation",
                value: self.separation_d,
            });
        }
        if self.psf_width_w <= 0.0 {
            return Err(Error::Domain {
                what: "PSF width",
                value: self.psf_width_w,
            });
        }
        if self.diffusion_d < 0.0 {
            return Err(Error::Domain {
                what: "diffusion coefficient",
                value: self.diffusion_d,
            });
        }
        if self.cycle_time_t <= 0.0 {
            return Err(Error::Domain {
                what: "cycle time",
                value: self.cycle_time_t,
            });
        }
        if !(self.brightness_nu > 0.0 && self.brightness_nu < 1.0) {
            return Err(Error::Domain {
                what: "brightness",
                value: self.brightness_nu,
            });
        }
        if !(self.alignment_time_ta >= 0.0 && self.alignment_time_ta < self.cycle_time_t) {
            return Err(Error::Domain {
                what: "alignment time",
                value: self.alignment_time_ta,
            });
        }
        Ok(())
    }

    /// Half-separation in PSF units, `d / 2w`.
    pub fn x(&self) -> f64 {
        self.separation_d / (2.0 * self.psf_width_w)
    }

    /// `D T / w²`.
    pub fn tau(&self) -> f64 {
        self.diffusion_d * self.cycle_time_t / (self.psf_width_w * self.psf_width_w)
    }

    /// `T / t_a`, or `None` without an alignment window.
    pub fn k(&self) -> Option<f64> {
        (self.alignment_time_ta > 0.0).then(|| self.cycle_time_t / self.alignment_time_ta)
    }

    pub fn ta_fraction(&self) -> f64 {
        self.alignment_time_ta / self.cycle_time_t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Misalignment `mu` (a length) in direction `psi`; pair orientation `(phi, theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pose {
    pub mu: f64,
    pub psi: f64,
    pub phi: f64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    First,
    Second,
}

impl Source {
    fn sign(self) -> f64 {
        match self {
            Source::First => -1.0,
            Source::Second => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub n: u32,
    pub m: u32,
}

impl ModeIndex {
    pub const fn new(n: u32, m: u32) -> Self {
        Self { n, m }
    }

    pub fn checked(n: u32, m: u32) -> Result<Self> {
        if n > MAX_ORDER || m > MAX_ORDER {
            return Err(Error::ModeOrder {
                n,
                m,
                cap: MAX_ORDER,
            });
        }
        Ok(Self { n, m })
    }

    /// All `(n, m)` with `n, m <= cutoff`, row-major.
    pub fn up_to(cutoff: u32) -> impl Iterator<Item = ModeIndex> {
        (0..=cutoff).flat_map(move |n| (0..=cutoff).map(move |m| ModeIndex::new(n, m)))
    }
}

impl core::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}{}", self.n, self.m)
    }
}

/// Physicists' Hermite polynomial by upward recurrence.
pub fn hermite(n: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Normalised Hermite-Gauss mode `u_nm(r)` for PSF width `w`.
pub fn hg_mode(idx: ModeIndex, point: Point2, w: f64) -> Result<f64> {
    ModeIndex::checked(idx.n, idx.m)?;
    if !(w > 0.0) {
        return Err(Error::Domain {
            what: "PSF width",
            value: w,
        });
    }
    let (sx, sy) = (point.x / w, point.y / w);
    let norm = Float::sqrt(2.0 / PI) / w
        / Float::sqrt(Float::powi(2.0, (idx.n + idx.m) as i32) * factorial(idx.n) * factorial(idx.m));
    let r2 = 2.0f64.sqrt();
    Ok(norm * hermite(idx.n, r2 * sx) * hermite(idx.m, r2 * sy) * Float::exp(-(sx * sx + sy * sy)))
}

/// Source displacement in PSF units.
pub fn source_offset(pose: &Pose, config: &SystemConfig, source: Source) -> Point2 {
    let w = config.psf_width_w;
    let mu = pose.mu / w;
    let half = config.x() * Float::sin(pose.theta);
    let s = source.sign();
    Point2::new(
        mu * Float::cos(pose.psi) + s * half * Float::cos(pose.phi),
        mu * Float::sin(pose.psi) + s * half * Float::sin(pose.phi),
    )
}

/// Overlap of mode `idx` with a fundamental Gaussian displaced by `a` (PSF units).
pub fn coherent_overlap(idx: ModeIndex, a: Point2) -> f64 {
    let g = Float::exp(-0.5 * (a.x * a.x + a.y * a.y));
    g * Float::powi(a.x, idx.n as i32) * Float::powi(a.y, idx.m as i32)
        / Float::sqrt(factorial(idx.n) * factorial(idx.m))
}

/// `f_nm(r_i)`: overlap of mode `idx` with the image of `source`.
pub fn overlap_f(idx: ModeIndex, pose: &Pose, config: &SystemConfig, source: Source) -> f64 {
    coherent_overlap(idx, source_offset(pose, config, source))
}

/// Probability that a photon from the pair lands in mode `idx`.
pub fn static_mode_prob(idx: ModeIndex, pose: &Pose, config: &SystemConfig) -> f64 {
    let nu = config.brightness_nu;
    let f1 = overlap_f(idx, pose, config, Source::First);
    let f2 = overlap_f(idx, pose, config, Source::Second);
    nu * f1 * f1 + (1.0 - nu) * f2 * f2
}

/// Image-plane intensity (a probability density per unit area).
pub fn di_intensity_static(point: Point2, pose: &Pose, config: &SystemConfig) -> f64 {
    let w = config.psf_width_w;
    let nu = config.brightness_nu;
    let lobe = |src: Source| {
        let c = source_offset(pose, config, src);
        let dx = point.x / w - c.x;
        let dy = point.y / w - c.y;
        2.0 / (PI * w * w) * Float::exp(-2.0 * (dx * dx + dy * dy))
    };
    nu * lobe(Source::First) + (1.0 - nu) * lobe(Source::Second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn cfg(x: f64, nu: f64) -> SystemConfig {
        SystemConfig::dimensionless(x, 0.0, nu, 0.0).unwrap()
    }

    // tensor Gauss-Legendre grid on [-L, L]² in PSF units
    struct Grid {
        pts: Vec<(f64, f64, f64)>,
    }

    impl Grid {
        fn new(half: f64, n: usize) -> Self {
            let (x, w) = gauss_legendre(n);
            let mut pts = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    pts.push((half * x[i], half * x[j], half * half * w[i] * w[j]));
                }
            }
            Self { pts }
        }

        fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
            self.pts.iter().map(|&(x, y, w)| w * f(x, y)).sum()
        }
    }

    #[test]
    fn hg_mode_reference_points() {
        let w = 1.7;
        let u00 = hg_mode(ModeIndex::new(0, 0), Point2::new(0.0, 0.0), w).unwrap();
        assert!((u00 - (2.0 / (PI * w * w)).sqrt()).abs() < 1e-15);
        assert_eq!(hg_mode(ModeIndex::new(1, 0), Point2::new(0.0, 0.4), w).unwrap(), 0.0);
        // H1(√2)² = 8, 1/sqrt(2² 1! 1!) = 1/2
        let u11 = hg_mode(ModeIndex::new(1, 1), Point2::new(w, w), w).unwrap();
        let expect = (2.0 / PI).sqrt() / w * 0.5 * 8.0 * (-2.0f64).exp();
        assert!((u11 - expect).abs() < 1e-15);
        assert!(matches!(
            hg_mode(ModeIndex::new(11, 0), Point2::default(), w),
            Err(Error::ModeOrder { .. })
        ));
    }

    #[test]
    fn hg_modes_are_orthonormal() {
        let grid = Grid::new(7.0, 90);
        let modes: Vec<_> = ModeIndex::up_to(3).collect();
        for a in &modes {
            for b in &modes {
                let g = grid.integrate(|x, y| {
                    let p = Point2::new(x, y);
                    hg_mode(*a, p, 1.0).unwrap() * hg_mode(*b, p, 1.0).unwrap()
                });
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-8, "{a} {b} {g}");
            }
        }
    }

    #[test]
    fn overlap_reference_cases() {
        let c = cfg(0.2, 0.5);
        let p0 = Pose::default();
        assert_eq!(overlap_f(ModeIndex::new(0, 0), &p0, &c, Source::First), 1.0);
        let pose = Pose {
            theta: PI / 2.0,
            ..Pose::default()
        };
        let f = overlap_f(ModeIndex::new(1, 0), &pose, &c, Source::First);
        assert!((f - (-0.2 * (-0.02f64).exp())).abs() < 1e-16);
    }

    fn overlap_by_quadrature(grid: &Grid, idx: ModeIndex, pose: &Pose, c: &SystemConfig, s: Source) -> f64 {
        let r = source_offset(pose, c, s);
        grid.integrate(|x, y| {
            hg_mode(idx, Point2::new(x, y), 1.0).unwrap()
                * hg_mode(ModeIndex::new(0, 0), Point2::new(x - r.x, y - r.y), 1.0).unwrap()
        })
    }

    #[test]
    fn overlap_matches_defining_integral_at_reference_pose() {
        let grid = Grid::new(8.0, 100);
        let c = cfg(0.2, 0.5);
        let pose = Pose {
            mu: 0.3,
            psi: 1.0,
            phi: 2.0,
            theta: PI / 3.0,
        };
        let idx = ModeIndex::new(1, 1);
        let q = overlap_by_quadrature(&grid, idx, &pose, &c, Source::Second);
        let f = overlap_f(idx, &pose, &c, Source::Second);
        assert!((q - f).abs() < 1e-9, "{q} vs {f}");
    }

    #[test]
    fn static_probabilities() {
        let c = cfg(0.2, 0.3);
        assert_eq!(static_mode_prob(ModeIndex::new(0, 0), &Pose::default(), &c), 1.0);
        let pose = Pose {
            theta: PI / 2.0,
            phi: 0.7,
            ..Pose::default()
        };
        let p = static_mode_prob(ModeIndex::new(0, 0), &pose, &c);
        assert!((p - (-0.04f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn direct_imaging_density() {
        let c = cfg(0.3, 0.5);
        let v = di_intensity_static(Point2::default(), &Pose::default(), &c);
        assert!((v - 2.0 / PI).abs() < 1e-15);

        // disc of radius 8 in polar Gauss-Legendre
        let (xr, wr) = gauss_legendre(120);
        let (xa, wa) = gauss_legendre(120);
        for pose in [
            Pose { mu: 1.0, psi: 0.3, phi: 1.1, theta: 0.9 },
            Pose { mu: 0.2, psi: 4.0, phi: 5.5, theta: 2.0 },
        ] {
            let mut total = 0.0;
            for i in 0..xr.len() {
                let r = 4.0 * (xr[i] + 1.0);
                for j in 0..xa.len() {
                    let a = PI * (xa[j] + 1.0);
                    let p = Point2::new(r * a.cos(), r * a.sin());
                    total += 4.0 * wr[i] * PI * wa[j] * r * di_intensity_static(p, &pose, &c);
                }
            }
            assert!((total - 1.0).abs() < 1e-8, "{total}");
        }

        // on the perpendicular bisector the brightness split does not matter
        let pose = Pose { mu: 0.0, psi: 0.0, phi: 0.0, theta: PI / 2.0 };
        let p = Point2::new(0.0, 0.37);
        let a = di_intensity_static(p, &pose, &cfg(0.3, 0.2));
        let b = di_intensity_static(p, &pose, &cfg(0.3, 0.8));
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn completeness_of_truncated_basis() {
        let c = cfg(0.2, 0.4);
        for pose in [
            Pose { mu: 0.5, psi: 0.1, phi: 2.2, theta: 1.2 },
            Pose { mu: 0.3, psi: 3.0, phi: 0.4, theta: 0.2 },
        ] {
            let s: f64 = ModeIndex::up_to(6).map(|i| static_mode_prob(i, &pose, &c)).sum();
            assert!((0.999..=1.0).contains(&s), "{s}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn closed_form_overlap_equals_direct_integral(
            n in 0u32..=2, m in 0u32..=2, x in 0.0f64..1.0, mu in 0.0f64..1.0,
            psi in 0.0f64..2.0 * PI, phi in 0.0f64..2.0 * PI, theta in 0.0f64..PI, second in any::<bool>()
        ) {
            std::thread_local!(static GRID: Grid = Grid::new(8.0, 64));
            let c = cfg(x.max(1e-6), 0.5);
            let pose = Pose { mu, psi, phi, theta };
            let s = if second { Source::Second } else { Source::First };
            let idx = ModeIndex::new(n, m);
            let q = GRID.with(|g| overlap_by_quadrature(g, idx, &pose, &c, s));
            prop_assert!((q - overlap_f(idx, &pose, &c, s)).abs() < 1e-9);
        }

        #[test]
        fn rotating_by_pi_swaps_sources(
            n in 0u32..=3, m in 0u32..=3, x in 0.0f64..2.0, mu in 0.0f64..2.0,
            psi in 0.0f64..2.0 * PI, phi in 0.0f64..2.0 * PI, theta in 0.0f64..PI
        ) {
            let c = cfg(x.max(1e-6), 0.5);
            let idx = ModeIndex::new(n, m);
            let a = Pose { mu, psi, phi, theta };
            let b = Pose { phi: phi + PI, ..a };
            let f1 = overlap_f(idx, &a, &c, Source::First).abs();
            let f2 = overlap_f(idx, &b, &c, Source::Second).abs();
            prop_assert!((f1 - f2).abs() <= 1e-14);
        }

        #[test]
        fn probabilities_with_complement_sum_to_one(
            x in 0.0f64..2.0, mu in 0.0f64..2.0, psi in 0.0f64..2.0 * PI,
            phi in 0.0f64..2.0 * PI, theta in 0.0f64..PI, nu in 0.01f64..0.99
        ) {
            let c = cfg(x.max(1e-6), nu);
            let pose = Pose { mu, psi, phi, theta };
            let detected: f64 = ModeIndex::up_to(1).map(|i| static_mode_prob(i, &pose, &c)).sum();
            prop_assert!((0.0..=1.0 + 1e-15).contains(&detected));
            let residual = 1.0 - detected;
            prop_assert_eq!(detected + residual, 1.0);
        }
    }
}
