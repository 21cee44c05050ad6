//! `spade` command line.
//!
//! Exit codes: 0 success, 1 numerical failure or failed validation, 2 usage
//! error. Parameters are given either dimensionless (`--x`, `--tau`) or
//! physical (`--d`, `--w`, `--diffusion`, `--cycle-time`), never mixed.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spade_core::ensemble::{
    aligned_prob_with_ta, averaged_prob_closed_form, averaged_prob_quadrature_nu, mode_probabilities,
    normalisation_audit, published_closed_form, AUDIT_GRID, MAX_CUTOFF,
};
use spade_core::fisher::{
    fi_asymptotic_direct, fi_asymptotic_spade, fi_direct_imaging, fi_spade, fi_spade_with, min_resolvable_distance,
    spade_di_crossover, BucketPolicy, Derivative, Regime, ScalingSpec, SpadeOptions, TauSpec,
};
use spade_core::monte_carlo::{mle_separation, PathModel, SimulationSpec};
use spade_core::{ModeIndex, SystemConfig};

use crate::parallel;
use crate::record;
use crate::table::{fmt_f64, write_gnuplot, write_rows, write_table, Row};

#[derive(Parser, Debug)]
#[command(name = "spade", version, about = "Separation estimation with mode sorting under centroid diffusion")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Averaged detection probabilities.
    Prob(ProbArgs),
    /// Fisher information per photon (w² F).
    Fi(FiArgs),
    /// Minimal resolvable separation for N photons.
    Dmin(DminArgs),
    /// Simulate an experiment and write its record as JSON.
    Simulate(SimArgs),
    /// Check closed forms and invariants against the quadrature reference.
    Validate,
}

#[derive(Args, Debug, Clone)]
struct Point {
    /// Half-separation in PSF widths, d / 2w.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["d", "w", "diffusion", "cycle_time"])]
    x: Option<f64>,
    /// D T / w².
    #[arg(long, conflicts_with_all = ["d", "w", "diffusion", "cycle_time"])]
    tau: Option<f64>,
    /// Separation (physical units).
    #[arg(long, requires_all = ["w", "diffusion", "cycle_time"])]
    d: Option<f64>,
    /// PSF width.
    #[arg(long)]
    w: Option<f64>,
    /// Diffusion coefficient.
    #[arg(long)]
    diffusion: Option<f64>,
    /// Cycle time.
    #[arg(long)]
    cycle_time: Option<f64>,
}

impl Point {
    fn resolve(&self) -> Result<(f64, f64), Failure> {
        match (self.x, self.tau, self.d) {
            (Some(x), Some(tau), None) => Ok((x, tau)),
            (None, None, Some(d)) => {
                let w = self.w.unwrap_or(1.0);
                let dd = self.diffusion.unwrap_or(0.0);
                let t = self.cycle_time.unwrap_or(1.0);
                if w <= 0.0 || w.is_nan() {
                    return Err(Failure::Usage("--w must be positive".into()));
                }
                Ok((d / (2.0 * w), dd * t / (w * w)))
            }
            _ => Err(Failure::Usage(
                "give either --x and --tau, or --d, --w, --diffusion and --cycle-time".into(),
            )),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ProbMethod {
    /// Closed forms where valid, semi-analytic quadrature otherwise.
    Auto,
    /// Audited closed forms (modes up to 1).
    Closed,
    /// Closed forms as published, before the audit.
    Published,
    /// Nested-quadrature reference.
    Quadrature,
}

#[derive(Args, Debug)]
struct ProbArgs {
    #[command(flatten)]
    point: Point,
    /// Single mode, as "nm" or "n,m".
    #[arg(long)]
    mode: Option<String>,
    /// All modes with n, m up to this order.
    #[arg(long, default_value_t = 1)]
    cutoff: u32,
    /// Brightness of the first source.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// T / t_a.
    #[arg(long)]
    k_alignment: Option<f64>,
    #[arg(long, value_enum, default_value_t = ProbMethod::Auto)]
    method: ProbMethod,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FiMethod {
    Spade,
    Direct,
    Asymptotic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Short,
    Long,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DerivArg {
    Analytic,
    Fd,
}

#[derive(Args, Debug)]
struct FiArgs {
    #[command(flatten)]
    point: Point,
    #[arg(long, value_enum, default_value_t = FiMethod::Spade)]
    method: FiMethod,
    #[arg(long, default_value_t = 1)]
    cutoff: u32,
    #[arg(long)]
    k_alignment: Option<f64>,
    /// Count the unsorted remainder as an extra channel.
    #[arg(long)]
    bucket: bool,
    #[arg(long, value_enum, default_value_t = DerivArg::Analytic)]
    derivative: DerivArg,
    /// Expansion to use with --method asymptotic. When omitted it is picked
    /// from x / sqrt(tau) (short above 3, long below 0.3).
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Sweep x over a log grid and compare mode sorting with direct imaging.
    #[arg(long, conflicts_with = "crossover")]
    sweep: bool,
    #[arg(long, default_value_t = 0.01)]
    x_min: f64,
    #[arg(long, default_value_t = 0.5)]
    x_max: f64,
    #[arg(long, default_value_t = 25)]
    points: usize,
    /// Tie tau to x: "q=<q>,kappa=<kappa>" gives sqrt(tau) = kappa x^q.
    #[arg(long, value_parser = parse_scaling)]
    scaling: Option<ScalingSpec>,
    /// Report the sqrt(tau) where the long-cycle coefficients of both methods meet.
    #[arg(long)]
    crossover: bool,
    /// Whitespace-separated columns instead of CSV (with --sweep).
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args, Debug)]
struct DminArgs {
    /// Number of detected photons.
    #[arg(long = "N", value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, conflicts_with = "scaling")]
    tau: Option<f64>,
    #[arg(long, value_parser = parse_scaling)]
    scaling: Option<ScalingSpec>,
    #[arg(long, default_value_t = 1)]
    cutoff: u32,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    point: Point,
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    #[arg(long)]
    k_alignment: Option<f64>,
    #[arg(long, default_value_t = 100)]
    cycles: u64,
    /// Mean photon number per cycle.
    #[arg(long, default_value_t = 1000.0)]
    photons: f64,
    #[arg(long, default_value_t = 1)]
    cutoff: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One Brownian path and orientation per cycle.
    #[arg(long)]
    correlated: bool,
    /// Record file; the JSON goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a maximum-likelihood estimate to the summary.
    #[arg(long)]
    mle: bool,
}

fn parse_scaling(s: &str) -> Result<ScalingSpec, String> {
    let (mut q, mut kappa) = (None, None);
    for part in s.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got {part:?}"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("bad number {v:?}"))?;
        match k.trim() {
            "q" => q = Some(v),
            "kappa" => kappa = Some(v),
            other => return Err(format!("unknown scaling key {other:?}")),
        }
    }
    let (q, kappa) = (q.ok_or("missing q")?, kappa.ok_or("missing kappa")?);
    ScalingSpec::new(q, kappa).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<ModeIndex, Failure> {
    let bad = || Failure::Usage(format!("mode {s:?} should look like 10 or 1,0"));
    let (n, m) = match s.split_once(',') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None if s.len() == 2 && s.bytes().all(|b| b.is_ascii_digit()) => {
            let b = s.as_bytes();
            ((b[0] - b'0') as u32, (b[1] - b'0') as u32)
        }
        None => return Err(bad()),
    };
    ModeIndex::checked(n, m).map_err(|e| Failure::Usage(e.to_string()))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<spade_core::Error> for Failure {
    fn from(e: spade_core::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

fn ta_fraction(k: Option<f64>) -> Result<f64, Failure> {
    match k {
        None => Ok(0.0),
        Some(k) if k > 1.0 => Ok(1.0 / k),
        Some(k) => Err(Failure::Usage(format!("--k-alignment must exceed 1, got {k}"))),
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    parallel::configure_threads();
    let result = match cli.cmd {
        Command::Prob(a) => cmd_prob(&a, out),
        Command::Fi(a) => cmd_fi(&a, out),
        Command::Dmin(a) => cmd_dmin(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Validate => cmd_validate(out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Numeric(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

fn cmd_prob(a: &ProbArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (x, tau) = a.point.resolve()?;
    if !(a.nu > 0.0 && a.nu < 1.0) {
        return Err(Failure::Usage(format!("--nu must lie in (0, 1), got {}", a.nu)));
    }
    let ta = ta_fraction(a.k_alignment)?;
    let modes: Vec<ModeIndex> = match &a.mode {
        Some(s) => vec![parse_mode(s)?],
        None => ModeIndex::up_to(a.cutoff).collect(),
    };
    let top = modes.iter().map(|m| m.n.max(m.m)).max().unwrap_or(0);
    if top > MAX_CUTOFF {
        return Err(Failure::Usage(format!("modes above order {MAX_CUTOFF} are not averaged")));
    }
    let mut rows = Vec::new();
    match a.method {
        ProbMethod::Auto => {
            let set = mode_probabilities(x, tau, top.max(1), ta)?;
            for m in &modes {
                let e = set.get(*m).expect("within cutoff");
                rows.push(row(x, tau, m.to_string(), e.p, set.method.as_str(), set.error_estimate));
            }
        }
        ProbMethod::Closed | ProbMethod::Published => {
            if top > 1 {
                return Err(Failure::Usage("closed forms exist for modes up to 11 only".into()));
            }
            for m in &modes {
                let (v, e, label) = match (a.method, a.k_alignment) {
                    (ProbMethod::Published, None) => (published_closed_form(*m, x, tau)?, 0.0, "published"),
                    (ProbMethod::Published, Some(_)) => {
                        return Err(Failure::Usage("--k-alignment is not supported with published forms".into()))
                    }
                    (_, Some(k)) => (aligned_prob_with_ta(*m, x, tau, k)?, f64::NAN, "closed_form"),
                    (_, None) => {
                        let p = averaged_prob_closed_form(*m, x, tau)?;
                        (p.value, p.error_estimate, p.method.as_str())
                    }
                };
                rows.push(row(x, tau, m.to_string(), v, label, e));
            }
        }
        ProbMethod::Quadrature => {
            for m in &modes {
                let p = averaged_prob_quadrature_nu(*m, x, tau, ta, a.nu)?;
                rows.push(row(x, tau, m.to_string(), p.value, p.method.as_str(), p.error_estimate));
            }
        }
    }
    write_rows(out, &rows)?;
    Ok(0)
}

fn row(x: f64, tau: f64, mode: String, value: f64, method: &str, err: f64) -> Row {
    Row {
        x,
        tau,
        mode,
        value,
        method: method.to_string(),
        err,
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, Failure> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Failure::Usage("sweep needs 0 < x-min < x-max and at least 2 points".into()));
    }
    let r = (hi / lo).powf(1.0 / (n - 1) as f64);
    Ok((0..n).map(|i| if i == n - 1 { hi } else { lo * r.powi(i as i32) }).collect())
}

fn cmd_fi(a: &FiArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if a.crossover {
        let (s, res) = spade_di_crossover();
        write_table(out, &["sqrt_tau", "tau", "residual"], &[vec![fmt_f64(s), fmt_f64(s * s), fmt_f64(res)]])?;
        return Ok(0);
    }
    let opts = SpadeOptions {
        cutoff: a.cutoff,
        k_alignment: a.k_alignment,
        bucket: if a.bucket { BucketPolicy::Included } else { BucketPolicy::Excluded },
        derivative: match a.derivative {
            DerivArg::Analytic => Derivative::Analytic,
            DerivArg::Fd => Derivative::FiniteDifference,
        },
    };
    ta_fraction(a.k_alignment)?;
    let spade_label = format!("M{}", a.cutoff);
    if a.sweep {
        let xs = log_grid(a.x_min, a.x_max, a.points)?;
        let tau_of = |x: f64| -> Result<f64, Failure> {
            match (a.scaling, a.point.tau) {
                (Some(s), _) => Ok(s.tau(x)),
                (None, Some(t)) => Ok(t),
                (None, None) => Ok(1e-3),
            }
        };
        let taus = xs.iter().map(|&x| tau_of(x)).collect::<Result<Vec<_>, _>>()?;
        let pts: Vec<(f64, f64)> = xs.into_iter().zip(taus).collect();
        let results = parallel::map_ordered(&pts, |&(x, tau)| -> spade_core::Result<_> {
            Ok((fi_spade_with(x, tau, &opts)?, fi_direct_imaging(x, tau)?))
        });
        let mut rows = Vec::new();
        let mut plot = Vec::new();
        for (&(x, tau), r) in pts.iter().zip(results) {
            let (s, d) = r?;
            rows.push(row(x, tau, spade_label.clone(), s.fi_per_photon, s.method.as_str(), s.error_estimate));
            rows.push(row(x, tau, "DI".into(), d.fi_per_photon, "direct_imaging", d.error_estimate));
            plot.push(vec![x, tau, s.fi_per_photon, d.fi_per_photon, s.fi_per_photon / d.fi_per_photon]);
        }
        if a.gnuplot {
            write_gnuplot(out, &["x", "tau", "fi_spade", "fi_direct", "ratio"], &plot)?;
        } else {
            write_rows(out, &rows)?;
        }
        return Ok(0);
    }
    let (x, tau) = match (a.scaling, a.point.x) {
        (Some(s), Some(x)) if a.point.tau.is_none() => (x, s.tau(x)),
        (Some(_), _) => return Err(Failure::Usage("--scaling takes --x only".into())),
        _ => a.point.resolve()?,
    };
    let r = match a.method {
        FiMethod::Spade => {
            let f = fi_spade_with(x, tau, &opts)?;
            row(x, tau, spade_label, f.fi_per_photon, f.method.as_str(), f.error_estimate)
        }
        FiMethod::Direct => {
            let f = fi_direct_imaging(x, tau)?;
            row(x, tau, "DI".into(), f.fi_per_photon, "direct_imaging", f.error_estimate)
        }
        FiMethod::Asymptotic => {
            let regime = match a.regime {
                Some(RegimeArg::Short) => Regime::Short,
                Some(RegimeArg::Long) => Regime::Long,
                None if x >= 3.0 * tau.sqrt() => Regime::Short,
                None if x <= 0.3 * tau.sqrt() => Regime::Long,
                None => {
                    return Err(Failure::Usage(
                        "x / sqrt(tau) lies between 0.3 and 3 where neither expansion holds; pass --regime".into(),
                    ))
                }
            };
            let (mode, v) = match regime {
                Regime::Short => ("M1_short", fi_asymptotic_spade(x, tau, regime, a.k_alignment)),
                Regime::Long => ("M1_long", fi_asymptotic_spade(x, tau, regime, a.k_alignment)),
            };
            let mut rows = vec![row(x, tau, mode.into(), v, "asymptotic", f64::NAN)];
            rows.push(row(x, tau, "DI".into(), fi_asymptotic_direct(x, tau), "asymptotic", f64::NAN));
            write_rows(out, &rows)?;
            return Ok(0);
        }
    };
    write_rows(out, &[r])?;
    Ok(0)
}

fn cmd_dmin(a: &DminArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let spec = match (a.tau, a.scaling) {
        (Some(t), None) => TauSpec::Fixed(t),
        (None, Some(s)) => TauSpec::Scaling(s),
        _ => return Err(Failure::Usage("give --tau or --scaling".into())),
    };
    let r = min_resolvable_distance(a.n, spec, a.cutoff)?;
    let tau = spec.tau(0.5 * r.d_min);
    write_table(
        out,
        &["n_photons", "tau", "d_min_over_w", "fi", "iterations"],
        &[vec![
            a.n.to_string(),
            fmt_f64(tau),
            fmt_f64(r.d_min),
            fmt_f64(r.fi),
            r.iterations.to_string(),
        ]],
    )?;
    Ok(0)
}

fn cmd_simulate(a: &SimArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (x, tau) = a.point.resolve()?;
    let ta = ta_fraction(a.k_alignment)?;
    let config = match (a.point.d, a.point.w, a.point.diffusion, a.point.cycle_time) {
        (Some(d), Some(w), Some(dc), Some(t)) => SystemConfig::new(d, w, dc, t, a.nu, ta * t)?,
        _ => SystemConfig::dimensionless(x, tau, a.nu, ta)?,
    };
    let spec = SimulationSpec {
        path: if a.correlated { PathModel::Correlated } else { PathModel::Independent },
        ..SimulationSpec::new(a.cycles, a.photons, a.cutoff)
    };
    let rec = parallel::simulate(&config, &spec, a.seed)?;
    let Some(path) = &a.out else {
        writeln!(out, "{}", record::to_json(&rec))?;
        return Ok(0);
    };
    record::write(path, &rec).map_err(|e| Failure::Numeric(e.to_string()))?;

    // summary: empirical frequencies against the averaged model
    let n = rec.total_photons() as f64;
    let mut rows = Vec::new();
    if a.cutoff <= MAX_CUTOFF {
        let set = mode_probabilities(x, tau, a.cutoff, ta)?;
        for (m, f) in rec.frequencies() {
            let p = set.get(m).expect("within cutoff").p;
            let se = (p * (1.0 - p) / n.max(1.0)).sqrt();
            let z = if se > 0.0 { (f - p) / se } else { 0.0 };
            rows.push(vec![m.to_string(), fmt_f64(f), fmt_f64(p), fmt_f64(se), fmt_f64(z)]);
        }
    }
    write_table(&mut *out, &["mode", "empirical", "expected", "stderr", "z"], &rows)?;
    if a.mle {
        let cut = a.cutoff.min(MAX_CUTOFF);
        let m = mle_separation(&rec, tau, cut)?;
        let fi = fi_spade(x, tau, cut, a.k_alignment)?;
        let crb = config.psf_width_w / (rec.exposure() * fi.fi_per_photon).sqrt();
        write_table(
            &mut *out,
            &["d_true", "d_hat", "stderr", "crb_at_truth", "converged"],
            &[vec![
                fmt_f64(config.separation_d),
                fmt_f64(m.d_hat),
                fmt_f64(m.stderr_estimate),
                fmt_f64(crb),
                m.converged.to_string(),
            ]],
        )?;
    }
    Ok(0)
}

struct Check {
    name: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn cmd_validate(out: &mut dyn Write) -> Result<i32, Failure> {
    let mut checks = Vec::new();
    let lows = [ModeIndex::new(0, 0), ModeIndex::new(1, 0), ModeIndex::new(0, 1), ModeIndex::new(1, 1)];

    let grid: Vec<(f64, f64)> = [0.02, 0.05, 0.1, 0.2, 0.5]
        .iter()
        .flat_map(|&x| [1e-4, 1e-3, 1e-2, 1e-1, 1.0].map(move |t| (x, t)))
        .collect();
    let devs = parallel::map_ordered(&grid, |&(x, tau)| -> spade_core::Result<f64> {
        let mut worst: f64 = 0.0;
        for m in lows {
            let c = averaged_prob_closed_form(m, x, tau)?.value;
            let q = averaged_prob_quadrature_nu(m, x, tau, 0.0, 0.5)?.value;
            worst = worst.max((c / q - 1.0).abs());
        }
        Ok(worst)
    });
    let mut worst: f64 = 0.0;
    for d in devs {
        worst = worst.max(d?);
    }
    checks.push(Check {
        name: "closed_vs_quadrature_grid".into(),
        value: worst,
        tolerance: 1e-6,
        pass: worst <= 1e-6,
    });

    for tau in [0.01, 0.25, 1.0] {
        let q = averaged_prob_quadrature_nu(lows[0], 0.0, tau, 0.0, 0.5)?.value;
        let exact = (1.0f64 + 4.0 * tau).ln() / (4.0 * tau);
        let dev = (q - exact).abs();
        checks.push(Check {
            name: format!("p00_zero_separation_tau_{tau}"),
            value: dev,
            tolerance: 1e-8,
            pass: dev <= 1e-8,
        });
    }

    let mut nu_dev: f64 = 0.0;
    for &(x, tau) in &[(0.1, 0.01), (0.3, 0.5), (0.05, 1e-3)] {
        for m in lows {
            let a = averaged_prob_quadrature_nu(m, x, tau, 0.0, 0.1)?.value;
            let b = averaged_prob_quadrature_nu(m, x, tau, 0.0, 0.9)?.value;
            nu_dev = nu_dev.max((a - b).abs());
        }
    }
    checks.push(Check {
        name: "brightness_independence".into(),
        value: nu_dev,
        tolerance: 1e-9,
        pass: nu_dev <= 1e-9,
    });

    let mut excess = f64::NEG_INFINITY;
    for &(x, tau) in &grid {
        for m in 1..=MAX_CUTOFF {
            let f = fi_spade(x, tau, m, None)?;
            excess = excess.max(f.fi_per_photon - 1.0 - f.error_estimate);
        }
    }
    checks.push(Check {
        name: "quantum_bound_excess".into(),
        value: excess,
        tolerance: 0.0,
        pass: excess <= 0.0,
    });

    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                fmt_f64(c.value),
                fmt_f64(c.tolerance),
                if c.pass { "PASS" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    write_table(&mut *out, &["check", "value", "tolerance", "status"], &rows)?;
    writeln!(out)?;

    let audit = normalisation_audit(&AUDIT_GRID)?;
    let rows: Vec<Vec<String>> = audit
        .rows
        .iter()
        .map(|r| {
            vec![
                r.mode.to_string(),
                fmt_f64(r.fitted_factor),
                fmt_f64(r.factor_spread),
                fmt_f64(r.max_rel_dev_published),
                fmt_f64(r.max_rel_dev_corrected),
            ]
        })
        .collect();
    write_table(
        &mut *out,
        &["mode", "published_factor", "factor_spread", "max_rel_dev_published", "max_rel_dev_corrected"],
        &rows,
    )?;
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
}
