//! Headless acceptance checks, numbered 1 to 11, shared by the `selftest`
//! command and the acceptance test target.
//!
//! Each check records its measured values so that a failure can be read off
//! the report. The quick mode samples fewer random points and traces only
//! the Szegő spiral; the thresholds are the same.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elliptic::EllipticContext;
use crate::error::Result;
use crate::geodesics::{self, GeodesicState, IntegrateOptions, RadialProfile, SPIRAL_BAND_MARGIN};
use crate::hardy::Truncation;
use crate::metrics::{self, Boundary, Metric, ProbeTarget};
use crate::summation::CompensatedComplexSum;
use crate::variation::{self, Limit, Quantity, SweepSpec, DEFAULT_R_GRID, EXTENDED_R_GRID};

pub const FULL_BUDGET: Duration = Duration::from_secs(600);
pub const QUICK_BUDGET: Duration = Duration::from_secs(60);
pub const CRITERIA: usize = 11;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub quick: bool,
    pub tr: Truncation,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    /// Failed expectations, or the error that stopped the check.
    pub failures: Vec<String>,
    pub measurements: Vec<(String, f64)>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn measurement(&self, name: &str) -> Option<f64> {
        self.measurements.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// `PASS  3 title (1.2 s)` followed by the failures, if any.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {:>2} {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds
        );
        for f in &self.failures {
            s.push_str(&format!("\n        {f}"));
        }
        s
    }
}

#[derive(Default)]
struct Check {
    failures: Vec<String>,
    measurements: Vec<(String, f64)>,
}

impl Check {
    fn record(&mut self, name: impl Into<String>, value: f64) -> f64 {
        self.measurements.push((name.into(), value));
        value
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

pub const TITLES: [&str; CRITERIA] = [
    "Carathéodory metric 2πS(r^λ) limits",
    "Szegő metric s(r^λ) limits",
    "Carathéodory curvature limits",
    "Szegő curvature limits and positive curvature",
    "Szegő metric: series against the ℘ closed form",
    "normalised N-function ratios tend to 1",
    "Weierstrass suite residuals",
    "boundary asymptotics at both circles",
    "curvature and metric bounds at random points",
    "closed geodesics and the spiral",
    "suite runs headless within its time budget",
];

/// Runs checks 1 to 10, then check 11 on their total time.
pub fn run(opts: &Options) -> Vec<CriterionResult> {
    let start = Instant::now();
    let mut out: Vec<CriterionResult> = (1..CRITERIA).map(|id| run_criterion(id, opts)).collect();
    let elapsed = start.elapsed();
    let budget = if opts.quick { QUICK_BUDGET } else { FULL_BUDGET };
    let mut c = Check::default();
    c.record("total_seconds", elapsed.as_secs_f64());
    c.record("budget_seconds", budget.as_secs_f64());
    c.expect(elapsed <= budget, || {
        format!("took {:.1} s, budget {} s", elapsed.as_secs_f64(), budget.as_secs())
    });
    out.push(finish(CRITERIA, Ok(c), Duration::ZERO));
    out
}

pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.passed)
}

/// Runs one numbered check (1 to 10).
pub fn run_criterion(id: usize, opts: &Options) -> CriterionResult {
    let start = Instant::now();
    let tr = &opts.tr;
    let outcome = match id {
        1 => carath_limits(tr),
        2 => szego_limits(tr),
        3 => kappa_c_limits(tr),
        4 => kappa_s_limits(tr),
        5 => elliptic_cross_validation(opts),
        6 => lemma_ratios(tr),
        7 => weierstrass_suite(opts),
        8 => boundary_asymptotics(tr),
        9 => random_bounds(opts),
        10 => geodesics_check(opts),
        _ => Err(crate::Error::Domain(format!("no acceptance check numbered {id}"))),
    };
    finish(id, outcome, start.elapsed())
}

fn finish(id: usize, outcome: Result<Check>, took: Duration) -> CriterionResult {
    let title = TITLES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown");
    let (failures, measurements) = match outcome {
        Ok(c) => (c.failures, c.measurements),
        Err(e) => (vec![format!("error: {e}")], Vec::new()),
    };
    CriterionResult {
        id,
        title,
        passed: failures.is_empty(),
        failures,
        measurements,
        seconds: took.as_secs_f64(),
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn column(quantity: Quantity, lambda: f64, grid: &[f64], tr: &Truncation) -> Result<Vec<f64>> {
    let spec = SweepSpec::new(grid.to_vec(), vec![lambda], vec![quantity])?;
    variation::run_sweep(&spec, tr)?
        .iter()
        .map(|row| {
            row.values[0].ok_or_else(|| {
                crate::Error::InternalConsistency(format!(
                    "{quantity} failed at r = {}, λ = {lambda}: {}",
                    row.r,
                    row.errors[0].clone().unwrap_or_default()
                ))
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Expected {
    Finite(f64),
    PosInf,
    NegInf,
}

fn matches_expected(limit: Limit, expected: Expected) -> bool {
    match (limit, expected) {
        (Limit::Finite(v), Expected::Finite(e)) => within(v, e, 0.05),
        (Limit::PosInf, Expected::PosInf) | (Limit::NegInf, Expected::NegInf) => true,
        _ => false,
    }
}

/// Classifies on the extended grid and checks finite values at `r = 1e-6`.
fn regime_table(c: &mut Check, quantity: Quantity, table: &[(f64, &str, Expected)], tr: &Truncation) -> Result<()> {
    let at = EXTENDED_R_GRID.iter().position(|&r| r == 1e-6).unwrap_or(4);
    for &(lambda, label, expected) in table {
        let values = column(quantity, lambda, &EXTENDED_R_GRID, tr)?;
        let limit = variation::limit_classifier(&EXTENDED_R_GRID, &values)?;
        let v6 = c.record(format!("{quantity}(λ={label}, r=1e-6)"), values[at]);
        if let Limit::Finite(v) = limit {
            c.record(format!("{quantity}(λ={label}) limit"), v);
        }
        c.expect(matches_expected(limit, expected), || {
            format!("{quantity} at λ = {label}: classified {limit}, expected {expected:?}")
        });
        if let Expected::Finite(e) = expected {
            c.expect(within(v6, e, 0.05), || {
                format!("{quantity} at λ = {label}, r = 1e-6: {v6} not within 5% of {e}")
            });
        }
    }
    Ok(())
}

fn carath_limits(tr: &Truncation) -> Result<Check> {
    let mut c = Check::default();
    let quarter = c.record("c(λ=1/4, r=1e-4)", column(Quantity::C, 0.25, &[1e-4], tr)?[0]);
    c.expect(within(quarter, 1.0, 0.02), || {
        format!("c at λ = 1/4, r = 1e-4 is {quarter:.10}, not within 2% of 1 (c = 1 + 2√r + O(r))")
    });
    let half = c.record("c(λ=1/2, r=1e-4)", column(Quantity::C, 0.5, &[1e-4], tr)?[0]);
    c.expect(within(half, 2.0, 0.02), || format!("c at λ = 1/2, r = 1e-4 is {half}"));
    let late = column(Quantity::C, 0.75, &[1e-3, 1e-4, 1e-5], tr)?;
    for (v, r) in late.iter().zip(["1e-3", "1e-4", "1e-5"]) {
        c.record(format!("c(λ=3/4, r={r})"), *v);
    }
    c.expect(late[1] > 1e2, || format!("c at λ = 3/4, r = 1e-4 is {} ≤ 100", late[1]));
    c.expect(late.windows(2).all(|w| w[1] >= 2.0 * w[0]), || {
        format!("c at λ = 3/4 grows slower than 2x per decade: {late:?}")
    });
    Ok(c)
}

fn szego_limits(tr: &Truncation) -> Result<Check> {
    let mut c = Check::default();
    let table = [
        (0.15, "0.15", Expected::Finite(1.0)),
        (0.25, "0.25", Expected::Finite(2f64.sqrt())),
        (0.5, "0.5", Expected::PosInf),
    ];
    regime_table(&mut c, Quantity::S, &table, tr)?;
    Ok(c)
}

fn kappa_c_limits(tr: &Truncation) -> Result<Check> {
    let mut c = Check::default();
    let table = [
        (0.15, "0.15", Expected::Finite(-4.0)),
        (0.25, "0.25", Expected::Finite(-8.0)),
        (0.5, "0.5", Expected::NegInf),
        (0.75, "0.75", Expected::Finite(-8.0)),
        (0.85, "0.85", Expected::Finite(-4.0)),
    ];
    regime_table(&mut c, Quantity::KappaC, &table, tr)?;
    Ok(c)
}

fn kappa_s_limits(tr: &Truncation) -> Result<Check> {
    let mut c = Check::default();
    let table = [
        (0.10, "0.10", Expected::Finite(-4.0)),
        (1.0 / 6.0, "1/6", Expected::Finite(-12.0)),
        (0.25, "0.25", Expected::NegInf),
        (1.0 / 3.0, "1/3", Expected::Finite(-4.0)),
        (0.5, "0.5", Expected::Finite(4.0)),
        (2.0 / 3.0, "2/3", Expected::Finite(-4.0)),
        (0.75, "0.75", Expected::NegInf),
        (5.0 / 6.0, "5/6", Expected::Finite(-12.0)),
        (0.90, "0.90", Expected::Finite(-4.0)),
    ];
    regime_table(&mut c, Quantity::KappaS, &table, tr)?;
    let positive = c.record(
        "kappa_s(λ=4/9, r=1e-6)",
        column(Quantity::KappaS, 4.0 / 9.0, &[1e-6], tr)?[0],
    );
    c.expect(positive > 3.5, || {
        format!("κ_s at λ = 4/9, r = 1e-6 is {positive} ≤ 3.5")
    });
    Ok(c)
}

fn elliptic_cross_validation(opts: &Options) -> Result<Check> {
    let mut c = Check::default();
    let per_radius = if opts.quick { 20 } else { 100 };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for r in [0.2, 0.5, 0.8] {
        let ctx = EllipticContext::new(r, metrics::ELLIPTIC_TOL)?;
        for _ in 0..per_radius {
            let rho = r + (1.0 - r) * rng.gen_range(0.01..0.99);
            let z = Complex64::from_polar(rho, rng.gen_range(0.0..2.0 * PI));
            let series = metrics::sample(r, z, &opts.tr)?.s;
            let closed = metrics::szego_metric_wp_ctx(&ctx, z)?;
            let err = (series - closed).abs() / series;
            worst = worst.max(err);
            c.expect(err <= 1e-8, || format!("r = {r}, z = {z}: relative difference {err:e}"));
        }
    }
    c.record("points", (3 * per_radius) as f64);
    c.record("max_relative_difference", worst);
    Ok(c)
}

fn lemma_ratios(tr: &Truncation) -> Result<Check> {
    let mut c = Check::default();
    for lambda in [0.3, 0.4] {
        for j in 0..3 {
            let gaps: Vec<f64> = DEFAULT_R_GRID
                .iter()
                .map(|&r| variation::lemma_ratio(r, lambda, j, tr).map(|v| (v - 1.0).abs()))
                .collect::<Result<_>>()?;
            let last = c.record(format!("|N{j} ratio - 1| (λ={lambda}, r=1e-6)"), gaps[gaps.len() - 1]);
            c.expect(gaps.windows(2).all(|w| w[1] <= w[0]), || {
                format!("N{j} ratio at λ = {lambda} does not approach 1 monotonically: {gaps:?}")
            });
            c.expect(last < 0.01, || {
                format!("N{j} ratio at λ = {lambda} ends {last} away from 1")
            });
        }
    }
    Ok(c)
}

/// `℘(z)` by direct summation over the lattice `2mω₁ + 2πin`, box size
/// `m_max` with one Richardson step (the symmetric box tail is `O(M⁻²)`).
pub fn direct_lattice_wp(omega1: f64, z: Complex64, m_max: i64) -> Complex64 {
    let partial = |m_max: i64| {
        let mut acc = CompensatedComplexSum::new();
        acc.add(1.0 / (z * z));
        for m in -m_max..=m_max {
            for n in -m_max..=m_max {
                if m == 0 && n == 0 {
                    continue;
                }
                let lattice = Complex64::new(2.0 * m as f64 * omega1, 2.0 * PI * n as f64);
                acc.add(1.0 / ((z - lattice) * (z - lattice)) - 1.0 / (lattice * lattice));
            }
        }
        acc.value()
    };
    let fine = partial(m_max);
    let coarse = partial(m_max / 2);
    fine + (fine - coarse) / 3.0
}

fn weierstrass_suite(opts: &Options) -> Result<Check> {
    let mut c = Check::default();
    let per_radius = if opts.quick { 20 } else { 100 };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut ode, mut quasi, mut lattice): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for r in [0.2, 0.5, 0.8] {
        let ctx = EllipticContext::new(r, 1e-12)?;
        let w1 = ctx.omega1;
        for _ in 0..per_radius {
            let z = Complex64::new(rng.gen_range(-2.0 * w1..2.0 * w1), rng.gen_range(-2.0 * PI..2.0 * PI));
            let w = ctx.wp(z)?;
            let dw = ctx.wp_prime(z)?;
            let res = (dw * dw - 4.0 * w * w * w + ctx.g2 * w + ctx.g3).norm() / (1.0 + w.norm().powi(3));
            ode = ode.max(res);
            c.expect(res <= 1e-9, || format!("r = {r}, z = {z}: ℘ ODE residual {res:e}"));
        }
        let eta3 = ctx.eta(3)?;
        let om3 = Complex64::new(0.0, PI);
        for _ in 0..5 {
            let z = Complex64::new(rng.gen_range(-w1..w1), rng.gen_range(-PI..PI));
            let zz = ctx.zeta(z)?;
            let j1 = (ctx.zeta(z + 2.0 * w1)? - zz - 2.0 * ctx.eta1).norm();
            let j3 = (ctx.zeta(z + 2.0 * om3)? - zz - 2.0 * eta3).norm();
            let s = ctx.sigma(z);
            let s1 = ctx.sigma(z + 2.0 * w1);
            let s3 = ctx.sigma(z + 2.0 * om3);
            let k1 = (s1 + (2.0 * ctx.eta1 * (z + w1)).exp() * s).norm() / (1.0 + s1.norm());
            let k3 = (s3 + (2.0 * eta3 * (z + om3)).exp() * s).norm() / (1.0 + s3.norm());
            let worst = j1.max(j3).max(k1).max(k3);
            quasi = quasi.max(worst);
            c.expect(worst <= 1e-10, || {
                format!("r = {r}, z = {z}: quasi-periodicity residual {worst:e}")
            });
        }
        let sum = ctx.e1 + ctx.e2 + ctx.e3;
        let (g12, g23) = ctx.ln_root_gaps();
        c.expect(
            ctx.e1 >= ctx.e2 && ctx.e2 >= ctx.e3 && g12.is_finite() && g23.is_finite(),
            || format!("r = {r}: roots out of order ({}, {}, {})", ctx.e1, ctx.e2, ctx.e3),
        );
        c.expect(sum.abs() <= 1e-12 * ctx.e1.abs().max(1.0), || {
            format!("r = {r}: e1 + e2 + e3 = {sum:e}")
        });
        for z in [Complex64::new(0.3 * w1, 0.2), Complex64::new(-0.7 * w1, 1.9)] {
            let direct = direct_lattice_wp(w1, z, 200);
            let err = (ctx.wp(z)? - direct).norm() / (1.0 + direct.norm());
            lattice = lattice.max(err);
            c.expect(err <= 1e-8, || {
                format!("r = {r}, z = {z}: lattice sum differs by {err:e}")
            });
        }
    }
    c.record("max_ode_residual", ode);
    c.record("max_quasi_periodicity_residual", quasi);
    c.record("max_lattice_difference", lattice);
    Ok(c)
}

fn boundary_asymptotics(tr: &Truncation) -> Result<Check> {
    let mut c = Check::default();
    let r = 0.5;
    let outer: Vec<f64> = (3..=12).map(|k| 1.0 - 2f64.powi(-k)).collect();
    let inner: Vec<f64> = outer.iter().map(|rho| r / rho).collect();
    for (boundary, radii) in [(Boundary::Outer, &outer), (Boundary::Inner, &inner)] {
        let side = if boundary == Boundary::Outer { "outer" } else { "inner" };
        let probe = metrics::boundary_asymptotics_probe(r, 0, 0, radii, ProbeTarget::Kernel, boundary, tr)?;
        // the inner defining function r² - |z|² carries an extra factor r
        let scaled = c.record(
            format!("{side}: S·(-ψ)·2π/|∂ψ|"),
            probe.values[probe.values.len() - 1] / probe.limit,
        );
        c.expect(within(scaled, 1.0, 0.01), || {
            format!("{side}: S(1-ρ²) ratio to its limit is {scaled}")
        });
        let z = Complex64::new(radii[radii.len() - 1], 0.0);
        let smp = metrics::sample(r, z, tr)?;
        let kc = c.record(format!("{side}: kappa_c"), smp.kappa_c);
        let ks = c.record(format!("{side}: kappa_s"), smp.kappa_s);
        c.expect(within(kc, -4.0, 0.02), || format!("{side}: κ_c = {kc}"));
        c.expect(within(ks, -4.0, 0.02), || format!("{side}: κ_s = {ks}"));
        let k2 = c.record(
            format!("{side}: kappa2_c"),
            metrics::higher_curvature(r, z, 2, Metric::Caratheodory, tr)?,
        );
        c.expect(within(k2, -16.0, 0.05), || format!("{side}: κ⁽²⁾ of c = {k2}"));
    }
    Ok(c)
}

fn random_bounds(opts: &Options) -> Result<Check> {
    let mut c = Check::default();
    let n = if opts.quick { 200 } else { 1000 };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let slack = 1e-12;
    let mut violations = 0usize;
    for _ in 0..n {
        let r: f64 = 10f64.powf(rng.gen_range(-5.0..-0.1));
        let lambda: f64 = rng.gen_range(0.01..0.99);
        let z = Complex64::from_polar(r.powf(lambda), rng.gen_range(0.0..2.0 * PI));
        let smp = metrics::sample(r, z, &opts.tr)?;
        let ok =
            smp.kappa_c <= -4.0 * (1.0 - slack) && smp.kappa_s <= 4.0 * (1.0 + slack) && smp.s >= smp.c * (1.0 - slack);
        if !ok {
            violations += 1;
            c.failures.push(format!(
                "r = {r}, z = {z}: κ_c = {}, κ_s = {}, s = {}, c = {}",
                smp.kappa_c, smp.kappa_s, smp.s, smp.c
            ));
        }
    }
    c.record("points", n as f64);
    c.record("violations", violations as f64);
    Ok(c)
}

fn geodesics_check(opts: &Options) -> Result<Check> {
    let mut c = Check::default();
    let tr = &opts.tr;
    let metrics_all = [Metric::Caratheodory, Metric::Szego];
    let mut drift: f64 = 0.0;
    for r in [0.05, 0.1, 0.3] {
        for metric in metrics_all {
            let name = if metric == Metric::Caratheodory { "c" } else { "s" };
            let cg = geodesics::find_closed_geodesic(r, metric, tr)?;
            let off = (cg.rho_star - r.sqrt()).abs();
            c.expect(off <= 1e-6, || format!("{name}, r = {r}: ρ* - √r = {off:e}"));
            c.expect(cg.residual.abs() <= 1e-6, || {
                format!("{name}, r = {r}: closure residual {:e}", cg.residual)
            });
            let profile = RadialProfile::new(r, metric, tr)?;
            let start = GeodesicState::launch(&profile, Complex64::new(cg.rho_star, 0.0), 0.0)?;
            let tight = IntegrateOptions {
                step_tol: geodesics::CLOSED_STEP_TOL,
                band: None,
            };
            let trace = geodesics::integrate_profile(&profile, start, cg.length, &tight)?;
            let end = trace.last();
            let miss = (end.z - start.position).norm() + (end.v - start.velocity).norm();
            c.record(format!("{name}, r={r}: period miss"), miss);
            c.expect(miss <= 1e-6, || {
                format!("{name}, r = {r}: circle misses its start by {miss:e}")
            });
            drift = drift.max(trace.speed_drift).max(trace.angular_drift);
        }
    }
    let r = 0.1;
    for metric in metrics_all {
        let name = if metric == Metric::Caratheodory { "c" } else { "s" };
        let profile = RadialProfile::new(r, metric, tr)?;
        let start = GeodesicState::launch(&profile, Complex64::new(0.45, 0.0), 0.3)?;
        let banded = IntegrateOptions {
            band: Some((r + SPIRAL_BAND_MARGIN, 1.0 - SPIRAL_BAND_MARGIN)),
            ..IntegrateOptions::default()
        };
        let trace = geodesics::integrate_profile(&profile, start, 60.0, &banded)?;
        drift = drift.max(trace.speed_drift).max(trace.angular_drift);
        if opts.quick && metric == Metric::Caratheodory {
            continue;
        }
        let cg = geodesics::find_closed_geodesic(r, metric, tr)?;
        let rep = geodesics::spiral_trace(r, metric, Complex64::new(0.5, 0.0), 25.0 * cg.length, tr)?;
        let w = rep.trace.winding;
        c.record(format!("{name} spiral: windings"), w as f64);
        c.record(format!("{name} spiral: closure distance"), rep.closure_distance);
        c.record(format!("{name} spiral: min |z|"), rep.trace.min_abs);
        c.record(format!("{name} spiral: max |z|"), rep.trace.max_abs);
        c.expect(w >= 20, || format!("{name} spiral: only {w} windings"));
        c.expect(rep.stayed_in_band, || {
            format!("{name} spiral left the band {:?}", rep.band)
        });
        c.expect(rep.closure_distance > 1e-3, || {
            format!("{name} spiral closes: distance {:e}", rep.closure_distance)
        });
        drift = drift.max(rep.trace.speed_drift).max(rep.trace.angular_drift);
    }
    c.record("max_relative_drift", drift);
    c.expect(drift <= 1e-7, || format!("conserved quantities drift by {drift:e}"));
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Options {
        Options {
            quick: true,
            tr: Truncation::default(),
        }
    }

    #[test]
    fn lattice_oracle_matches_wp() {
        let ctx = EllipticContext::new(0.5, 1e-12).unwrap();
        let z = Complex64::new(0.3, 0.2);
        assert!((ctx.wp(z).unwrap() - direct_lattice_wp(ctx.omega1, z, 200)).norm() < 1e-8);
    }

    #[test]
    fn unknown_criterion_fails_cleanly() {
        let res = run_criterion(12, &quick());
        assert!(!res.passed && res.title == "unknown");
        assert!(res.failures[0].contains("no acceptance check"));
    }

    #[test]
    fn report_line_lists_failures() {
        let res = finish(
            3,
            Ok(Check {
                failures: vec!["bad".into()],
                measurements: vec![],
            }),
            Duration::ZERO,
        );
        assert_eq!(res.line(), format!("FAIL  3 {} (0.0 s)\n        bad", TITLES[2]));
        assert_eq!(
            finish(6, Ok(Check::default()), Duration::ZERO).line(),
            format!("PASS  6 {} (0.0 s)", TITLES[5])
        );
    }

    #[test]
    fn expected_limit_matching() {
        assert!(matches_expected(Limit::Finite(-11.5), Expected::Finite(-12.0)));
        assert!(!matches_expected(Limit::Finite(-11.0), Expected::Finite(-12.0)));
        assert!(!matches_expected(Limit::Undetermined, Expected::NegInf));
        assert!(matches_expected(Limit::PosInf, Expected::PosInf));
    }
}
