//! `annulus-metrics`: evaluation, sweeps, geodesics, elliptic functions and
//! the self-test, with CSV or JSON output.
//!
//! Exit codes: 0 success, 1 other failure, 2 domain error (bad arguments),
//! 3 convergence error, 4 every sweep row failed, 5 self-test failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use annulus_metrics::geodesics::{self, GeodesicState, IntegrateOptions, RadialProfile};
use annulus_metrics::hardy::Truncation;
use annulus_metrics::metrics::{self, Metric};
use annulus_metrics::report::{self, fmt_complex, fmt_f64, parse_complex};
use annulus_metrics::selftest;
use annulus_metrics::variation::{self, Quantity, SweepSpec, DEFAULT_R_GRID, EXTENDED_R_GRID};
use annulus_metrics::{EllipticContext, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "annulus-metrics",
    version,
    about = "Szegő kernel, Carathéodory and Szegő metrics on annuli"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Relative tail tolerance of the series (default: $ANNULUS_METRICS_TAIL_TOL or 1e-15).
    #[arg(long, global = true)]
    tail_tol: Option<f64>,
    /// Initial number of series terms per side.
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Hard cap on series terms per side.
    #[arg(long, global = true)]
    n_cap: Option<usize>,
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MetricArg {
    /// Carathéodory metric 2πS
    C,
    /// Szegő metric
    S,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::C => Metric::Caratheodory,
            MetricArg::S => Metric::Szego,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// S, c, s, κ_c and κ_s at points of A_r.
    Eval {
        #[arg(long)]
        r: f64,
        /// Point as a+bi; repeat for several points.
        #[arg(long, required = true, allow_hyphen_values = true)]
        z: Vec<String>,
        /// Also report the second-order curvature of c.
        #[arg(long)]
        kappa2: bool,
    },
    /// Quantities at z = r^λ over a grid of r and λ, with r → 0 limits.
    Sweep {
        /// Comma-separated, strictly decreasing r values.
        #[arg(long, value_delimiter = ',')]
        r_values: Option<Vec<f64>>,
        /// Use r = 1e-2 … 1e-8 instead of 1e-2 … 1e-6.
        #[arg(long, conflicts_with = "r_values")]
        extended: bool,
        /// Comma-separated λ values in (0,1); fractions like 1/6 are accepted.
        #[arg(long, value_delimiter = ',', value_parser = parse_fraction)]
        lambda: Option<Vec<f64>>,
        /// Comma-separated: c, s, kappa_c, kappa_s, N0, N1, N2, ratio_s_over_c.
        #[arg(long, value_delimiter = ',')]
        quantities: Option<Vec<Quantity>>,
    },
    /// Closed geodesic, spiral, or a geodesic from given initial data.
    Geodesic {
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum)]
        metric: MetricArg,
        /// Find the closed geodesic and trace one period of it.
        #[arg(long, conflicts_with_all = ["spiral", "angle"])]
        closed: bool,
        /// Shoot a spiral through --z0.
        #[arg(long, requires = "z0", conflicts_with = "angle")]
        spiral: bool,
        /// Starting point as a+bi.
        #[arg(long, allow_hyphen_values = true)]
        z0: Option<String>,
        /// Launch angle from the counter-clockwise tangent (positive turns inward).
        #[arg(long, requires = "z0", allow_hyphen_values = true)]
        angle: Option<f64>,
        /// Parameter length; default 25 closed-geodesic lengths.
        #[arg(long)]
        t_end: Option<f64>,
        /// Relative step tolerance.
        #[arg(long)]
        step_tol: Option<f64>,
    },
    /// Weierstrass functions of the lattice of A_r at a point.
    Elliptic {
        #[arg(long)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Runs the acceptance checks; exit code 5 if any fails.
    Selftest {
        /// Fewer random points and one spiral.
        #[arg(long)]
        quick: bool,
        /// Run only these checks (1 to 10).
        #[arg(long, value_delimiter = ',')]
        criterion: Option<Vec<usize>>,
    },
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Pole { .. } | Error::Shape(_) => 2,
            Error::Convergence { .. } => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn parse_fraction(text: &str) -> Result<f64, String> {
    let value = match text.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.parse().map_err(|_| format!("bad numerator in {text}"))?;
            let b: f64 = b.parse().map_err(|_| format!("bad denominator in {text}"))?;
            a / b
        }
        None => text.parse().map_err(|_| format!("{text} is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{text} is not finite"))
    }
}

fn check_r(r: f64) -> Result<(), Failure> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(fail(2, format!("domain error: r = {r} must lie in (0,1)")))
    }
}

fn check_point(r: f64, z: Complex64) -> Result<(), Failure> {
    let rho = z.norm();
    if rho > r && rho < 1.0 {
        Ok(())
    } else {
        Err(fail(
            2,
            format!("domain error: |z| = {rho} must lie in (r, 1) = ({r}, 1)"),
        ))
    }
}

fn truncation(common: &Common) -> Result<Truncation, Failure> {
    let mut tr = Truncation::from_env()?;
    if let Some(t) = common.tail_tol {
        tr.tail_tol = t;
    }
    if let Some(n) = common.n_max {
        tr.n_max = n;
    }
    if let Some(n) = common.n_cap {
        tr.n_cap = n;
    }
    tr.validate()?;
    Ok(tr)
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.output {
        Some(path) => fs::write(path, text).map_err(|e| fail(1, format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                // a closed pipe (`| head`) is the reader's choice, not a failure
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(fail(1, format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn cmd_eval(common: &Common, r: f64, points: &[String], kappa2: bool) -> Result<(), Failure> {
    check_r(r)?;
    let zs: Vec<Complex64> = points.iter().map(|p| parse_complex(p)).collect::<Result<_, _>>()?;
    for &z in &zs {
        check_point(r, z)?;
    }
    let tr = truncation(common)?;
    let samples: Vec<_> = zs
        .iter()
        .map(|&z| metrics::sample(r, z, &tr))
        .collect::<Result<_, _>>()?;
    let k2: Option<Vec<f64>> = if kappa2 {
        Some(
            zs.iter()
                .map(|&z| metrics::higher_curvature(r, z, 2, Metric::Caratheodory, &tr))
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };
    let text = match common.format {
        Format::Csv => report::samples_csv(r, &samples, k2.as_deref(), &tr)?,
        Format::Json => report::samples_json(r, &samples, k2.as_deref())?,
    };
    emit(common, &text)
}

const DEFAULT_LAMBDAS: [f64; 9] = [0.1, 1.0 / 6.0, 0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75, 5.0 / 6.0, 0.9];

fn cmd_sweep(
    common: &Common,
    r_values: Option<Vec<f64>>,
    extended: bool,
    lambda: Option<Vec<f64>>,
    quantities: Option<Vec<Quantity>>,
) -> Result<(), Failure> {
    let grid = r_values.unwrap_or_else(|| {
        if extended {
            EXTENDED_R_GRID.to_vec()
        } else {
            DEFAULT_R_GRID.to_vec()
        }
    });
    let spec = SweepSpec::new(
        grid,
        lambda.unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec()),
        quantities.unwrap_or_else(|| Quantity::ALL.to_vec()),
    )?;
    let tr = truncation(common)?;
    let rows = variation::run_sweep_with_threads(&spec, &tr, common.threads)?;
    if !rows.iter().any(|row| row.succeeded()) {
        let first = rows.iter().flat_map(|row| row.errors.iter().flatten()).next();
        return Err(fail(
            4,
            format!("every sweep row failed; first error: {}", first.map_or("none", |s| s)),
        ));
    }
    // limits need at least 4 r values over 3 decades; otherwise only rows are written
    let limits = variation::classify_sweep(&spec, &rows).unwrap_or_default();
    let text = match common.format {
        Format::Csv => report::sweep_csv(&spec, &rows, &limits, &tr)?,
        Format::Json => report::sweep_json(&spec, &rows)?,
    };
    emit(common, &text)?;
    for l in &limits {
        eprintln!("limit {} at λ = {:.6}: {}", l.quantity, l.lambda, l.limit);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_geodesic(
    common: &Common,
    r: f64,
    metric: Metric,
    closed: bool,
    spiral: bool,
    z0: Option<String>,
    angle: Option<f64>,
    t_end: Option<f64>,
    step_tol: Option<f64>,
) -> Result<(), Failure> {
    check_r(r)?;
    let z0 = z0.as_deref().map(parse_complex).transpose()?;
    if let Some(z) = z0 {
        check_point(r, z)?;
    }
    if let Some(t) = t_end {
        if !(t > 0.0 && t.is_finite()) {
            return Err(fail(
                2,
                format!("domain error: --t-end {t} must be positive and finite"),
            ));
        }
    }
    if !closed && !spiral && angle.is_none() {
        return Err(fail(
            2,
            "domain error: give --closed, --spiral --z0, or --z0 with --angle",
        ));
    }
    let tr = truncation(common)?;
    let cg = geodesics::find_closed_geodesic(r, metric, &tr)?;
    let profile = RadialProfile::new(r, metric, &tr)?;
    let mut meta = vec![
        format!(
            "r={} metric={}",
            fmt_f64(r),
            if metric == Metric::Caratheodory { "c" } else { "s" }
        ),
        format!(
            "closed rho_star={} length={} residual={}",
            fmt_f64(cg.rho_star),
            fmt_f64(cg.length),
            fmt_f64(cg.residual)
        ),
    ];
    eprintln!(
        "closed geodesic: rho_star = {:.10}, length = {:.10}",
        cg.rho_star, cg.length
    );
    let trace = if closed {
        let start = GeodesicState::launch(&profile, Complex64::new(cg.rho_star, 0.0), 0.0)?;
        let opts = IntegrateOptions {
            step_tol: step_tol.unwrap_or(geodesics::CLOSED_STEP_TOL),
            band: None,
        };
        let trace = geodesics::integrate_profile(&profile, start, t_end.unwrap_or(cg.length), &opts)?;
        let end = trace.last();
        let miss = (end.z - start.position).norm() + (end.v - start.velocity).norm();
        meta.push(format!("period_miss={}", fmt_f64(miss)));
        eprintln!("after one period: |Δz| + |Δv| = {miss:.3e}");
        trace
    } else if spiral {
        let z = z0.expect("clap requires --z0 with --spiral");
        let rep = geodesics::spiral_trace(r, metric, z, t_end.unwrap_or(25.0 * cg.length), &tr)?;
        meta.push(format!(
            "spiral z0={} shooting_angle={} launch_angle={} stayed_in_band={} closure_distance={} closed={}",
            fmt_complex(z),
            fmt_f64(rep.shooting_angle),
            fmt_f64(rep.launch_angle),
            rep.stayed_in_band,
            fmt_f64(rep.closure_distance),
            rep.closed
        ));
        eprintln!(
            "spiral: {} windings, |z| in [{:.6}, {:.6}], closure distance {:.3e}",
            rep.trace.winding, rep.trace.min_abs, rep.trace.max_abs, rep.closure_distance
        );
        rep.trace
    } else {
        let z = z0.expect("clap requires --z0 with --angle");
        let a = angle.unwrap_or(0.0);
        let start = GeodesicState::launch(&profile, z, a)?;
        let opts = IntegrateOptions {
            step_tol: step_tol.unwrap_or(geodesics::DEFAULT_STEP_TOL),
            band: None,
        };
        meta.push(format!("launch z0={} angle={}", fmt_complex(z), fmt_f64(a)));
        let trace = geodesics::integrate_profile(&profile, start, t_end.unwrap_or(25.0 * cg.length), &opts)?;
        if let Some(e) = trace.escape {
            eprintln!("escaped through the {:?} circle at t = {:.6}", e.boundary, e.t);
        }
        trace
    };
    let text = match common.format {
        Format::Csv => report::trace_csv(&trace, &meta)?,
        Format::Json => report::trace_json(&trace)?,
    };
    emit(common, &text)
}

fn cmd_elliptic(common: &Common, r: f64, z: &str) -> Result<(), Failure> {
    check_r(r)?;
    let z = parse_complex(z)?;
    let ctx = EllipticContext::new(r, metrics::ELLIPTIC_TOL)?;
    let w = ctx.wp(z)?;
    let dw = ctx.wp_prime(z)?;
    let residual = (dw * dw - 4.0 * w * w * w + ctx.g2 * w + ctx.g3).norm() / (1.0 + w.norm().powi(3));
    let real = |x: f64| Complex64::new(x, 0.0);
    let rows: Vec<(&str, Complex64)> = vec![
        ("wp", w),
        ("wp_prime", dw),
        ("zeta", ctx.zeta(z)?),
        ("sigma", ctx.sigma(z)),
        ("e1", real(ctx.e1)),
        ("e2", real(ctx.e2)),
        ("e3", real(ctx.e3)),
        ("eta1", real(ctx.eta1)),
        ("eta3", Complex64::new(0.0, ctx.eta3_im)),
        ("g2", real(ctx.g2)),
        ("g3", real(ctx.g3)),
        ("c", real(ctx.c)),
        ("ode_residual", real(residual)),
    ];
    let text = match common.format {
        Format::Csv => {
            let mut s = format!(
                "{}\n# command=elliptic\n# r={} z={}\nquantity,value\n",
                report::schema_line(),
                fmt_f64(r),
                fmt_complex(z)
            );
            for (name, v) in &rows {
                s.push_str(&format!("{name},{}\n", fmt_complex(*v)));
            }
            s
        }
        Format::Json => {
            let arr: Vec<_> = rows
                .iter()
                .map(|(name, v)| json!({"quantity": name, "re": v.re, "im": v.im}))
                .collect();
            serde_json::to_string_pretty(&arr).map_err(|e| fail(1, e.to_string()))? + "\n"
        }
    };
    emit(common, &text)
}

fn cmd_selftest(common: &Common, quick: bool, only: Option<Vec<usize>>) -> Result<(), Failure> {
    let opts = selftest::Options {
        quick,
        tr: truncation(common)?,
    };
    let results = match only {
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|&&i| !(1..selftest::CRITERIA).contains(&i)) {
                return Err(fail(2, format!("domain error: no selectable check numbered {bad}")));
            }
            ids.iter().map(|&id| selftest::run_criterion(id, &opts)).collect()
        }
        None => selftest::run(&opts),
    };
    let text = match common.format {
        Format::Csv => results.iter().map(|r| r.line() + "\n").collect::<String>(),
        Format::Json => serde_json::to_string_pretty(&results).map_err(|e| fail(1, e.to_string()))? + "\n",
    };
    emit(common, &text)?;
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fail(5, format!("failed checks: {}", failed.join(", "))))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    match cli.command {
        Command::Eval { r, z, kappa2 } => cmd_eval(common, r, &z, kappa2),
        Command::Sweep {
            r_values,
            extended,
            lambda,
            quantities,
        } => cmd_sweep(common, r_values, extended, lambda, quantities),
        Command::Geodesic {
            r,
            metric,
            closed,
            spiral,
            z0,
            angle,
            t_end,
            step_tol,
        } => cmd_geodesic(common, r, metric.into(), closed, spiral, z0, angle, t_end, step_tol),
        Command::Elliptic { r, z } => cmd_elliptic(common, r, &z),
        Command::Selftest { quick, criterion } => cmd_selftest(common, quick, criterion),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
