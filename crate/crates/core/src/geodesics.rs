//! Geodesics of the rotation-invariant metrics `c` and `s` on `A_r`.
//!
//! For a radial density `m(|z|)` the geodesic equation
//! `σ'' = -(∂ log m²/∂z)(σ')²` reduces to `σ'' = -D(|σ|) σ'²/σ` with
//! `D = d log m / d log ρ`. Both `m` and `D` come from centred moments of
//! the weights `ρ^{2n}/α_n`: for `c`, `D = 2β`; for `s = √var/ρ`,
//! `D = μ₃/μ₂ - 1`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::ControlFlow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{self, CentredMoments, GeneralAnnulus, Truncation};
use crate::metrics::{Boundary, Metric};
use crate::ode;

/// Distance to a boundary circle at which a trajectory counts as escaped.
/// Both metrics are complete, so `1 - |z|` only decays like `e^{-2t}`, and
/// the series needs about `35/(1 - |z|)` terms; a thinner collar is out of
/// reach.
pub const COLLAR: f64 = 1e-3;
/// Margin of the band a spiral must stay in.
pub const SPIRAL_BAND_MARGIN: f64 = 0.02;
/// Default relative step tolerance (per unit parameter for the first integrals).
pub const DEFAULT_STEP_TOL: f64 = 1e-10;
/// Step tolerance for following the closed geodesic for a full period. The
/// circle is unstable, so integration error grows along it; at `r = 0.3`
/// one period amplifies it by roughly `10⁵`.
pub const CLOSED_STEP_TOL: f64 = 1e-13;

/// The metric as a function of `ρ = |z|`.
///
/// Keeps the last few evaluations, since step control and sampling ask
/// for the same radii repeatedly; this makes the type `!Sync`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r: f64,
    pub metric: Metric,
    annulus: GeneralAnnulus,
    tr: Truncation,
    recent: RefCell<[(u64, f64, f64); 4]>,
}

impl RadialProfile {
    pub fn new(r: f64, metric: Metric, tr: &Truncation) -> Result<Self> {
        tr.validate()?;
        Ok(RadialProfile {
            r,
            metric,
            annulus: GeneralAnnulus::standard(r)?,
            tr: *tr,
            recent: RefCell::new([(u64::MAX, 0.0, 0.0); 4]),
        })
    }

    /// `(m(ρ), d log m / d log ρ)`.
    pub fn eval(&self, rho: f64) -> Result<(f64, f64)> {
        let key = rho.to_bits();
        if let Some(&(_, m, d)) = self.recent.borrow().iter().find(|e| e.0 == key) {
            return Ok((m, d));
        }
        hardy::lambda_of(self.r, rho)?;
        let nodes = hardy::weighted_nodes(&self.annulus, 2.0 * rho.ln(), 3, &self.tr)?;
        let cm = CentredMoments::from_nodes(&nodes)?;
        let (m, d) = match self.metric {
            Metric::Caratheodory => (2.0 * PI * cm.mass.checked_value("c")?, 2.0 * cm.mean),
            Metric::Szego => (cm.var.sqrt() / rho, cm.third / cm.var - 1.0),
        };
        let mut recent = self.recent.borrow_mut();
        recent.rotate_right(1);
        recent[0] = (key, m, d);
        Ok((m, d))
    }

    pub fn density(&self, rho: f64) -> Result<f64> {
        Ok(self.eval(rho)?.0)
    }

    /// `1 + ρ d log m/dρ`, zero exactly on circles that are geodesics.
    pub fn closure_residual(&self, rho: f64) -> Result<f64> {
        Ok(1.0 + self.eval(rho)?.1)
    }

    fn acceleration(&self, z: Complex64, v: Complex64) -> Result<Complex64> {
        let (_, d) = self.eval(z.norm())?;
        Ok(-d * v * v / z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub position: Complex64,
    pub velocity: Complex64,
}

impl GeodesicState {
    pub fn new(position: Complex64, velocity: Complex64) -> Self {
        GeodesicState { position, velocity }
    }

    /// Launch at `z` with unit metric speed, rotated by `angle` from the
    /// counter-clockwise tangent (positive angles turn inward).
    pub fn launch(profile: &RadialProfile, z: Complex64, angle: f64) -> Result<Self> {
        let m = profile.density(z.norm())?;
        let dir = Complex64::from_polar(1.0, z.arg() + 0.5 * PI + angle);
        Ok(GeodesicState::new(z, dir / m))
    }
}

/// `σ''` for the given state.
pub fn geodesic_rhs(r: f64, metric: Metric, state: &GeodesicState, tr: &Truncation) -> Result<Complex64> {
    RadialProfile::new(r, metric, tr)?.acceleration(state.position, state.velocity)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub z: Complex64,
    pub v: Complex64,
    /// Metric speed `m|σ'|`.
    pub speed: f64,
    pub winding: i64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Escape {
    pub t: f64,
    pub z: Complex64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTrace {
    pub samples: Vec<TraceSample>,
    /// Signed crossings of the ray opposite the starting point.
    pub winding: i64,
    /// `∫ m |dσ|`.
    pub length: f64,
    pub escape: Option<Escape>,
    pub min_abs: f64,
    pub max_abs: f64,
    /// Largest relative deviation of `m|σ'|` from its initial value.
    pub speed_drift: f64,
    /// Largest deviation of `m² Im(σ̄σ')`, relative to `ρ m²|σ'|` at the start.
    pub angular_drift: f64,
    pub steps: usize,
}

impl GeodesicTrace {
    pub fn last(&self) -> &TraceSample {
        self.samples.last().expect("trace has the initial sample")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub step_tol: f64,
    /// Stop (as an escape) when `|z|` leaves this interval.
    pub band: Option<(f64, f64)>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            step_tol: DEFAULT_STEP_TOL,
            band: None,
        }
    }
}

fn first_integrals(profile: &RadialProfile, y: &[f64; 5]) -> Option<(f64, f64, f64)> {
    let z = Complex64::new(y[0], y[1]);
    let v = Complex64::new(y[2], y[3]);
    let m = profile.density(z.norm()).ok()?;
    Some((m * v.norm(), m * m * (z.conj() * v).im, m))
}

/// Accumulates samples, winding and first-integral drift along a trace.
struct TraceBuilder {
    samples: Vec<TraceSample>,
    theta0: f64,
    theta: f64,
    prev: Complex64,
    min_abs: f64,
    max_abs: f64,
    e0: f64,
    l0: f64,
    l_scale: f64,
    speed_drift: f64,
    angular_drift: f64,
}

impl TraceBuilder {
    fn new(z0: Complex64, v0: Complex64, m0: f64) -> Self {
        let e0 = m0 * v0.norm();
        TraceBuilder {
            samples: vec![TraceSample {
                t: 0.0,
                z: z0,
                v: v0,
                speed: e0,
                winding: 0,
                length: 0.0,
            }],
            theta0: z0.arg(),
            theta: z0.arg(),
            prev: z0,
            min_abs: z0.norm(),
            max_abs: z0.norm(),
            e0,
            l0: m0 * m0 * (z0.conj() * v0).im,
            l_scale: z0.norm() * m0 * e0,
            speed_drift: 0.0,
            angular_drift: 0.0,
        }
    }

    fn push(&mut self, t: f64, z: Complex64, v: Complex64, m: f64, length: f64) {
        self.theta += (z / self.prev).arg();
        self.prev = z;
        let rho = z.norm();
        self.min_abs = self.min_abs.min(rho);
        self.max_abs = self.max_abs.max(rho);
        let e = m * v.norm();
        let l = m * m * (z.conj() * v).im;
        self.speed_drift = self.speed_drift.max((e - self.e0).abs() / self.e0);
        self.angular_drift = self.angular_drift.max((l - self.l0).abs() / self.l_scale);
        self.samples.push(TraceSample {
            t,
            z,
            v,
            speed: e,
            winding: ((self.theta - self.theta0 + PI) / (2.0 * PI)).floor() as i64,
            length,
        });
    }

    fn finish(self, escape: Option<Escape>, steps: usize) -> GeodesicTrace {
        let last = *self.samples.last().expect("initial sample");
        GeodesicTrace {
            winding: last.winding,
            length: last.length,
            escape,
            min_abs: self.min_abs,
            max_abs: self.max_abs,
            speed_drift: self.speed_drift,
            angular_drift: self.angular_drift,
            steps,
            samples: self.samples,
        }
    }
}

fn band_escape(r: f64, band: Option<(f64, f64)>, t: f64, z: Complex64) -> Option<Escape> {
    let (lo, hi) = band.unwrap_or((r + COLLAR, 1.0 - COLLAR));
    let (lo, hi) = (lo.max(r + COLLAR), hi.min(1.0 - COLLAR));
    let rho = z.norm();
    if rho <= lo || rho >= hi {
        return Some(Escape {
            t,
            z,
            boundary: if rho <= lo { Boundary::Inner } else { Boundary::Outer },
        });
    }
    None
}

/// Integrates the geodesic equation from `initial` over `[0, t_end]`.
pub fn integrate(
    r: f64,
    metric: Metric,
    initial: GeodesicState,
    t_end: f64,
    step_tol: f64,
    tr: &Truncation,
) -> Result<GeodesicTrace> {
    let profile = RadialProfile::new(r, metric, tr)?;
    integrate_profile(&profile, initial, t_end, &IntegrateOptions { step_tol, band: None })
}

fn check_start(profile: &RadialProfile, initial: &GeodesicState, t_end: f64, step_tol: f64) -> Result<f64> {
    if !(step_tol > 0.0 && step_tol.is_finite()) {
        return Err(Error::domain(format!("step tolerance {step_tol} must be positive")));
    }
    if !t_end.is_finite() {
        return Err(Error::domain("t_end must be finite"));
    }
    let r = profile.r;
    let rho0 = initial.position.norm();
    if !(rho0 > r + COLLAR && rho0 < 1.0 - COLLAR) {
        return Err(Error::domain(format!(
            "initial position |z| = {rho0} is not inside {} < |z| < {}",
            r + COLLAR,
            1.0 - COLLAR
        )));
    }
    let v0 = initial.velocity;
    if !(v0.norm() > 0.0 && v0.is_finite()) {
        return Err(Error::domain("initial velocity must be nonzero and finite"));
    }
    profile.density(rho0)
}

pub fn integrate_profile(
    profile: &RadialProfile,
    initial: GeodesicState,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<GeodesicTrace> {
    let m0 = check_start(profile, &initial, t_end, opts.step_tol)?;
    let r = profile.r;
    let (z0, v0) = (initial.position, initial.velocity);
    let y0 = [z0.re, z0.im, v0.re, v0.im, 0.0];
    let mut builder = TraceBuilder::new(z0, v0, m0);
    let (e0, l_scale) = (builder.e0, builder.l_scale);

    let rhs = |_: f64, y: &[f64; 5]| -> Result<[f64; 5]> {
        let z = Complex64::new(y[0], y[1]);
        let v = Complex64::new(y[2], y[3]);
        let rho = z.norm();
        if !(rho > r && rho < 1.0) {
            return Err(Error::domain("trajectory left the annulus"));
        }
        let (m, d) = profile.eval(rho)?;
        let a = -d * v * v / z;
        Ok([v.re, v.im, a.re, a.im, m * v.norm()])
    };
    let tol = opts.step_tol;
    let extra = |h: f64, a: &[f64; 5], b: &[f64; 5]| -> f64 {
        let za = Complex64::new(a[0], a[1]);
        let zb = Complex64::new(b[0], b[1]);
        if (zb / za).arg().abs() > 0.5 {
            return 2.0;
        }
        match (first_integrals(profile, a), first_integrals(profile, b)) {
            (Some((ea, la, _)), Some((eb, lb, _))) => {
                // series truncation makes m piecewise smooth at the 1e-13 level
                let budget = tol * h.abs() + 1e-12;
                ((eb - ea).abs() / (e0 * budget)).max((lb - la).abs() / (l_scale * budget))
            }
            _ => f64::INFINITY,
        }
    };
    let mut escape = None;
    let observer = |t: f64, y: &[f64; 5]| {
        let z = Complex64::new(y[0], y[1]);
        let v = Complex64::new(y[2], y[3]);
        let m = profile.density(z.norm()).unwrap_or(f64::NAN);
        builder.push(t, z, v, m, y[4]);
        escape = band_escape(r, opts.band, t, z);
        if escape.is_some() {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    };
    let ode_opts = ode::Options {
        rtol: tol,
        atol: 1e-2 * tol,
        h_init: 1e-3 * (1.0 - r),
        ..ode::Options::default()
    };
    let out = ode::integrate(rhs, 0.0, y0, t_end, &ode_opts, extra, observer)?;
    Ok(builder.finish(escape, out.accepted))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedGeodesic {
    pub rho_star: f64,
    /// `2πρ* m(ρ*)`.
    pub length: f64,
    /// `|1 + ρ d log m/dρ|` at `ρ*`.
    pub residual: f64,
}

/// The circle minimising `2πρ m(ρ)`, found as the sign change of the
/// closure residual on a scan in `log ρ` refined by bisection. The scan
/// also certifies that there is a single critical circle.
pub fn find_closed_geodesic(r: f64, metric: Metric, tr: &Truncation) -> Result<ClosedGeodesic> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("inner radius r = {r} must lie in (0,1)")));
    }
    let profile = RadialProfile::new(r, metric, tr)?;
    let ln_r = r.ln();
    let lambdas: Vec<f64> = (1..50).map(|k| k as f64 / 50.0).collect();
    let g: Vec<f64> = lambdas
        .iter()
        .map(|l| profile.closure_residual((l * ln_r).exp()))
        .collect::<Result<_>>()?;
    // residual is positive near the outer circle (λ → 0), negative near the inner one
    let changes: Vec<usize> = (0..g.len() - 1).filter(|&i| (g[i] > 0.0) != (g[i + 1] > 0.0)).collect();
    if changes.len() != 1 || g[0] <= 0.0 || g[g.len() - 1] >= 0.0 {
        return Err(Error::InternalConsistency(format!(
            "loop length 2πρm(ρ) has no unique interior minimiser on A_{r} ({} critical circles found)",
            changes.len()
        )));
    }
    let i = changes[0];
    let (mut lo, mut hi) = (lambdas[i], lambdas[i + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if profile.closure_residual((mid * ln_r).exp())? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let rho_star = (lambda * ln_r).exp();
    let (m, d) = profile.eval(rho_star)?;
    Ok(ClosedGeodesic {
        rho_star,
        length: 2.0 * PI * rho_star * m,
        residual: (1.0 + d).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpiralReport {
    pub trace: GeodesicTrace,
    /// Launch direction found by shooting, relative to the counter-clockwise tangent.
    pub shooting_angle: f64,
    /// Direction whose Clairaut constant equals that of the closed geodesic.
    pub launch_angle: f64,
    pub shooting_iterations: usize,
    pub band: (f64, f64),
    pub stayed_in_band: bool,
    /// `min |z(t) - z₀| + |σ'(t) - σ'(0)|/|σ'(0)|` after the first winding.
    pub closure_distance: f64,
    /// Closure within [`CLOSURE_MATCH_TOL`].
    pub closed: bool,
}

pub const CLOSURE_MATCH_TOL: f64 = 1e-6;

fn closure_distance(trace: &GeodesicTrace) -> f64 {
    let s0 = trace.samples[0];
    let scale = s0.v.norm();
    trace
        .samples
        .iter()
        .filter(|s| s.winding.abs() >= 1)
        .map(|s| (s.z - s0.z).norm() + (s.v - s0.v).norm() / scale)
        .fold(f64::INFINITY, f64::min)
}

/// Bisects the launch angle at `z0` between a direction that leaves the band
/// outward and one that leaves it inward. Returns the angle and the number of
/// trajectories integrated.
pub fn shoot_launch_angle(
    profile: &RadialProfile,
    z0: Complex64,
    band: (f64, f64),
    t_window: f64,
    angle_tol: f64,
) -> Result<(f64, usize)> {
    let opts = IntegrateOptions {
        step_tol: DEFAULT_STEP_TOL,
        band: Some(band),
    };
    let side = |angle: f64| -> Result<Option<Boundary>> {
        let trace = integrate_profile(profile, GeodesicState::launch(profile, z0, angle)?, t_window, &opts)?;
        Ok(trace.escape.map(|e| e.boundary))
    };
    // positive angles point inward
    let (mut a_out, mut a_in) = (-0.5 * PI + 1e-3, 0.5 * PI - 1e-3);
    let mut runs = 2;
    if side(a_out)? != Some(Boundary::Outer) || side(a_in)? != Some(Boundary::Inner) {
        return Err(Error::Convergence {
            what: "radial launches do not leave the band on opposite sides".into(),
            n_max: runs,
            tail_bound: f64::NAN,
        });
    }
    while a_in - a_out > angle_tol {
        let mid = 0.5 * (a_out + a_in);
        runs += 1;
        match side(mid)? {
            Some(Boundary::Outer) => a_out = mid,
            Some(Boundary::Inner) => a_in = mid,
            None => return Ok((mid, runs)),
        }
    }
    Ok((0.5 * (a_out + a_in), runs))
}

/// The geodesic from `z0` asymptotic to the closed geodesic, by the
/// Clairaut reduction with constant `L* = ρ* m(ρ*)` at unit speed:
/// `ρ' = -(ρ - ρ*) G(ρ)`, `θ' = L*/(m²ρ²)`, with
/// `G = √((ρm - L*)(ρm + L*)) / (m²ρ|ρ - ρ*|)`.
/// In this form the closed geodesic attracts instead of repels, so the
/// trace is stable over any window.
fn separatrix_trace(
    profile: &RadialProfile,
    closed: &ClosedGeodesic,
    z0: Complex64,
    t_end: f64,
    band: (f64, f64),
) -> Result<GeodesicTrace> {
    let rho_star = closed.rho_star;
    let l_star = closed.length / (2.0 * PI);
    // below this distance the quotient in G loses digits; G is frozen there
    let freeze = 1e-4 * rho_star;
    let g = |rho: f64| -> Result<(f64, f64)> {
        let dist = rho - rho_star;
        let probe = if dist.abs() < freeze {
            rho_star + freeze.copysign(if dist == 0.0 { 1.0 } else { dist })
        } else {
            rho
        };
        let m = profile.density(probe)?;
        let f = probe * m;
        let num = ((f - l_star) * (f + l_star)).max(0.0).sqrt();
        let g = num / (m * m * probe * (probe - rho_star).abs());
        let m_here = if probe == rho { m } else { profile.density(rho)? };
        Ok((g, m_here))
    };
    let rhs = |_: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
        let rho = y[0];
        let (g, m) = g(rho)?;
        Ok([-(rho - rho_star) * g, l_star / (m * m * rho * rho)])
    };
    let extra = |_: f64, a: &[f64; 2], b: &[f64; 2]| if (b[1] - a[1]).abs() > 0.5 { 2.0 } else { 0.0 };
    let state = |y: &[f64; 2]| -> Result<(Complex64, Complex64, f64)> {
        let [d_rho, d_theta] = rhs(0.0, y)?;
        let e = Complex64::from_polar(1.0, y[1]);
        let m = profile.density(y[0])?;
        Ok((y[0] * e, Complex64::new(d_rho, y[0] * d_theta) * e, m))
    };
    let y0 = [z0.norm(), z0.arg()];
    let (z_start, v_start, m0) = state(&y0)?;
    let mut builder = TraceBuilder::new(z_start, v_start, m0);
    let mut escape = None;
    let mut failure = None;
    let observer = |t: f64, y: &[f64; 2]| match state(y) {
        Ok((z, v, m)) => {
            builder.push(t, z, v, m, t);
            escape = band_escape(profile.r, Some(band), t, z);
            if escape.is_some() {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        }
        Err(e) => {
            failure = Some(e);
            ControlFlow::Break(())
        }
    };
    let opts = ode::Options {
        rtol: DEFAULT_STEP_TOL,
        atol: 1e-2 * DEFAULT_STEP_TOL,
        ..ode::Options::default()
    };
    let out = ode::integrate(rhs, 0.0, y0, t_end, &opts, extra, observer)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(builder.finish(escape, out.accepted))
}

/// A geodesic through `z0` that stays in `[r + 0.02, 0.98]` for `t ∈ [0, t_end]`
/// at unit metric speed.
///
/// The launch direction is found by shooting; the surviving direction is
/// the one whose geodesic is asymptotic to the (unstable) closed geodesic,
/// and the long-time trace follows that geodesic through its Clairaut
/// reduction. The shot angle is reported next to the Clairaut angle.
pub fn spiral_trace(r: f64, metric: Metric, z0: Complex64, t_end: f64, tr: &Truncation) -> Result<SpiralReport> {
    let profile = RadialProfile::new(r, metric, tr)?;
    let band = (r + SPIRAL_BAND_MARGIN, 1.0 - SPIRAL_BAND_MARGIN);
    let rho0 = z0.norm();
    if !(rho0 > band.0 && rho0 < band.1) {
        return Err(Error::domain(format!(
            "|z0| = {rho0} is outside the band [{}, {}]",
            band.0, band.1
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::domain(format!("t_end = {t_end} must be positive and finite")));
    }
    let closed = find_closed_geodesic(r, metric, tr)?;
    if (rho0 - closed.rho_star).abs() <= 1e-9 {
        return Err(Error::domain(format!(
            "z0 lies on the closed geodesic |z| = {}",
            closed.rho_star
        )));
    }
    let (shooting_angle, shooting_iterations) = shoot_launch_angle(&profile, z0, band, t_end, 1e-9)?;
    let f0 = rho0 * profile.density(rho0)?;
    let l_star = closed.length / (2.0 * PI);
    let toward = if rho0 > closed.rho_star { 1.0 } else { -1.0 };
    let launch_angle = toward * (l_star / f0).clamp(-1.0, 1.0).acos();
    let trace = separatrix_trace(&profile, &closed, z0, t_end, band)?;
    let d = closure_distance(&trace);
    Ok(SpiralReport {
        stayed_in_band: trace.escape.is_none(),
        closure_distance: d,
        closed: d <= CLOSURE_MATCH_TOL,
        trace,
        shooting_angle,
        launch_angle,
        shooting_iterations,
        band,
    })
}
