//! Carathéodory and Szegő metrics on `A_r`, their Gaussian and higher-order
//! curvatures, the elliptic-function closed forms, and boundary probes.
//!
//! Pointwise values go through the maximal domain functions:
//! `S = J⁽⁰⁾`, `c = 2πS`, `s = √(J⁽¹⁾/J⁽⁰⁾)`, `κ_c = -J⁽¹⁾/(π² (J⁽⁰⁾)³)` and
//! `κ_s = 4 - 2 J⁽⁰⁾J⁽²⁾/(J⁽¹⁾)²`. Derivative tables (for higher-order
//! curvature and the probes) are differentiated term by term from the series.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::EllipticContext;
use crate::error::{Error, Result};
use crate::hardy::{self, GeneralAnnulus, Truncation};
use crate::jets::{self, WirtingerJet};

/// Tolerance used when this module builds its own elliptic context.
pub const ELLIPTIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Caratheodory,
    Szego,
}

/// Metric data at one point of `A_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub z: Complex64,
    /// Szegő kernel on the diagonal.
    #[serde(rename = "S")]
    pub kernel: f64,
    pub c: f64,
    pub s: f64,
    pub kappa_c: f64,
    pub kappa_s: f64,
    pub n_used: usize,
    pub tail_bound: f64,
}

fn check_point(r: f64, z: Complex64) -> Result<f64> {
    hardy::lambda_of(r, z.norm())
}

/// Evaluates `S, c, s, κ_c, κ_s` at `z`, using `|z| = r^λ`.
pub fn sample(r: f64, z: Complex64, tr: &Truncation) -> Result<MetricSample> {
    let lambda = check_point(r, z)?;
    let jf = hardy::j_functions_on_a_r_scaled(r, lambda, tr)?;
    let [j0, j1, j2] = jf.j;
    let kernel = j0.checked_value("S")?;
    let s = j1.div(j0).sqrt().checked_value("s")?;
    let kappa_c = -j1.div(j0.powi(3)).checked_value("κ_c")? / (PI * PI);
    let kappa_s = 4.0 - 2.0 * j0.mul(j2).div(j1.powi(2)).checked_value("κ_s")?;
    Ok(MetricSample {
        z,
        kernel,
        c: 2.0 * PI * kernel,
        s,
        kappa_c,
        kappa_s,
        n_used: jf.n_used,
        tail_bound: jf.tail_bound,
    })
}

/// `℘(2 ln|z|) - ℘(2 ln|z| + ω₁ + ω₃)`; real up to rounding.
pub fn wp_difference(ctx: &EllipticContext, z: Complex64) -> Result<Complex64> {
    let u = Complex64::new(2.0 * z.norm().ln(), 0.0);
    let shift = Complex64::new(ctx.omega1, ctx.omega3_im);
    Ok(ctx.wp(u)? - ctx.wp(u + shift)?)
}

/// Szegő metric from the elliptic closed form
/// `s² = (℘(2 ln|z|) - ℘(2 ln|z| + ω₁ + ω₃)) / |z|²`.
pub fn szego_metric_wp_ctx(ctx: &EllipticContext, z: Complex64) -> Result<f64> {
    check_point(ctx.r, z)?;
    let d = wp_difference(ctx, z)?;
    let s2 = d.re / z.norm_sqr();
    if !(s2 > 0.0) {
        return Err(Error::InternalConsistency(format!(
            "℘-difference {d} is not positive at z = {z}"
        )));
    }
    Ok(s2.sqrt())
}

pub fn szego_metric_wp(r: f64, z: Complex64) -> Result<f64> {
    check_point(r, z)?;
    szego_metric_wp_ctx(&EllipticContext::new(r, ELLIPTIC_TOL)?, z)
}

/// `πK(z) = (℘(2 ln|z|) + c)/|z|²`, with `K` the Bergman kernel.
pub fn pi_bergman_ctx(ctx: &EllipticContext, z: Complex64) -> Result<f64> {
    check_point(ctx.r, z)?;
    let u = Complex64::new(2.0 * z.norm().ln(), 0.0);
    Ok((ctx.wp(u)?.re + ctx.c) / z.norm_sqr())
}

/// Capacity metric `c_β = 2πS / σ₂*(-2 ln|z|)`.
pub fn capacity_metric_ctx(ctx: &EllipticContext, z: Complex64, tr: &Truncation) -> Result<f64> {
    let lambda = check_point(ctx.r, z)?;
    let kernel = hardy::j_functions_on_a_r_scaled(ctx.r, lambda, tr)?.j[0].checked_value("S")?;
    let star = ctx.sigma2_star_sq(-2.0 * z.norm().ln())?.sqrt();
    Ok(2.0 * PI * kernel / star)
}

pub fn capacity_metric(r: f64, z: Complex64, tr: &Truncation) -> Result<f64> {
    check_point(r, z)?;
    capacity_metric_ctx(&EllipticContext::new(r, ELLIPTIC_TOL)?, z, tr)
}

/// `∂^j ∂̄^k S` at `z` for `j, k ≤ order`, differentiating
/// `S = Σ zⁿ z̄ⁿ / α_n` term by term.
pub fn szego_kernel_jet(r: f64, z: Complex64, order: usize, tr: &Truncation) -> Result<WirtingerJet> {
    check_point(r, z)?;
    if order > jets::MAX_ORDER {
        return Err(Error::Shape(format!(
            "kernel jet order {order} exceeds {}",
            jets::MAX_ORDER
        )));
    }
    let a = GeneralAnnulus::standard(r)?;
    let nodes = hardy::weighted_nodes(&a, 2.0 * z.norm().ln(), 2 * order as u32, tr)?;
    let falling = |n: f64, j: usize| (0..j).map(|i| n - i as f64).product::<f64>();
    let scale = nodes.log_scale.exp();
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::range(format!(
            "kernel jet scale exp({}) overflows",
            nodes.log_scale
        )));
    }
    WirtingerJet::from_fn(order, |j, k| {
        let sum = nodes.sum_by(|n| falling(n, j) * falling(n, k));
        let phase = z.powi(-(j as i32)) * z.conj().powi(-(k as i32));
        phase * sum * scale
    })
}

/// Jet of the metric density: `2πS` or `√(∂∂̄ log S)`.
pub fn metric_jet(r: f64, z: Complex64, metric: Metric, order: usize, tr: &Truncation) -> Result<WirtingerJet> {
    match metric {
        Metric::Caratheodory => Ok(szego_kernel_jet(r, z, order, tr)?.scale(Complex64::new(2.0 * PI, 0.0))),
        Metric::Szego => {
            if order + 1 > jets::MAX_ORDER {
                return Err(Error::Shape(format!(
                    "a Szegő metric jet of order {order} needs kernel jets of order {}",
                    order + 1
                )));
            }
            let log_kernel = jets::jet_log(&szego_kernel_jet(r, z, order + 1, tr)?)?;
            jets::jet_sqrt(&log_kernel.mixed_shift()?)
        }
    }
}

/// `κ⁽ᴺ⁾ = -4 det(∂^j ∂̄^k m)_{0≤j,k≤N} / m^{(N+1)²}`.
pub fn higher_curvature_from_jet(jet: &WirtingerJet, n: usize) -> Result<f64> {
    let det = jets::mixed_hessian_det(jet, n)?;
    let m = jet.value().re;
    let power = ((n + 1) * (n + 1)) as f64;
    // keep the division in logs; m^{(N+1)²} leaves range near the boundary
    let log_ratio = det.re.abs().ln() - power * m.ln();
    Ok(-4.0 * det.re.signum() * log_ratio.exp())
}

/// Higher-order curvature `κ⁽ᴺ⁾` for `N ∈ {1, 2}`; `N = 2` only for the
/// Carathéodory metric.
pub fn higher_curvature(r: f64, z: Complex64, n: usize, metric: Metric, tr: &Truncation) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(Error::Shape(format!("curvature order {n} must be 1 or 2")));
    }
    if n == 2 && metric == Metric::Szego {
        return Err(Error::Shape(
            "second-order curvature of the Szegő metric is not supported".into(),
        ));
    }
    let jet = metric_jet(r, z, metric, n, tr)?;
    higher_curvature_from_jet(&jet, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeTarget {
    Kernel,
    SzegoMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Outer,
    Inner,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub boundary: Boundary,
    /// The defining function used near the boundary.
    pub psi: String,
    pub radii: Vec<f64>,
    /// `∂^{k l̄}F(ρ)·(-ψ(ρ))^{k+l+1}` along the radii.
    pub values: Vec<f64>,
    /// The predicted limit `(k+l)!/(2π)·|∂ψ|(∂ψ)^k(∂̄ψ)^l` (no `1/2π` for the metric).
    pub limit: f64,
}

/// Scaled derivatives of the kernel or the Szegő metric along real radii
/// approaching a boundary circle. Outer circle: `ψ = |z|² - 1`, `p = 1`;
/// inner circle: `ψ = r² - |z|²`, `p = r`.
pub fn boundary_asymptotics_probe(
    r: f64,
    k: usize,
    l: usize,
    approach: &[f64],
    target: ProbeTarget,
    boundary: Boundary,
    tr: &Truncation,
) -> Result<ProbeReport> {
    if k + l > 2 {
        return Err(Error::Shape(format!("probe order k + l = {} exceeds 2", k + l)));
    }
    let order = k.max(l);
    let (d_psi, abs_d_psi, psi) = match boundary {
        Boundary::Outer => (1.0, 1.0, "|z|^2-1"),
        Boundary::Inner => (-r, r, "r^2-|z|^2"),
    };
    let factorial: f64 = (1..=k + l).map(|i| i as f64).product();
    let mut limit = factorial * abs_d_psi * d_psi.powi((k + l) as i32);
    if target == ProbeTarget::Kernel {
        limit /= 2.0 * PI;
    }
    let mut values = Vec::with_capacity(approach.len());
    for &rho in approach {
        let z = Complex64::new(rho, 0.0);
        let jet = match target {
            ProbeTarget::Kernel => szego_kernel_jet(r, z, order, tr)?,
            ProbeTarget::SzegoMetric => metric_jet(r, z, Metric::Szego, order, tr)?,
        };
        let minus_psi = match boundary {
            Boundary::Outer => 1.0 - rho * rho,
            Boundary::Inner => rho * rho - r * r,
        };
        values.push(jet.get(k, l).re * minus_psi.powi((k + l + 1) as i32));
    }
    Ok(ProbeReport {
        boundary,
        psi: psi.to_string(),
        radii: approach.to_vec(),
        values,
        limit,
    })
}
