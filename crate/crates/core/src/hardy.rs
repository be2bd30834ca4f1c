//! Hardy-space data on round annuli `A(r, R)`: monomial norms `α_n`, moment
//! sums `s_j = Σ n^j / α_n`, the Szegő kernel series and the maximal domain
//! functions `J⁽⁰⁾, J⁽¹⁾, J⁽²⁾` with their extremal functions.
//!
//! All series are summed in the paired order `n, -n-1` (`0, -1, 1, -2, …`).
//! Terms are handled as `exp(ln term - log_scale)` with one common scale, so
//! very thin or very fat annuli do not underflow.
//!
//! The maximal domain functions are computed as norms of monic orthogonal
//! polynomials in `n` for the discrete weight `1/α_n` (centred moments and a
//! third positive sum), which avoids the cancellation hidden in the textbook
//! Hankel-determinant expressions. Those expressions are kept as
//! [`j_closed_form`] and [`gamma_delta_closed_form`] for cross-checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::{log_add_exp, CompensatedComplexSum, CompensatedSum, Scaled};

/// Environment variable overriding the default relative tail tolerance.
pub const TAIL_TOL_ENV: &str = "ANNULUS_METRICS_TAIL_TOL";

pub const DEFAULT_N_MAX: usize = 512;
pub const DEFAULT_N_CAP: usize = 1 << 20;
pub const DEFAULT_TAIL_TOL: f64 = 1e-15;

/// The annulus `{r_in < |z| < r_out}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralAnnulus {
    pub r_in: f64,
    pub r_out: f64,
}

impl GeneralAnnulus {
    pub fn new(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in > 0.0 && r_in < r_out && r_out.is_finite()) {
            return Err(Error::domain(format!(
                "annulus radii must satisfy 0 < r_in < r_out < ∞, got ({r_in}, {r_out})"
            )));
        }
        Ok(GeneralAnnulus { r_in, r_out })
    }

    /// `A_r = {r < |z| < 1}`.
    pub fn standard(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain(format!("inner radius r = {r} must lie in (0,1)")));
        }
        Self::new(r, 1.0)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let m = z.norm();
        self.r_in < m && m < self.r_out
    }

    fn require_unit_inside(&self) -> Result<()> {
        if !(self.r_in < 1.0 && 1.0 < self.r_out) {
            return Err(Error::domain(format!(
                "the point 1 must lie inside A({}, {})",
                self.r_in, self.r_out
            )));
        }
        Ok(())
    }
}

/// Series truncation policy. Summation starts with `n ∈ [-n_max-1, n_max]`
/// and doubles `n_max` (up to `n_cap`) until the geometric tail bound,
/// relative to the sum of the term envelope, is below `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_max: usize,
    pub tail_tol: f64,
    pub n_cap: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            n_max: DEFAULT_N_MAX,
            tail_tol: DEFAULT_TAIL_TOL,
            n_cap: DEFAULT_N_CAP,
        }
    }
}

impl Truncation {
    /// Defaults, with `tail_tol` taken from `ANNULUS_METRICS_TAIL_TOL` if set.
    pub fn from_env() -> Result<Self> {
        let mut tr = Self::default();
        if let Ok(raw) = std::env::var(TAIL_TOL_ENV) {
            tr.tail_tol = raw
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("{TAIL_TOL_ENV}={raw:?} is not a number")))?;
        }
        tr.validate()?;
        Ok(tr)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 || self.n_cap < self.n_max {
            return Err(Error::domain(format!(
                "truncation needs 0 < n_max <= n_cap, got n_max = {}, n_cap = {}",
                self.n_max, self.n_cap
            )));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::domain(format!(
                "tail tolerance must be positive, got {}",
                self.tail_tol
            )));
        }
        Ok(())
    }
}

/// `ln α_n = ln 2π(r^{2n+1} + R^{2n+1})`.
pub fn ln_alpha_n(a: &GeneralAnnulus, n: i64) -> f64 {
    let e = (2 * n + 1) as f64;
    (2.0 * PI).ln() + log_add_exp(e * a.r_in.ln(), e * a.r_out.ln())
}

/// `α_n = ‖zⁿ‖²` in `H²` of the boundary with arc length.
pub fn alpha_n(a: &GeneralAnnulus, n: i64) -> Result<f64> {
    let v = ln_alpha_n(a, n).exp();
    if !v.is_finite() || v == 0.0 {
        return Err(Error::range(format!(
            "α_n overflows at n = {n} for A({}, {})",
            a.r_in, a.r_out
        )));
    }
    Ok(v)
}

/// Series nodes `n` with weights `xⁿ/α_n = w · exp(log_scale)`, in paired order.
#[derive(Debug, Clone)]
pub struct WeightedNodes {
    pub n: Vec<i64>,
    pub w: Vec<f64>,
    pub log_scale: f64,
    /// Final truncation index: nodes cover `[-n_used-1, n_used]`.
    pub n_used: usize,
    /// Relative tail bound achieved.
    pub tail_bound: f64,
}

impl WeightedNodes {
    /// `Σ p(n) w_n` (scaled by `exp(-log_scale)`), compensated, paired order.
    pub fn sum_by(&self, p: impl Fn(f64) -> f64) -> f64 {
        self.n
            .iter()
            .zip(&self.w)
            .map(|(&n, &w)| w * p(n as f64))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `Σ p(n) w_n e^{i n θ}` (scaled by `exp(-log_scale)`).
    pub fn sum_with_phase(&self, theta: f64, p: impl Fn(f64) -> f64) -> Complex64 {
        let mut acc = CompensatedComplexSum::new();
        for (&n, &w) in self.n.iter().zip(&self.w) {
            acc.add(Complex64::from_polar(w * p(n as f64), n as f64 * theta));
        }
        acc.value()
    }
}

/// Builds the nodes for `Σ n^j xⁿ / α_n` with `j ≤ degree`, `x = e^{ln_x}`.
pub fn weighted_nodes(a: &GeneralAnnulus, ln_x: f64, degree: u32, tr: &Truncation) -> Result<WeightedNodes> {
    tr.validate()?;
    let (ln_in, ln_out) = (a.r_in.ln(), a.r_out.ln());
    if !(ln_x > 2.0 * ln_in && ln_x < 2.0 * ln_out) {
        return Err(Error::Convergence {
            what: format!(
                "series Σ xⁿ/α_n diverges for x = {} on A({}, {})",
                ln_x.exp(),
                a.r_in,
                a.r_out
            ),
            n_max: 0,
            tail_bound: f64::INFINITY,
        });
    }
    let ln_2pi = (2.0 * PI).ln();
    let ln_w = |n: i64| {
        let e = (2 * n + 1) as f64;
        n as f64 * ln_x - ln_2pi - log_add_exp(e * ln_in, e * ln_out)
    };
    // (ln w, ln envelope) per node, memoised: side 0 holds n = k, side 1 holds n = -k-1
    let mut memo: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    let mut node = |side: usize, k: usize| -> (f64, f64) {
        while memo[side].len() <= k {
            let j = memo[side].len() as i64;
            let n = if side == 0 { j } else { -j - 1 };
            let l = ln_w(n);
            memo[side].push((l, l + degree as f64 * ((n.unsigned_abs() + 1) as f64).ln()));
        }
        memo[side][k]
    };

    let mut n = Vec::new();
    let mut lw = Vec::new();
    // running envelope sum, stored relative to its largest term
    let mut env_max = f64::NEG_INFINITY;
    let mut env_sum = 0.0;
    let mut cap = tr.n_max;
    let mut m: usize = 0;
    loop {
        for side in 0..2 {
            let (l, e) = node(side, m);
            n.push(if side == 0 { m as i64 } else { -(m as i64) - 1 });
            lw.push(l);
            if e > env_max {
                env_sum = env_sum * (env_max - e).exp() + 1.0;
                env_max = e;
            } else {
                env_sum += (e - env_max).exp();
            }
        }
        // geometric bound for both tails beyond [-m-1, m]; the envelope
        // ratio is decreasing on each side
        let mut tail = 0.0;
        for side in 0..2 {
            let (e1, e2) = (node(side, m + 1).1, node(side, m + 2).1);
            let ratio = (e2 - e1).exp();
            tail += if ratio >= 1.0 {
                f64::INFINITY
            } else {
                (e1 - env_max).exp() / (1.0 - ratio)
            };
        }
        let tail = tail / env_sum;
        if tail <= tr.tail_tol {
            let log_scale = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w = lw.iter().map(|&l| (l - log_scale).exp()).collect();
            return Ok(WeightedNodes {
                n,
                w,
                log_scale,
                n_used: m,
                tail_bound: tail,
            });
        }
        if m + 1 >= cap {
            if cap >= tr.n_cap {
                return Err(Error::Convergence {
                    what: format!(
                        "series Σ n^{degree} xⁿ/α_n on A({}, {}) with x = {}",
                        a.r_in,
                        a.r_out,
                        ln_x.exp()
                    ),
                    n_max: cap,
                    tail_bound: tail,
                });
            }
            cap = (cap * 2).min(tr.n_cap);
        }
        m += 1;
    }
}

/// `s_j = Σ n^j/α_n` for `j ≤ j_max`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentSums {
    pub s: Vec<f64>,
    pub annulus: GeneralAnnulus,
    pub n_used: usize,
    pub tail_bound: f64,
}

pub fn moment_sums(a: &GeneralAnnulus, j_max: usize, tr: &Truncation) -> Result<MomentSums> {
    if j_max > 8 {
        return Err(Error::domain(format!("moment order {j_max} exceeds 8")));
    }
    let nodes = weighted_nodes(a, 0.0, j_max as u32, tr)?;
    let s = (0..=j_max)
        .map(|j| {
            let raw = nodes.sum_by(|n| n.powi(j as i32));
            Scaled::new(raw, nodes.log_scale).checked_value(&format!("s_{j}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentSums {
        s,
        annulus: *a,
        n_used: nodes.n_used,
        tail_bound: nodes.tail_bound,
    })
}

/// Coefficients of the extremal functions `f_β = Σ (n-β) zⁿ/α_n` and
/// `f_{γδ} = Σ (n² - γn - δ) zⁿ/α_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalCoefficients {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// Moments of a positive discrete weight in `n`, centred at its mean.
#[derive(Debug, Clone, Copy)]
pub struct CentredMoments {
    /// `Σ w`
    pub mass: Scaled,
    /// mean `β = Σ n w / Σ w`
    pub mean: f64,
    /// `Σ w (n-β)² / Σ w`
    pub var: f64,
    /// `Σ w (n-β)³ / Σ w`
    pub third: f64,
    /// `Σ w p₂(n)² / Σ w`, `p₂` the monic quadratic orthogonal to `1, n`
    pub p2_norm: f64,
    /// `p₂(n) = t² - a t - b` with `t = n - β`
    pub a: f64,
    pub b: f64,
}

impl CentredMoments {
    pub fn from_nodes(nodes: &WeightedNodes) -> Result<Self> {
        let m0 = nodes.sum_by(|_| 1.0);
        let mean = nodes.sum_by(|n| n) / m0;
        let var = nodes.sum_by(|n| (n - mean).powi(2)) / m0;
        let third = nodes.sum_by(|n| (n - mean).powi(3)) / m0;
        if !(m0 > 0.0 && var > 0.0) || !third.is_finite() {
            return Err(Error::InternalConsistency(format!(
                "moment sums violate Cauchy–Schwarz (mass {m0:e}, variance {var:e})"
            )));
        }
        let a = third / var;
        let b = var;
        let p2_norm = nodes.sum_by(|n| {
            let t = n - mean;
            (t * t - a * t - b).powi(2)
        }) / m0;
        if !(p2_norm > 0.0) {
            return Err(Error::InternalConsistency(format!(
                "third Hankel determinant is not positive ({p2_norm:e})"
            )));
        }
        Ok(CentredMoments {
            mass: Scaled::new(m0, nodes.log_scale),
            mean,
            var,
            third,
            p2_norm,
            a,
            b,
        })
    }

    pub fn coefficients(&self) -> ExtremalCoefficients {
        let beta = self.mean;
        ExtremalCoefficients {
            beta,
            gamma: 2.0 * beta + self.a,
            delta: self.b - beta * beta - self.a * beta,
        }
    }
}

/// `J⁽⁰⁾, J⁽¹⁾, J⁽²⁾` at a point, with diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct JFunctions {
    pub j: [Scaled; 3],
    pub coeffs: ExtremalCoefficients,
    /// Relative Cauchy–Schwarz gap `(s₀s₂ - s₁²)/(s₀s₂)`.
    pub cs_gap: f64,
    pub n_used: usize,
    pub tail_bound: f64,
}

impl JFunctions {
    pub fn values(&self) -> Result<[f64; 3]> {
        Ok([
            self.j[0].checked_value("J⁽⁰⁾")?,
            self.j[1].checked_value("J⁽¹⁾")?,
            self.j[2].checked_value("J⁽²⁾")?,
        ])
    }
}

/// `J⁽ʲ⁾_{A(r,R)}(1)` for `r < 1 < R`.
pub fn j_functions_at_one(a: &GeneralAnnulus, tr: &Truncation) -> Result<JFunctions> {
    a.require_unit_inside()?;
    let nodes = weighted_nodes(a, 0.0, 4, tr)?;
    let cm = CentredMoments::from_nodes(&nodes)?;
    Ok(JFunctions {
        j: [cm.mass, cm.mass.mul_f64(cm.var), cm.mass.mul_f64(cm.p2_norm)],
        coeffs: cm.coefficients(),
        cs_gap: cm.var / (cm.var + cm.mean * cm.mean),
        n_used: nodes.n_used,
        tail_bound: nodes.tail_bound,
    })
}

/// `J⁽ʲ⁾_{A_r}(r^λ)` through `r^{(2j+1)λ} J⁽ʲ⁾_{A_r}(r^λ) = J⁽ʲ⁾_{A(r^{1-λ}, r^{-λ})}(1)`.
pub fn j_functions_on_a_r_scaled(r: f64, lambda: f64, tr: &Truncation) -> Result<JFunctions> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("inner radius r = {r} must lie in (0,1)")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("λ = {lambda} must lie in (0,1)")));
    }
    let ln_r = r.ln();
    let inner = ((1.0 - lambda) * ln_r).exp();
    let outer = (-lambda * ln_r).exp();
    if inner == 0.0 || !outer.is_finite() || inner >= 1.0 || outer <= 1.0 {
        return Err(Error::range(format!(
            "rescaled annulus A({inner:e}, {outer:e}) for r = {r:e}, λ = {lambda} is not representable"
        )));
    }
    let a = GeneralAnnulus::new(inner, outer)?;
    let mut jf = j_functions_at_one(&a, tr)?;
    for (j, v) in jf.j.iter_mut().enumerate() {
        *v = v.scale_by_exp(-((2 * j + 1) as f64) * lambda * ln_r);
    }
    Ok(jf)
}

/// `J⁽ʲ⁾_{A_r}(r^λ)` as plain doubles.
pub fn j_functions_on_a_r(r: f64, lambda: f64, tr: &Truncation) -> Result<[f64; 3]> {
    j_functions_on_a_r_scaled(r, lambda, tr)?.values()
}

/// `(J⁽⁰⁾, J⁽¹⁾, J⁽²⁾)` from the closed forms in `s₀ … s₄`.
pub fn j_closed_form(s: &[f64]) -> Result<[f64; 3]> {
    if s.len() < 5 {
        return Err(Error::Shape(format!("need s₀…s₄, got {} sums", s.len())));
    }
    let den = s[1] * s[1] - s[0] * s[2];
    if den == 0.0 {
        return Err(Error::InternalConsistency(
            "s₁² - s₀s₂ vanishes; summation is broken".into(),
        ));
    }
    let j1 = (s[0] * s[2] - s[1] * s[1]) / s[0];
    let j2 =
        (s[1] * s[1] * s[4] - s[0] * s[2] * s[4] - 2.0 * s[1] * s[2] * s[3] + s[0] * s[3] * s[3] + s[2].powi(3)) / den;
    Ok([s[0], j1, j2])
}

/// `(β, γ, δ)` from the closed-form solution of the 2×2 orthogonality system.
pub fn gamma_delta_closed_form(s: &[f64]) -> Result<ExtremalCoefficients> {
    if s.len() < 4 {
        return Err(Error::Shape(format!("need s₀…s₃, got {} sums", s.len())));
    }
    let den = s[1] * s[1] - s[0] * s[2];
    if den == 0.0 {
        return Err(Error::InternalConsistency(
            "s₁² - s₀s₂ vanishes; summation is broken".into(),
        ));
    }
    Ok(ExtremalCoefficients {
        beta: s[1] / s[0],
        gamma: (s[1] * s[2] - s[0] * s[3]) / den,
        delta: (s[1] * s[3] - s[2] * s[2]) / den,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extremal {
    F0,
    FBeta,
    FGammaDelta,
}

fn extremal_weight(which: Extremal, c: &ExtremalCoefficients) -> impl Fn(f64) -> f64 + '_ {
    move |n: f64| match which {
        Extremal::F0 => 1.0,
        Extremal::FBeta => n - c.beta,
        Extremal::FGammaDelta => n * n - c.gamma * n - c.delta,
    }
}

fn require_closure(a: &GeneralAnnulus, z: Complex64) -> Result<()> {
    let m = z.norm();
    if !(m >= a.r_in && m <= a.r_out) {
        return Err(Error::domain(format!(
            "|z| = {m} is outside the closed annulus [{}, {}]",
            a.r_in, a.r_out
        )));
    }
    Ok(())
}

/// Value (`derivative = 0`) or first derivative (`derivative = 1`) of an
/// extremal function at `z` in the closed annulus.
pub fn extremal_function(
    a: &GeneralAnnulus,
    which: Extremal,
    z: Complex64,
    derivative: u32,
    tr: &Truncation,
) -> Result<Complex64> {
    require_closure(a, z)?;
    let coeffs = j_functions_at_one(a, tr)?.coeffs;
    let weight = extremal_weight(which, &coeffs);
    // on the boundary circles the coefficients still decay like R^{-n}
    let nodes = weighted_nodes(a, z.norm().ln(), 4 + derivative, tr)?;
    let theta = z.arg();
    let sum = nodes.sum_with_phase(theta, |n| {
        let d = if derivative == 1 { n } else { 1.0 };
        weight(n) * d
    });
    let scale = nodes.log_scale.exp();
    Ok(if derivative == 1 { sum * scale / z } else { sum * scale })
}

pub fn extremal_function_value(
    a: &GeneralAnnulus,
    which: Extremal,
    z: Complex64,
    tr: &Truncation,
) -> Result<Complex64> {
    extremal_function(a, which, z, 0, tr)
}

/// `‖f‖² = Σ |c_n|² α_n` for `f = Σ c_n zⁿ`.
pub fn extremal_function_norm_sq(a: &GeneralAnnulus, which: Extremal, tr: &Truncation) -> Result<f64> {
    let coeffs = j_functions_at_one(a, tr)?.coeffs;
    let weight = extremal_weight(which, &coeffs);
    let nodes = weighted_nodes(a, 0.0, 4, tr)?;
    Scaled::new(nodes.sum_by(|n| weight(n).powi(2)), nodes.log_scale).checked_value("‖f‖²")
}

/// `S(z, w) = Σ (z w̄)ⁿ / α_n` on a general annulus, valid whenever the
/// series converges (`r_in² < |z w̄| < r_out²`).
pub fn szego_kernel_general(a: &GeneralAnnulus, z: Complex64, w: Complex64, tr: &Truncation) -> Result<Complex64> {
    let x = z * w.conj();
    if x.norm() == 0.0 {
        return Err(Error::domain("the kernel series needs z, w ≠ 0"));
    }
    let nodes = weighted_nodes(a, x.norm().ln(), 0, tr)?;
    let sum = nodes.sum_with_phase(x.arg(), |_| 1.0);
    let out = sum * nodes.log_scale.exp();
    if !out.is_finite() {
        return Err(Error::range("Szegő kernel value overflows"));
    }
    Ok(out)
}

/// Szegő kernel of `A_r = {r < |z| < 1}`.
pub fn szego_kernel(r: f64, z: Complex64, w: Complex64, tr: &Truncation) -> Result<Complex64> {
    let a = GeneralAnnulus::standard(r)?;
    for (name, p) in [("z", z), ("w", w)] {
        if !a.contains(p) {
            return Err(Error::domain(format!(
                "{name} = {p} is not in the annulus {r} < |z| < 1"
            )));
        }
    }
    szego_kernel_general(&a, z, w, tr)
}

/// Diagonal `S(ρ) = Σ ρ^{2n}/α_n` on `A_r`, computed as `J⁽⁰⁾` at `ρ = r^λ`.
pub fn szego_diagonal(r: f64, rho: f64, tr: &Truncation) -> Result<Scaled> {
    let lambda = lambda_of(r, rho)?;
    Ok(j_functions_on_a_r_scaled(r, lambda, tr)?.j[0])
}

/// `λ` with `ρ = r^λ`, requiring `r < ρ < 1`.
pub fn lambda_of(r: f64, rho: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("inner radius r = {r} must lie in (0,1)")));
    }
    if !(rho > r && rho < 1.0) {
        return Err(Error::domain(format!(
            "|z| = {rho} is not in the annulus {r} < |z| < 1"
        )));
    }
    Ok(rho.ln() / r.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tr() -> Truncation {
        Truncation::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn alpha_zero_matches_boundary_quadrature() {
        let a = GeneralAnnulus::new(0.5, 2.0).unwrap();
        // arc-length integral of |z|^{2n} over both circles, trapezoidal rule
        let quad = |n: i32| {
            let m = 64;
            let mut acc = 0.0;
            for radius in [0.5f64, 2.0] {
                for k in 0..m {
                    let theta = 2.0 * PI * k as f64 / m as f64;
                    let z = Complex64::from_polar(radius, theta);
                    acc += z.norm().powi(2 * n) * radius * 2.0 * PI / m as f64;
                }
            }
            acc
        };
        assert_relative_eq!(alpha_n(&a, 0).unwrap(), 5.0 * PI, max_relative = 1e-15);
        for n in [-3i32, 0, 2] {
            assert_relative_eq!(alpha_n(&a, n as i64).unwrap(), quad(n), max_relative = 1e-13);
        }
    }

    #[test]
    fn alpha_symmetry_and_growth() {
        let a = GeneralAnnulus::new(0.3, 1.0 / 0.3).unwrap();
        for n in -20..20 {
            assert_relative_eq!(
                alpha_n(&a, n).unwrap(),
                alpha_n(&a, -n - 1).unwrap(),
                max_relative = 1e-13
            );
        }
        let b = GeneralAnnulus::new(0.5, 1.5).unwrap();
        let ratio = alpha_n(&b, 80).unwrap() / (2.0 * PI * 1.5f64.powi(161));
        assert!((ratio - 1.0).abs() < 1e-12);
        assert!(matches!(alpha_n(&b, 10_000), Err(Error::Range(_))));
    }

    #[test]
    fn invalid_inputs() {
        assert!(GeneralAnnulus::new(1.0, 0.5).is_err());
        assert!(GeneralAnnulus::standard(1.5).is_err());
        let a = GeneralAnnulus::new(1.5, 2.0).unwrap();
        assert!(matches!(j_functions_at_one(&a, &tr()), Err(Error::Domain(_))));
        assert!(moment_sums(&GeneralAnnulus::new(0.5, 2.0).unwrap(), 9, &tr()).is_err());
        assert!(matches!(
            szego_kernel(0.5, c(0.2, 0.0), c(0.7, 0.0), &tr()),
            Err(Error::Domain(_))
        ));
        let bad = Truncation { tail_tol: 0.0, ..tr() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn insufficient_truncation_is_a_convergence_error() {
        let tight = Truncation {
            n_max: 8,
            n_cap: 16,
            tail_tol: 1e-15,
        };
        let err = szego_kernel(0.5, c(0.999, 0.0), c(0.999, 0.0), &tight).unwrap_err();
        assert!(matches!(err, Error::Convergence { n_max: 16, .. }), "{err:?}");
    }

    #[test]
    fn symmetric_annulus_moments() {
        let a = GeneralAnnulus::new(0.4, 2.5).unwrap();
        let m = moment_sums(&a, 4, &tr()).unwrap();
        assert_relative_eq!(m.s[1], -m.s[0] / 2.0, max_relative = 1e-13);
        let jf = j_functions_at_one(&a, &tr()).unwrap();
        assert_relative_eq!(jf.coeffs.beta, -0.5, max_relative = 1e-13);
        assert_relative_eq!(jf.coeffs.gamma, -1.0, max_relative = 1e-12);
        let closed = gamma_delta_closed_form(&m.s).unwrap();
        assert_relative_eq!(closed.gamma, -1.0, max_relative = 1e-10);
        assert_relative_eq!(closed.delta, jf.coeffs.delta, max_relative = 1e-9);
    }

    #[test]
    fn paired_sum_matches_long_unpaired_sum() {
        let a = GeneralAnnulus::new(0.9, 1.0 / 0.9).unwrap();
        let m = moment_sums(&a, 2, &tr()).unwrap();
        let mut direct = 0.0;
        for n in -25_000i64..25_000 {
            direct += (-ln_alpha_n(&a, n)).exp();
        }
        assert_relative_eq!(m.s[0], direct, max_relative = 1e-12);
    }

    #[test]
    fn closed_forms_agree_with_centred_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = GeneralAnnulus::new(rng.gen_range(0.2..0.9), rng.gen_range(1.1..4.0)).unwrap();
            let m = moment_sums(&a, 4, &tr()).unwrap();
            let jf = j_functions_at_one(&a, &tr()).unwrap();
            let v = jf.values().unwrap();
            let closed = j_closed_form(&m.s).unwrap();
            for k in 0..3 {
                assert_relative_eq!(v[k], closed[k], max_relative = 1e-7);
            }
            let cf = gamma_delta_closed_form(&m.s).unwrap();
            assert_relative_eq!(cf.beta, jf.coeffs.beta, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(cf.gamma, jf.coeffs.gamma, max_relative = 1e-7, epsilon = 1e-9);
            assert_relative_eq!(cf.delta, jf.coeffs.delta, max_relative = 1e-7, epsilon = 1e-9);
            // (γ, δ) solve both orthogonality equations
            let s = &m.s;
            let e1 = s[1] * jf.coeffs.gamma + s[0] * jf.coeffs.delta - s[2];
            let e2 = s[2] * jf.coeffs.gamma + s[1] * jf.coeffs.delta - s[3];
            assert!(e1.abs() < 1e-9 * s[2].abs().max(s[0]) && e2.abs() < 1e-9 * s[3].abs().max(s[2].abs()));
        }
    }

    /// Largest eigenvalue of `a x = μ b x` on the subspace `{x : C x = 0}`,
    /// by explicit null-space projection and power iteration on the reduced
    /// symmetric problem. `a = v vᵀ` is rank one, so `μ = vᵀ P (PᵀBP)⁻¹ Pᵀ v`.
    fn projected_rank_one_max(v: &[f64], b_diag: &[f64], constraints: &[Vec<f64>]) -> f64 {
        // Work in coordinates y = B^{1/2} x: maximise (ṽᵀy)² with ‖y‖ = 1 and
        // C̃ y = 0, ṽ = B^{-1/2} v, C̃ = C B^{-1/2}. The answer is ‖P ṽ‖² with
        // P the orthogonal projector onto ker C̃ (Gram–Schmidt on the rows).
        let scale: Vec<f64> = b_diag.iter().map(|b| 1.0 / b.sqrt()).collect();
        let vt: Vec<f64> = v.iter().zip(&scale).map(|(x, s)| x * s).collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for row in constraints {
            let mut u: Vec<f64> = row.iter().zip(&scale).map(|(x, s)| x * s).collect();
            for q in &basis {
                let d: f64 = u.iter().zip(q).map(|(a, b)| a * b).sum();
                u.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            u.iter_mut().for_each(|x| *x /= norm);
            basis.push(u);
        }
        let mut p = vt.clone();
        for q in &basis {
            let d: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
            p.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        p.iter().map(|x| x * x).sum()
    }

    #[test]
    fn j1_matches_finite_dimensional_extremal_problem() {
        let a = GeneralAnnulus::new(0.6, 1.4).unwrap();
        let jf = j_functions_at_one(&a, &tr()).unwrap().values().unwrap();
        // with |n| <= 30 the dropped terms n²/α_n ~ 1.4^{-2n} still weigh ~2e-7
        for (n_max, tol, tol2) in [(30i64, 5e-7, 2e-5), (60, 1e-8, 1e-8)] {
            let ns: Vec<i64> = (-n_max..=n_max).collect();
            let alpha: Vec<f64> = ns.iter().map(|&n| alpha_n(&a, n).unwrap()).collect();
            // maximise |Σ n a_n|² subject to Σ a_n = 0, Σ a_n² α_n = 1
            let v: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
            let ones = vec![1.0; ns.len()];
            let j1_oracle = projected_rank_one_max(&v, &alpha, std::slice::from_ref(&ones));
            assert_relative_eq!(jf[1], j1_oracle, max_relative = tol);
            // J2 with f(1) = f'(1) = 0, J0 unconstrained
            let v2: Vec<f64> = ns.iter().map(|&n| (n * (n - 1)) as f64).collect();
            let j2_oracle = projected_rank_one_max(&v2, &alpha, &[ones.clone(), v.clone()]);
            assert_relative_eq!(jf[2], j2_oracle, max_relative = tol2);
            let j0_oracle = projected_rank_one_max(&ones, &alpha, &[]);
            assert_relative_eq!(jf[0], j0_oracle, max_relative = tol);
        }
    }

    #[test]
    fn extremal_functions_vanish_and_attain_bounds() {
        let a = GeneralAnnulus::new(0.5, 2.0).unwrap();
        let one = c(1.0, 0.0);
        let fb = extremal_function_value(&a, Extremal::FBeta, one, &tr()).unwrap();
        assert!(fb.norm() < 1e-10);
        let fgd = extremal_function_value(&a, Extremal::FGammaDelta, one, &tr()).unwrap();
        let dfgd = extremal_function(&a, Extremal::FGammaDelta, one, 1, &tr()).unwrap();
        assert!(fgd.norm() < 1e-10 && dfgd.norm() < 1e-10, "{fgd} {dfgd}");
        let jf = j_functions_at_one(&a, &tr()).unwrap().values().unwrap();
        let dfb = extremal_function(&a, Extremal::FBeta, one, 1, &tr()).unwrap();
        let nb = extremal_function_norm_sq(&a, Extremal::FBeta, &tr()).unwrap();
        assert_relative_eq!(dfb.norm_sqr() / nb, jf[1], max_relative = 1e-9);
        let n0 = extremal_function_norm_sq(&a, Extremal::F0, &tr()).unwrap();
        assert_relative_eq!(n0, jf[0], max_relative = 1e-12);
        // evaluation on the boundary circles converges
        assert!(extremal_function_value(&a, Extremal::F0, c(0.0, 2.0), &tr()).is_ok());
        assert!(extremal_function_value(&a, Extremal::F0, c(0.0, 2.1), &tr()).is_err());
    }

    #[test]
    fn kernel_is_hermitian_positive_and_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = 0.3;
        for _ in 0..20 {
            let z = Complex64::from_polar(rng.gen_range(0.31..0.99), rng.gen_range(0.0..6.3));
            let w = Complex64::from_polar(rng.gen_range(0.31..0.99), rng.gen_range(0.0..6.3));
            let szw = szego_kernel(r, z, w, &tr()).unwrap();
            let swz = szego_kernel(r, w, z, &tr()).unwrap();
            assert!((szw - swz.conj()).norm() < 1e-12 * szw.norm());
            let d = szego_kernel(r, z, z, &tr()).unwrap();
            assert!(d.re > 0.0 && d.im.abs() < 1e-12 * d.re);
            let rot = Complex64::from_polar(1.0, 1.234);
            let dr = szego_kernel(r, rot * z, rot * z, &tr()).unwrap();
            assert!((dr - d).norm() < 1e-12 * d.norm());
        }
    }

    #[test]
    fn kernel_tends_to_disc_kernel() {
        let z = c(0.5, 0.0);
        let disc = 1.0 / (2.0 * PI * (1.0 - 0.25));
        let mut prev = f64::INFINITY;
        for r in [1e-2, 1e-4, 1e-6] {
            let s = szego_kernel(r, z, z, &tr()).unwrap().re;
            let err = (s - disc).abs() / disc;
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn inversion_covariance_of_diagonal() {
        let r: f64 = 0.2;
        let (a, b) = (r.powf(0.3), r.powf(0.7));
        let sa = szego_kernel(r, c(a, 0.0), c(a, 0.0), &tr()).unwrap().re;
        let sb = szego_kernel(r, c(b, 0.0), c(b, 0.0), &tr()).unwrap().re;
        // S(ρ) = |φ'(ρ)| S(r/ρ) with |φ'(ρ)| = r/ρ², so ρ·S(ρ) is symmetric
        assert_relative_eq!(sa * a, sb * b, max_relative = 1e-10);
        // J⁽⁰⁾ through the transformation rule agrees with the direct series
        assert_relative_eq!(szego_diagonal(r, a, &tr()).unwrap().value(), sa, max_relative = 1e-12);
    }

    /// `J⁽ʲ⁾_{A_r}(ρ)` straight from the series on `A_r` at `ρ`.
    fn j_direct(r: f64, rho: f64) -> [f64; 3] {
        let a = GeneralAnnulus::standard(r).unwrap();
        let nodes = weighted_nodes(&a, 2.0 * rho.ln(), 4, &tr()).unwrap();
        let cm = CentredMoments::from_nodes(&nodes).unwrap();
        let m = cm.mass.value();
        [m, m * cm.var / rho.powi(2), m * cm.p2_norm / rho.powi(4)]
    }

    #[test]
    fn transformation_rule_self_consistency() {
        let rho: f64 = 0.45;
        let a = GeneralAnnulus::new(rho, 1.0 / rho).unwrap();
        let at_one = j_functions_at_one(&a, &tr()).unwrap().values().unwrap();
        let direct = j_direct(rho * rho, rho);
        for j in 0..3 {
            let transformed = at_one[j] / rho.powi(2 * j as i32 + 1);
            assert_relative_eq!(transformed, direct[j], max_relative = 1e-10);
        }
        let via = j_functions_on_a_r(rho * rho, 0.5, &tr()).unwrap();
        for j in 0..3 {
            assert_relative_eq!(via[j], direct[j], max_relative = 1e-10);
        }
    }

    #[test]
    fn reproducing_property_on_both_circles() {
        let r = 0.4;
        let a = GeneralAnnulus::standard(r).unwrap();
        let z = Complex64::from_polar(0.7, 0.9);
        let m = 256;
        for n in -5i32..=5 {
            let mut acc = c(0.0, 0.0);
            for radius in [r, 1.0] {
                for k in 0..m {
                    let zeta = Complex64::from_polar(radius, 2.0 * PI * k as f64 / m as f64);
                    let kernel = szego_kernel_general(&a, z, zeta, &tr()).unwrap();
                    acc += kernel * zeta.powi(n) * radius * 2.0 * PI / m as f64;
                }
            }
            let expected = z.powi(n);
            assert!((acc - expected).norm() < 1e-6 * expected.norm(), "n = {n}");
        }
    }

    #[test]
    fn lambda_scaling_keeps_thin_annuli_finite() {
        let v = j_functions_on_a_r(1e-8, 0.75, &tr()).unwrap();
        assert!(v.iter().all(|x| x.is_finite() && *x > 0.0));
        assert!(matches!(j_functions_on_a_r(1e-300, 0.999, &tr()), Err(Error::Range(_))));
        // criterion-style values
        assert_relative_eq!(
            2.0 * PI * j_functions_on_a_r(1e-4, 0.5, &tr()).unwrap()[0],
            2.0,
            max_relative = 0.02
        );
        assert_relative_eq!(
            2.0 * PI * j_functions_on_a_r(1e-4, 0.25, &tr()).unwrap()[0],
            1.0,
            max_relative = 0.02
        );
    }

    #[test]
    fn tail_tolerance_from_environment() {
        // only parsing is tested here to avoid racing other tests on the variable
        let tr = Truncation::from_env().unwrap();
        assert!(tr.tail_tol > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn strict_cauchy_schwarz_and_positivity(r_in in 0.05f64..0.95, r_out in 1.05f64..8.0) {
            let a = GeneralAnnulus::new(r_in, r_out).unwrap();
            let m = moment_sums(&a, 2, &tr()).unwrap();
            prop_assert!(m.s[0] > 0.0);
            prop_assert!(m.s[0] * m.s[2] - m.s[1] * m.s[1] > 0.0);
            let v = j_functions_at_one(&a, &tr()).unwrap().values().unwrap();
            prop_assert!(v.iter().all(|x| *x > 0.0));
        }

        #[test]
        fn paired_truncation_matches_wider_truncation(r_in in 0.3f64..0.9, r_out in 1.1f64..3.0) {
            let a = GeneralAnnulus::new(r_in, r_out).unwrap();
            let base = moment_sums(&a, 3, &tr()).unwrap();
            let wide = moment_sums(&a, 3, &Truncation { tail_tol: 1e-30, n_max: 4096, ..tr() }).unwrap();
            for j in 0..=3 {
                prop_assert!((base.s[j] - wide.s[j]).abs() <= 1e-12 * wide.s[0].abs().max(wide.s[j].abs()));
            }
        }
    }
}
