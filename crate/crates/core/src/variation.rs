//! Sweeps over `(r, λ)` at the points `z = r^λ` as `r → 0`, the leading
//! asymptotic forms of the normalised maximal domain functions, and a trend
//! classifier for the resulting sequences.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{self, JFunctions, Truncation};
use crate::summation::Scaled;

pub const DEFAULT_R_GRID: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
pub const EXTENDED_R_GRID: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "c")]
    C,
    #[serde(rename = "s")]
    S,
    #[serde(rename = "kappa_c")]
    KappaC,
    #[serde(rename = "kappa_s")]
    KappaS,
    #[serde(rename = "N0")]
    N0,
    #[serde(rename = "N1")]
    N1,
    #[serde(rename = "N2")]
    N2,
    #[serde(rename = "ratio_s_over_c")]
    RatioSOverC,
}

impl Quantity {
    pub const ALL: [Quantity; 8] = [
        Quantity::C,
        Quantity::S,
        Quantity::KappaC,
        Quantity::KappaS,
        Quantity::N0,
        Quantity::N1,
        Quantity::N2,
        Quantity::RatioSOverC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::C => "c",
            Quantity::S => "s",
            Quantity::KappaC => "kappa_c",
            Quantity::KappaS => "kappa_s",
            Quantity::N0 => "N0",
            Quantity::N1 => "N1",
            Quantity::N2 => "N2",
            Quantity::RatioSOverC => "ratio_s_over_c",
        }
    }

    /// Value from the maximal domain functions at the point.
    ///
    /// `N0, N1, N2` are the normalised products
    /// `r^λJ⁽⁰⁾`, `r^λJ⁽⁰⁾·r^{3λ}J⁽¹⁾`, `r^λJ⁽⁰⁾·r^{3λ}J⁽¹⁾·r^{5λ}J⁽²⁾`,
    /// i.e. `s₀`, `s₀s₂ - s₁²` and the 3×3 Hankel determinant of the
    /// moment sums on the rescaled annulus.
    pub fn evaluate(self, jf: &JFunctions, r: f64, lambda: f64) -> Result<f64> {
        let [j0, j1, j2] = jf.j;
        let ln_r = r.ln();
        let norm = |j: usize| jf.j[j].scale_by_exp((2 * j + 1) as f64 * lambda * ln_r);
        let v = match self {
            Quantity::C => j0.mul_f64(2.0 * PI),
            Quantity::S => j1.div(j0).sqrt(),
            Quantity::KappaC => j1.div(j0.powi(3)).mul_f64(-1.0 / (PI * PI)),
            Quantity::KappaS => {
                let q = j0.mul(j2).div(j1.powi(2)).checked_value("J⁽⁰⁾J⁽²⁾/(J⁽¹⁾)²")?;
                return Ok(4.0 - 2.0 * q);
            }
            Quantity::N0 => norm(0),
            Quantity::N1 => norm(0).mul(norm(1)),
            Quantity::N2 => norm(0).mul(norm(1)).mul(norm(2)),
            Quantity::RatioSOverC => j1.div(j0).sqrt().div(j0.mul_f64(2.0 * PI)),
        };
        v.checked_value(self.name())
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL.into_iter().find(|q| q.name() == s).ok_or_else(|| {
            Error::domain(format!(
                "unknown quantity '{s}' (expected one of c, s, kappa_c, kappa_s, N0, N1, N2, ratio_s_over_c)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub r_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub quantities: Vec<Quantity>,
}

impl SweepSpec {
    pub fn new(r_values: Vec<f64>, lambda_values: Vec<f64>, quantities: Vec<Quantity>) -> Result<Self> {
        let spec = SweepSpec {
            r_values,
            lambda_values,
            quantities,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_values.is_empty() || self.lambda_values.is_empty() || self.quantities.is_empty() {
            return Err(Error::domain("sweep needs at least one r, one λ and one quantity"));
        }
        if let Some(r) = self.r_values.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::domain(format!("r = {r} must lie in (0,1)")));
        }
        if self.r_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::domain("r values must be strictly decreasing"));
        }
        if let Some(l) = self.lambda_values.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::domain(format!("λ = {l} must lie in (0,1)")));
        }
        Ok(())
    }
}

/// One evaluated `(r, λ)` pair. `values[i]` belongs to `quantities[i]` of
/// the spec; failed entries are `None` with the reason in `errors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub lambda: f64,
    pub values: Vec<Option<f64>>,
    pub errors: Vec<Option<String>>,
    pub n_used: usize,
    pub tail_bound: f64,
}

impl SweepRow {
    pub fn get(&self, spec: &SweepSpec, q: Quantity) -> Option<f64> {
        let i = spec.quantities.iter().position(|x| *x == q)?;
        self.values[i]
    }

    pub fn succeeded(&self) -> bool {
        self.values.iter().any(Option::is_some)
    }
}

fn evaluate_row(spec: &SweepSpec, r: f64, lambda: f64, tr: &Truncation) -> SweepRow {
    let k = spec.quantities.len();
    match hardy::j_functions_on_a_r_scaled(r, lambda, tr) {
        Ok(jf) => {
            let (values, errors) = spec
                .quantities
                .iter()
                .map(|q| match q.evaluate(&jf, r, lambda) {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                })
                .unzip();
            SweepRow {
                r,
                lambda,
                values,
                errors,
                n_used: jf.n_used,
                tail_bound: jf.tail_bound,
            }
        }
        Err(e) => SweepRow {
            r,
            lambda,
            values: vec![None; k],
            errors: vec![Some(e.to_string()); k],
            n_used: 0,
            tail_bound: f64::NAN,
        },
    }
}

/// Evaluates every `(λ, r)` pair; rows come back in `(λ, r)` order of the
/// spec whatever the scheduling.
pub fn run_sweep(spec: &SweepSpec, tr: &Truncation) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    tr.validate()?;
    let pairs: Vec<(f64, f64)> = spec
        .lambda_values
        .iter()
        .flat_map(|&l| spec.r_values.iter().map(move |&r| (l, r)))
        .collect();
    Ok(pairs.par_iter().map(|&(l, r)| evaluate_row(spec, r, l, tr)).collect())
}

/// [`run_sweep`] on a dedicated pool of `threads` workers (`0` = rayon default).
pub fn run_sweep_with_threads(spec: &SweepSpec, tr: &Truncation, threads: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(spec, tr))
}

/// Leading term of the normalised function `N_j` as `r → 0` at `z = r^λ`.
pub fn asymptotic_n(r: f64, lambda: f64, j: usize) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("r = {r} must lie in (0,1)")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("λ = {lambda} must lie in (0,1)")));
    }
    let mu = 1.0 - lambda;
    let p = |e: f64| r.powf(e);
    let v = match j {
        0 => (p(lambda) + p(mu)) / (2.0 * PI * (1.0 + r)),
        1 => {
            let a = r / (1.0 + r).powi(2);
            let b = (p(4.0 * lambda) + p(4.0 * mu) + 4.0 * r * (p(2.0 * lambda) + p(2.0 * mu)))
                / ((1.0 + r) * (1.0 + r.powi(3)));
            (a + b) / (4.0 * PI * PI)
        }
        2 => {
            let a = (p(9.0 * lambda) + p(9.0 * mu)) / ((1.0 + r) * (1.0 + r.powi(3)) * (1.0 + r.powi(5)));
            let b = r * (p(3.0 * lambda) + p(3.0 * mu)) / ((1.0 + r).powi(2) * (1.0 + r.powi(3)));
            (a + b) / (2.0 * PI.powi(3))
        }
        _ => return Err(Error::Shape(format!("asymptotic N is defined for j ≤ 2, got {j}"))),
    };
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::range(format!("N{j}(r = {r:e}, λ = {lambda}) underflows")));
    }
    Ok(v)
}

/// `N_j(exact) / N_j(asymptotic)`. For `j ≥ 1` this equals
/// `r^{(2j+1)λ}J⁽ʲ⁾ / (N_j/N_{j-1})` with the exact lower-order function in
/// the denominator quotient.
pub fn lemma_ratio(r: f64, lambda: f64, j: usize, tr: &Truncation) -> Result<f64> {
    let asym = asymptotic_n(r, lambda, j)?;
    let jf = hardy::j_functions_on_a_r_scaled(r, lambda, tr)?;
    let ln_r = r.ln();
    let mut exact = Scaled::from_f64(1.0);
    for k in 0..=j {
        exact = exact.mul(jf.j[k].scale_by_exp((2 * k + 1) as f64 * lambda * ln_r));
    }
    exact.div(Scaled::from_f64(asym)).checked_value("lemma ratio")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Limit {
    Finite(f64),
    PosInf,
    NegInf,
    Undetermined,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Finite(v) => write!(f, "{v:.6}"),
            Limit::PosInf => f.write_str("+inf"),
            Limit::NegInf => f.write_str("-inf"),
            Limit::Undetermined => f.write_str("undetermined"),
        }
    }
}

/// Magnitude above which a growing sequence counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e3;
/// Required growth factor per decade of `r` for divergence.
pub const DIVERGENCE_GROWTH: f64 = 2.0;

/// Classifies the `r → 0` trend of `values` sampled at decreasing `r_values`.
///
/// Divergent when the tail exceeds [`DIVERGENCE_THRESHOLD`] in magnitude with
/// constant sign and grows by [`DIVERGENCE_GROWTH`] per decade over the
/// last three samples. Finite when the last three successive differences
/// shrink in magnitude (or are below `1e-9` relative); the estimate is an
/// Aitken extrapolation when that is stable, the last value otherwise.
/// Anything else is undetermined.
pub fn limit_classifier(r_values: &[f64], values: &[f64]) -> Result<Limit> {
    if r_values.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} r values but {} samples",
            r_values.len(),
            values.len()
        )));
    }
    if r_values.len() < 4 {
        return Err(Error::domain("classification needs at least 4 r values"));
    }
    if r_values.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::domain("r values must be positive and strictly decreasing"));
    }
    let decades = (r_values[0] / r_values[r_values.len() - 1]).log10();
    if decades < 3.0 - 1e-9 {
        return Err(Error::domain(format!(
            "r values span {decades:.2} decades; at least 3 are needed"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Ok(Limit::Undetermined);
    }
    let n = values.len();
    let tail = &values[n - 3..];
    let tail_r = &r_values[n - 3..];
    let same_sign = tail.iter().all(|v| v.signum() == tail[0].signum());
    let growing = (0..2).all(|i| {
        let per_decade = (tail_r[i] / tail_r[i + 1]).log10();
        (tail[i + 1] / tail[i]).abs() >= DIVERGENCE_GROWTH.powf(per_decade)
    });
    if same_sign && growing && tail[2].abs() > DIVERGENCE_THRESHOLD {
        return Ok(if tail[2] > 0.0 { Limit::PosInf } else { Limit::NegInf });
    }
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let m = d.len();
    let scale = values[n - 1].abs().max(1.0);
    let negligible = |x: f64| x.abs() <= 1e-9 * scale;
    let shrinking = (m - 3..m - 1).all(|i| d[i + 1].abs() < d[i].abs() || negligible(d[i + 1]));
    if !shrinking {
        return Ok(Limit::Undetermined);
    }
    let last = values[n - 1];
    let (d1, d2) = (d[m - 2], d[m - 1]);
    let denom = d2 - d1;
    let estimate = if negligible(d2) || denom.abs() <= f64::EPSILON * scale {
        last
    } else {
        let aitken = last - d2 * d2 / denom;
        if aitken.is_finite() && (aitken - last).abs() <= 10.0 * d2.abs() {
            aitken
        } else {
            last
        }
    };
    Ok(Limit::Finite(estimate))
}

/// Limit of one quantity at one `λ` as `r → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub quantity: Quantity,
    pub lambda: f64,
    pub limit: Limit,
}

/// Classifies every `(quantity, λ)` column of a sweep. A column with a
/// failed row is undetermined.
pub fn classify_sweep(spec: &SweepSpec, rows: &[SweepRow]) -> Result<Vec<LimitRow>> {
    let n_r = spec.r_values.len();
    if rows.len() != n_r * spec.lambda_values.len() {
        return Err(Error::Shape(format!(
            "{} rows for a {}x{} sweep",
            rows.len(),
            spec.lambda_values.len(),
            n_r
        )));
    }
    let mut out = Vec::new();
    for (li, &lambda) in spec.lambda_values.iter().enumerate() {
        let column = &rows[li * n_r..(li + 1) * n_r];
        for &quantity in &spec.quantities {
            let values: Option<Vec<f64>> = column.iter().map(|row| row.get(spec, quantity)).collect();
            let limit = match values {
                Some(v) => limit_classifier(&spec.r_values, &v)?,
                None => Limit::Undetermined,
            };
            out.push(LimitRow {
                quantity,
                lambda,
                limit,
            });
        }
    }
    Ok(out)
}
