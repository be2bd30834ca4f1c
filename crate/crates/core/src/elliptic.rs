//! Weierstrass elliptic functions on the rectangular lattice attached to the
//! annulus `A_r = {r < |z| < 1}`: half-periods `ω₁ = -ln r` and `ω₃ = iπ`.
//!
//! Evaluation uses nome series (Lambert series for `℘`, `℘'`, `ζ` and the
//! Jacobi product for `σ`) after reducing the argument into the centred
//! period cell. When the nome of the natural frame exceeds 1/2 the roles of
//! the two periods are exchanged; the functions themselves depend only on the
//! lattice, so no transformation of results is needed.
//!
//! `η₃ = ζ(ω₃)` is purely imaginary on this lattice and is stored as its
//! imaginary part (`eta3_im`).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Inside this radius (in units of the shortest full period) the poles of
/// `℘`, `℘'` and `ζ` are reported as errors instead of evaluated.
pub const POLE_EXCLUSION_RADIUS: f64 = 1e-6;

/// Nome above which the period frame is swapped.
const MAX_NOME: f64 = 0.5;

const SERIES_EPS: f64 = 1e-18;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Working frame: a base half-period `omega` and a second one `omega_p`
/// with `Im(omega_p / omega) > 0`, and the matching `η` values.
#[derive(Debug, Clone, Copy)]
struct Frame {
    omega: Complex64,
    omega_p: Complex64,
    eta: Complex64,
    eta_p: Complex64,
    ln_q: f64,
}

/// Lattice constants for the annulus `A_r`.
#[derive(Debug, Clone)]
pub struct EllipticContext {
    pub r: f64,
    /// Real half-period `ω₁ = -ln r`.
    pub omega1: f64,
    /// Imaginary part of `ω₃`, always `π`.
    pub omega3_im: f64,
    pub g2: f64,
    pub g3: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub eta1: f64,
    /// `η₃ = i * eta3_im`.
    pub eta3_im: f64,
    /// `c = η₁ / ω₁`.
    pub c: f64,
    /// Nome of the frame actually used for evaluation.
    pub q: f64,
    /// True when evaluation runs in the frame with base half-period `ω₃`.
    pub period_swapped: bool,
    /// Logarithms of `(e₁ - e₂, e₂ - e₃)` from theta constants. For r near 1
    /// the second gap is far below the spacing of doubles near `e₂` (and may
    /// underflow), so ordering is checked here.
    ln_gaps: (f64, f64),
    frame: Frame,
}

impl EllipticContext {
    /// Builds the lattice data for `A_r`, checking the half-period values
    /// against the cubic `4x³ - g₂x - g₃` to `tol`.
    pub fn new(r: f64, tol: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain(format!("inner radius r = {r} must lie in (0,1)")));
        }
        if !(tol > 0.0) {
            return Err(Error::domain(format!("tolerance {tol} must be positive")));
        }
        let omega1 = -r.ln();
        let natural_ln_q = -PI * PI / omega1;
        let period_swapped = natural_ln_q.exp() > MAX_NOME;
        let (omega, omega_p, ln_q) = if period_swapped {
            (Complex64::new(0.0, PI), Complex64::new(-omega1, 0.0), -omega1)
        } else {
            (Complex64::new(omega1, 0.0), Complex64::new(0.0, PI), natural_ln_q)
        };

        let e2_series = eisenstein_e2(ln_q);
        let eta = PI * PI * e2_series / (12.0 * omega);
        let mut frame = Frame {
            omega,
            omega_p,
            eta,
            eta_p: Complex64::new(0.0, 0.0),
            ln_q,
        };
        frame.eta_p = zeta_reduced(&frame, omega_p);

        let (ln_theta2, theta4) = theta_constants(ln_q);
        let t2 = (4.0 * ln_theta2).exp();
        let t4 = theta4.powi(4);
        let pref = (PI * PI / (12.0 * omega * omega)).re;
        let e_base = pref * (t2 + 2.0 * t4);
        let e_mid = pref * (t2 - t4);
        let e_p = -pref * (2.0 * t2 + t4);

        let ln_3pref = (3.0 * pref.abs()).ln();
        let (e1, e2, e3, eta1, eta3_im, ln_gaps) = if period_swapped && pref < 0.0 {
            let gaps = (ln_3pref + 4.0 * ln_theta2, ln_3pref + 4.0 * theta4.ln());
            (e_p, e_mid, e_base, -frame.eta_p.re, frame.eta.im, gaps)
        } else {
            let gaps = (ln_3pref + 4.0 * theta4.ln(), ln_3pref + 4.0 * ln_theta2);
            (e_base, e_mid, e_p, frame.eta.re, frame.eta_p.im, gaps)
        };
        let g2 = 2.0 * (e1 * e1 + e2 * e2 + e3 * e3);
        let g3 = 4.0 * e1 * e2 * e3;

        let ctx = EllipticContext {
            r,
            omega1,
            omega3_im: PI,
            g2,
            g3,
            e1,
            e2,
            e3,
            eta1,
            eta3_im,
            c: eta1 / omega1,
            q: ln_q.exp(),
            period_swapped,
            ln_gaps,
            frame,
        };
        ctx.check_invariants(tol)?;
        Ok(ctx)
    }

    fn check_invariants(&self, tol: f64) -> Result<()> {
        let scale = 1.0 + self.g2.abs() + self.g3.abs();
        let worst = [self.e1, self.e2, self.e3]
            .iter()
            .map(|&e| (4.0 * e * e * e - self.g2 * e - self.g3).abs())
            .fold(0.0, f64::max);
        let ordered =
            self.ln_gaps.0.is_finite() && self.ln_gaps.1.is_finite() && self.e1 >= self.e2 && self.e2 >= self.e3;
        if !ordered || worst > tol * scale || !self.eta1.is_finite() {
            return Err(Error::Convergence {
                what: format!(
                    "half-period values for r = {} (ordered: {ordered}, cubic residual {worst:e})",
                    self.r
                ),
                n_max: 0,
                tail_bound: worst / scale,
            });
        }
        Ok(())
    }

    /// `(ln(e₁ - e₂), ln(e₂ - e₃))`; finite values certify strict ordering.
    pub fn ln_root_gaps(&self) -> (f64, f64) {
        self.ln_gaps
    }

    pub fn omega(&self, k: usize) -> Result<Complex64> {
        match k {
            1 => Ok(Complex64::new(self.omega1, 0.0)),
            2 => Ok(Complex64::new(-self.omega1, -self.omega3_im)),
            3 => Ok(Complex64::new(0.0, self.omega3_im)),
            _ => Err(Error::domain(format!("half-period index {k} must be 1, 2 or 3"))),
        }
    }

    /// `η_k = ζ(ω_k)`, with `η₂ = -η₁ - η₃`.
    pub fn eta(&self, k: usize) -> Result<Complex64> {
        match k {
            1 => Ok(Complex64::new(self.eta1, 0.0)),
            2 => Ok(Complex64::new(-self.eta1, -self.eta3_im)),
            3 => Ok(Complex64::new(0.0, self.eta3_im)),
            _ => Err(Error::domain(format!("half-period index {k} must be 1, 2 or 3"))),
        }
    }

    /// `(z_red, a, b)` with `z = z_red + 2a·ω + 2b·ω'` in the working frame.
    fn reduce(&self, z: Complex64) -> (Complex64, i64, i64) {
        let f = &self.frame;
        let t = z / (2.0 * f.omega);
        let tau = f.omega_p / f.omega;
        let b = (t.im / tau.im).round();
        let a = (t - b * tau).re.round();
        let z_red = z - 2.0 * a * f.omega - 2.0 * b * f.omega_p;
        (z_red, a as i64, b as i64)
    }

    fn reduce_away_from_pole(&self, z: Complex64) -> Result<(Complex64, i64, i64)> {
        let (z_red, a, b) = self.reduce(z);
        let shortest = 2.0 * self.frame.omega.norm().min(self.frame.omega_p.norm());
        if z_red.norm() < POLE_EXCLUSION_RADIUS * shortest {
            return Err(Error::Pole { nearest: z - z_red });
        }
        Ok((z_red, a, b))
    }

    /// Weierstrass `℘(z)`.
    pub fn wp(&self, z: Complex64) -> Result<Complex64> {
        let (z_red, _, _) = self.reduce_away_from_pole(z)?;
        let f = &self.frame;
        let k = PI / (2.0 * f.omega);
        let s = lambert(f, k * z_red);
        Ok(-f.eta / f.omega + k * k * (s.csc2 - 8.0 * s.cos_n))
    }

    /// Derivative `℘'(z)`.
    pub fn wp_prime(&self, z: Complex64) -> Result<Complex64> {
        let (z_red, _, _) = self.reduce_away_from_pole(z)?;
        let f = &self.frame;
        let k = PI / (2.0 * f.omega);
        let s = lambert(f, k * z_red);
        Ok(k * k * k * (-2.0 * s.csc2 * s.cot + 16.0 * s.sin_n2))
    }

    /// Weierstrass `ζ(z)`, quasi-periodic with jumps `2η_k`.
    pub fn zeta(&self, z: Complex64) -> Result<Complex64> {
        let (z_red, a, b) = self.reduce_away_from_pole(z)?;
        let f = &self.frame;
        Ok(zeta_reduced(f, z_red) + 2.0 * a as f64 * f.eta + 2.0 * b as f64 * f.eta_p)
    }

    /// `ln σ(z)` on some branch; `-∞` at lattice points.
    pub fn ln_sigma(&self, z: Complex64) -> Complex64 {
        let (z_red, a, b) = self.reduce(z);
        let f = &self.frame;
        let base = ln_sigma_reduced(f, z_red);
        let (af, bf) = (a as f64, b as f64);
        let jump = (2.0 * af * f.eta + 2.0 * bf * f.eta_p) * (z_red + af * f.omega + bf * f.omega_p);
        let sign_flips = (a + b + a * b).rem_euclid(2) as f64;
        base + jump + Complex64::new(0.0, PI * sign_flips)
    }

    /// Weierstrass `σ(z)`; entire, odd, `σ(z)/z → 1` at the origin.
    pub fn sigma(&self, z: Complex64) -> Complex64 {
        let l = self.ln_sigma(z);
        if l.re == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        l.exp()
    }

    /// `σ_k(u) = e^{-η_k u} σ(u + ω_k) / σ(ω_k)` with its (tiny) imaginary
    /// part retained.
    pub fn sigma_k_complex(&self, k: usize, u: f64) -> Result<Complex64> {
        let l = self.ln_sigma_k(k, u)?;
        Ok(l.exp())
    }

    fn ln_sigma_k(&self, k: usize, u: f64) -> Result<Complex64> {
        let omega = self.omega(k)?;
        let eta = self.eta(k)?;
        let u = Complex64::new(u, 0.0);
        Ok(-eta * u + self.ln_sigma(u + omega) - self.ln_sigma(omega))
    }

    /// `σ_k(u)` for real `u`; real because the lattice is rectangular.
    pub fn sigma_k(&self, k: usize, u: f64) -> Result<f64> {
        Ok(self.sigma_k_complex(k, u)?.re)
    }

    /// `(σ₂*)²(u) = e^{-c u²} σ₂²(u)`.
    pub fn sigma2_star_sq(&self, u: f64) -> Result<f64> {
        let l = self.ln_sigma_k(2, u)?;
        let exponent = -self.c * u * u + 2.0 * l.re;
        // the two quadratic terms cancel; past this size nothing of the result survives
        let lost = self.c.abs() * u * u * f64::EPSILON;
        if !exponent.is_finite() || lost > 1e-8 || exponent > f64::MAX.ln() || exponent < f64::MIN_POSITIVE.ln() {
            return Err(Error::range(format!(
                "(σ₂*)²({u}) = exp({exponent:.3}) is outside double precision"
            )));
        }
        // σ₂ is real, so 2·Im ln σ₂ is a multiple of 2π and the square is positive.
        Ok(exponent.exp())
    }
}

/// `E₂ = 1 - 24 Σ n q^{2n} / (1 - q^{2n})`.
fn eisenstein_e2(ln_q: f64) -> f64 {
    let mut sum = 0.0;
    for n in 1.. {
        let q2n = (2.0 * n as f64 * ln_q).exp();
        let term = n as f64 * q2n / (1.0 - q2n);
        sum += term;
        if term < SERIES_EPS {
            break;
        }
    }
    1.0 - 24.0 * sum
}

/// `(ln θ₂(0,q), θ₄(0,q))` for real nome `q = e^{ln_q}`.
fn theta_constants(ln_q: f64) -> (f64, f64) {
    // θ₂ = 2 q^{1/4} Σ q^{n(n+1)}
    let mut theta2 = 0.0;
    for n in 0.. {
        let t = ((n * (n + 1)) as f64 * ln_q).exp();
        theta2 += t;
        if t < SERIES_EPS * theta2 {
            break;
        }
    }
    let mut theta4 = 1.0;
    for n in 1.. {
        let t = ((n * n) as f64 * ln_q).exp();
        theta4 += if n % 2 == 0 { 2.0 * t } else { -2.0 * t };
        if t < SERIES_EPS {
            break;
        }
    }
    (2f64.ln() + 0.25 * ln_q + theta2.ln(), theta4)
}

/// `e^z - 1` without cancellation for small `z`.
fn cexpm1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// `ln(1 - x)`, accurate for small `|x|`.
fn ln_one_minus(x: Complex64) -> Complex64 {
    if x.norm() < 1e-4 {
        -(x + x * x / 2.0 + x * x * x / 3.0 + x * x * x * x / 4.0)
    } else {
        (Complex64::new(1.0, 0.0) - x).ln()
    }
}

struct LambertSums {
    cot: Complex64,
    csc2: Complex64,
    /// `Σ q^{2n}/(1-q^{2n}) sin 2nv`
    sin_n: Complex64,
    /// `Σ n q^{2n}/(1-q^{2n}) cos 2nv`
    cos_n: Complex64,
    /// `Σ n² q^{2n}/(1-q^{2n}) sin 2nv`
    sin_n2: Complex64,
}

fn lambert(f: &Frame, v: Complex64) -> LambertSums {
    let (cot, csc2) = if v.im >= 0.0 {
        let wm1 = cexpm1(2.0 * I * v);
        let w = wm1 + 1.0;
        (I * (w + 1.0) / wm1, -4.0 * w / (wm1 * wm1))
    } else {
        let wm1 = cexpm1(-2.0 * I * v);
        let w = wm1 + 1.0;
        (-I * (w + 1.0) / wm1, -4.0 * w / (wm1 * wm1))
    };

    let mut sin_n = Complex64::new(0.0, 0.0);
    let mut cos_n = Complex64::new(0.0, 0.0);
    let mut sin_n2 = Complex64::new(0.0, 0.0);
    for n in 1..10_000 {
        let nf = n as f64;
        let q2n = (2.0 * nf * f.ln_q).exp();
        let lambert = 1.0 / (1.0 - q2n);
        let plus = Complex64::new(2.0 * nf * (f.ln_q - v.im), 2.0 * nf * v.re).exp();
        let minus = Complex64::new(2.0 * nf * (f.ln_q + v.im), -2.0 * nf * v.re).exp();
        let s = (plus - minus) / (2.0 * I) * lambert;
        let c = (plus + minus) / 2.0 * lambert;
        sin_n += s;
        cos_n += nf * c;
        sin_n2 += nf * nf * s;
        if nf * nf * (plus.norm() + minus.norm()) < SERIES_EPS {
            break;
        }
    }
    LambertSums {
        cot,
        csc2,
        sin_n,
        cos_n,
        sin_n2,
    }
}

fn zeta_reduced(f: &Frame, z: Complex64) -> Complex64 {
    let k = PI / (2.0 * f.omega);
    let s = lambert(f, k * z);
    f.eta * z / f.omega + k * (s.cot + 4.0 * s.sin_n)
}

/// `ln σ(z)` for `z` in the centred cell, through the Jacobi triple product.
fn ln_sigma_reduced(f: &Frame, z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        return Complex64::new(f64::NEG_INFINITY, 0.0);
    }
    let k = PI / (2.0 * f.omega);
    let v = k * z;
    let ln_sin = if v.im >= 0.0 {
        -I * v + (cexpm1(2.0 * I * v) / (2.0 * I)).ln()
    } else {
        I * v + (-cexpm1(-2.0 * I * v) / (2.0 * I)).ln()
    };
    let mut product = Complex64::new(0.0, 0.0);
    for n in 1..10_000 {
        let nf = n as f64;
        let q2n = (2.0 * nf * f.ln_q).exp();
        let plus = Complex64::new(2.0 * nf * (f.ln_q - v.im), 2.0 * nf * v.re).exp();
        let minus = Complex64::new(2.0 * nf * (f.ln_q + v.im), -2.0 * nf * v.re).exp();
        product += ln_one_minus(plus) + ln_one_minus(minus) - 2.0 * (-q2n).ln_1p();
        if plus.norm() + minus.norm() < SERIES_EPS {
            break;
        }
    }
    (1.0 / k).ln() + f.eta * z * z / (2.0 * f.omega) + ln_sin + product
}
