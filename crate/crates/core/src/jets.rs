//! Truncated Wirtinger jets: tables of `∂^j ∂̄^k f` at a base point for
//! `0 ≤ j, k ≤ N`.
//!
//! Internally products and compositions work on the Taylor coefficients
//! `∂^j∂̄^k f / (j! k!)` of `f(z₀ + h) = Σ a_{jk} h^j h̄^k`; the box truncation
//! `j, k ≤ N` is closed under multiplication, so no information beyond the
//! table is needed. The Laplacian convention throughout is `Δ = 4∂∂̄`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported jet order.
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerJet {
    order: usize,
    /// Row-major `(j, k)` table of mixed derivatives.
    coeffs: Vec<Complex64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::Shape(format!(
            "jet order {order} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

impl WirtingerJet {
    pub fn zero(order: usize) -> Result<Self> {
        check_order(order)?;
        Ok(WirtingerJet {
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); (order + 1) * (order + 1)],
        })
    }

    pub fn constant(order: usize, value: Complex64) -> Result<Self> {
        let mut jet = Self::zero(order)?;
        jet.coeffs[0] = value;
        Ok(jet)
    }

    pub fn unit(order: usize) -> Result<Self> {
        Self::constant(order, Complex64::new(1.0, 0.0))
    }

    /// Jet of `z` at `z0`.
    pub fn z(order: usize, z0: Complex64) -> Result<Self> {
        let mut jet = Self::constant(order, z0)?;
        if order >= 1 {
            jet.set(1, 0, Complex64::new(1.0, 0.0));
        }
        Ok(jet)
    }

    /// Jet of `z̄` at `z0`.
    pub fn zbar(order: usize, z0: Complex64) -> Result<Self> {
        let mut jet = Self::constant(order, z0.conj())?;
        if order >= 1 {
            jet.set(0, 1, Complex64::new(1.0, 0.0));
        }
        Ok(jet)
    }

    /// Builds a jet from a derivative oracle `(j, k) ↦ ∂^j∂̄^k f`.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut jet = Self::zero(order)?;
        for j in 0..=order {
            for k in 0..=order {
                jet.set(j, k, f(j, k));
            }
        }
        Ok(jet)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `∂^j ∂̄^k f` at the base point.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.coeffs[j * (self.order + 1) + k]
    }

    pub fn set(&mut self, j: usize, k: usize, value: Complex64) {
        let n = self.order + 1;
        self.coeffs[j * n + k] = value;
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// True when `coeffs(j,k) = conj(coeffs(k,j))` to relative `tol`.
    pub fn is_real_symmetric(&self, tol: f64) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (0..=self.order)
            .all(|j| (0..=self.order).all(|k| (self.get(j, k) - self.get(k, j).conj()).norm() <= tol * scale))
    }

    /// The jet of `∂∂̄ f`, one order lower.
    pub fn mixed_shift(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::Shape("cannot differentiate an order-0 jet".into()));
        }
        Self::from_fn(self.order - 1, |j, k| self.get(j + 1, k + 1))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        WirtingerJet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    fn to_taylor(&self) -> Vec<Complex64> {
        let mut t = self.coeffs.clone();
        for j in 0..=self.order {
            for k in 0..=self.order {
                t[j * (self.order + 1) + k] /= factorial(j) * factorial(k);
            }
        }
        t
    }

    fn from_taylor(order: usize, mut t: Vec<Complex64>) -> Self {
        for j in 0..=order {
            for k in 0..=order {
                t[j * (order + 1) + k] *= factorial(j) * factorial(k);
            }
        }
        WirtingerJet { order, coeffs: t }
    }

    /// Applies `φ(f)` given the Taylor coefficients `φ^{(m)}(f₀)/m!`, `m ≤ 2N`.
    fn compose(&self, series: &[Complex64]) -> Self {
        let n = self.order + 1;
        let mut h = self.to_taylor();
        h[0] = Complex64::new(0.0, 0.0);
        let mut result = vec![Complex64::new(0.0, 0.0); n * n];
        result[0] = series[0];
        let mut power = h.clone();
        for coefficient in series.iter().skip(1) {
            for (acc, p) in result.iter_mut().zip(&power) {
                *acc += coefficient * p;
            }
            power = taylor_product(self.order, &power, &h);
        }
        Self::from_taylor(self.order, result)
    }
}

fn same_shape(a: &WirtingerJet, b: &WirtingerJet) -> Result<()> {
    if a.order != b.order {
        return Err(Error::Shape(format!("jet orders differ: {} and {}", a.order, b.order)));
    }
    Ok(())
}

fn taylor_product(order: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = order + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for j1 in 0..n {
        for k1 in 0..n {
            let x = a[j1 * n + k1];
            if x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j2 in 0..n - j1 {
                for k2 in 0..n - k1 {
                    out[(j1 + j2) * n + k1 + k2] += x * b[j2 * n + k2];
                }
            }
        }
    }
    out
}

pub fn jet_add(a: &WirtingerJet, b: &WirtingerJet) -> Result<WirtingerJet> {
    same_shape(a, b)?;
    Ok(WirtingerJet {
        order: a.order,
        coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
    })
}

pub fn jet_sub(a: &WirtingerJet, b: &WirtingerJet) -> Result<WirtingerJet> {
    jet_add(a, &b.scale(Complex64::new(-1.0, 0.0)))
}

/// Leibniz product.
pub fn jet_mul(a: &WirtingerJet, b: &WirtingerJet) -> Result<WirtingerJet> {
    same_shape(a, b)?;
    let t = taylor_product(a.order, &a.to_taylor(), &b.to_taylor());
    Ok(WirtingerJet::from_taylor(a.order, t))
}

fn series_len(jet: &WirtingerJet) -> usize {
    2 * jet.order + 1
}

fn nonzero_base(a: &WirtingerJet, what: &str) -> Result<Complex64> {
    let f0 = a.value();
    if f0.norm() == 0.0 || !f0.is_finite() {
        return Err(Error::SingularJet(format!("{what} of a jet with value {f0}")));
    }
    Ok(f0)
}

fn off_branch_cut(a: &WirtingerJet, what: &str) -> Result<Complex64> {
    let f0 = nonzero_base(a, what)?;
    if f0.im == 0.0 && f0.re < 0.0 {
        return Err(Error::SingularJet(format!(
            "{what} of a jet whose value {f0} lies on the branch cut"
        )));
    }
    Ok(f0)
}

/// Principal logarithm.
pub fn jet_log(a: &WirtingerJet) -> Result<WirtingerJet> {
    let f0 = off_branch_cut(a, "log")?;
    let series: Vec<Complex64> = (0..series_len(a))
        .map(|m| {
            if m == 0 {
                f0.ln()
            } else {
                let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                sign / (m as f64 * f0.powi(m as i32))
            }
        })
        .collect();
    Ok(a.compose(&series))
}

/// Principal square root.
pub fn jet_sqrt(a: &WirtingerJet) -> Result<WirtingerJet> {
    let f0 = off_branch_cut(a, "sqrt")?;
    let root = f0.sqrt();
    let mut series = Vec::with_capacity(series_len(a));
    // binom(1/2, m) f0^{1/2 - m}
    let mut binom = 1.0;
    let mut power = root;
    for m in 0..series_len(a) {
        series.push(binom * power);
        binom *= (0.5 - m as f64) / (m as f64 + 1.0);
        power /= f0;
    }
    Ok(a.compose(&series))
}

pub fn jet_recip(a: &WirtingerJet) -> Result<WirtingerJet> {
    let f0 = nonzero_base(a, "reciprocal")?;
    let inv = 1.0 / f0;
    let series: Vec<Complex64> = (0..series_len(a))
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * inv.powi(m as i32 + 1)
        })
        .collect();
    Ok(a.compose(&series))
}

/// `Δf = 4 Re ∂∂̄f` for a real-valued `f`.
pub fn laplacian_from_jet(a: &WirtingerJet) -> Result<f64> {
    if a.order == 0 {
        return Err(Error::Shape("the Laplacian needs a jet of order at least 1".into()));
    }
    Ok(4.0 * a.get(1, 1).re)
}

/// `det(∂^j ∂̄^k f)_{0 ≤ j,k ≤ n}` for `n ≤` the jet order.
pub fn mixed_hessian_det(a: &WirtingerJet, n: usize) -> Result<Complex64> {
    if n > a.order {
        return Err(Error::Shape(format!(
            "determinant of size {} needs a jet of order {n}, got {}",
            n + 1,
            a.order
        )));
    }
    let size = n + 1;
    let mut m: Vec<Vec<Complex64>> = (0..size).map(|j| (0..size).map(|k| a.get(j, k)).collect()).collect();
    // Gaussian elimination with partial pivoting
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..size {
        let pivot = (col..size)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .unwrap_or(col);
        if m[pivot][col].norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..size {
            let factor = m[row][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(row);
            for (x, pivot_entry) in lower[0][col..size].iter_mut().zip(&upper[col][col..size]) {
                *x -= factor * pivot_entry;
            }
        }
    }
    Ok(det)
}
