//! Compensated accumulation and a scaled-float carrier for quantities that
//! leave the double-precision exponent range.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Componentwise compensated sum of complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: Complex64) {
        self.re.add(value.re);
        self.im.add(value.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// A positive-or-signed real stored as `mantissa * exp(log_scale)`.
///
/// Used for the maximal domain functions on thin annuli, whose raw values
/// can exceed the double range long before the ratios built from them do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

// named methods rather than operator traits: every call site reads as
// scaled arithmetic
#[allow(clippy::should_implement_trait)]
impl Scaled {
    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        Self { mantissa, log_scale }
    }

    pub fn from_f64(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    /// Moves the magnitude into the exponent so the mantissa is ±1 (or 0).
    pub fn normalized(self) -> Self {
        if self.mantissa == 0.0 || !self.mantissa.is_finite() {
            return self;
        }
        Self::new(self.mantissa.signum(), self.log_scale + self.mantissa.abs().ln())
    }

    /// Natural log of the absolute value.
    pub fn ln_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn is_positive(self) -> bool {
        self.mantissa > 0.0
    }

    pub fn mul(self, other: Scaled) -> Scaled {
        Scaled::new(self.mantissa * other.mantissa, self.log_scale + other.log_scale)
    }

    pub fn div(self, other: Scaled) -> Scaled {
        Scaled::new(self.mantissa / other.mantissa, self.log_scale - other.log_scale)
    }

    pub fn powi(self, k: i32) -> Scaled {
        Scaled::new(self.mantissa.powi(k), self.log_scale * k as f64)
    }

    pub fn sqrt(self) -> Scaled {
        Scaled::new(self.mantissa.sqrt(), 0.5 * self.log_scale)
    }

    pub fn scale_by_exp(self, log_factor: f64) -> Scaled {
        Scaled::new(self.mantissa, self.log_scale + log_factor)
    }

    pub fn mul_f64(self, factor: f64) -> Scaled {
        Scaled::new(self.mantissa * factor, self.log_scale)
    }

    /// Plain value; may be `inf` or `0` when out of range.
    pub fn value(self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        self.mantissa.signum() * (self.mantissa.abs().ln() + self.log_scale).exp()
    }

    /// Plain value, or a range error naming `what` if it is not representable.
    pub fn checked_value(self, what: &str) -> Result<f64> {
        let v = self.value();
        if !v.is_finite() || (v == 0.0 && self.mantissa != 0.0) {
            return Err(Error::range(format!(
                "{what} = exp({:.6}) is outside double precision",
                self.ln_abs()
            )));
        }
        Ok(v)
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_bits() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn scaled_round_trip_and_range() {
        let x = Scaled::new(3.0, 2.0);
        assert!((x.value() - 3.0 * 2f64.exp()).abs() < 1e-12);
        assert!((x.normalized().value() - x.value()).abs() < 1e-12);
        let huge = Scaled::new(1.0, 1000.0);
        assert!(huge.checked_value("x").is_err());
        let ratio = huge.div(Scaled::new(2.0, 999.0));
        assert!((ratio.value() - 0.5 * 1f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn log_add_exp_matches_direct() {
        let v = log_add_exp(1.0, 2.0);
        assert!((v - (1f64.exp() + 2f64.exp()).ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(800.0, f64::NEG_INFINITY), 800.0);
        assert!((log_add_exp(800.0, 800.0) - (800.0 + 2f64.ln())).abs() < 1e-12);
    }
}
