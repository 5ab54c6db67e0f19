//! Precision levels, binary32 demotion with overflow-safe scaling, and
//! double-double accumulation kernels.
//!
//! The refinement drivers use up to four precisions: one for the
//! factorization, one for the correction solve, the working precision in
//! which iterates are stored, and one for residual evaluation. `Low` is IEEE
//! binary32, `Working` is binary64, and `Extended` is emulated with
//! double-double accumulation of inner products (no double-double matrices
//! are ever stored).

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionLevel {
    Low,
    Working,
    Extended,
}

impl PrecisionLevel {
    pub fn unit_roundoff(self) -> f64 {
        match self {
            PrecisionLevel::Low => f64::powi(2.0, -24),
            PrecisionLevel::Working => f64::powi(2.0, -53),
            PrecisionLevel::Extended => f64::powi(2.0, -106),
        }
    }
}

/// The four-precision assignment `(factor, solve, working, residual)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionConfig {
    pub factor: PrecisionLevel,
    pub solve: PrecisionLevel,
    pub working: PrecisionLevel,
    pub residual: PrecisionLevel,
}

impl Default for PrecisionConfig {
    /// single / single / double / double.
    fn default() -> Self {
        PrecisionConfig {
            factor: PrecisionLevel::Low,
            solve: PrecisionLevel::Low,
            working: PrecisionLevel::Working,
            residual: PrecisionLevel::Working,
        }
    }
}

impl PrecisionConfig {
    pub fn with_residual(mut self, residual: PrecisionLevel) -> Self {
        self.residual = residual;
        self
    }

    pub fn uniform_working() -> Self {
        PrecisionConfig {
            factor: PrecisionLevel::Working,
            solve: PrecisionLevel::Working,
            working: PrecisionLevel::Working,
            residual: PrecisionLevel::Working,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let u = |l: PrecisionLevel| l.unit_roundoff();
        if self.working != PrecisionLevel::Working {
            return Err(Error::InvalidInput(
                "working precision must be binary64".into(),
            ));
        }
        if self.factor == PrecisionLevel::Extended || self.solve == PrecisionLevel::Extended {
            return Err(Error::InvalidInput(
                "extended precision is only available for residual accumulation".into(),
            ));
        }
        if !(u(self.factor) >= u(self.solve)
            && u(self.solve) >= u(self.working)
            && u(self.working) >= u(self.residual))
        {
            return Err(Error::InvalidInput(format!(
                "precisions must satisfy u_f >= u_s >= u >= u_r, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Floating-point types a factorization can be computed in.
pub trait Scalar:
    num_traits::Float + std::fmt::Debug + std::fmt::Display + Send + Sync + Default + 'static
{
    const LEVEL: PrecisionLevel;
    /// Round a binary64 value to this type.
    fn from_f64_round(x: f64) -> Self;
    /// Exact widening to binary64.
    fn widen(self) -> f64;
}

impl Scalar for f32 {
    const LEVEL: PrecisionLevel = PrecisionLevel::Low;
    #[inline]
    fn from_f64_round(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn widen(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const LEVEL: PrecisionLevel = PrecisionLevel::Working;
    #[inline]
    fn from_f64_round(x: f64) -> Self {
        x
    }
    #[inline]
    fn widen(self) -> f64 {
        self
    }
}

/// A binary32 vector together with the scale that was divided out before
/// rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLowVector {
    pub data: Vec<f32>,
    pub scale: f64,
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Demote a binary64 vector to binary32 after dividing by its max-abs entry.
pub fn demote_vector(v: &[f64]) -> Result<ScaledLowVector> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("cannot demote a non-finite vector".into()));
    }
    let s = max_abs(v);
    if s == 0.0 {
        return Ok(ScaledLowVector {
            data: vec![0.0; v.len()],
            scale: 1.0,
        });
    }
    Ok(ScaledLowVector {
        data: v.iter().map(|&x| (x / s) as f32).collect(),
        scale: s,
    })
}

pub fn promote_vector(w: &ScaledLowVector) -> Vec<f64> {
    w.data.iter().map(|&x| w.scale * x as f64).collect()
}

/// Double-double number `hi + lo` with `|lo| <= ulp(hi)/2` after
/// normalization.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    pub fn new(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = fast_two_sum(s, e + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    #[inline]
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let (p, ep) = two_prod(a, b);
        let (s, es) = two_sum(self.hi, p);
        let (hi, lo) = fast_two_sum(s, es + ep + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Dot product accumulated in double-double and rounded once at the end.
pub fn extended_dot(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("extended_dot", y.len(), x.len())?;
    let mut acc = DoubleDouble::default();
    for (&a, &b) in x.iter().zip(y) {
        acc.add_prod(a, b);
    }
    Ok(acc.to_f64())
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Power of two near `x`, so that dividing by it is exact.
pub(crate) fn pow2_scale(x: f64) -> f64 {
    2f64.powi(x.log2().floor() as i32)
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    let s = max_abs(x);
    if s == 0.0 || !s.is_finite() {
        return s;
    }
    let s = pow2_scale(s);
    s * x.iter().map(|v| (v / s) * (v / s)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundoff_ordering() {
        assert!(PrecisionLevel::Low.unit_roundoff() > PrecisionLevel::Working.unit_roundoff());
        assert!(
            PrecisionLevel::Working.unit_roundoff() > PrecisionLevel::Extended.unit_roundoff()
        );
    }

    #[test]
    fn config_validation() {
        assert!(PrecisionConfig::default().validate().is_ok());
        assert!(PrecisionConfig::default()
            .with_residual(PrecisionLevel::Extended)
            .validate()
            .is_ok());
        let bad = PrecisionConfig {
            factor: PrecisionLevel::Working,
            solve: PrecisionLevel::Low,
            ..PrecisionConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PrecisionConfig {
            working: PrecisionLevel::Low,
            ..PrecisionConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn demote_zero() {
        let w = demote_vector(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(w.data, vec![0.0; 3]);
        assert_eq!(w.scale, 1.0);
    }

    #[test]
    fn demote_beyond_binary32_range() {
        let w = demote_vector(&[1e200, -2e200]).unwrap();
        assert_eq!(w.scale, 2e200);
        assert_eq!(w.data, vec![0.5, -1.0]);
        assert!(w.data.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn demote_rejects_nan() {
        assert!(matches!(
            demote_vector(&[1.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(demote_vector(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn promote_exact() {
        let w = ScaledLowVector { data: vec![0.5, -1.0], scale: 2.0 };
        assert_eq!(promote_vector(&w), vec![1.0, -2.0]);
        let w = ScaledLowVector { data: vec![0.0], scale: 1.0 };
        assert_eq!(promote_vector(&w), vec![0.0]);
    }

    #[test]
    fn extended_dot_cancellation() {
        let x = [1e16, 1.0, -1e16];
        let y = [1.0, 1.0, 1.0];
        assert_eq!(extended_dot(&x, &y).unwrap(), 1.0);
        // naive left-to-right loses the 1
        let naive: f64 = x.iter().zip(&y).fold(0.0, |s, (a, b)| s + a * b);
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn extended_dot_simple() {
        assert_eq!(extended_dot(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(extended_dot(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(), 32.0);
        assert!(matches!(
            extended_dot(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn norm2_no_overflow() {
        assert!((norm2(&[3e200, 4e200]) / 5e200 - 1.0).abs() < 1e-15);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(norm2(&[]), 0.0);
    }
}
