//! Shared iterative-refinement loop, configuration and trace types.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{norm2, PrecisionConfig, PrecisionLevel, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementConfig {
    pub tol: f64,
    pub maxit: usize,
    pub precisions: PrecisionConfig,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            tol: 1e-13,
            maxit: 40,
            precisions: PrecisionConfig::default(),
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidInput("maxit must be at least 1".into()));
        }
        self.precisions.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementStatus {
    Converged,
    MaxIterations,
    Diverged,
}

impl RefinementStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RefinementStatus::Converged => "converged",
            RefinementStatus::MaxIterations => "max_iterations",
            RefinementStatus::Diverged => "diverged",
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub factorization: f64,
    pub init: f64,
    pub residual: f64,
    pub correction: f64,
    pub gmres: f64,
    pub other: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub status: RefinementStatus,
    /// Number of residual evaluations; equals `residual_history.len()`.
    pub iterations: usize,
    pub residual_history: Vec<[f64; 3]>,
    /// Total inner Krylov iterations (0 for classical refinement).
    pub inner_iterations: usize,
    pub timings: PhaseTimings,
}

/// Growth factor of the scaled residual over its running minimum that
/// counts as divergence.
pub const DIVERGENCE_GROWTH: f64 = 1e4;

#[derive(Debug, Clone, Default)]
pub(crate) struct DivergenceMonitor {
    min: Option<f64>,
}

impl DivergenceMonitor {
    /// Feed the next scaled residual; true means diverged.
    pub(crate) fn observe(&mut self, scaled: f64) -> bool {
        if scaled.is_nan() {
            return true;
        }
        match self.min {
            Some(m) if m.is_finite() && m > 0.0 => {
                if scaled >= DIVERGENCE_GROWTH * m {
                    return true;
                }
                self.min = Some(m.min(scaled));
            }
            _ => self.min = Some(self.min.map_or(scaled, |m| m.min(scaled))),
        }
        false
    }
}

/// `max_i fi / bounds_i`, with `0/0 = 0`.
pub(crate) fn scaled_residual(f: &[f64; 3], bounds: &[f64; 3]) -> f64 {
    f.iter()
        .zip(bounds)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a / b
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) type Triple = [Vec<f64>; 3];

/// One refinement problem: residuals, the stop-check bounds, corrections.
pub(crate) trait Refinable {
    /// Corrections come from an inner Krylov solve.
    const KRYLOV: bool = false;
    fn residuals(&self) -> Result<Triple>;
    /// Right-hand sides of the stop check without the `tol` factor.
    fn bounds(&self) -> [f64; 3];
    /// Returns the correction triple and the inner iteration count.
    fn correct(&mut self, f: &Triple) -> Result<(Triple, usize)>;
    fn update(&mut self, delta: &Triple);
    /// Norms recorded in the trace.
    fn recorded(&self, f_norms: [f64; 3]) -> [f64; 3] {
        f_norms
    }
}

pub(crate) fn refine_loop<P: Refinable>(
    job: &mut P,
    config: &RefinementConfig,
    mut timings: PhaseTimings,
) -> Result<RefinementTrace> {
    let mut history = Vec::new();
    let mut inner = 0;
    let mut monitor = DivergenceMonitor::default();
    let mut status = RefinementStatus::MaxIterations;
    for _ in 0..config.maxit {
        let t0 = Instant::now();
        let f = job.residuals()?;
        timings.residual += t0.elapsed().as_secs_f64();
        let norms = [norm2(&f[0]), norm2(&f[1]), norm2(&f[2])];
        history.push(job.recorded(norms));
        if norms.iter().any(|x| !x.is_finite()) {
            status = RefinementStatus::Diverged;
            break;
        }
        let bounds = job.bounds();
        if norms
            .iter()
            .zip(&bounds)
            .all(|(&fi, &bi)| fi <= config.tol * bi)
        {
            status = RefinementStatus::Converged;
            break;
        }
        if monitor.observe(scaled_residual(&norms, &bounds)) {
            status = RefinementStatus::Diverged;
            break;
        }
        let t0 = Instant::now();
        let (delta, k) = job.correct(&f)?;
        let dt = t0.elapsed().as_secs_f64();
        if P::KRYLOV {
            timings.gmres += dt;
        } else {
            timings.correction += dt;
        }
        inner += k;
        let t0 = Instant::now();
        job.update(&delta);
        timings.other += t0.elapsed().as_secs_f64();
    }
    Ok(RefinementTrace {
        status,
        iterations: history.len(),
        residual_history: history,
        inner_iterations: inner,
        timings,
    })
}

pub(crate) fn axpy_in_place(y: &mut [f64], x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += b;
    }
}

/// Common scale for a group of right-hand-side vectors before rounding to
/// `T`. Unity for binary64; a power of two near the max-abs entry otherwise.
pub(crate) fn rhs_scale<T: Scalar>(parts: &[&[f64]]) -> f64 {
    if T::LEVEL != PrecisionLevel::Low {
        return 1.0;
    }
    let m = parts
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        1.0
    } else {
        crate::precision::pow2_scale(m)
    }
}

pub(crate) fn round_to<T: Scalar>(v: &[f64], s: f64) -> Vec<T> {
    v.iter().map(|&x| T::from_f64_round(x / s)).collect()
}

pub(crate) fn widen_from<T: Scalar>(v: &[T], s: f64) -> Vec<f64> {
    v.iter().map(|x| x.widen() * s).collect()
}
