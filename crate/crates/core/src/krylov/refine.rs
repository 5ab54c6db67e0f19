use std::time::Instant;

use crate::error::{Error, Result};
use crate::gls::{self, GlsProblem, GlsState};
use crate::krylov::gmres::gmres;
use crate::krylov::operator::AugmentedOperator;
use crate::krylov::precond::{
    build_bd_precond_gls, build_bd_precond_lse, build_left_precond_gls, build_left_precond_lse, Preconditioner,
};
use crate::lse::{self, LseProblem, LseState};
use crate::precision::{norm2, pow2_scale, PrecisionLevel};
use crate::refine::{axpy_in_place, refine_loop, Refinable, RefinementConfig, RefinementTrace, Triple};
use crate::refine::PhaseTimings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondKind {
    Left,
    BdSplit,
}

/// Inner solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Multiplier applied to the default `alpha`.
    pub alpha_factor: f64,
    pub inner_tol: f64,
    /// Defaults to the augmented dimension.
    pub inner_max_iter: Option<usize>,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { alpha_factor: 1.0, inner_tol: 1e-6, inner_max_iter: None }
    }
}

impl GmresOptions {
    fn validate(&self) -> Result<()> {
        if !(self.alpha_factor > 0.0) || !self.alpha_factor.is_finite() {
            return Err(Error::InvalidInput(format!(
                "alpha_factor must be positive, got {}",
                self.alpha_factor
            )));
        }
        if !(self.inner_tol > 0.0 && self.inner_tol < 1.0) {
            return Err(Error::InvalidInput(format!("inner_tol must lie in (0, 1), got {}", self.inner_tol)));
        }
        Ok(())
    }
}

/// Power of two near `num / den`, or 1 when either norm vanishes.
fn balance(num: f64, den: f64) -> f64 {
    if num > 0.0 && den > 0.0 && (num / den).is_finite() {
        pow2_scale(num / den)
    } else {
        1.0
    }
}

fn alpha_from(norm: f64, factor: f64) -> f64 {
    let a = factor * norm;
    if a > 0.0 && a.is_finite() {
        a
    } else {
        factor
    }
}

struct Inner<'a> {
    op: AugmentedOperator<'a>,
    precond: Preconditioner,
    tol: f64,
    max_iter: usize,
}

impl Inner<'_> {
    fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, usize)> {
        let rep = gmres(&self.op, &self.precond, rhs, self.tol, self.max_iter)?;
        Ok((rep.solution, rep.iterations))
    }
}

fn split3(u: &[f64], k1: usize, k2: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (u[..k1].to_vec(), u[k1..k1 + k2].to_vec(), u[k1 + k2..].to_vec())
}

struct LseKrylovJob<'a> {
    problem: &'a LseProblem,
    norms: lse::LseNorms,
    state: LseState,
    inner: Inner<'a>,
    residual: PrecisionLevel,
    beta: f64,
}

impl Refinable for LseKrylovJob<'_> {
    const KRYLOV: bool = true;

    fn residuals(&self) -> Result<Triple> {
        let (f1, f2, f3) = lse::lse_residuals(self.problem, &self.state, self.residual)?;
        Ok([f1, f2, f3])
    }

    fn bounds(&self) -> [f64; 3] {
        let s = &self.state;
        lse::stop_bounds(&self.norms, [norm2(&s.x), norm2(&s.r), norm2(&s.v)])
    }

    fn correct(&mut self, f: &Triple) -> Result<(Triple, usize)> {
        let a = self.inner.op.alpha;
        let rhs: Vec<f64> = f[0].iter().chain(&f[1]).copied().chain(f[2].iter().map(|x| x / a)).collect();
        let (u, k) = self.inner.solve(&rhs)?;
        let (u1, u2, u3) = split3(&u, f[0].len(), f[1].len());
        let dr = u1.iter().map(|x| a * x).collect();
        let dv = u2.iter().map(|x| -a * x).collect();
        Ok(([dr, dv, u3], k))
    }

    fn update(&mut self, delta: &Triple) {
        axpy_in_place(&mut self.state.r, &delta[0]);
        axpy_in_place(&mut self.state.v, &delta[1]);
        axpy_in_place(&mut self.state.x, &delta[2]);
    }

    fn recorded(&self, f: [f64; 3]) -> [f64; 3] {
        [f[0], f[1] / self.beta, f[2]]
    }
}

/// GMRES-based refinement for LSE with default inner settings.
pub fn gmres_refine_lse(
    problem: &LseProblem,
    config: &RefinementConfig,
    kind: PrecondKind,
) -> Result<(LseState, RefinementTrace)> {
    gmres_refine_lse_with(problem, config, kind, &GmresOptions::default())
}

/// `B` and `d` are scaled by a power of two near `||A||_F / ||B||_F`
/// before factorization; `v` is scaled back on return.
pub fn gmres_refine_lse_with(
    problem: &LseProblem,
    config: &RefinementConfig,
    kind: PrecondKind,
    options: &GmresOptions,
) -> Result<(LseState, RefinementTrace)> {
    config.validate()?;
    options.validate()?;
    let beta = balance(problem.a.frobenius_norm(), problem.b_mat.frobenius_norm());
    let scaled = LseProblem {
        a: problem.a.clone(),
        b_mat: problem.b_mat.scaled(beta),
        b: problem.b.clone(),
        d: problem.d.iter().map(|x| x * beta).collect(),
    };
    let mut timings = PhaseTimings::default();
    let (store, state) = lse::initial_state(&scaled, config, &mut timings)?;
    let t0 = Instant::now();
    let alpha = alpha_from(norm2(&state.r), options.alpha_factor);
    let factors = store.working_unscaled();
    let precond = match kind {
        PrecondKind::Left => build_left_precond_lse(&factors, alpha)?,
        PrecondKind::BdSplit => build_bd_precond_lse(&factors, alpha)?,
    };
    let op = AugmentedOperator::lse(&scaled, alpha)?;
    let max_iter = options.inner_max_iter.unwrap_or(op.total_dim());
    timings.init += t0.elapsed().as_secs_f64();
    let mut job = LseKrylovJob {
        problem: &scaled,
        norms: scaled.norms(),
        state,
        inner: Inner { op, precond, tol: options.inner_tol, max_iter },
        residual: config.precisions.residual,
        beta,
    };
    let trace = refine_loop(&mut job, config, timings)?;
    let mut st = job.state;
    st.v.iter_mut().for_each(|x| *x *= beta);
    Ok((st, trace))
}

struct GlsKrylovJob<'a> {
    problem: &'a GlsProblem,
    norms: gls::GlsNorms,
    state: GlsState,
    inner: Inner<'a>,
    residual: PrecisionLevel,
    beta: f64,
}

impl Refinable for GlsKrylovJob<'_> {
    const KRYLOV: bool = true;

    fn residuals(&self) -> Result<Triple> {
        let (f1, f2, f3) = gls::gls_residuals(self.problem, &self.state, self.residual)?;
        Ok([f1, f2, f3])
    }

    fn bounds(&self) -> [f64; 3] {
        let s = &self.state;
        gls::stop_bounds(&self.norms, [norm2(&s.x), norm2(&s.y), norm2(&s.z)])
    }

    fn correct(&mut self, f: &Triple) -> Result<(Triple, usize)> {
        let a = self.inner.op.alpha;
        let rhs: Vec<f64> = f[0].iter().copied().chain(f[1].iter().map(|x| x / a)).chain(f[2].iter().copied()).collect();
        let (u, k) = self.inner.solve(&rhs)?;
        let (u1, u2, u3) = split3(&u, f[0].len(), f[1].len());
        let dy = u1.iter().map(|x| a * x).collect();
        let dz = u2.iter().map(|x| -x).collect();
        let dx = u3.iter().map(|x| a * x).collect();
        Ok(([dy, dz, dx], k))
    }

    fn update(&mut self, delta: &Triple) {
        axpy_in_place(&mut self.state.y, &delta[0]);
        axpy_in_place(&mut self.state.z, &delta[1]);
        axpy_in_place(&mut self.state.x, &delta[2]);
    }

    fn recorded(&self, f: [f64; 3]) -> [f64; 3] {
        [f[0], f[1], f[2] / self.beta]
    }
}

pub fn gmres_refine_gls(
    problem: &GlsProblem,
    config: &RefinementConfig,
    kind: PrecondKind,
) -> Result<(GlsState, RefinementTrace)> {
    gmres_refine_gls_with(problem, config, kind, &GmresOptions::default())
}

/// `W` is scaled by a power of two near `||V||_F / ||W||_F` before
/// factorization; `x` is scaled back on return.
pub fn gmres_refine_gls_with(
    problem: &GlsProblem,
    config: &RefinementConfig,
    kind: PrecondKind,
    options: &GmresOptions,
) -> Result<(GlsState, RefinementTrace)> {
    config.validate()?;
    options.validate()?;
    let beta = balance(problem.v.frobenius_norm(), problem.w.frobenius_norm());
    let scaled = GlsProblem { w: problem.w.scaled(beta), v: problem.v.clone(), d: problem.d.clone() };
    let mut timings = PhaseTimings::default();
    let (store, state) = gls::initial_state(&scaled, config, &mut timings)?;
    let t0 = Instant::now();
    let alpha = alpha_from(norm2(&state.y), options.alpha_factor);
    let factors = store.working_unscaled();
    let precond = match kind {
        PrecondKind::Left => build_left_precond_gls(&factors, alpha)?,
        PrecondKind::BdSplit => build_bd_precond_gls(&factors, alpha)?,
    };
    let op = AugmentedOperator::gls(&scaled, alpha)?;
    let max_iter = options.inner_max_iter.unwrap_or(op.total_dim());
    timings.init += t0.elapsed().as_secs_f64();
    let mut job = GlsKrylovJob {
        problem: &scaled,
        norms: scaled.norms(),
        state,
        inner: Inner { op, precond, tol: options.inner_tol, max_iter },
        residual: config.precisions.residual,
        beta,
    };
    let trace = refine_loop(&mut job, config, timings)?;
    let mut st = job.state;
    st.x.iter_mut().for_each(|x| *x *= beta);
    Ok((st, trace))
}
