//! Equality-constrained least squares `min ||Ax - b||` subject to `Bx = d`.

use std::time::Instant;

use crate::error::{check_len, Error, Result};
use crate::factor::{gemv_view, grq, grq_demoted, trsv_view, Accumulator, DenseMatrix, GrqFactors};
use crate::precision::{norm2, PrecisionLevel, Scalar};
use crate::refine::{axpy_in_place, refine_loop, rhs_scale, round_to, widen_from, Refinable, Triple};

pub use crate::refine::{PhaseTimings, RefinementConfig, RefinementStatus, RefinementTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct LseProblem {
    pub a: DenseMatrix<f64>,
    pub b_mat: DenseMatrix<f64>,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
}

/// Norms of the problem data used by the stopping test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LseNorms {
    pub b: f64,
    pub d: f64,
    pub a_fro: f64,
    pub b_fro: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LseState {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
}

fn finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
    }
    Ok(())
}

impl LseProblem {
    pub fn new(a: DenseMatrix<f64>, b_mat: DenseMatrix<f64>, b: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let (m, n, p) = (a.rows(), a.cols(), b_mat.rows());
        if m == 0 || n == 0 || p == 0 {
            return Err(Error::Dimension("LSE dimensions must be positive".into()));
        }
        if b_mat.cols() != n {
            return Err(Error::Dimension(format!("A is {m}x{n} but B has {} columns", b_mat.cols())));
        }
        if p > n || n > m + p {
            return Err(Error::Dimension(format!(
                "need p <= n <= m + p, got (m, n, p) = ({m}, {n}, {p})"
            )));
        }
        check_len("b", b.len(), m)?;
        check_len("d", d.len(), p)?;
        finite(a.as_slice(), "A")?;
        finite(b_mat.as_slice(), "B")?;
        finite(&b, "b")?;
        finite(&d, "d")?;
        Ok(LseProblem { a, b_mat, b, d })
    }

    /// `(m, n, p)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.rows(), self.a.cols(), self.b_mat.rows())
    }

    pub fn norms(&self) -> LseNorms {
        LseNorms {
            b: norm2(&self.b),
            d: norm2(&self.d),
            a_fro: self.a.frobenius_norm(),
            b_fro: self.b_mat.frobenius_norm(),
        }
    }
}

impl LseState {
    pub fn zeros(m: usize, n: usize, p: usize) -> Self {
        LseState { x: vec![0.0; n], r: vec![0.0; m], v: vec![0.0; p] }
    }
}

fn check_factor_dims<T>(f: &GrqFactors<T>, m: usize, n: usize, p: usize) -> Result<()> {
    if (f.m, f.n, f.p) != (m, n, p) {
        return Err(Error::Dimension(format!(
            "factors are for ({}, {}, {}), problem is ({m}, {n}, {p})",
            f.m, f.n, f.p
        )));
    }
    Ok(())
}

fn sub_assign<T: Scalar>(y: &mut [T], x: &[T]) {
    for (a, &b) in y.iter_mut().zip(x) {
        *a = *a - b;
    }
}

/// Null-space solution for the unit-scale factors: `R y2 = d`, `c = Z^T b`,
/// `T11 y1 = c1 - T12 y2`, `x = Q^T y`.
fn direct_kernel<T: Scalar>(f: &GrqFactors<T>, b: &[T], d: &[T]) -> Result<Vec<T>> {
    let k = f.n - f.p;
    let y2 = trsv_view(f.r.view(), d, false, "R")?;
    let c = f.z.apply(b, true)?;
    let mut rhs = c[..k].to_vec();
    sub_assign(&mut rhs, &gemv_view(f.t12(), &y2, false));
    let y1 = trsv_view(f.t11(), &rhs, false, "T11")?;
    let mut y = y1;
    y.extend_from_slice(&y2);
    f.q.apply(&y, true)
}

/// Correction cascade for the unit-scale factors.
fn correction_kernel<T: Scalar>(
    f: &GrqFactors<T>,
    f1: &[T],
    f2: &[T],
    f3: &[T],
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let k = f.n - f.p;
    let u = f.q.apply(f3, false)?;
    let (u1, u2) = u.split_at(k);
    let w = f.z.apply(f1, true)?;
    let (w1, w2) = w.split_at(k);
    let y2 = trsv_view(f.r.view(), f2, false, "R")?;
    let q1 = trsv_view(f.t11(), u1, true, "T11")?;
    let mut rhs = w1.to_vec();
    sub_assign(&mut rhs, &q1);
    sub_assign(&mut rhs, &gemv_view(f.t12(), &y2, false));
    let y1 = trsv_view(f.t11(), &rhs, false, "T11")?;
    let mut q2 = w2.to_vec();
    sub_assign(&mut q2, &gemv_view(f.t22(), &y2, false));

    let mut vr = gemv_view(f.t12(), &q1, true);
    for (a, b) in vr.iter_mut().zip(gemv_view(f.t22(), &q2, true)) {
        *a = *a + b;
    }
    sub_assign(&mut vr, u2);
    let dv = trsv_view(f.r.view(), &vr, true, "R")?;

    let mut q = q1;
    q.extend_from_slice(&q2);
    let dr = f.z.apply(&q, false)?;
    let mut y = y1;
    y.extend_from_slice(&y2);
    let dx = f.q.apply(&y, true)?;
    Ok((dr, dv, dx))
}

/// Null-space direct solve. Only `x` is filled; `r` and `v` are zero.
pub fn lse_direct<T: Scalar>(factors: &GrqFactors<T>, b: &[f64], d: &[f64]) -> Result<LseState> {
    check_len("b", b.len(), factors.m)?;
    check_len("d", d.len(), factors.p)?;
    let bh: Vec<f64> = b.iter().map(|x| x / factors.scale_a).collect();
    let dh: Vec<f64> = d.iter().map(|x| x / factors.scale_b).collect();
    let s = rhs_scale::<T>(&[&bh, &dh]);
    let x = direct_kernel(factors, &round_to(&bh, s), &round_to(&dh, s))?;
    let mut st = LseState::zeros(factors.m, factors.n, factors.p);
    st.x = widen_from(&x, s);
    Ok(st)
}

/// Multiplier `v` from `R^T v = (Q A^T r)(n-p+1:n)`, with `A^T r` formed at
/// `residual_precision` and the rest in the factor precision.
pub fn solve_v<T: Scalar>(
    problem: &LseProblem,
    factors: &GrqFactors<T>,
    r: &[f64],
    residual_precision: PrecisionLevel,
) -> Result<Vec<f64>> {
    let (m, n, p) = problem.dims();
    check_factor_dims(factors, m, n, p)?;
    check_len("r", r.len(), m)?;
    let mut acc = Accumulator::new(n, residual_precision);
    acc.add_matvec(1.0, &problem.a, r, true)?;
    let g: Vec<f64> = acc.finish().into_iter().map(|x| x / factors.scale_a).collect();
    let s = rhs_scale::<T>(&[&g]);
    let w = factors.q.apply(&round_to::<T>(&g, s), false)?;
    let vh = trsv_view(factors.r.view(), &w[n - p..], true, "R")?;
    let c = factors.scale_a / factors.scale_b;
    Ok(vh.iter().map(|x| x.widen() * s * c).collect())
}

/// Solve `dr + A dx = f1`, `B dx = f2`, `A^T dr - B^T dv = f3` with the
/// factors. Returns `(dr, dv, dx)`.
pub fn lse_correction_solve<T: Scalar>(
    factors: &GrqFactors<T>,
    f1: &[f64],
    f2: &[f64],
    f3: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_len("f1", f1.len(), factors.m)?;
    check_len("f2", f2.len(), factors.p)?;
    check_len("f3", f3.len(), factors.n)?;
    let (sa, sb) = (factors.scale_a, factors.scale_b);
    let g2: Vec<f64> = f2.iter().map(|x| x * (sa / sb)).collect();
    let g3: Vec<f64> = f3.iter().map(|x| x / sa).collect();
    let s = rhs_scale::<T>(&[f1, &g2, &g3]);
    let (dr, dv, dx) =
        correction_kernel(factors, &round_to(f1, s), &round_to(&g2, s), &round_to(&g3, s))?;
    let dr = widen_from(&dr, s);
    let dv = widen_from(&dv, s * (sa / sb));
    let dx = widen_from(&dx, s / sa);
    Ok((dr, dv, dx))
}

/// `f1 = b - r - Ax`, `f2 = d - Bx`, `f3 = -A^T r + B^T v`.
pub fn lse_residuals(
    problem: &LseProblem,
    state: &LseState,
    level: PrecisionLevel,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (m, n, p) = problem.dims();
    check_len("x", state.x.len(), n)?;
    check_len("r", state.r.len(), m)?;
    check_len("v", state.v.len(), p)?;
    let mut a1 = Accumulator::new(m, level);
    a1.add_vec(1.0, &problem.b)?;
    a1.add_vec(-1.0, &state.r)?;
    a1.add_matvec(-1.0, &problem.a, &state.x, false)?;
    let mut a2 = Accumulator::new(p, level);
    a2.add_vec(1.0, &problem.d)?;
    a2.add_matvec(-1.0, &problem.b_mat, &state.x, false)?;
    let mut a3 = Accumulator::new(n, level);
    a3.add_matvec(-1.0, &problem.a, &state.r, true)?;
    a3.add_matvec(1.0, &problem.b_mat, &state.v, true)?;
    Ok((a1.finish(), a2.finish(), a3.finish()))
}

pub(crate) fn stop_bounds(pn: &LseNorms, state_norms: [f64; 3]) -> [f64; 3] {
    let [x, r, v] = state_norms;
    [pn.b + r + pn.a_fro * x, pn.d + pn.b_fro * x, pn.a_fro * r + pn.b_fro * v]
}

/// Stopping test; `state_norms` is `(||x||, ||r||, ||v||)`.
pub fn lse_stop_check(f_norms: [f64; 3], problem_norms: &LseNorms, state_norms: [f64; 3], tol: f64) -> bool {
    let b = stop_bounds(problem_norms, state_norms);
    f_norms.iter().zip(&b).all(|(&f, &bd)| f <= tol * bd)
}

/// GRQ factors held at the precision they are used in.
#[derive(Debug, Clone)]
pub(crate) enum GrqStore {
    Low(GrqFactors<f32>),
    Working(GrqFactors<f64>),
}

impl GrqStore {
    pub(crate) fn compute(problem: &LseProblem, level: PrecisionLevel) -> Result<Self> {
        Ok(match level {
            PrecisionLevel::Low => GrqStore::Low(grq_demoted(&problem.b_mat, &problem.a)?),
            _ => GrqStore::Working(grq(&problem.b_mat, &problem.a)?),
        })
    }

    /// The same factors at `level`.
    pub(crate) fn at(&self, level: PrecisionLevel) -> Self {
        match (self, level) {
            (GrqStore::Low(f), PrecisionLevel::Working) => GrqStore::Working(f.to_working()),
            _ => self.clone(),
        }
    }

    pub(crate) fn working_unscaled(&self) -> GrqFactors<f64> {
        match self {
            GrqStore::Low(f) => f.to_working_unscaled(),
            GrqStore::Working(f) => f.to_working_unscaled(),
        }
    }

    pub(crate) fn level(&self) -> PrecisionLevel {
        match self {
            GrqStore::Low(_) => PrecisionLevel::Low,
            GrqStore::Working(_) => PrecisionLevel::Working,
        }
    }

    pub(crate) fn direct(&self, b: &[f64], d: &[f64]) -> Result<LseState> {
        match self {
            GrqStore::Low(f) => lse_direct(f, b, d),
            GrqStore::Working(f) => lse_direct(f, b, d),
        }
    }

    pub(crate) fn solve_v(&self, problem: &LseProblem, r: &[f64], level: PrecisionLevel) -> Result<Vec<f64>> {
        match self {
            GrqStore::Low(f) => solve_v(problem, f, r, level),
            GrqStore::Working(f) => solve_v(problem, f, r, level),
        }
    }

    pub(crate) fn correction(&self, f1: &[f64], f2: &[f64], f3: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        match self {
            GrqStore::Low(f) => lse_correction_solve(f, f1, f2, f3),
            GrqStore::Working(f) => lse_correction_solve(f, f1, f2, f3),
        }
    }
}

/// Factorization and starting point shared by the refinement drivers:
/// `x0` from the direct solve, `r0 = b - A x0` and `v0`.
pub(crate) fn initial_state(
    problem: &LseProblem,
    config: &RefinementConfig,
    timings: &mut PhaseTimings,
) -> Result<(GrqStore, LseState)> {
    let pc = config.precisions;
    let t0 = Instant::now();
    let store = GrqStore::compute(problem, pc.factor)?;
    timings.factorization += t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let mut st = store.direct(&problem.b, &problem.d)?;
    let mut acc = Accumulator::new(problem.b.len(), store.level());
    acc.add_vec(1.0, &problem.b)?;
    acc.add_matvec(-1.0, &problem.a, &st.x, false)?;
    st.r = acc.finish();
    st.v = store.solve_v(problem, &st.r, pc.residual)?;
    timings.init += t0.elapsed().as_secs_f64();
    Ok((store, st))
}

struct LseJob<'a> {
    problem: &'a LseProblem,
    norms: LseNorms,
    state: LseState,
    store: GrqStore,
    residual: PrecisionLevel,
}

impl Refinable for LseJob<'_> {
    fn residuals(&self) -> Result<Triple> {
        let (f1, f2, f3) = lse_residuals(self.problem, &self.state, self.residual)?;
        Ok([f1, f2, f3])
    }

    fn bounds(&self) -> [f64; 3] {
        let s = &self.state;
        stop_bounds(&self.norms, [norm2(&s.x), norm2(&s.r), norm2(&s.v)])
    }

    fn correct(&mut self, f: &Triple) -> Result<(Triple, usize)> {
        let (dr, dv, dx) = self.store.correction(&f[0], &f[1], &f[2])?;
        Ok(([dr, dv, dx], 0))
    }

    fn update(&mut self, delta: &Triple) {
        axpy_in_place(&mut self.state.r, &delta[0]);
        axpy_in_place(&mut self.state.v, &delta[1]);
        axpy_in_place(&mut self.state.x, &delta[2]);
    }
}

/// Mixed-precision iterative refinement on the augmented LSE system.
pub fn mplse(problem: &LseProblem, config: &RefinementConfig) -> Result<(LseState, RefinementTrace)> {
    config.validate()?;
    let mut timings = PhaseTimings::default();
    let (store, state) = initial_state(problem, config, &mut timings)?;
    let mut job = LseJob {
        problem,
        norms: problem.norms(),
        state,
        store: store.at(config.precisions.solve),
        residual: config.precisions.residual,
    };
    let trace = refine_loop(&mut job, config, timings)?;
    Ok((job.state, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> LseProblem {
        LseProblem::new(
            DenseMatrix::identity(2),
            DenseMatrix::from_rows(&[&[1.0, 0.0]]),
            vec![1.0, 1.0],
            vec![2.0],
        )
        .unwrap()
    }

    #[test]
    fn direct_hand_example() {
        let pr = two_by_two();
        let f = grq(&pr.b_mat, &pr.a).unwrap();
        let st = lse_direct(&f, &pr.b, &pr.d).unwrap();
        assert!((st.x[0] - 2.0).abs() < 1e-15 && (st.x[1] - 1.0).abs() < 1e-15);
        let z = lse_direct(&f, &[0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(z.x, vec![0.0, 0.0]);
        let fl = grq_demoted(&pr.b_mat, &pr.a).unwrap();
        let st = lse_direct(&fl, &pr.b, &pr.d).unwrap();
        assert!((st.x[0] - 2.0).abs() < 1e-6 && (st.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_rhs_gives_zero_corrections() {
        let pr = two_by_two();
        let f = grq(&pr.b_mat, &pr.a).unwrap();
        let (dr, dv, dx) = lse_correction_solve(&f, &[0.0; 2], &[0.0], &[0.0; 2]).unwrap();
        assert!(dr.iter().chain(&dv).chain(&dx).all(|&x| x == 0.0));
        assert_eq!(solve_v(&pr, &f, &[0.0, 0.0], PrecisionLevel::Working).unwrap(), vec![0.0]);
    }

    #[test]
    fn residuals_by_substitution() {
        let pr = two_by_two();
        let st = LseState { x: vec![0.0; 2], r: pr.b.clone(), v: vec![0.0] };
        let (f1, f2, f3) = lse_residuals(&pr, &st, PrecisionLevel::Working).unwrap();
        assert_eq!(f1, vec![0.0, 0.0]);
        assert_eq!(f2, pr.d);
        assert_eq!(f3, vec![-1.0, -1.0]);
    }

    #[test]
    fn stop_check_cases() {
        let pn = LseNorms { b: 1.0, d: 1.0, a_fro: 2.0, b_fro: 3.0 };
        let s = [1.0, 1.0, 1.0];
        let tol = 1e-13;
        assert!(lse_stop_check([0.0; 3], &pn, s, tol));
        let b = stop_bounds(&pn, s);
        assert!(!lse_stop_check([0.0, 2.0 * tol * b[1], 0.0], &pn, s, tol));
        assert!(lse_stop_check([tol * b[0], tol * b[1], tol * b[2]], &pn, s, tol));
    }

    #[test]
    fn zero_data_converges_immediately() {
        let pr = LseProblem::new(
            DenseMatrix::identity(2),
            DenseMatrix::from_rows(&[&[1.0, 0.0]]),
            vec![0.0, 0.0],
            vec![0.0],
        )
        .unwrap();
        let (st, tr) = mplse(&pr, &RefinementConfig::default()).unwrap();
        assert_eq!(tr.status, RefinementStatus::Converged);
        assert_eq!(tr.iterations, 1);
        assert_eq!(tr.residual_history.len(), 1);
        assert!(st.x.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn problem_validation() {
        let a = DenseMatrix::<f64>::identity(2);
        let bm = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert!(LseProblem::new(a.clone(), bm, vec![0.0; 2], vec![0.0; 3]).is_err());
        let bm = DenseMatrix::from_rows(&[&[1.0, 0.0]]);
        assert!(LseProblem::new(a.clone(), bm.clone(), vec![0.0; 3], vec![0.0]).is_err());
        assert!(LseProblem::new(a, bm, vec![f64::NAN, 0.0], vec![0.0]).is_err());
    }
}
