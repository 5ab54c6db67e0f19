//! Generalized least squares `min ||y||` subject to `Wx + Vy = d`.

use std::time::Instant;

use crate::error::{check_len, Error, Result};
use crate::factor::{gemv_view, gqr, gqr_demoted, trsv_view, Accumulator, DenseMatrix, GqrFactors};
use crate::precision::{norm2, PrecisionLevel, Scalar};
use crate::refine::{
    axpy_in_place, refine_loop, rhs_scale, round_to, widen_from, PhaseTimings, Refinable,
    RefinementConfig, RefinementTrace, Triple,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GlsProblem {
    pub w: DenseMatrix<f64>,
    pub v: DenseMatrix<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlsNorms {
    pub d: f64,
    pub w_fro: f64,
    pub v_fro: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlsState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl GlsProblem {
    pub fn new(w: DenseMatrix<f64>, v: DenseMatrix<f64>, d: Vec<f64>) -> Result<Self> {
        let (n, m, p) = (w.rows(), w.cols(), v.cols());
        if n == 0 || m == 0 || p == 0 {
            return Err(Error::Dimension("GLS dimensions must be positive".into()));
        }
        if v.rows() != n {
            return Err(Error::Dimension(format!("W is {n}x{m} but V has {} rows", v.rows())));
        }
        if m > n || n > m + p {
            return Err(Error::Dimension(format!(
                "need m <= n <= m + p, got (n, m, p) = ({n}, {m}, {p})"
            )));
        }
        check_len("d", d.len(), n)?;
        if w.as_slice().iter().chain(v.as_slice()).chain(&d).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("GLS data has non-finite entries".into()));
        }
        Ok(GlsProblem { w, v, d })
    }

    /// `(n, m, p)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w.rows(), self.w.cols(), self.v.cols())
    }

    pub fn norms(&self) -> GlsNorms {
        GlsNorms {
            d: norm2(&self.d),
            w_fro: self.w.frobenius_norm(),
            v_fro: self.v.frobenius_norm(),
        }
    }
}

impl GlsState {
    pub fn zeros(n: usize, m: usize, p: usize) -> Self {
        GlsState { x: vec![0.0; m], y: vec![0.0; p], z: vec![0.0; n] }
    }
}

fn sub_assign<T: Scalar>(y: &mut [T], x: &[T]) {
    for (a, &b) in y.iter_mut().zip(x) {
        *a = *a - b;
    }
}

/// `c = Q^T d`, `T22 s2 = c2`, `R x = c1 - T12 s2`, `y = Z^T [0; s2]`.
fn direct_kernel<T: Scalar>(f: &GqrFactors<T>, d: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let c = f.q.apply(d, true)?;
    let (c1, c2) = c.split_at(f.m);
    let s2 = trsv_view(f.t22(), c2, false, "T22")?;
    let mut rhs = c1.to_vec();
    sub_assign(&mut rhs, &gemv_view(f.t12(), &s2, false));
    let x = trsv_view(f.r.view(), &rhs, false, "R")?;
    let mut s = vec![T::zero(); f.p + f.m - f.n];
    s.extend_from_slice(&s2);
    let y = f.z.apply(&s, true)?;
    Ok((x, y))
}

/// Correction cascade for the unit-scale factors, returns `(dy, dz, dx)`.
///
/// With `dz = -Q h`: `R^T h1 = f3`, `T22 g2 = u2`,
/// `T22^T h2 = w2 - g2 - T12^T h1`, `g1 = w1 - T11^T h1`,
/// `R dx = u1 - T11 g1 - T12 g2`, `dy = Z^T g`.
fn correction_kernel<T: Scalar>(
    f: &GqrFactors<T>,
    f1: &[T],
    f2: &[T],
    f3: &[T],
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let c0 = f.p + f.m - f.n;
    let u = f.q.apply(f2, true)?;
    let (u1, u2) = u.split_at(f.m);
    let w = f.z.apply(f1, false)?;
    let (w1, w2) = w.split_at(c0);
    let h1 = trsv_view(f.r.view(), f3, true, "R")?;
    let g2 = trsv_view(f.t22(), u2, false, "T22")?;
    let mut rhs = w2.to_vec();
    sub_assign(&mut rhs, &g2);
    sub_assign(&mut rhs, &gemv_view(f.t12(), &h1, true));
    let h2 = trsv_view(f.t22(), &rhs, true, "T22")?;
    let mut g1 = w1.to_vec();
    sub_assign(&mut g1, &gemv_view(f.t11(), &h1, true));

    let mut rx = u1.to_vec();
    sub_assign(&mut rx, &gemv_view(f.t11(), &g1, false));
    sub_assign(&mut rx, &gemv_view(f.t12(), &g2, false));
    let dx = trsv_view(f.r.view(), &rx, false, "R")?;

    let mut g = g1;
    g.extend_from_slice(&g2);
    let dy = f.z.apply(&g, true)?;
    let mut h = h1;
    h.extend_from_slice(&h2);
    let mut dz = f.q.apply(&h, false)?;
    for e in dz.iter_mut() {
        *e = -*e;
    }
    Ok((dy, dz, dx))
}

/// Direct solve through the GQR factors. `z` is left zero.
pub fn gls_direct<T: Scalar>(factors: &GqrFactors<T>, d: &[f64]) -> Result<GlsState> {
    check_len("d", d.len(), factors.n)?;
    let (sw, sv) = (factors.scale_w, factors.scale_v);
    let dh: Vec<f64> = d.iter().map(|x| x / sv).collect();
    let s = rhs_scale::<T>(&[&dh]);
    let (x, y) = direct_kernel(factors, &round_to(&dh, s))?;
    let mut st = GlsState::zeros(factors.n, factors.m, factors.p);
    st.x = widen_from(&x, s * (sv / sw));
    st.y = widen_from(&y, s);
    Ok(st)
}

/// Multiplier with `W^T z = 0` and `V^T z = y` for `y` in the range the
/// direct solve produces: `g = Z y`, `T22^T v = g(p-n+m+1:p)`, `z = Q [0; v]`.
pub fn init_z<T: Scalar>(factors: &GqrFactors<T>, y: &[f64]) -> Result<Vec<f64>> {
    check_len("y", y.len(), factors.p)?;
    let s = rhs_scale::<T>(&[y]);
    let g = factors.z.apply(&round_to::<T>(y, s), false)?;
    let v = trsv_view(factors.t22(), &g[factors.p + factors.m - factors.n..], true, "T22")?;
    let mut h = vec![T::zero(); factors.m];
    h.extend_from_slice(&v);
    let z = factors.q.apply(&h, false)?;
    Ok(widen_from(&z, s / factors.scale_v))
}

/// Solve `dy - V^T dz = f1`, `V dy + W dx = f2`, `-W^T dz = f3`.
/// Returns `(dy, dz, dx)`.
pub fn gls_correction_solve<T: Scalar>(
    factors: &GqrFactors<T>,
    f1: &[f64],
    f2: &[f64],
    f3: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_len("f1", f1.len(), factors.p)?;
    check_len("f2", f2.len(), factors.n)?;
    check_len("f3", f3.len(), factors.m)?;
    let (sw, sv) = (factors.scale_w, factors.scale_v);
    let g2: Vec<f64> = f2.iter().map(|x| x / sv).collect();
    let g3: Vec<f64> = f3.iter().map(|x| x * (sv / sw)).collect();
    let s = rhs_scale::<T>(&[f1, &g2, &g3]);
    let (dy, dz, dx) =
        correction_kernel(factors, &round_to(f1, s), &round_to(&g2, s), &round_to(&g3, s))?;
    Ok((
        widen_from(&dy, s),
        widen_from(&dz, s / sv),
        widen_from(&dx, s * (sv / sw)),
    ))
}

/// `f1 = -y + V^T z`, `f2 = d - Wx - Vy`, `f3 = W^T z`.
pub fn gls_residuals(
    problem: &GlsProblem,
    state: &GlsState,
    level: PrecisionLevel,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (n, m, p) = problem.dims();
    check_len("x", state.x.len(), m)?;
    check_len("y", state.y.len(), p)?;
    check_len("z", state.z.len(), n)?;
    let mut a1 = Accumulator::new(p, level);
    a1.add_vec(-1.0, &state.y)?;
    a1.add_matvec(1.0, &problem.v, &state.z, true)?;
    let mut a2 = Accumulator::new(n, level);
    a2.add_vec(1.0, &problem.d)?;
    a2.add_matvec(-1.0, &problem.w, &state.x, false)?;
    a2.add_matvec(-1.0, &problem.v, &state.y, false)?;
    let mut a3 = Accumulator::new(m, level);
    a3.add_matvec(1.0, &problem.w, &state.z, true)?;
    Ok((a1.finish(), a2.finish(), a3.finish()))
}

pub(crate) fn stop_bounds(pn: &GlsNorms, state_norms: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = state_norms;
    [y + pn.v_fro * z, pn.d + pn.w_fro * x + pn.v_fro * y, pn.w_fro * z]
}

/// Stopping test; `state_norms` is `(||x||, ||y||, ||z||)`.
pub fn gls_stop_check(f_norms: [f64; 3], problem_norms: &GlsNorms, state_norms: [f64; 3], tol: f64) -> bool {
    let b = stop_bounds(problem_norms, state_norms);
    f_norms.iter().zip(&b).all(|(&f, &bd)| f <= tol * bd)
}

#[derive(Debug, Clone)]
pub(crate) enum GqrStore {
    Low(GqrFactors<f32>),
    Working(GqrFactors<f64>),
}

impl GqrStore {
    pub(crate) fn compute(problem: &GlsProblem, level: PrecisionLevel) -> Result<Self> {
        Ok(match level {
            PrecisionLevel::Low => GqrStore::Low(gqr_demoted(&problem.w, &problem.v)?),
            _ => GqrStore::Working(gqr(&problem.w, &problem.v)?),
        })
    }

    pub(crate) fn at(&self, level: PrecisionLevel) -> Self {
        match (self, level) {
            (GqrStore::Low(f), PrecisionLevel::Working) => GqrStore::Working(f.to_working()),
            _ => self.clone(),
        }
    }

    pub(crate) fn working_unscaled(&self) -> GqrFactors<f64> {
        match self {
            GqrStore::Low(f) => f.to_working_unscaled(),
            GqrStore::Working(f) => f.to_working_unscaled(),
        }
    }

    pub(crate) fn direct(&self, d: &[f64]) -> Result<GlsState> {
        match self {
            GqrStore::Low(f) => gls_direct(f, d),
            GqrStore::Working(f) => gls_direct(f, d),
        }
    }

    pub(crate) fn init_z(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            GqrStore::Low(f) => init_z(f, y),
            GqrStore::Working(f) => init_z(f, y),
        }
    }

    pub(crate) fn correction(&self, f1: &[f64], f2: &[f64], f3: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        match self {
            GqrStore::Low(f) => gls_correction_solve(f, f1, f2, f3),
            GqrStore::Working(f) => gls_correction_solve(f, f1, f2, f3),
        }
    }
}

pub(crate) fn initial_state(
    problem: &GlsProblem,
    config: &RefinementConfig,
    timings: &mut PhaseTimings,
) -> Result<(GqrStore, GlsState)> {
    let t0 = Instant::now();
    let store = GqrStore::compute(problem, config.precisions.factor)?;
    timings.factorization += t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let mut st = store.direct(&problem.d)?;
    st.z = store.init_z(&st.y)?;
    timings.init += t0.elapsed().as_secs_f64();
    Ok((store, st))
}

struct GlsJob<'a> {
    problem: &'a GlsProblem,
    norms: GlsNorms,
    state: GlsState,
    store: GqrStore,
    residual: PrecisionLevel,
}

impl Refinable for GlsJob<'_> {
    fn residuals(&self) -> Result<Triple> {
        let (f1, f2, f3) = gls_residuals(self.problem, &self.state, self.residual)?;
        Ok([f1, f2, f3])
    }

    fn bounds(&self) -> [f64; 3] {
        let s = &self.state;
        stop_bounds(&self.norms, [norm2(&s.x), norm2(&s.y), norm2(&s.z)])
    }

    fn correct(&mut self, f: &Triple) -> Result<(Triple, usize)> {
        let (dy, dz, dx) = self.store.correction(&f[0], &f[1], &f[2])?;
        Ok(([dy, dz, dx], 0))
    }

    fn update(&mut self, delta: &Triple) {
        axpy_in_place(&mut self.state.y, &delta[0]);
        axpy_in_place(&mut self.state.z, &delta[1]);
        axpy_in_place(&mut self.state.x, &delta[2]);
    }
}

/// Mixed-precision iterative refinement on the augmented GLS system.
pub fn mpgls(problem: &GlsProblem, config: &RefinementConfig) -> Result<(GlsState, RefinementTrace)> {
    config.validate()?;
    let mut timings = PhaseTimings::default();
    let (store, state) = initial_state(problem, config, &mut timings)?;
    let mut job = GlsJob {
        problem,
        norms: problem.norms(),
        state,
        store: store.at(config.precisions.solve),
        residual: config.precisions.residual,
    };
    let trace = refine_loop(&mut job, config, timings)?;
    Ok((job.state, trace))
}
