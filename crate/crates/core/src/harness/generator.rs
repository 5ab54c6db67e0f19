use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{qr, DenseMatrix};
use crate::gls::GlsProblem;
use crate::lse::LseProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Lse,
    Gls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Geometric,
    Arithmetic,
}

/// Test-problem description. `dims = (m, n, p)`: for LSE `A` is `m x n` and
/// `B` is `p x n`; for GLS `W` is `n x m` and `V` is `n x p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: ProblemKind,
    pub dims: (usize, usize, usize),
    pub cond: f64,
    pub seed: u64,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Lse(LseProblem),
    Gls(GlsProblem),
}

impl GeneratorSpec {
    pub fn lse(m: usize, n: usize, p: usize, cond: f64, seed: u64) -> Self {
        GeneratorSpec {
            kind: ProblemKind::Lse,
            dims: (m, n, p),
            cond,
            seed,
            distribution: Distribution::Geometric,
        }
    }

    pub fn gls(m: usize, n: usize, p: usize, cond: f64, seed: u64) -> Self {
        GeneratorSpec { kind: ProblemKind::Gls, ..Self::lse(m, n, p, cond, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, p) = self.dims;
        if !(self.cond >= 1.0) || !self.cond.is_finite() {
            return Err(Error::InvalidInput(format!("cond must be >= 1, got {}", self.cond)));
        }
        if m == 0 || n == 0 || p == 0 {
            return Err(Error::Dimension("dimensions must be positive".into()));
        }
        let ok = match self.kind {
            ProblemKind::Lse => p <= n && n <= m + p,
            ProblemKind::Gls => m <= n && n <= m + p,
        };
        if !ok {
            return Err(Error::Dimension(format!(
                "dimensions (m, n, p) = ({m}, {n}, {p}) violate the {:?} shape constraints",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Singular values in decreasing order from 1 to `1/cond`.
pub fn singular_values(k: usize, cond: f64, distribution: Distribution) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let km1 = (k - 1) as f64;
    let lo = 1.0 / cond;
    (0..k)
        .map(|i| {
            let t = i as f64 / km1;
            match distribution {
                _ if i == 0 => 1.0,
                _ if i == k - 1 => lo,
                Distribution::Geometric => cond.powf(-t),
                Distribution::Arithmetic => lo + (1.0 - t) * (1.0 - lo),
            }
        })
        .collect()
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `U diag(sigma) W^T` with orthonormal `U` (`rows x k`) and orthogonal `W`
/// (`k x k`), both from QR of Gaussian matrices.
fn stacked(rng: &mut ChaCha8Rng, rows: usize, k: usize, sigma: &[f64]) -> Result<DenseMatrix<f64>> {
    let (q1, _) = qr(&gaussian_matrix(rng, rows, k))?;
    let (q2, _) = qr(&gaussian_matrix(rng, k, k))?;
    let w2 = q2.to_dense();
    let mut s = DenseMatrix::zeros(rows, k);
    for j in 0..k {
        for i in 0..k {
            s.set(i, j, sigma[i] * w2.get(j, i));
        }
    }
    q1.apply_left(&mut s, false)?;
    Ok(s)
}

/// Build a seeded test problem whose stacked matrix (`[A; B]` or `[W, V]`)
/// has the requested singular value distribution.
pub fn gen_problem(spec: &GeneratorSpec) -> Result<Problem> {
    spec.validate()?;
    let (m, n, p) = spec.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma = singular_values(n, spec.cond, spec.distribution);
    match spec.kind {
        ProblemKind::Lse => {
            let s = stacked(&mut rng, m + p, n, &sigma)?;
            let a = s.rows_range(0, m);
            let b_mat = s.rows_range(m, p);
            let b = gaussian_vector(&mut rng, m);
            let d = gaussian_vector(&mut rng, p);
            Ok(Problem::Lse(LseProblem::new(a, b_mat, b, d)?))
        }
        ProblemKind::Gls => {
            let st = stacked(&mut rng, m + p, n, &sigma)?.transpose();
            let w = st.columns(0, m);
            let v = st.columns(m, p);
            let d = gaussian_vector(&mut rng, n);
            Ok(Problem::Gls(GlsProblem::new(w, v, d)?))
        }
    }
}

pub fn gen_lse(spec: &GeneratorSpec) -> Result<LseProblem> {
    match gen_problem(spec)? {
        Problem::Lse(p) => Ok(p),
        Problem::Gls(_) => Err(Error::InvalidInput("spec describes a GLS problem".into())),
    }
}

pub fn gen_gls(spec: &GeneratorSpec) -> Result<GlsProblem> {
    match gen_problem(spec)? {
        Problem::Gls(p) => Ok(p),
        Problem::Lse(_) => Err(Error::InvalidInput("spec describes an LSE problem".into())),
    }
}
