use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::{gqr, grq, DenseMatrix};
use crate::harness::{gen_problem, GeneratorSpec, Problem, ProblemKind};
use crate::krylov::operator::AugmentedOperator;
use crate::krylov::precond::{build_bd_precond_gls, build_bd_precond_lse, Preconditioner};

/// Roots of `x^3 - x^2 - 2x + 1`, ascending.
pub fn cubic_roots() -> [f64; 3] {
    // Trigonometric form: 2 cos(k pi / 7) for k = 1, 3, 5.
    let pi7 = std::f64::consts::PI / 7.0;
    [2.0 * (5.0 * pi7).cos(), 2.0 * (3.0 * pi7).cos(), 2.0 * pi7.cos()]
}

pub fn golden_pair() -> [f64; 2] {
    let s5 = 5f64.sqrt();
    [(1.0 - s5) / 2.0, (1.0 + s5) / 2.0]
}

/// Bound on `kappa_2` of the ideal preconditioned matrix, `1 + 2 l3 / l2`.
pub fn bd_condition_bound() -> f64 {
    let [_, l2, l3] = cubic_roots();
    1.0 + 2.0 * l3 / l2
}

fn to_na(m: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn singular_values_dense(m: &DenseMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `sigma_max / sigma_min` by dense SVD.
pub fn cond2(m: &DenseMatrix<f64>) -> f64 {
    let s = singular_values_dense(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Eigenvalues of the symmetric part, ascending.
pub fn symmetric_eigenvalues(m: &DenseMatrix<f64>) -> Vec<f64> {
    let a = to_na(m);
    let sym = (&a + a.transpose()) * 0.5;
    let mut e: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Dense `M_l F M_r` (split) or `M F` (left).
pub fn preconditioned_dense(op: &AugmentedOperator<'_>, precond: &Preconditioner) -> Result<DenseMatrix<f64>> {
    let n = op.total_dim();
    let mut out = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        let col = precond.apply_left(&op.apply(&precond.apply_right(&e)?)?)?;
        out.col_mut(k).copy_from_slice(&col);
        e[k] = 0.0;
    }
    Ok(out)
}

/// Dense matrix of a linear map on vectors of length `n`.
pub fn dense_of<F>(n: usize, mut f: F) -> Result<DenseMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut e = vec![0.0; n];
    let mut cols = Vec::with_capacity(n * n);
    let mut rows = 0;
    for k in 0..n {
        e[k] = 1.0;
        let c = f(&e)?;
        rows = c.len();
        cols.extend(c);
        e[k] = 0.0;
    }
    DenseMatrix::from_col_major(rows, n, cols)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub kind: ProblemKind,
    pub dims: (usize, usize, usize),
    pub eigenvalues: Vec<f64>,
    pub expected: Vec<f64>,
    pub max_deviation: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

/// Expected eigenvalues (ascending) of the ideal preconditioned matrix.
/// For GLS `dims = (m, n, p)` with `W` `n x m`; the GLS spectrum is the LSE
/// one with the roles of `m` and `p` exchanged.
pub fn expected_spectrum(kind: ProblemKind, dims: (usize, usize, usize)) -> Vec<f64> {
    let (m, n, p) = match kind {
        ProblemKind::Lse => dims,
        ProblemKind::Gls => (dims.2, dims.1, dims.0),
    };
    let e = n.saturating_sub(m);
    let mut out = Vec::with_capacity(m + n + p);
    for _ in 0..p - e {
        out.extend(cubic_roots());
    }
    for _ in 0..n - p {
        out.extend(golden_pair());
    }
    for _ in 0..e {
        out.extend([-1.0, 1.0]);
    }
    out.extend(std::iter::repeat_n(1.0, m.saturating_sub(n)));
    out.sort_by(f64::total_cmp);
    out
}

/// Ideal split-preconditioned matrix from binary64 factors of a seeded,
/// well-conditioned instance.
pub fn ideal_preconditioned(kind: ProblemKind, dims: (usize, usize, usize), seed: u64) -> Result<DenseMatrix<f64>> {
    let spec = GeneratorSpec { kind, ..GeneratorSpec::lse(dims.0, dims.1, dims.2, 10.0, seed) };
    match gen_problem(&spec)? {
        Problem::Lse(p) => {
            let f = grq(&p.b_mat, &p.a)?;
            let op = AugmentedOperator::lse(&p, 1.0)?;
            preconditioned_dense(&op, &build_bd_precond_lse(&f, 1.0)?)
        }
        Problem::Gls(p) => {
            let f = gqr(&p.w, &p.v)?;
            let op = AugmentedOperator::gls(&p, 1.0)?;
            preconditioned_dense(&op, &build_bd_precond_gls(&f, 1.0)?)
        }
    }
}

/// Compare the computed spectrum of the ideal preconditioned matrix with
/// the expected multiset to absolute tolerance `tol`.
pub fn spectrum_check_with(kind: ProblemKind, dims: (usize, usize, usize), seed: u64, tol: f64) -> Result<SpectrumReport> {
    let x = ideal_preconditioned(kind, dims, seed)?;
    let eig = symmetric_eigenvalues(&x);
    let expected = expected_spectrum(kind, dims);
    if eig.len() != expected.len() {
        return Err(Error::Dimension(format!("{} eigenvalues, expected {}", eig.len(), expected.len())));
    }
    let mut max_dev: f64 = 0.0;
    for (&v, &e) in eig.iter().zip(&expected) {
        let dev = (v - e).abs();
        if !(dev <= tol) {
            return Err(Error::SpectrumMismatch { value: v, expected: e, deviation: dev });
        }
        max_dev = max_dev.max(dev);
    }
    let abs: Vec<f64> = eig.iter().map(|v| v.abs()).collect();
    Ok(SpectrumReport {
        kind,
        dims,
        sigma_max: abs.iter().copied().fold(0.0, f64::max),
        sigma_min: abs.iter().copied().fold(f64::INFINITY, f64::min),
        eigenvalues: eig,
        expected,
        max_deviation: max_dev,
    })
}

/// Default check: seed 1, tolerance `1e-8`.
pub fn spectrum_check(kind: ProblemKind, dims: (usize, usize, usize)) -> Result<SpectrumReport> {
    spectrum_check_with(kind, dims, 1, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let [l1, l2, l3] = cubic_roots();
        for l in [l1, l2, l3] {
            assert!((l * l * l - l * l - 2.0 * l + 1.0).abs() < 1e-14);
        }
        assert!((l1 + 1.2470).abs() < 1e-4 && (l2 - 0.4450).abs() < 1e-4 && (l3 - 1.8019).abs() < 1e-4);
        // 9.0984 when evaluated with the four-digit roots
        assert!((1.0 + 2.0 * 1.8019 / 0.4450 - 9.0984f64).abs() < 1e-4);
        assert!((bd_condition_bound() - 9.09783).abs() < 1e-5);
    }

    #[test]
    fn expected_counts() {
        let e = expected_spectrum(ProblemKind::Lse, (6, 4, 2));
        assert_eq!(e.len(), 12);
        assert_eq!(e.iter().filter(|&&v| v == 1.0).count(), 2);
        let e = expected_spectrum(ProblemKind::Lse, (5, 3, 3));
        let g = golden_pair();
        assert!(!e.iter().any(|v| (v - g[1]).abs() < 1e-12));
    }
}
