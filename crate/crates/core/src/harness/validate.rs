use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::factor::{gqr, gqr_demoted, grq, grq_demoted, DenseMatrix};
use crate::harness::generator::{gen_gls, gen_lse, GeneratorSpec, ProblemKind};
use crate::krylov::spectrum::{bd_condition_bound, cond2, preconditioned_dense, spectrum_check};
use crate::krylov::{build_bd_precond_gls, build_bd_precond_lse, AugmentedOperator};
use crate::precision::PrecisionLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Spectrum,
    Precond,
    Factor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from_result(name: String, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check { name, passed: false, detail: e.to_string() },
        }
    }
}

/// One representative `(m, n, p)` per shape case: LSE with `m >= n` and
/// `n > m`, GLS with `n <= p` and `n > p`.
pub const SHAPE_CASES: [(ProblemKind, (usize, usize, usize)); 4] = [
    (ProblemKind::Lse, (9, 6, 2)),
    (ProblemKind::Lse, (4, 7, 3)),
    (ProblemKind::Gls, (3, 6, 8)),
    (ProblemKind::Gls, (4, 7, 5)),
];

pub const PRECOND_COND_LIMIT: f64 = 9.1;

pub const FACTOR_TOL_FACTOR: f64 = 100.0;

fn rel_diff(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> Result<f64> {
    let den = a.frobenius_norm();
    let num = a.sub_matrix(b)?.frobenius_norm();
    Ok(if den == 0.0 { num } else { num / den })
}

fn spectrum_suite() -> Vec<Check> {
    SHAPE_CASES
        .iter()
        .map(|&(kind, dims)| {
            let name = format!("spectrum {kind:?} {dims:?}");
            Check::from_result(
                name,
                spectrum_check(kind, dims).map(|r| (true, format!("max deviation {:.1e}", r.max_deviation))),
            )
        })
        .collect()
}

/// `kappa_2` of the split-preconditioned matrix from binary64 factors.
pub fn bd_preconditioned_cond(kind: ProblemKind, dims: (usize, usize, usize), cond: f64, seed: u64) -> Result<f64> {
    let (m, n, p) = dims;
    let x = match kind {
        ProblemKind::Lse => {
            let pr = gen_lse(&GeneratorSpec::lse(m, n, p, cond, seed))?;
            let op = AugmentedOperator::lse(&pr, 1.0)?;
            preconditioned_dense(&op, &build_bd_precond_lse(&grq(&pr.b_mat, &pr.a)?, 1.0)?)?
        }
        ProblemKind::Gls => {
            let pr = gen_gls(&GeneratorSpec::gls(m, n, p, cond, seed))?;
            let op = AugmentedOperator::gls(&pr, 1.0)?;
            preconditioned_dense(&op, &build_bd_precond_gls(&gqr(&pr.w, &pr.v)?, 1.0)?)?
        }
    };
    Ok(cond2(&x))
}

fn precond_suite() -> Vec<Check> {
    let mut out = Vec::new();
    for &(kind, dims) in &SHAPE_CASES {
        let name = format!("bd cond {kind:?} {dims:?}");
        let r = (1..=10u64).try_fold(0.0_f64, |w, seed| Ok(w.max(bd_preconditioned_cond(kind, dims, 1e4, seed)?)));
        out.push(Check::from_result(
            name,
            r.map(|w| (w <= PRECOND_COND_LIMIT, format!("worst {w:.4} (bound {:.4})", bd_condition_bound()))),
        ));
    }
    out
}

/// Relative backward errors `(B or W, A or V)` of a factorization at `level`.
pub fn factor_backward_errors(kind: ProblemKind, dims: (usize, usize, usize), seed: u64, level: PrecisionLevel) -> Result<[f64; 2]> {
    let (m, n, p) = dims;
    let low = level == PrecisionLevel::Low;
    match kind {
        ProblemKind::Lse => {
            let pr = gen_lse(&GeneratorSpec::lse(m, n, p, 1e3, seed))?;
            let (b, a) = if low { grq_demoted(&pr.b_mat, &pr.a)?.reconstruct() } else { grq(&pr.b_mat, &pr.a)?.reconstruct() };
            Ok([rel_diff(&pr.b_mat, &b)?, rel_diff(&pr.a, &a)?])
        }
        ProblemKind::Gls => {
            let pr = gen_gls(&GeneratorSpec::gls(m, n, p, 1e3, seed))?;
            let (w, v) = if low { gqr_demoted(&pr.w, &pr.v)?.reconstruct() } else { gqr(&pr.w, &pr.v)?.reconstruct() };
            Ok([rel_diff(&pr.w, &w)?, rel_diff(&pr.v, &v)?])
        }
    }
}

fn factor_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let shapes = [(ProblemKind::Lse, (64, 32, 8)), (ProblemKind::Gls, (8, 32, 40))];
    for (kind, dims) in shapes {
        for level in [PrecisionLevel::Low, PrecisionLevel::Working] {
            let eps = level.unit_roundoff();
            let r = (1..=20u64).try_fold([0.0_f64; 2], |w, seed| {
                let e = factor_backward_errors(kind, dims, seed, level)?;
                Ok([w[0].max(e[0]), w[1].max(e[1])])
            });
            out.push(Check::from_result(
                format!("backward error {kind:?} {dims:?} {level:?}"),
                r.map(|w| {
                    let lim = FACTOR_TOL_FACTOR * eps;
                    (w[0] <= lim && w[1] <= lim, format!("worst {:.1e} / {:.1e} (limit {lim:.1e})", w[0], w[1]))
                }),
            ));
        }
    }
    out
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Spectrum => spectrum_suite(),
        Suite::Precond => precond_suite(),
        Suite::Factor => factor_suite(),
    }
}
