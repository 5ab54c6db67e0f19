use crate::error::{check_len, Error, Result};
use crate::krylov::operator::AugmentedOperator;
use crate::krylov::precond::Preconditioner;
use crate::precision::{dot, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct GmresReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Preconditioned residual norms, starting with the initial one.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    /// Arnoldi broke down before reaching the tolerance.
    pub breakdown: bool,
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if a == 0.0 && b == 0.0 {
        // Zero column: swap so the unreduced residual moves down intact.
        (0.0, 1.0)
    } else if b == 0.0 {
        (1.0, 0.0)
    } else {
        let h = a.hypot(b);
        (a / h, b / h)
    }
}

/// Full GMRES from a zero initial guess on an arbitrary linear map, with
/// modified Gram-Schmidt Arnoldi and Givens rotations.
pub fn gmres_with<F>(mut apply: F, rhs: &[f64], rel_tol: f64, max_iter: usize) -> Result<GmresReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidInput(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let n = rhs.len();
    let beta = norm2(rhs);
    if !beta.is_finite() {
        return Err(Error::InvalidInput("GMRES right-hand side is not finite".into()));
    }
    let mut report = GmresReport {
        solution: vec![0.0; n],
        iterations: 0,
        residual_norms: vec![beta],
        converged: beta == 0.0,
        breakdown: false,
    };
    if beta == 0.0 || max_iter == 0 {
        return Ok(report);
    }
    let mut basis: Vec<Vec<f64>> = vec![rhs.iter().map(|x| x / beta).collect()];
    // Column k of the rotated Hessenberg matrix, first k+1 entries.
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    for k in 0..max_iter.min(n) {
        let mut w = apply(&basis[k])?;
        check_len("GMRES operator output", w.len(), n)?;
        let wnorm = norm2(&w);
        let mut h = Vec::with_capacity(k + 2);
        for v in &basis {
            let hij = dot(&w, v);
            w.iter_mut().zip(v).for_each(|(a, b)| *a -= hij * b);
            h.push(hij);
        }
        let hnext = norm2(&w);
        h.push(hnext);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = c * a + s * b;
            h[i + 1] = -s * a + c * b;
        }
        let (c, s) = givens(h[k], h[k + 1]);
        h[k] = c * h[k] + s * h[k + 1];
        h.truncate(k + 1);
        rot.push((c, s));
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        h_cols.push(h);
        let res = g[k + 1].abs();
        report.residual_norms.push(res);
        report.iterations = k + 1;
        if !res.is_finite() {
            break;
        }
        if res <= rel_tol * beta {
            report.converged = true;
            break;
        }
        if hnext <= f64::EPSILON * wnorm || hnext == 0.0 {
            report.breakdown = true;
            break;
        }
        basis.push(w.iter().map(|x| x / hnext).collect());
    }
    let k = h_cols.len();
    let mut y = g[..k].to_vec();
    for j in (0..k).rev() {
        // Only reachable after a breakdown on a singular operator.
        y[j] = if h_cols[j][j] == 0.0 { 0.0 } else { y[j] / h_cols[j][j] };
        let yj = y[j];
        for i in 0..j {
            y[i] -= yj * h_cols[j][i];
        }
    }
    for (v, &yj) in basis.iter().zip(&y) {
        report.solution.iter_mut().zip(v).for_each(|(x, b)| *x += yj * b);
    }
    Ok(report)
}

/// Preconditioned GMRES on the augmented operator: `M F` for left kinds,
/// `M_l F M_r` for split kinds with the solution mapped back through `M_r`.
pub fn gmres(
    op: &AugmentedOperator<'_>,
    precond: &Preconditioner,
    rhs: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<GmresReport> {
    check_len("GMRES right-hand side", rhs.len(), op.total_dim())?;
    check_len("preconditioner dimension", precond.dim(), op.total_dim())?;
    let b = precond.apply_left(rhs)?;
    if precond.is_split() {
        let mut rep = gmres_with(
            |y| precond.apply_left(&op.apply(&precond.apply_right(y)?)?),
            &b,
            rel_tol,
            max_iter,
        )?;
        rep.solution = precond.apply_right(&rep.solution)?;
        Ok(rep)
    } else {
        gmres_with(|x| precond.apply_left(&op.apply(x)?), &b, rel_tol, max_iter)
    }
}
