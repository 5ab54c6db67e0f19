use crate::error::Result;
use crate::factor::Accumulator;
use crate::gls::GlsProblem;
use crate::lse::LseProblem;
use crate::precision::{norm2, PrecisionLevel};

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

fn lse_objective(problem: &LseProblem, x: &[f64]) -> Result<f64> {
    let mut acc = Accumulator::new(problem.b.len(), PrecisionLevel::Working);
    acc.add_matvec(1.0, &problem.a, x, false)?;
    acc.add_vec(-1.0, &problem.b)?;
    Ok(norm2(&acc.finish()))
}

/// `||Bx - d|| / (||B||_F ||x|| + ||d||)`.
pub fn metric_err1_lse(problem: &LseProblem, x: &[f64]) -> Result<f64> {
    let mut acc = Accumulator::new(problem.d.len(), PrecisionLevel::Working);
    acc.add_matvec(1.0, &problem.b_mat, x, false)?;
    acc.add_vec(-1.0, &problem.d)?;
    let num = norm2(&acc.finish());
    Ok(ratio(num, problem.b_mat.frobenius_norm() * norm2(x) + norm2(&problem.d)))
}

/// `| ||Ax - b|| / ||A x_ref - b|| - 1 |`.
pub fn metric_err2_lse(problem: &LseProblem, x: &[f64], x_ref: &[f64]) -> Result<f64> {
    let num = lse_objective(problem, x)?;
    let den = lse_objective(problem, x_ref)?;
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den - 1.0).abs())
}

/// `||Wx + Vy - d|| / (||W||_F ||x|| + ||V||_F ||y|| + ||d||)`.
pub fn metric_er1_gls(problem: &GlsProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    let mut acc = Accumulator::new(problem.d.len(), PrecisionLevel::Working);
    acc.add_matvec(1.0, &problem.w, x, false)?;
    acc.add_matvec(1.0, &problem.v, y, false)?;
    acc.add_vec(-1.0, &problem.d)?;
    let num = norm2(&acc.finish());
    let den = problem.w.frobenius_norm() * norm2(x)
        + problem.v.frobenius_norm() * norm2(y)
        + norm2(&problem.d);
    Ok(ratio(num, den))
}

/// `| ||y|| / ||y_ref|| - 1 |`.
pub fn metric_er2_gls(y: &[f64], y_ref: &[f64]) -> f64 {
    let (num, den) = (norm2(y), norm2(y_ref));
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::DenseMatrix;

    #[test]
    fn lse_metrics() {
        let p = LseProblem::new(
            DenseMatrix::identity(2),
            DenseMatrix::from_rows(&[&[1.0, 0.0]]),
            vec![1.0, 1.0],
            vec![2.0],
        )
        .unwrap();
        let x = [2.0, 1.0];
        assert_eq!(metric_err1_lse(&p, &x).unwrap(), 0.0);
        assert_eq!(metric_err2_lse(&p, &x, &x).unwrap(), 0.0);
        let z = LseProblem { d: vec![0.0], ..p.clone() };
        assert_eq!(metric_err1_lse(&z, &[0.0, 0.0]).unwrap(), 0.0);
        // zero denominator with a nonzero numerator
        let zb = LseProblem { b_mat: DenseMatrix::zeros(1, 2), ..p };
        assert_eq!(metric_err1_lse(&zb, &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn gls_metrics() {
        let p = GlsProblem::new(
            DenseMatrix::from_rows(&[&[1.0], &[1.0]]),
            DenseMatrix::identity(2),
            vec![1.0, 0.0],
        )
        .unwrap();
        assert_eq!(metric_er1_gls(&p, &[0.5], &[0.5, -0.5]).unwrap(), 0.0);
        assert_eq!(metric_er2_gls(&[0.5, -0.5], &[0.5, -0.5]), 0.0);
        assert_eq!(metric_er2_gls(&[0.0], &[0.0]), 0.0);
        assert_eq!(metric_er2_gls(&[1.0], &[0.0]), f64::INFINITY);
    }
}
