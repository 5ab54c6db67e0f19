use crate::error::{check_len, Error, Result};
use crate::factor::DenseMatrix;
use crate::gls::GlsProblem;
use crate::lse::LseProblem;

#[derive(Debug, Clone, Copy)]
pub enum AugmentedProblem<'a> {
    Lse(&'a LseProblem),
    Gls(&'a GlsProblem),
}

/// Matrix-free scaled augmented matrix.
///
/// LSE ordering is `(r, v, x)` with `[aI 0 A; 0 0 B; A^T B^T 0]`; GLS
/// ordering is `(y, z, x)` with `[aI V^T 0; V 0 W; 0 W^T 0]`.
#[derive(Debug, Clone, Copy)]
pub struct AugmentedOperator<'a> {
    pub problem: AugmentedProblem<'a>,
    pub alpha: f64,
}

fn matvec_into(out: &mut [f64], a: &DenseMatrix<f64>, x: &[f64], transpose: bool) {
    if transpose {
        for (j, o) in out.iter_mut().enumerate() {
            *o += crate::precision::dot(a.col(j), x);
        }
    } else {
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (o, &aij) in out.iter_mut().zip(a.col(j)) {
                    *o += aij * xj;
                }
            }
        }
    }
}

impl<'a> AugmentedOperator<'a> {
    pub fn lse(problem: &'a LseProblem, alpha: f64) -> Result<Self> {
        Self::new(AugmentedProblem::Lse(problem), alpha)
    }

    pub fn gls(problem: &'a GlsProblem, alpha: f64) -> Result<Self> {
        Self::new(AugmentedProblem::Gls(problem), alpha)
    }

    fn new(problem: AugmentedProblem<'a>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
        }
        Ok(AugmentedOperator { problem, alpha })
    }

    /// Block sizes in the operator's ordering.
    pub fn blocks(&self) -> [usize; 3] {
        match self.problem {
            AugmentedProblem::Lse(p) => {
                let (m, n, pp) = p.dims();
                [m, pp, n]
            }
            AugmentedProblem::Gls(p) => {
                let (n, m, pp) = p.dims();
                [pp, n, m]
            }
        }
    }

    pub fn total_dim(&self) -> usize {
        self.blocks().iter().sum()
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let [k1, k2, _] = self.blocks();
        check_len("augmented operand", u.len(), self.total_dim())?;
        let (u1, rest) = u.split_at(k1);
        let (u2, u3) = rest.split_at(k2);
        let mut out = vec![0.0; u.len()];
        let (o1, rest) = out.split_at_mut(k1);
        let (o2, o3) = rest.split_at_mut(k2);
        for (o, &x) in o1.iter_mut().zip(u1) {
            *o = self.alpha * x;
        }
        match self.problem {
            AugmentedProblem::Lse(p) => {
                matvec_into(o1, &p.a, u3, false);
                matvec_into(o2, &p.b_mat, u3, false);
                matvec_into(o3, &p.a, u1, true);
                matvec_into(o3, &p.b_mat, u2, true);
            }
            AugmentedProblem::Gls(p) => {
                matvec_into(o1, &p.v, u2, true);
                matvec_into(o2, &p.v, u1, false);
                matvec_into(o2, &p.w, u3, false);
                matvec_into(o3, &p.w, u2, true);
            }
        }
        Ok(out)
    }

    /// Dense assembly, for small validation problems.
    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let [k1, k2, _] = self.blocks();
        let n = self.total_dim();
        let mut f = DenseMatrix::zeros(n, n);
        for i in 0..k1 {
            f.set(i, i, self.alpha);
        }
        let mut put = |r0: usize, c0: usize, m: &DenseMatrix<f64>| {
            for j in 0..m.cols() {
                for i in 0..m.rows() {
                    f.set(r0 + i, c0 + j, m.get(i, j));
                    f.set(c0 + j, r0 + i, m.get(i, j));
                }
            }
        };
        match self.problem {
            AugmentedProblem::Lse(p) => {
                put(0, k1 + k2, &p.a);
                put(k1, k1 + k2, &p.b_mat);
            }
            AugmentedProblem::Gls(p) => {
                put(k1, 0, &p.v);
                put(k1, k1 + k2, &p.w);
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_match_assembly() {
        let p = LseProblem::new(
            DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]),
            DenseMatrix::from_rows(&[&[1.0, -1.0]]),
            vec![0.0; 3],
            vec![0.0],
        )
        .unwrap();
        let op = AugmentedOperator::lse(&p, 0.5).unwrap();
        assert_eq!(op.total_dim(), 6);
        let f = op.to_dense();
        for k in 0..6 {
            let mut e = vec![0.0; 6];
            e[k] = 1.0;
            assert_eq!(op.apply(&e).unwrap(), f.col(k).to_vec());
        }
        assert_eq!(f.get(0, 0), 0.5);
        assert_eq!(f.get(3, 5), -1.0);
        assert_eq!(f.get(5, 3), -1.0);
        assert!(op.apply(&[0.0; 5]).is_err());
        assert!(AugmentedOperator::lse(&p, 0.0).is_err());
    }
}
