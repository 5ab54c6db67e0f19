use crate::error::{check_len, Error, Result};
use crate::factor::householder::dot;
use crate::factor::matrix::{DenseMatrix, MatRef};
use crate::precision::{DoubleDouble, PrecisionLevel, Scalar};

/// Solve `T x = b` (or `T^T x = b`) with `T` the upper triangle of a square block.
pub(crate) fn trsv_view<T: Scalar>(
    t: MatRef<'_, T>,
    b: &[T],
    transpose: bool,
    block: &'static str,
) -> Result<Vec<T>> {
    let n = t.rows();
    if t.cols() != n {
        return Err(Error::Dimension(format!(
            "triangular block {block} is {}x{}",
            n,
            t.cols()
        )));
    }
    check_len("triangular solve rhs", b.len(), n)?;
    let mut x = b.to_vec();
    if !transpose {
        for j in (0..n).rev() {
            let c = t.col(j);
            if c[j] == T::zero() {
                return Err(Error::SingularTriangular { block, index: j });
            }
            x[j] = x[j] / c[j];
            let xj = x[j];
            for i in 0..j {
                x[i] = x[i] - xj * c[i];
            }
        }
    } else {
        for j in 0..n {
            let c = t.col(j);
            if c[j] == T::zero() {
                return Err(Error::SingularTriangular { block, index: j });
            }
            x[j] = (x[j] - dot(&c[..j], &x[..j])) / c[j];
        }
    }
    Ok(x)
}

/// Triangular solve with the upper triangle of `t`.
pub fn trsv<T: Scalar>(t: &DenseMatrix<T>, b: &[T], transpose: bool) -> Result<Vec<T>> {
    trsv_view(t.view(), b, transpose, "T")
}

/// `A x` or `A^T x` in the storage type of `A`.
pub(crate) fn gemv_view<T: Scalar>(a: MatRef<'_, T>, x: &[T], transpose: bool) -> Vec<T> {
    if !transpose {
        debug_assert_eq!(x.len(), a.cols());
        let mut y = vec![T::zero(); a.rows()];
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            for (yi, &aij) in y.iter_mut().zip(a.col(j)) {
                *yi = *yi + aij * xj;
            }
        }
        y
    } else {
        debug_assert_eq!(x.len(), a.rows());
        (0..a.cols()).map(|j| dot(a.col(j), x)).collect()
    }
}

/// Matrix-vector product with accumulation at the requested precision.
///
/// `Low` rounds `A` and `x` to binary32 and accumulates there.
pub fn gemv(
    a: &DenseMatrix<f64>,
    x: &[f64],
    transpose: bool,
    accumulation: PrecisionLevel,
) -> Result<Vec<f64>> {
    let (want, out) = if transpose {
        (a.rows(), a.cols())
    } else {
        (a.cols(), a.rows())
    };
    check_len("gemv operand", x.len(), want)?;
    let mut acc = Accumulator::new(out, accumulation);
    acc.add_matvec(1.0, a, x, transpose)?;
    Ok(acc.finish())
}

/// Accumulates a linear combination `sum_k s_k * op_k(M_k) x_k + sum_j c_j v_j`,
/// rounding once per entry at the end when the level is `Extended`.
pub(crate) enum Accumulator {
    Low(Vec<f32>),
    Working(Vec<f64>),
    Extended(Vec<DoubleDouble>),
}

impl Accumulator {
    pub(crate) fn new(len: usize, level: PrecisionLevel) -> Self {
        match level {
            PrecisionLevel::Low => Accumulator::Low(vec![0.0; len]),
            PrecisionLevel::Working => Accumulator::Working(vec![0.0; len]),
            PrecisionLevel::Extended => Accumulator::Extended(vec![DoubleDouble::default(); len]),
        }
    }

    fn len(&self) -> usize {
        match self {
            Accumulator::Low(v) => v.len(),
            Accumulator::Working(v) => v.len(),
            Accumulator::Extended(v) => v.len(),
        }
    }

    pub(crate) fn add_vec(&mut self, coeff: f64, v: &[f64]) -> Result<()> {
        check_len("accumulated vector", v.len(), self.len())?;
        match self {
            Accumulator::Low(acc) => {
                let c = coeff as f32;
                for (a, &x) in acc.iter_mut().zip(v) {
                    *a += c * x as f32;
                }
            }
            Accumulator::Working(acc) => {
                for (a, &x) in acc.iter_mut().zip(v) {
                    *a += coeff * x;
                }
            }
            Accumulator::Extended(acc) => {
                for (a, &x) in acc.iter_mut().zip(v) {
                    a.add_prod(coeff, x);
                }
            }
        }
        Ok(())
    }

    /// Adds `coeff * op(M) x`; `coeff` must be exactly representable (±1 in practice).
    pub(crate) fn add_matvec(
        &mut self,
        coeff: f64,
        m: &DenseMatrix<f64>,
        x: &[f64],
        transpose: bool,
    ) -> Result<()> {
        let (xlen, ylen) = if transpose {
            (m.rows(), m.cols())
        } else {
            (m.cols(), m.rows())
        };
        check_len("accumulated product operand", x.len(), xlen)?;
        check_len("accumulated product output", ylen, self.len())?;
        let xs: Vec<f64> = x.iter().map(|v| coeff * v).collect();
        match self {
            Accumulator::Low(acc) => {
                let xl: Vec<f32> = xs.iter().map(|&v| v as f32).collect();
                if transpose {
                    for (j, a) in acc.iter_mut().enumerate() {
                        let mut s = 0.0_f32;
                        for (&mij, &xi) in m.col(j).iter().zip(&xl) {
                            s += mij as f32 * xi;
                        }
                        *a += s;
                    }
                } else {
                    for (j, &xj) in xl.iter().enumerate() {
                        for (a, &mij) in acc.iter_mut().zip(m.col(j)) {
                            *a += mij as f32 * xj;
                        }
                    }
                }
            }
            Accumulator::Working(acc) => {
                if transpose {
                    for (j, a) in acc.iter_mut().enumerate() {
                        *a += m.col(j).iter().zip(&xs).map(|(p, q)| p * q).sum::<f64>();
                    }
                } else {
                    for (j, &xj) in xs.iter().enumerate() {
                        for (a, &mij) in acc.iter_mut().zip(m.col(j)) {
                            *a += mij * xj;
                        }
                    }
                }
            }
            Accumulator::Extended(acc) => {
                if transpose {
                    for (j, a) in acc.iter_mut().enumerate() {
                        for (&mij, &xi) in m.col(j).iter().zip(&xs) {
                            a.add_prod(mij, xi);
                        }
                    }
                } else {
                    for (j, &xj) in xs.iter().enumerate() {
                        for (a, &mij) in acc.iter_mut().zip(m.col(j)) {
                            a.add_prod(mij, xj);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Vec<f64> {
        match self {
            Accumulator::Low(v) => v.into_iter().map(f64::from).collect(),
            Accumulator::Working(v) => v,
            Accumulator::Extended(v) => v.into_iter().map(|d| d.to_f64()).collect(),
        }
    }
}
