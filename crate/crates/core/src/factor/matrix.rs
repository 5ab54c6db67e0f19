use crate::error::{Error, Result};
use crate::precision::Scalar;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Borrowed rectangular block of a column-major matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a, T> {
    data: &'a [T],
    ld: usize,
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
}

impl<'a, T: Scalar> MatRef<'a, T> {
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[(self.col0 + j) * self.ld + self.row0 + i]
    }

    /// Contiguous slice of column `j` restricted to this block's rows.
    #[inline]
    pub fn col(&self, j: usize) -> &'a [T] {
        let start = (self.col0 + j) * self.ld + self.row0;
        &self.data[start..start + self.rows]
    }

    pub fn sub(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatRef<'a, T> {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        MatRef {
            data: self.data,
            ld: self.ld,
            row0: self.row0 + r0,
            col0: self.col0 + c0,
            rows,
            cols,
        }
    }

    pub fn to_owned(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            out.col_mut(j).copy_from_slice(self.col(j));
        }
        out
    }
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Build from column-major data. Entries must be finite.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Build from row slices; panics on ragged input. Mostly for tests.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: T) {
        self.data[j * self.rows + i] = x;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn view(&self) -> MatRef<'_, T> {
        MatRef {
            data: &self.data,
            ld: self.rows,
            row0: 0,
            col0: 0,
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn sub(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatRef<'_, T> {
        self.view().sub(r0, c0, rows, cols)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let s = self.max_abs();
        if s == 0.0 || !s.is_finite() {
            return s;
        }
        let s = crate::precision::pow2_scale(s);
        s * self
            .data
            .iter()
            .map(|x| {
                let y = x.widen() / s;
                y * y
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.widen().abs()))
    }

    /// Elementwise conversion to another scalar type (rounding when narrowing).
    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::from_f64_round(x.widen())).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// Dense product, used by generators and test utilities.
    pub fn matmul(&self, other: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let oc = out.col_mut(j);
            for k in 0..self.cols {
                let b = other.get(k, j);
                if b == T::zero() {
                    continue;
                }
                let ac = &self.data[k * self.rows..(k + 1) * self.rows];
                for (o, &a) in oc.iter_mut().zip(ac) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub_matrix(&self, other: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("matrix difference shape mismatch".into()));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    /// Horizontal block selection `[c0, c0 + cols)`.
    pub fn columns(&self, c0: usize, cols: usize) -> DenseMatrix<T> {
        self.sub(0, c0, self.rows, cols).to_owned()
    }

    pub fn rows_range(&self, r0: usize, rows: usize) -> DenseMatrix<T> {
        self.sub(r0, 0, rows, self.cols).to_owned()
    }
}

impl DenseMatrix<f64> {
    /// Demote to binary32 after dividing by the max-abs entry; returns the
    /// demoted matrix and the scale (1 for the zero matrix).
    pub fn demote_scaled(&self) -> (DenseMatrix<f32>, f64) {
        let s = self.max_abs();
        let s = if s == 0.0 { 1.0 } else { s };
        let low = DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| (x / s) as f32).collect(),
        };
        (low, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_views() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(m.as_slice(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        let v = m.sub(0, 1, 2, 2);
        assert_eq!(v.get(1, 1), 6.0);
        assert_eq!(v.col(0), &[2.0, 5.0]);
        assert_eq!(m.transpose().get(2, 0), 3.0);
        let w = v.sub(1, 0, 1, 2);
        assert_eq!(w.get(0, 0), 5.0);
        assert_eq!(w.to_owned(), DenseMatrix::from_rows(&[&[5.0, 6.0]]));
    }

    #[test]
    fn rejects_bad_data() {
        assert!(DenseMatrix::<f64>::from_col_major(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::<f64>::from_col_major(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn frobenius_and_demotion() {
        let m = DenseMatrix::from_rows(&[&[3e200, 0.0], &[0.0, -4e200]]);
        assert!((m.frobenius_norm() / 5e200 - 1.0).abs() < 1e-15);
        let (low, s) = m.demote_scaled();
        assert_eq!(s, 4e200);
        assert_eq!(low.get(1, 1), -1.0);
        assert!(low.as_slice().iter().all(|x| x.is_finite()));
        let (z, s0) = DenseMatrix::<f64>::zeros(2, 2).demote_scaled();
        assert_eq!(s0, 1.0);
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn matmul_small() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c, DenseMatrix::from_rows(&[&[2.0, 1.0], &[4.0, 3.0]]));
        assert!(a.matmul(&DenseMatrix::zeros(3, 1)).is_err());
    }
}
