use crate::error::{check_len, Result};
use crate::factor::matrix::DenseMatrix;
use crate::precision::Scalar;

/// Which side the reflectors were applied from when the factor was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    FromLeft,
    FromRight,
}

/// `H = I - tau * v * v^T`, acting on indices `start..start + v.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflector<T> {
    pub start: usize,
    pub v: Vec<T>,
    pub tau: T,
}

impl<T: Scalar> Reflector<T> {
    #[inline]
    fn apply_in_place(&self, x: &mut [T]) {
        if self.tau == T::zero() {
            return;
        }
        let seg = &mut x[self.start..self.start + self.v.len()];
        let s = dot(seg, &self.v) * self.tau;
        for (a, b) in seg.iter_mut().zip(&self.v) {
            *a = *a - s * *b;
        }
    }

    /// `M <- M H` for a column-major matrix `M`.
    fn apply_right(&self, m: &mut DenseMatrix<T>) {
        if self.tau == T::zero() {
            return;
        }
        let rows = m.rows();
        let w = combine_columns(m, self.start, &self.v, rows);
        for (k, &vk) in self.v.iter().enumerate() {
            let s = self.tau * vk;
            let c = m.col_mut(self.start + k);
            for (ci, &wi) in c.iter_mut().zip(&w) {
                *ci = *ci - s * wi;
            }
        }
    }

    fn cast<U: Scalar>(&self) -> Reflector<U> {
        Reflector {
            start: self.start,
            v: self.v.iter().map(|x| U::from_f64_round(x.widen())).collect(),
            tau: U::from_f64_round(self.tau.widen()),
        }
    }
}

/// `sum_k v[k] * M[..rows, c0 + k]`, summed pairwise over column blocks.
pub(crate) fn combine_columns<T: Scalar>(m: &DenseMatrix<T>, c0: usize, v: &[T], rows: usize) -> Vec<T> {
    if v.len() > 16 {
        let h = v.len() / 2;
        let mut w = combine_columns(m, c0, &v[..h], rows);
        let w2 = combine_columns(m, c0 + h, &v[h..], rows);
        for (a, b) in w.iter_mut().zip(&w2) {
            *a = *a + *b;
        }
        return w;
    }
    let mut w = vec![T::zero(); rows];
    for (k, &vk) in v.iter().enumerate() {
        for (wi, &ci) in w.iter_mut().zip(&m.col(c0 + k)[..rows]) {
            *wi = *wi + ci * vk;
        }
    }
    w
}

const DOT_LEAF: usize = 128;

/// Pairwise dot product with eight-lane leaves.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    if n > DOT_LEAF {
        let h = n / 2;
        return dot(&a[..h], &b[..h]) + dot(&a[h..n], &b[h..n]);
    }
    let mut lanes = [T::zero(); 8];
    let (ca, cb) = (a[..n].chunks_exact(8), b[..n].chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            lanes[l] = lanes[l] + x[l] * y[l];
        }
    }
    for (l, (x, y)) in ra.iter().zip(rb).enumerate() {
        lanes[l] = lanes[l] + *x * *y;
    }
    ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))
}

/// Generate a reflector annihilating every entry of `x` except `x[piv]`.
///
/// On return `x[piv]` holds `beta` and the other entries hold the reflector
/// vector (with implicit unit at `piv`). Returns `tau`.
pub(crate) fn make_reflector<T: Scalar>(x: &mut [T], piv: usize) -> T {
    let alpha = x[piv];
    let mut xnorm = T::zero();
    {
        let s = x
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != piv)
            .fold(T::zero(), |m, (_, v)| m.max(v.abs()));
        if s > T::zero() {
            let y: Vec<T> = x
                .iter()
                .enumerate()
                .map(|(i, &v)| if i == piv { T::zero() } else { v / s })
                .collect();
            xnorm = s * dot(&y, &y).sqrt();
        }
    }
    if xnorm == T::zero() {
        return T::zero();
    }
    let mut beta = alpha.hypot(xnorm);
    if alpha >= T::zero() {
        beta = -beta;
    }
    let tau = (beta - alpha) / beta;
    let scal = T::one() / (alpha - beta);
    for (i, v) in x.iter_mut().enumerate() {
        if i != piv {
            *v = *v * scal;
        }
    }
    x[piv] = beta;
    tau
}

/// Orthogonal matrix `H = H_0 H_1 ... H_{k-1}` held as a list of reflectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholderFactor<T> {
    dim: usize,
    side: Side,
    reflectors: Vec<Reflector<T>>,
}

impl<T: Scalar> HouseholderFactor<T> {
    pub fn identity(dim: usize, side: Side) -> Self {
        HouseholderFactor {
            dim,
            side,
            reflectors: Vec::new(),
        }
    }

    pub(crate) fn from_reflectors(dim: usize, side: Side, reflectors: Vec<Reflector<T>>) -> Self {
        HouseholderFactor { dim, side, reflectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn reflectors(&self) -> &[Reflector<T>] {
        &self.reflectors
    }

    /// `x <- H x` or `x <- H^T x`.
    pub fn apply_in_place(&self, x: &mut [T], transpose: bool) -> Result<()> {
        check_len("orthogonal factor application", x.len(), self.dim)?;
        if transpose {
            for r in &self.reflectors {
                r.apply_in_place(x);
            }
        } else {
            for r in self.reflectors.iter().rev() {
                r.apply_in_place(x);
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &[T], transpose: bool) -> Result<Vec<T>> {
        let mut y = x.to_vec();
        self.apply_in_place(&mut y, transpose)?;
        Ok(y)
    }

    /// `M <- H M` or `M <- H^T M`, column by column.
    pub fn apply_left(&self, m: &mut DenseMatrix<T>, transpose: bool) -> Result<()> {
        check_len("orthogonal factor rows", m.rows(), self.dim)?;
        for j in 0..m.cols() {
            self.apply_in_place(m.col_mut(j), transpose)?;
        }
        Ok(())
    }

    /// `M <- M H` or `M <- M H^T`.
    pub fn apply_right(&self, m: &mut DenseMatrix<T>, transpose: bool) -> Result<()> {
        check_len("orthogonal factor columns", m.cols(), self.dim)?;
        if transpose {
            for r in self.reflectors.iter().rev() {
                r.apply_right(m);
            }
        } else {
            for r in &self.reflectors {
                r.apply_right(m);
            }
        }
        Ok(())
    }

    /// Explicit dense form. Test and diagnostics utility.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::identity(self.dim);
        self.apply_left(&mut m, false).expect("square identity matches");
        m
    }

    pub fn cast<U: Scalar>(&self) -> HouseholderFactor<U> {
        HouseholderFactor {
            dim: self.dim,
            side: self.side,
            reflectors: self.reflectors.iter().map(|r| r.cast()).collect(),
        }
    }
}
