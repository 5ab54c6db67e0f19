//! Householder QR, RQ and the generalized GRQ / GQR factorizations.

mod blas;
mod householder;
mod matrix;

pub use blas::{gemv, trsv};
pub(crate) use blas::{gemv_view, trsv_view, Accumulator};
pub use householder::{HouseholderFactor, Reflector, Side};
pub use matrix::{DenseMatrix, MatRef};

use crate::error::{Error, Result};
use crate::precision::Scalar;

fn qr_in_place<T: Scalar>(a: &mut DenseMatrix<T>) -> HouseholderFactor<T> {
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    let mut refl = Vec::with_capacity(k);
    for c in 0..k {
        let (tau, v) = {
            let x = &mut a.col_mut(c)[c..];
            let tau = householder::make_reflector(x, 0);
            let mut v = x.to_vec();
            v[0] = T::one();
            for e in x[1..].iter_mut() {
                *e = T::zero();
            }
            (tau, v)
        };
        if tau != T::zero() {
            for j in c + 1..n {
                let col = &mut a.col_mut(j)[c..];
                let s = householder::dot(col, &v) * tau;
                for (x, &vi) in col.iter_mut().zip(&v) {
                    *x = *x - s * vi;
                }
            }
        }
        refl.push(Reflector { start: c, v, tau });
    }
    HouseholderFactor::from_reflectors(m, Side::FromLeft, refl)
}

/// Bottom-up RQ of any shape: afterwards row `rows-1-j` is zero left of
/// column `cols-1-j` for `j < min(rows, cols)`.
fn rq_in_place<T: Scalar>(a: &mut DenseMatrix<T>) -> HouseholderFactor<T> {
    let (p, n) = (a.rows(), a.cols());
    let k = p.min(n);
    let mut refl = Vec::with_capacity(k);
    for j in 0..k {
        let i = p - 1 - j;
        let len = n - j;
        let mut x: Vec<T> = (0..len).map(|c| a.get(i, c)).collect();
        let tau = householder::make_reflector(&mut x, len - 1);
        a.set(i, len - 1, x[len - 1]);
        for c in 0..len - 1 {
            a.set(i, c, T::zero());
        }
        let mut v = x;
        v[len - 1] = T::one();
        if tau != T::zero() && i > 0 {
            let w = householder::combine_columns(a, 0, &v, i);
            for (c, &vc) in v.iter().enumerate() {
                let s = tau * vc;
                for (arc, &wr) in a.col_mut(c)[..i].iter_mut().zip(&w) {
                    *arc = *arc - s * wr;
                }
            }
        }
        refl.push(Reflector { start: 0, v, tau });
    }
    // A H_(0) ... H_(k-1) = T, so the orthogonal factor lists them in reverse.
    refl.reverse();
    HouseholderFactor::from_reflectors(n, Side::FromRight, refl)
}

/// Householder QR: `A = Q R` with `R` upper trapezoidal of the shape of `A`.
pub fn qr<T: Scalar>(a: &DenseMatrix<T>) -> Result<(HouseholderFactor<T>, DenseMatrix<T>)> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::Dimension("qr of an empty matrix".into()));
    }
    let mut r = a.clone();
    let q = qr_in_place(&mut r);
    Ok((q, r))
}

/// RQ of a wide matrix: `B = [0, R] Q` with `R` square upper triangular.
pub fn rq<T: Scalar>(b: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, HouseholderFactor<T>)> {
    let (p, n) = (b.rows(), b.cols());
    if p == 0 || n == 0 {
        return Err(Error::Dimension("rq of an empty matrix".into()));
    }
    if p > n {
        return Err(Error::Dimension(format!("rq needs rows <= cols, got {p}x{n}")));
    }
    let mut t = b.clone();
    let q = rq_in_place(&mut t);
    Ok((t.sub(0, n - p, p, p).to_owned(), q))
}

pub fn apply_orthogonal<T: Scalar>(
    h: &HouseholderFactor<T>,
    v: &[T],
    transpose: bool,
) -> Result<Vec<T>> {
    h.apply(v, transpose)
}

/// `B = s_b [0, R] Q`, `A = s_a Z T Q`. The scales are 1 unless the factors
/// were computed from demoted copies.
#[derive(Debug, Clone)]
pub struct GrqFactors<T> {
    pub q: HouseholderFactor<T>,
    pub r: DenseMatrix<T>,
    pub z: HouseholderFactor<T>,
    pub t: DenseMatrix<T>,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub scale_a: f64,
    pub scale_b: f64,
}

/// `W = s_w Q [R; 0]`, `V = s_v Q T Z`.
#[derive(Debug, Clone)]
pub struct GqrFactors<T> {
    pub q: HouseholderFactor<T>,
    pub r: DenseMatrix<T>,
    pub z: HouseholderFactor<T>,
    pub t: DenseMatrix<T>,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub scale_w: f64,
    pub scale_v: f64,
}

fn check_nonempty(dims: &[usize]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::Dimension("all dimensions must be positive".into()));
    }
    Ok(())
}

/// GRQ factorization of `(B, A)`: RQ of `B`, then QR of `A Q^T`.
pub fn grq<T: Scalar>(b: &DenseMatrix<T>, a: &DenseMatrix<T>) -> Result<GrqFactors<T>> {
    let (m, n, p) = (a.rows(), a.cols(), b.rows());
    check_nonempty(&[m, n, p])?;
    if b.cols() != n {
        return Err(Error::Dimension(format!(
            "A has {n} columns but B has {}",
            b.cols()
        )));
    }
    if p > n || n > m + p {
        return Err(Error::Dimension(format!(
            "need p <= n <= m + p, got (m, n, p) = ({m}, {n}, {p})"
        )));
    }
    let mut rb = b.clone();
    let q = rq_in_place(&mut rb);
    let r = rb.sub(0, n - p, p, p).to_owned();
    let mut t = a.clone();
    q.apply_right(&mut t, true)?;
    let z = qr_in_place(&mut t);
    Ok(GrqFactors { q, r, z, t, m, n, p, scale_a: 1.0, scale_b: 1.0 })
}

/// GRQ of binary32 copies of `A / s_a` and `B / s_b`.
pub fn grq_demoted(b: &DenseMatrix<f64>, a: &DenseMatrix<f64>) -> Result<GrqFactors<f32>> {
    let (bl, sb) = b.demote_scaled();
    let (al, sa) = a.demote_scaled();
    let mut f = grq(&bl, &al)?;
    f.scale_a = sa;
    f.scale_b = sb;
    Ok(f)
}

/// GQR factorization of `(W, V)`: QR of `W`, then RQ of `Q^T V`.
pub fn gqr<T: Scalar>(w: &DenseMatrix<T>, v: &DenseMatrix<T>) -> Result<GqrFactors<T>> {
    let (n, m, p) = (w.rows(), w.cols(), v.cols());
    check_nonempty(&[n, m, p])?;
    if v.rows() != n {
        return Err(Error::Dimension(format!(
            "W has {n} rows but V has {}",
            v.rows()
        )));
    }
    if m > n || n > m + p {
        return Err(Error::Dimension(format!(
            "need m <= n <= m + p, got (n, m, p) = ({n}, {m}, {p})"
        )));
    }
    let mut rw = w.clone();
    let q = qr_in_place(&mut rw);
    let r = rw.sub(0, 0, m, m).to_owned();
    let mut t = v.clone();
    q.apply_left(&mut t, true)?;
    let z = rq_in_place(&mut t);
    Ok(GqrFactors { q, r, z, t, n, m, p, scale_w: 1.0, scale_v: 1.0 })
}

/// GQR of binary32 copies of `W / s_w` and `V / s_v`.
pub fn gqr_demoted(w: &DenseMatrix<f64>, v: &DenseMatrix<f64>) -> Result<GqrFactors<f32>> {
    let (wl, sw) = w.demote_scaled();
    let (vl, sv) = v.demote_scaled();
    let mut f = gqr(&wl, &vl)?;
    f.scale_w = sw;
    f.scale_v = sv;
    Ok(f)
}

impl<T: Scalar> GrqFactors<T> {
    /// Leading `(n-p) x (n-p)` triangle of `T`.
    pub fn t11(&self) -> MatRef<'_, T> {
        self.t.sub(0, 0, self.n - self.p, self.n - self.p)
    }

    pub fn t12(&self) -> MatRef<'_, T> {
        self.t.sub(0, self.n - self.p, self.n - self.p, self.p)
    }

    /// Rows `n-p..m` of the last `p` columns.
    pub fn t22(&self) -> MatRef<'_, T> {
        self.t
            .sub(self.n - self.p, self.n - self.p, self.m + self.p - self.n, self.p)
    }

    /// Binary64 copy with unit scales (scales multiplied into `R` and `T`).
    pub fn to_working_unscaled(&self) -> GrqFactors<f64> {
        GrqFactors {
            q: self.q.cast(),
            r: self.r.cast::<f64>().scaled(self.scale_b),
            z: self.z.cast(),
            t: self.t.cast::<f64>().scaled(self.scale_a),
            m: self.m,
            n: self.n,
            p: self.p,
            scale_a: 1.0,
            scale_b: 1.0,
        }
    }

    /// Binary64 copy keeping the scales.
    pub fn to_working(&self) -> GrqFactors<f64> {
        GrqFactors {
            q: self.q.cast(),
            r: self.r.cast(),
            z: self.z.cast(),
            t: self.t.cast(),
            m: self.m,
            n: self.n,
            p: self.p,
            scale_a: self.scale_a,
            scale_b: self.scale_b,
        }
    }

    /// Dense `(B, A)` rebuilt from the factors. Diagnostics utility.
    pub fn reconstruct(&self) -> (DenseMatrix<f64>, DenseMatrix<f64>) {
        let w = self.to_working_unscaled();
        let (m, n, p) = (self.m, self.n, self.p);
        let mut b = DenseMatrix::zeros(p, n);
        for j in 0..p {
            b.col_mut(n - p + j).copy_from_slice(w.r.col(j));
        }
        w.q.apply_right(&mut b, false).expect("dims");
        let mut a = w.t.clone();
        w.z.apply_left(&mut a, false).expect("dims");
        w.q.apply_right(&mut a, false).expect("dims");
        debug_assert_eq!(a.rows(), m);
        (b, a)
    }
}

impl<T: Scalar> GqrFactors<T> {
    /// Dimension split of the columns of `T`: first `p-n+m`, then `n-m`.
    #[inline]
    fn c0(&self) -> usize {
        self.p + self.m - self.n
    }

    /// `T(1:m, 1:p-n+m)`.
    pub fn t11(&self) -> MatRef<'_, T> {
        self.t.sub(0, 0, self.m, self.c0())
    }

    /// `T(1:m, p-n+m+1:p)`.
    pub fn t12(&self) -> MatRef<'_, T> {
        self.t.sub(0, self.c0(), self.m, self.n - self.m)
    }

    /// Upper-triangular `T(m+1:n, p-n+m+1:p)`.
    pub fn t22(&self) -> MatRef<'_, T> {
        self.t.sub(self.m, self.c0(), self.n - self.m, self.n - self.m)
    }

    pub fn to_working_unscaled(&self) -> GqrFactors<f64> {
        GqrFactors {
            q: self.q.cast(),
            r: self.r.cast::<f64>().scaled(self.scale_w),
            z: self.z.cast(),
            t: self.t.cast::<f64>().scaled(self.scale_v),
            n: self.n,
            m: self.m,
            p: self.p,
            scale_w: 1.0,
            scale_v: 1.0,
        }
    }

    pub fn to_working(&self) -> GqrFactors<f64> {
        GqrFactors {
            q: self.q.cast(),
            r: self.r.cast(),
            z: self.z.cast(),
            t: self.t.cast(),
            n: self.n,
            m: self.m,
            p: self.p,
            scale_w: self.scale_w,
            scale_v: self.scale_v,
        }
    }

    /// Dense `(W, V)` rebuilt from the factors.
    pub fn reconstruct(&self) -> (DenseMatrix<f64>, DenseMatrix<f64>) {
        let f = self.to_working_unscaled();
        let (n, m) = (self.n, self.m);
        let mut w = DenseMatrix::zeros(n, m);
        for j in 0..m {
            w.col_mut(j)[..m].copy_from_slice(f.r.col(j));
        }
        f.q.apply_left(&mut w, false).expect("dims");
        let mut v = f.t.clone();
        f.z.apply_right(&mut v, false).expect("dims");
        f.q.apply_left(&mut v, false).expect("dims");
        (w, v)
    }
}
