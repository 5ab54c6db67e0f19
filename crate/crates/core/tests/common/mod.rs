#![allow(dead_code)]

use mixedls::factor::{DenseMatrix, GqrFactors, GrqFactors, HouseholderFactor};
use mixedls::gls::GlsProblem;
use mixedls::lse::LseProblem;
use mixedls::precision::Scalar;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

pub fn to_na(m: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn to_dense(m: &DMatrix<f64>) -> DenseMatrix<f64> {
    DenseMatrix::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).unwrap()
}

/// `[I 0 A; 0 0 B; A^T B^T 0]`, acting on `(r, -v, x)`.
pub fn lse_kkt(p: &LseProblem) -> DMatrix<f64> {
    let (m, n, pp) = p.dims();
    let (a, b) = (to_na(&p.a), to_na(&p.b_mat));
    let mut k = DMatrix::zeros(m + pp + n, m + pp + n);
    k.view_mut((0, 0), (m, m)).fill_with_identity();
    k.view_mut((0, m + pp), (m, n)).copy_from(&a);
    k.view_mut((m, m + pp), (pp, n)).copy_from(&b);
    k.view_mut((m + pp, 0), (n, m)).copy_from(&a.transpose());
    k.view_mut((m + pp, m), (n, pp)).copy_from(&b.transpose());
    k
}

pub fn lse_rhs(p: &LseProblem) -> Vec<f64> {
    let n = p.a.cols();
    [p.b.clone(), p.d.clone(), vec![0.0; n]].concat()
}

/// `[I V^T 0; V 0 W; 0 W^T 0]`, acting on `(y, -z, x)`.
pub fn gls_kkt(p: &GlsProblem) -> DMatrix<f64> {
    let (n, m, pp) = p.dims();
    let (w, v) = (to_na(&p.w), to_na(&p.v));
    let mut k = DMatrix::zeros(pp + n + m, pp + n + m);
    k.view_mut((0, 0), (pp, pp)).fill_with_identity();
    k.view_mut((0, pp), (pp, n)).copy_from(&v.transpose());
    k.view_mut((pp, 0), (n, pp)).copy_from(&v);
    k.view_mut((pp, pp + n), (n, m)).copy_from(&w);
    k.view_mut((pp + n, pp), (m, n)).copy_from(&w.transpose());
    k
}

pub fn gls_rhs(p: &GlsProblem) -> Vec<f64> {
    let (_, m, pp) = p.dims();
    [vec![0.0; pp], p.d.clone(), vec![0.0; m]].concat()
}

/// LU solve in binary64.
pub fn dense_solve(k: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    k.clone()
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .expect("nonsingular")
        .as_slice()
        .to_vec()
}

fn rat(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite")
}

/// Exact rational Gaussian elimination with partial pivoting on the
/// binary64 data, rounded to binary64 at the end.
pub fn exact_solve(k: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let n = k.nrows();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| rat(k[(i, j)]))
                .chain(std::iter::once(rat(rhs[i])))
                .collect()
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().cmp(&a[j][c].abs())).unwrap();
        assert!(!a[piv][c].is_zero(), "singular system");
        a.swap(c, piv);
        let pr = a[c].clone();
        for row in a.iter_mut().skip(c + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = &row[c] / &pr[c];
            for j in c..=n {
                let t = &f * &pr[j];
                row[j] -= t;
            }
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut s = a[i][n].clone();
        for j in i + 1..n {
            s -= &a[i][j] * &x[j];
        }
        x[i] = s / &a[i][i];
    }
    x.iter().map(|q| rational_to_f64(q)).collect()
}

/// `(mantissa, exponent)` with `x = mantissa * 2^exponent`.
fn split(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (mant, exp) = if e == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), e - 1075)
    };
    (if x < 0.0 { -mant } else { mant }, exp)
}

/// `rhs - K x` evaluated exactly in fixed point and rounded once.
pub fn exact_residual(k: &DMatrix<f64>, x: &[f64], rhs: &[f64]) -> Vec<f64> {
    let xs: Vec<(i64, i32)> = x.iter().map(|&v| split(v)).collect();
    (0..k.nrows())
        .map(|i| {
            let mut terms: Vec<(i128, i32)> = vec![{
                let (m, e) = split(rhs[i]);
                (m as i128, e)
            }];
            for (j, &(mx, ex)) in xs.iter().enumerate() {
                let (ma, ea) = split(k[(i, j)]);
                if ma != 0 && mx != 0 {
                    terms.push((-(ma as i128) * mx as i128, ea + ex));
                }
            }
            let e0 = terms.iter().filter(|t| t.0 != 0).map(|t| t.1).min().unwrap_or(0);
            let mut acc = BigInt::zero();
            for (m, e) in terms {
                if m != 0 {
                    acc += BigInt::from(m) << ((e - e0) as usize);
                }
            }
            rational_to_f64(&(BigRational::from_integer(acc) * pow2(e0)))
        })
        .collect()
}

fn pow2(e: i32) -> BigRational {
    let one = BigInt::from(1);
    if e >= 0 {
        BigRational::from_integer(one << e as usize)
    } else {
        BigRational::new(one.clone(), one << (-e) as usize)
    }
}

/// LU solve refined with exactly computed residuals until the update
/// stalls below binary64 resolution.
pub fn refined_solve(k: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let lu = k.clone().lu();
    let mut x = lu
        .solve(&DVector::from_column_slice(rhs))
        .expect("nonsingular")
        .as_slice()
        .to_vec();
    for _ in 0..20 {
        let r = exact_residual(k, &x, rhs);
        let dx = lu.solve(&DVector::from_column_slice(&r)).expect("nonsingular");
        for (a, d) in x.iter_mut().zip(dx.iter()) {
            *a += d;
        }
        if dx.amax() <= 1e-17 * inf_norm(&x) {
            break;
        }
    }
    x
}

fn rational_to_f64(q: &BigRational) -> f64 {
    // Shift so the quotient has 64+ significant bits, then scale back.
    let (num, den) = (q.numer(), q.denom());
    if num.is_zero() {
        return 0.0;
    }
    let shift = 80i64 - (num.bits() as i64 - den.bits() as i64);
    let scaled = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    let mut f = scaled.to_f64().unwrap_or(f64::NAN);
    let mut e = -shift;
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        f *= 2f64.powi(step as i32);
        e -= step;
    }
    f
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm2(&d) / norm2(y)
}

pub fn rel_err_inf(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    inf_norm(&d) / inf_norm(y)
}

/// `|| |K^{-1}| |K| |u| ||_inf / ||u||_inf`.
pub fn skeel_cond(k: &DMatrix<f64>, u: &[f64]) -> f64 {
    let inv = k.clone().try_inverse().expect("nonsingular");
    let au = DVector::from_iterator(u.len(), u.iter().map(|x| x.abs()));
    let t = k.abs() * au;
    let s = inv.abs() * t;
    s.amax() / inf_norm(u)
}

/// `(r, -v, x)` stacked.
pub fn lse_stack(r: &[f64], v: &[f64], x: &[f64]) -> Vec<f64> {
    [r.to_vec(), v.iter().map(|a| -a).collect(), x.to_vec()].concat()
}

/// `(y, -z, x)` stacked.
pub fn gls_stack(y: &[f64], z: &[f64], x: &[f64]) -> Vec<f64> {
    [y.to_vec(), z.iter().map(|a| -a).collect(), x.to_vec()].concat()
}

pub fn max_abs_diff(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Product of the explicit reflectors `I - tau v v^T`, built independently
/// of the library's application kernels.
pub fn explicit<T: Scalar>(h: &HouseholderFactor<T>) -> DMatrix<f64> {
    let n = h.dim();
    let mut q = DMatrix::<f64>::identity(n, n);
    for r in h.reflectors() {
        let mut e = DMatrix::<f64>::identity(n, n);
        for (i, vi) in r.v.iter().enumerate() {
            for (j, vj) in r.v.iter().enumerate() {
                e[(r.start + i, r.start + j)] -= r.tau.widen() * vi.widen() * vj.widen();
            }
        }
        q *= e;
    }
    q
}

pub fn widen<T: Scalar>(m: &DenseMatrix<T>) -> DMatrix<f64> {
    to_na(&m.cast::<f64>())
}

pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm()
}

/// `(||B - [0 R] Q|| / ||B||, ||A - Z T Q|| / ||A||)` with explicit factors.
pub fn grq_errors<T: Scalar>(b: &DenseMatrix<f64>, a: &DenseMatrix<f64>, f: &GrqFactors<T>) -> (f64, f64) {
    let (m, n, p) = (f.m, f.n, f.p);
    let q = explicit(&f.q);
    let z = explicit(&f.z);
    let mut rb = DMatrix::zeros(p, n);
    rb.view_mut((0, n - p), (p, p)).copy_from(&(widen(&f.r) * f.scale_b));
    let t = widen(&f.t) * f.scale_a;
    assert_eq!((t.nrows(), t.ncols()), (m, n));
    (rel(&to_na(b), &(rb * &q)), rel(&to_na(a), &(z * t * q)))
}

pub fn gqr_errors<T: Scalar>(w: &DenseMatrix<f64>, v: &DenseMatrix<f64>, f: &GqrFactors<T>) -> (f64, f64) {
    let (n, m) = (f.n, f.m);
    let q = explicit(&f.q);
    let z = explicit(&f.z);
    let mut rw = DMatrix::zeros(n, m);
    rw.view_mut((0, 0), (m, m)).copy_from(&(widen(&f.r) * f.scale_w));
    let t = widen(&f.t) * f.scale_v;
    (rel(&to_na(w), &(&q * rw)), rel(&to_na(v), &(q * t * z)))
}
