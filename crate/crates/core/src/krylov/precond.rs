use crate::error::{check_len, Error, Result};
use crate::factor::{gemv_view, trsv_view, DenseMatrix, GqrFactors, GrqFactors, MatRef};
use crate::precision::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    LeftLse,
    LeftGls,
    BdSplitLse,
    BdSplitGls,
}

/// Shape variant of a block-diagonal split preconditioner. `Padded` is the
/// `n > m` (LSE) or `n > p` (GLS) case, where `U` carries an identity block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdCase {
    Triangular,
    Padded,
}

#[derive(Debug, Clone)]
enum Factors {
    Lse(GrqFactors<f64>),
    Gls(GqrFactors<f64>),
}

/// Preconditioner built from GRQ/GQR factors promoted to binary64.
///
/// Left kinds apply `M`; split kinds apply `M_l` on the left and `M_r` on
/// the right of the augmented operator.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    kind: PreconditionerKind,
    alpha: f64,
    factors: Factors,
    u: Option<DenseMatrix<f64>>,
    case: Option<BdCase>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

fn check_diag(t: MatRef<'_, f64>, block: &'static str) -> Result<()> {
    for i in 0..t.rows().min(t.cols()) {
        if t.get(i, i) == 0.0 {
            return Err(Error::SingularTriangular { block, index: i });
        }
    }
    Ok(())
}

fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

fn sub_in_place(y: &mut [f64], x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a -= b);
}

impl Preconditioner {
    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn case(&self) -> Option<BdCase> {
        self.case
    }

    pub fn is_split(&self) -> bool {
        matches!(self.kind, PreconditionerKind::BdSplitLse | PreconditionerKind::BdSplitGls)
    }

    /// Block sizes in operator ordering.
    pub fn blocks(&self) -> [usize; 3] {
        match &self.factors {
            Factors::Lse(f) => [f.m, f.p, f.n],
            Factors::Gls(f) => [f.p, f.n, f.m],
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks().iter().sum()
    }

    fn split<'v>(&self, w: &'v [f64]) -> Result<[&'v [f64]; 3]> {
        let [k1, k2, _] = self.blocks();
        check_len("preconditioner operand", w.len(), self.dim())?;
        let (a, rest) = w.split_at(k1);
        let (b, c) = rest.split_at(k2);
        Ok([a, b, c])
    }

    /// `M w` for left kinds, `M_l w` for split kinds.
    pub fn apply_left(&self, w: &[f64]) -> Result<Vec<f64>> {
        let parts = self.split(w)?;
        let [a, b, c] = match (&self.factors, self.kind) {
            (Factors::Lse(f), PreconditionerKind::LeftLse) => self.left_lse(f, parts)?,
            (Factors::Gls(f), PreconditionerKind::LeftGls) => self.left_gls(f, parts)?,
            (Factors::Lse(f), _) => self.ml_lse(f, parts)?,
            (Factors::Gls(f), _) => self.ml_gls(f, parts)?,
        };
        Ok([a, b, c].concat())
    }

    /// `M_r w` for split kinds; the identity for left kinds.
    pub fn apply_right(&self, w: &[f64]) -> Result<Vec<f64>> {
        let parts = self.split(w)?;
        let [a, b, c] = match (&self.factors, self.is_split()) {
            (_, false) => return Ok(w.to_vec()),
            (Factors::Lse(f), true) => self.mr_lse(f, parts)?,
            (Factors::Gls(f), true) => self.mr_gls(f, parts)?,
        };
        Ok([a, b, c].concat())
    }

    fn u(&self) -> MatRef<'_, f64> {
        self.u.as_ref().expect("split preconditioner holds U").view()
    }

    /// `Y`: trailing `p x p` block of `U` (LSE) or leading `m x m` block (GLS).
    fn y(&self) -> MatRef<'_, f64> {
        let u = self.u();
        match &self.factors {
            Factors::Lse(f) => u.sub(f.n - f.p, f.n - f.p, f.p, f.p),
            Factors::Gls(f) => u.sub(0, 0, f.m, f.m),
        }
    }

    fn left_lse(&self, f: &GrqFactors<f64>, [w1, w2, w3]: [&[f64]; 3]) -> Result<[Vec<f64>; 3]> {
        let (n, p) = (f.n, f.p);
        let t2 = f.t.sub(0, n - p, f.m, p);
        let g = trsv_view(f.r.view(), w2, false, "R")?;
        let at = f.z.apply(&gemv_view(t2, &g, false), false)?;
        let mut o1 = w1.to_vec();
        sub_in_place(&mut o1, &at);
        scale(&mut o1, 1.0 / self.alpha);
        let e = gemv_view(t2, &f.z.apply(&o1, true)?, true);
        let mut c = f.q.apply(w3, false)?[n - p..].to_vec();
        sub_in_place(&mut c, &e);
        let o2 = trsv_view(f.r.view(), &c, true, "R")?;
        let mut y = vec![0.0; n];
        y[n - p..].copy_from_slice(&g);
        let o3 = f.q.apply(&y, true)?;
        Ok([o1, o2, o3])
    }

    fn left_gls(&self, f: &GqrFactors<f64>, [w1, w2, w3]: [&[f64]; 3]) -> Result<[Vec<f64>; 3]> {
        let (n, m) = (f.n, f.m);
        let t1 = f.t.sub(0, 0, m, f.p);
        let k = trsv_view(f.r.view(), w3, true, "R")?;
        let mut s = k.clone();
        s.resize(n, 0.0);
        let s = f.q.apply(&s, false)?;
        let vts = f.z.apply(&gemv_view(t1, &k, true), true)?;
        let mut o1 = w1.to_vec();
        sub_in_place(&mut o1, &vts);
        scale(&mut o1, 1.0 / self.alpha);
        let mut c = f.q.apply(w2, true)?;
        c.truncate(m);
        sub_in_place(&mut c, &gemv_view(t1, &f.z.apply(&o1, false)?, false));
        let o3 = trsv_view(f.r.view(), &c, false, "R")?;
        Ok([o1, s, o3])
    }

    fn ml_lse(&self, f: &GrqFactors<f64>, [w1, w2, w3]: [&[f64]; 3]) -> Result<[Vec<f64>; 3]> {
        let sa = self.alpha.sqrt();
        let mut o1 = w1.to_vec();
        scale(&mut o1, 1.0 / sa);
        let mut o2 = gemv_view(self.y(), &trsv_view(f.r.view(), w2, false, "R")?, false);
        scale(&mut o2, 1.0 / sa);
        let mut o3 = trsv_view(self.u(), &f.q.apply(w3, false)?, true, "U")?;
        scale(&mut o3, sa);
        Ok([o1, o2, o3])
    }

    fn mr_lse(&self, f: &GrqFactors<f64>, [u1, u2, u3]: [&[f64]; 3]) -> Result<[Vec<f64>; 3]> {
        let sa = self.alpha.sqrt();
        let mut o1 = u1.to_vec();
        scale(&mut o1, 1.0 / sa);
        let mut o2 = trsv_view(f.r.view(), &gemv_view(self.y(), u2, true), true, "R")?;
        scale(&mut o2, 1.0 / sa);
        let mut o3 = f.q.apply(&trsv_view(self.u(), u3, false, "U")?, true)?;
        scale(&mut o3, sa);
        Ok([o1, o2, o3])
    }

    fn ml_gls(&self, f: &GqrFactors<f64>, [w1, w2, w3]: [&[f64]; 3]) -> Result<[Vec<f64>; 3]> {
        let sa = self.alpha.sqrt();
        let mut o1 = w1.to_vec();
        scale(&mut o1, 1.0 / sa);
        let mut o2 = trsv_view(self.u(), &f.q.apply(w2, true)?, false, "U")?;
        scale(&mut o2, sa);
        let mut o3 = gemv_view(self.y(), &trsv_view(f.r.view(), w3, true, "R")?, true);
        scale(&mut o3, 1.0 / sa);
        Ok([o1, o2, o3])
    }

    fn mr_gls(&self, f: &GqrFactors<f64>, [u1, u2, u3]: [&[f64]; 3]) -> Result<[Vec<f64>; 3]> {
        let sa = self.alpha.sqrt();
        let mut o1 = u1.to_vec();
        scale(&mut o1, 1.0 / sa);
        let mut o2 = f.q.apply(&trsv_view(self.u(), u2, true, "U")?, false)?;
        scale(&mut o2, sa);
        let mut o3 = trsv_view(f.r.view(), &gemv_view(self.y(), u3, false), false, "R")?;
        scale(&mut o3, 1.0 / sa);
        Ok([o1, o2, o3])
    }
}

pub fn build_left_precond_lse<T: Scalar>(factors: &GrqFactors<T>, alpha: f64) -> Result<Preconditioner> {
    check_alpha(alpha)?;
    let f = factors.to_working_unscaled();
    check_diag(f.r.view(), "R")?;
    Ok(Preconditioner {
        kind: PreconditionerKind::LeftLse,
        alpha,
        factors: Factors::Lse(f),
        u: None,
        case: None,
    })
}

pub fn build_left_precond_gls<T: Scalar>(factors: &GqrFactors<T>, alpha: f64) -> Result<Preconditioner> {
    check_alpha(alpha)?;
    let f = factors.to_working_unscaled();
    check_diag(f.r.view(), "R")?;
    Ok(Preconditioner {
        kind: PreconditionerKind::LeftGls,
        alpha,
        factors: Factors::Gls(f),
        u: None,
        case: None,
    })
}

/// `U` is the leading `n x n` part of `T` (`m >= n`), or `[T; 0 I]`.
pub fn build_bd_precond_lse<T: Scalar>(factors: &GrqFactors<T>, alpha: f64) -> Result<Preconditioner> {
    check_alpha(alpha)?;
    let f = factors.to_working_unscaled();
    let (m, n) = (f.m, f.n);
    let case = if m >= n { BdCase::Triangular } else { BdCase::Padded };
    let u = DenseMatrix::from_fn(n, n, |i, j| {
        if i < m {
            if i <= j { f.t.get(i, j) } else { 0.0 }
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    check_diag(f.r.view(), "R")?;
    check_diag(u.view(), if case == BdCase::Triangular { "T1" } else { "U" })?;
    Ok(Preconditioner {
        kind: PreconditionerKind::BdSplitLse,
        alpha,
        factors: Factors::Lse(f),
        u: Some(u),
        case: Some(case),
    })
}

/// `U` is the trailing `n x n` part of `T` (`n <= p`), or `[[I; 0], T]`.
pub fn build_bd_precond_gls<T: Scalar>(factors: &GqrFactors<T>, alpha: f64) -> Result<Preconditioner> {
    check_alpha(alpha)?;
    let f = factors.to_working_unscaled();
    let (n, p) = (f.n, f.p);
    let case = if n <= p { BdCase::Triangular } else { BdCase::Padded };
    let u = DenseMatrix::from_fn(n, n, |i, j| {
        if j + p >= n {
            if i <= j { f.t.get(i, j + p - n) } else { 0.0 }
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    check_diag(f.r.view(), "R")?;
    check_diag(u.view(), if case == BdCase::Triangular { "T2" } else { "U" })?;
    Ok(Preconditioner {
        kind: PreconditionerKind::BdSplitGls,
        alpha,
        factors: Factors::Gls(f),
        u: Some(u),
        case: Some(case),
    })
}
