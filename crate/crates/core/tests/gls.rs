mod common;

use common::*;
use mixedls::factor::{gqr, gqr_demoted, DenseMatrix};
use mixedls::gls::{gls_correction_solve, gls_direct, gls_residuals, gls_stop_check, init_z, mpgls, GlsProblem, GlsState};
use mixedls::harness::{gen_gls, GeneratorSpec};
use mixedls::precision::{PrecisionConfig, PrecisionLevel};
use mixedls::refine::{RefinementConfig, RefinementStatus};
use nalgebra::DVector;
use proptest::prelude::*;

/// `m` columns of `W`, `n` rows, `p` columns of `V`.
fn problem(m: usize, n: usize, p: usize, cond: f64, seed: u64) -> GlsProblem {
    gen_gls(&GeneratorSpec::gls(m, n, p, cond, seed)).unwrap()
}

/// `(y, x)` from the dense oracle.
fn oracle(p: &GlsProblem) -> (Vec<f64>, Vec<f64>) {
    let (n, _, pp) = p.dims();
    let u = refined_solve(&gls_kkt(p), &gls_rhs(p));
    (u[..pp].to_vec(), u[pp + n..].to_vec())
}

fn correction_residual(p: &GlsProblem, f: &[f64], c: &(Vec<f64>, Vec<f64>, Vec<f64>)) -> f64 {
    let k = gls_kkt(p);
    let u = gls_stack(&c.0, &c.1, &c.2);
    let r = &k * DVector::from_column_slice(&u) - DVector::from_column_slice(f);
    r.norm() / (k.norm() * norm2(&u) + norm2(f))
}

#[test]
fn direct_matches_oracle() {
    for seed in 1..=10 {
        for (m, n, p) in [(12, 40, 36), (3, 6, 8), (4, 7, 5), (5, 5, 2)] {
            let pr = problem(m, n, p, 1e4, seed);
            let st = gls_direct(&gqr(&pr.w, &pr.v).unwrap(), &pr.d).unwrap();
            let (y, x) = oracle(&pr);
            assert!(rel_err(&st.x, &x) < 1e-10, "({m},{n},{p}) seed {seed}");
            if m < n {
                assert!(rel_err(&st.y, &y) < 1e-10, "({m},{n},{p}) seed {seed}");
            }
        }
    }
}

#[test]
fn square_w_gives_zero_y() {
    let pr = problem(5, 5, 3, 10.0, 1);
    let st = gls_direct(&gqr(&pr.w, &pr.v).unwrap(), &pr.d).unwrap();
    assert!(norm2(&st.y) < 1e-14);
}

#[test]
fn correction_solve_backward_residual() {
    for seed in 1..=10 {
        let pr = problem(6, 14, 10, 1e3, seed);
        let (n, m, p) = pr.dims();
        let f: Vec<f64> = problem(6, 14, 20, 2.0, seed + 50).v.as_slice()[..p + n + m].to_vec();
        let (f1, f2, f3) = (&f[..p], &f[p..p + n], &f[p + n..]);
        let hi = gls_correction_solve(&gqr(&pr.w, &pr.v).unwrap(), f1, f2, f3).unwrap();
        assert!(correction_residual(&pr, &f, &hi) < 1e-12);
        let lo = gls_correction_solve(&gqr_demoted(&pr.w, &pr.v).unwrap(), f1, f2, f3).unwrap();
        assert!(correction_residual(&pr, &f, &lo) < 1e-4);
    }
}

#[test]
fn init_z_gives_consistent_multiplier() {
    let pr = problem(4, 9, 7, 100.0, 3);
    let f = gqr(&pr.w, &pr.v).unwrap();
    let st = gls_direct(&f, &pr.d).unwrap();
    let z = init_z(&f, &st.y).unwrap();
    let (wn, vn) = (to_na(&pr.w), to_na(&pr.v));
    let zv = DVector::from_column_slice(&z);
    assert!((wn.transpose() * &zv).norm() < 1e-12 * norm2(&z));
    let vz = vn.transpose() * &zv - DVector::from_column_slice(&st.y);
    assert!(vz.norm() < 1e-12 * norm2(&st.y));
}

#[test]
fn residuals_match_dense_products() {
    let pr = problem(3, 6, 8, 10.0, 4);
    let st = GlsState { x: vec![1.0, -1.0, 0.5], y: vec![0.25; 8], z: vec![-2.0; 6] };
    let (f1, f2, f3) = gls_residuals(&pr, &st, PrecisionLevel::Working).unwrap();
    let k = gls_kkt(&pr);
    let want = DVector::from_column_slice(&gls_rhs(&pr)) - &k * DVector::from_column_slice(&gls_stack(&st.y, &st.z, &st.x));
    let got = [f1, f2, f3].concat();
    for (g, w) in got.iter().zip(want.iter()) {
        assert!((g - w).abs() < 1e-13);
    }
}

#[test]
fn refinement_matches_oracle() {
    for seed in 1..=10 {
        let pr = problem(12, 40, 36, 1e4, seed);
        let (y, x) = oracle(&pr);
        for lvl in [PrecisionLevel::Working, PrecisionLevel::Extended] {
            let cfg = RefinementConfig { precisions: PrecisionConfig::default().with_residual(lvl), ..Default::default() };
            let (st, tr) = mpgls(&pr, &cfg).unwrap();
            assert_eq!(tr.status, RefinementStatus::Converged);
            assert!(rel_err(&st.x, &x) < 1e-10);
            assert!(rel_err(&st.y, &y) < 1e-10);
        }
    }
}

#[test]
fn rhs_scaling_is_linear() {
    let pr = problem(12, 40, 36, 1e3, 9);
    let (s0, _) = mpgls(&pr, &RefinementConfig::default()).unwrap();
    for c in [3.0, 1e-3, 2f64.powi(-60)] {
        let sc = GlsProblem::new(pr.w.clone(), pr.v.clone(), pr.d.iter().map(|v| v * c).collect()).unwrap();
        let (s1, _) = mpgls(&sc, &RefinementConfig::default()).unwrap();
        let sx: Vec<f64> = s0.x.iter().map(|v| v * c).collect();
        let sy: Vec<f64> = s0.y.iter().map(|v| v * c).collect();
        assert!(rel_err(&s1.x, &sx) < 1e-12);
        assert!(rel_err(&s1.y, &sy) < 1e-12);
    }
}

#[test]
fn problem_validation() {
    let w = DenseMatrix::<f64>::zeros(4, 2);
    assert!(GlsProblem::new(w.clone(), DenseMatrix::zeros(4, 1), vec![0.0; 4]).is_err());
    assert!(GlsProblem::new(w.clone(), DenseMatrix::zeros(3, 3), vec![0.0; 4]).is_err());
    assert!(GlsProblem::new(w, DenseMatrix::zeros(4, 3), vec![0.0; 3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stop_check_is_monotone_in_tol(f in prop::array::uniform3(0.0f64..1.0), s in prop::array::uniform3(0.0f64..10.0), t in 1e-16f64..1e-2) {
        let n = problem(2, 4, 3, 10.0, 1).norms();
        if gls_stop_check(f, &n, s, t) {
            prop_assert!(gls_stop_check(f, &n, s, t * 2.0));
        }
    }

    #[test]
    fn direct_solution_is_feasible(m in 1usize..8, n in 1usize..12, p in 1usize..12, seed in 0u64..500) {
        prop_assume!(m <= n && n <= m + p);
        let pr = problem(m, n, p, 100.0, seed);
        let st = gls_direct(&gqr(&pr.w, &pr.v).unwrap(), &pr.d).unwrap();
        let r = to_na(&pr.w) * DVector::from_column_slice(&st.x) + to_na(&pr.v) * DVector::from_column_slice(&st.y)
            - DVector::from_column_slice(&pr.d);
        let scale = pr.w.frobenius_norm() * norm2(&st.x) + pr.v.frobenius_norm() * norm2(&st.y) + norm2(&pr.d);
        prop_assert!(r.norm() <= 1e-12 * scale);
    }

    #[test]
    fn zero_state_residual_is_rhs(m in 1usize..6, n in 1usize..8, p in 1usize..8, seed in 0u64..500) {
        prop_assume!(m <= n && n <= m + p);
        let pr = problem(m, n, p, 10.0, seed);
        let (f1, f2, f3) = gls_residuals(&pr, &GlsState::zeros(n, m, p), PrecisionLevel::Working).unwrap();
        prop_assert!(f1.iter().chain(&f3).all(|v| *v == 0.0));
        prop_assert_eq!(f2, pr.d.clone());
    }
}
