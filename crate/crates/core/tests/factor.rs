mod common;

use common::{explicit, gqr_errors, grq_errors, rel, to_dense, to_na};
use mixedls::factor::{gqr, gqr_demoted, grq, grq_demoted, qr, rq, trsv, DenseMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn orth_defect(q: &DMatrix<f64>) -> f64 {
    (q.transpose() * q - DMatrix::identity(q.nrows(), q.ncols())).norm()
}

fn assert_upper(r: &DMatrix<f64>) {
    for j in 0..r.ncols() {
        for i in j + 1..r.nrows() {
            assert_eq!(r[(i, j)], 0.0, "entry ({i},{j}) below the diagonal");
        }
    }
}

#[test]
fn qr_reconstructs_and_is_orthogonal() {
    for (m, n) in [(7, 4), (4, 7), (5, 5), (1, 3), (3, 1)] {
        let a = gaussian(m, n, (m * 10 + n) as u64);
        let (q, r) = qr(&a).unwrap();
        let qd = explicit(&q);
        assert!(orth_defect(&qd) < 1e-14);
        assert_upper(&to_na(&r));
        assert!(rel(&to_na(&a), &(&qd * to_na(&r))) < 1e-15);
        // library application agrees with the explicit product
        let lib = to_na(&q.to_dense());
        assert!((lib - qd).norm() < 1e-14);
    }
}

#[test]
fn rq_of_wide_matrix() {
    for (p, n) in [(3, 7), (5, 5), (1, 4)] {
        let b = gaussian(p, n, (p * 10 + n) as u64);
        let (r, q) = rq(&b).unwrap();
        let rd = to_na(&r);
        assert_upper(&rd);
        let mut full = DMatrix::zeros(p, n);
        full.view_mut((0, n - p), (p, p)).copy_from(&rd);
        assert!(rel(&to_na(&b), &(full * explicit(&q))) < 1e-15);
    }
    assert!(rq(&gaussian(7, 3, 1)).is_err());
}

#[test]
fn grq_shapes_cover_both_t_cases() {
    // m >= n and m < n
    for (m, n, p, seed) in [(10, 6, 2, 1), (3, 6, 4, 2), (6, 6, 6, 3), (5, 8, 3, 4)] {
        let a = gaussian(m, n, seed);
        let b = gaussian(p, n, seed + 100);
        let f = grq(&b, &a).unwrap();
        assert_upper(&to_na(&f.r));
        assert_upper(&to_na(&f.t));
        let (eb, ea) = grq_errors(&b, &a, &f);
        assert!(eb < 1e-14 && ea < 1e-14, "({m},{n},{p}): {eb:e} {ea:e}");
        assert!(orth_defect(&explicit(&f.q)) < 1e-14);
        assert!(orth_defect(&explicit(&f.z)) < 1e-14);
    }
}

#[test]
fn gqr_shapes_cover_both_t_cases() {
    // n <= p and n > p
    for (n, m, p, seed) in [(6, 3, 8, 1), (7, 4, 5, 2), (5, 5, 2, 3), (6, 2, 4, 4)] {
        let w = gaussian(n, m, seed);
        let v = gaussian(n, p, seed + 100);
        let f = gqr(&w, &v).unwrap();
        assert_upper(&to_na(&f.r));
        let t = to_na(&f.t);
        for j in 0..n.min(p) {
            let row = n - 1 - j;
            for c in 0..p - 1 - j {
                assert_eq!(t[(row, c)], 0.0);
            }
        }
        let (ew, ev) = gqr_errors(&w, &v, &f);
        assert!(ew < 1e-14 && ev < 1e-14, "({n},{m},{p}): {ew:e} {ev:e}");
    }
}

#[test]
fn demoted_factorizations_have_single_precision_backward_error() {
    let u = 2f64.powi(-24);
    let b = gaussian(6, 30, 7).scaled(1e30);
    let a = gaussian(50, 30, 8).scaled(1e-30);
    let f = grq_demoted(&b, &a).unwrap();
    let (eb, ea) = grq_errors(&b, &a, &f);
    assert!(eb < 100.0 * u && ea < 100.0 * u, "{eb:e} {ea:e}");
    let w = gaussian(30, 8, 9).scaled(1e35);
    let v = gaussian(30, 36, 10);
    let g = gqr_demoted(&w, &v).unwrap();
    let (ew, ev) = gqr_errors(&w, &v, &g);
    assert!(ew < 100.0 * u && ev < 100.0 * u, "{ew:e} {ev:e}");
}

#[test]
fn invalid_shapes_are_rejected() {
    assert!(grq(&gaussian(5, 4, 1), &gaussian(3, 4, 2)).is_err());
    assert!(grq(&gaussian(2, 9, 1), &gaussian(3, 9, 2)).is_err());
    assert!(grq(&gaussian(2, 4, 1), &gaussian(3, 5, 2)).is_err());
    assert!(gqr(&gaussian(4, 5, 1), &gaussian(4, 3, 2)).is_err());
    assert!(gqr(&gaussian(9, 2, 1), &gaussian(9, 3, 2)).is_err());
}

#[test]
fn triangular_solve_matches_dense_lu() {
    let mut t = gaussian(6, 6, 3);
    for j in 0..6 {
        for i in j + 1..6 {
            t.set(i, j, 0.0);
        }
        t.set(j, j, t.get(j, j) + 4.0);
    }
    let b = [1.0, -2.0, 3.0, 0.5, 0.0, 7.0];
    let x = trsv(&t, &b, false).unwrap();
    let xt = trsv(&t, &b, true).unwrap();
    let tn = to_na(&t);
    let want = tn.clone().lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
    let want_t = tn.transpose().lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
    for i in 0..6 {
        assert!((x[i] - want[i]).abs() < 1e-13);
        assert!((xt[i] - want_t[i]).abs() < 1e-13);
    }
    let back = to_dense(&tn);
    assert_eq!(back, t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grq_backward_stable(m in 1usize..12, n in 1usize..10, p in 1usize..10, seed in 0u64..1000) {
        prop_assume!(p <= n && n <= m + p);
        let a = gaussian(m, n, seed);
        let b = gaussian(p, n, seed ^ 0x5555);
        let f = grq(&b, &a).unwrap();
        let (eb, ea) = grq_errors(&b, &a, &f);
        prop_assert!(eb < 1e-14 && ea < 1e-14);
        let lo = grq_demoted(&b, &a).unwrap();
        let (eb, ea) = grq_errors(&b, &a, &lo);
        prop_assert!(eb < 1e-5 && ea < 1e-5);
    }

    #[test]
    fn gqr_backward_stable(n in 1usize..12, m in 1usize..10, p in 1usize..12, seed in 0u64..1000) {
        prop_assume!(m <= n && n <= m + p);
        let w = gaussian(n, m, seed);
        let v = gaussian(n, p, seed ^ 0xaaaa);
        let f = gqr(&w, &v).unwrap();
        let (ew, ev) = gqr_errors(&w, &v, &f);
        prop_assert!(ew < 1e-14 && ev < 1e-14);
        let lo = gqr_demoted(&w, &v).unwrap();
        let (ew, ev) = gqr_errors(&w, &v, &lo);
        prop_assert!(ew < 1e-5 && ev < 1e-5);
    }

    #[test]
    fn orthogonal_factor_preserves_norms(n in 1usize..16, seed in 0u64..1000) {
        let (q, _) = qr(&gaussian(n, n, seed)).unwrap();
        let x: Vec<f64> = gaussian(n, 1, seed + 1).as_slice().to_vec();
        let y = q.apply(&x, false).unwrap();
        let back = q.apply(&y, true).unwrap();
        let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assert!((nx - ny).abs() <= 1e-14 * nx.max(1.0));
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-14 * nx.max(1.0));
        }
    }
}
