mod common;

use common::{oracle_nuclear_norm, oracle_singular_values, re_tr, rng};
use nalgebra::SVD;
use wax_core::linalg::{self, complex_gaussian, frobenius, haar_semi_unitary, haar_unitary, unitarity_error};
use wax_core::{c64, ComplexMatrix};

#[test]
fn singular_values_match_reference() {
    let mut r = rng(1);
    for &(m, n) in &[(1, 1), (3, 3), (6, 2), (2, 6), (8, 5), (5, 9)] {
        for _ in 0..20 {
            let b = complex_gaussian(m, n, &mut r);
            let ours = linalg::svd(&b).unwrap();
            let reference = oracle_singular_values(&b);
            assert_eq!(ours.s.len(), reference.len());
            for (x, y) in ours.s.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-11 * reference[0].max(1.0), "{x} vs {y}");
            }
            assert!(frobenius(&(ours.reconstruct() - &b)) < 1e-11 * frobenius(&b));
        }
    }
}

#[test]
fn right_singular_spans_null_space_of_wide_matrices() {
    let mut r = rng(2);
    for &(m, n) in &[(2, 5), (4, 9), (3, 3)] {
        let b = complex_gaussian(m, n, &mut r);
        let rs = linalg::right_singular(&b).unwrap();
        assert_eq!(rs.v.shape(), (n, n));
        let e = unitarity_error(&rs.v);
        assert!(e < 1e-12, "({m},{n}) {e}");
        for j in m..n {
            assert!((&b * rs.v.column(j)).norm() < 1e-11);
        }
    }
}

#[test]
fn polar_factor_matches_reference() {
    let mut r = rng(3);
    for n in 1..=6 {
        let w = complex_gaussian(n, n, &mut r);
        let ours = linalg::polar_factor(&w).unwrap();
        let svd = SVD::new(w.clone(), true, true);
        let reference = svd.u.unwrap() * svd.v_t.unwrap();
        assert!(frobenius(&(ours - reference)) < 1e-10);
    }
}

/// Procrustes value is the nuclear norm and no Haar sample beats it.
#[test]
fn procrustes_attains_nuclear_norm_and_dominates_samples() {
    let mut r = rng(4);
    for &n in &[1, 2, 3, 8] {
        for _ in 0..25 {
            let b = complex_gaussian(n, n, &mut r);
            let u = linalg::procrustes(&b).unwrap();
            assert!(unitarity_error(&u) < 1e-10);
            let value = re_tr(&u, &b);
            let nuclear = oracle_nuclear_norm(&b);
            assert!((value - nuclear).abs() < 1e-9 * nuclear.max(1.0));
            for _ in 0..200 {
                let v = haar_unitary(n, &mut r);
                assert!(re_tr(&v, &b) <= value + 1e-9);
            }
        }
    }
}

#[test]
fn qr_reconstructs_with_positive_diagonal() {
    let mut r = rng(5);
    for &(m, k) in &[(4, 1), (6, 3), (12, 4), (5, 5)] {
        let a = complex_gaussian(m, k, &mut r);
        let (q, rr) = linalg::householder_qr(&a);
        assert!(unitarity_error(&q) < 1e-12);
        assert!(frobenius(&(q.columns(0, k) * rr.rows(0, k) - &a)) < 1e-12 * frobenius(&a));
        for i in 0..k {
            assert!(rr[(i, i)].im.abs() < 1e-14 && rr[(i, i)].re > 0.0);
            for j in 0..i {
                assert_eq!(rr[(i, j)], c64::new(0.0, 0.0));
            }
        }
    }
}

/// For Haar `U` of size `n`, `E|u_11|^2 = 1/n` and `E|u_11|^4 = 2/(n(n+1))`.
#[test]
fn haar_entry_moments() {
    let mut r = rng(6);
    let n = 4;
    let draws = 100_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let u = haar_unitary(n, &mut r);
        let p = u[(0, 0)].norm_sqr();
        s1 += p;
        s2 += p * p;
    }
    let mean = s1 / draws as f64;
    let second = s2 / draws as f64;
    let nf = n as f64;
    let var = 2.0 / (nf * (nf + 1.0)) - 1.0 / (nf * nf);
    let se = (var / draws as f64).sqrt();
    assert!((mean - 1.0 / nf).abs() < 3.0 * se, "mean {mean}");
    assert!((second - 2.0 / (nf * (nf + 1.0))).abs() < 0.01);
}

/// `E[U U^H] = (t/m) I` for Haar semi-unitary `U` (`m × t`).
#[test]
fn semi_unitary_is_isotropic() {
    let mut r = rng(7);
    let (m, t, draws) = (6, 2, 20_000);
    let mut acc = ComplexMatrix::zeros(m, m);
    for _ in 0..draws {
        let u = haar_semi_unitary(m, t, &mut r).unwrap();
        assert!(unitarity_error(&u) < 1e-12);
        acc += &u * u.adjoint();
    }
    acc /= c64::new(draws as f64, 0.0);
    let expected = ComplexMatrix::identity(m, m) * c64::new(t as f64 / m as f64, 0.0);
    assert!(frobenius(&(acc - expected)) < 0.02);
}

/// Entries are circularly symmetric with unit variance.
#[test]
fn gaussian_moments() {
    let mut r = rng(8);
    let g = complex_gaussian(200, 200, &mut r);
    let n = (g.nrows() * g.ncols()) as f64;
    let power: f64 = g.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
    let pseudo: c64 = g.iter().map(|z| z * z).sum::<c64>() / n;
    let mean: c64 = g.iter().sum::<c64>() / n;
    assert!((power - 1.0).abs() < 0.02);
    assert!(pseudo.norm() < 0.02);
    assert!(mean.norm() < 0.02);
}
