mod common;

use common::{rng, re_tr};
use nalgebra::DMatrix;
use proptest::prelude::*;
use wax_core::linalg::{complex_gaussian, frobenius, haar_unitary, unitarity_error};
use wax_core::model::{self, SystemConfig};
use wax_core::wax::{self, LosslessParams};
use wax_core::{c64, ComplexMatrix};

/// A random lossless semi-unitary transform built without the
/// parameterization: orthonormalize `[H, Z]` and mix with a Haar unitary.
fn independent_lossless(h: &ComplexMatrix, t: usize, r: &mut rand_chacha::ChaCha8Rng) -> ComplexMatrix {
    let (m, k) = h.shape();
    let mut stack = DMatrix::<c64>::zeros(m, t);
    stack.columns_mut(0, k).copy_from(h);
    stack.columns_mut(k, t - k).copy_from(&complex_gaussian(m, t - k, r));
    gram_schmidt(&stack) * haar_unitary(t, r)
}

/// Recovers `(Q, Q0)` from `F` through the signal/null split.
fn recover_params(ch: &model::ChannelMatrix, f: &ComplexMatrix, r: &mut rand_chacha::ChaCha8Rng) -> LosslessParams {
    let (m, k) = ch.h().shape();
    let t = f.ncols();
    let top = ch.signal_basis().adjoint() * f;
    let null = ch.null_basis().adjoint() * f;
    let mut q0_seed = complex_gaussian(m - k, m - k, r);
    if t > k {
        q0_seed.columns_mut(0, t - k).copy_from(&pivoted_range_basis(&null, t - k));
    }
    // Gram-Schmidt keeps the leading columns' span and orders.
    let q0 = gram_schmidt(&q0_seed);
    let mut q = ComplexMatrix::zeros(t, t);
    q.rows_mut(0, k).copy_from(&top);
    if t > k {
        q.rows_mut(k, t - k).copy_from(&(q0.columns(0, t - k).adjoint() * null));
    }
    LosslessParams::new(q, q0).expect("recovered parameters are unitary")
}

/// Orthonormal basis of the range of a rank-`r` matrix by column-pivoted
/// Gram-Schmidt.
fn pivoted_range_basis(a: &ComplexMatrix, r: usize) -> ComplexMatrix {
    let mut work = a.clone();
    let mut basis = ComplexMatrix::zeros(a.nrows(), r);
    for j in 0..r {
        let pivot = (0..work.ncols()).max_by(|&x, &y| work.column(x).norm().total_cmp(&work.column(y).norm())).unwrap();
        let v = work.column(pivot).normalize();
        for c in 0..work.ncols() {
            let p = v.dotc(&work.column(c));
            work.column_mut(c).axpy(-p, &v, c64::new(1.0, 0.0));
        }
        basis.set_column(j, &v);
    }
    basis
}

fn gram_schmidt(a: &ComplexMatrix) -> ComplexMatrix {
    let mut q = a.clone();
    for j in 0..q.ncols() {
        for i in 0..j {
            let p = q.column(i).dotc(&q.column(j));
            let col = q.column(i).clone_owned();
            q.column_mut(j).axpy(-p, &col, c64::new(1.0, 0.0));
        }
        let n = q.column(j).norm();
        q.column_mut(j).unscale_mut(n);
    }
    q
}

/// Every lossless transform is reached by the parameterization, and every
/// parameterized transform is lossless at any SNR.
#[test]
fn parameterization_round_trip() {
    let mut r = rng(21);
    let (m, k) = (6, 2);
    for t in 2..=4 {
        for _ in 0..100 {
            let cfg = SystemConfig::new(m, k, 1, t, 1.0).unwrap();
            let ch = model::sample_channel(&cfg, &mut r);
            let f = independent_lossless(ch.h(), t, &mut r);
            assert!(wax::lossless_condition_error(&ch, &f) < 1e-9);
            let params = recover_params(&ch, &f, &mut r);
            let rebuilt = wax::assemble_lossless_transform(&ch, &params).unwrap();
            assert!(frobenius(&(&rebuilt - &f)) < 1e-9);

            let fresh = wax::assemble_lossless_transform(&ch, &LosslessParams::haar(t, m - k, &mut r)).unwrap();
            for snr in [1.0, 100.0] {
                for g in [&f, &fresh] {
                    let ratio = model::capacity_ratio(&ch, g, snr).unwrap();
                    assert!((ratio - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn non_lossless_transform_is_detected() {
    let mut r = rng(22);
    let cfg = SystemConfig::new(6, 2, 1, 3, 1.0).unwrap();
    let ch = model::sample_channel(&cfg, &mut r);
    // A semi-unitary transform orthogonal to one signal direction.
    let mut f = ComplexMatrix::zeros(6, 3);
    f.column_mut(0).copy_from(&ch.signal_basis().column(0));
    f.columns_mut(1, 2).copy_from(&ch.null_basis().columns(0, 2));
    assert!(wax::lossless_condition_error(&ch, &f) > 0.5);
    assert!(model::capacity_ratio(&ch, &f, 10.0).unwrap() < 1.0 - 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembled_transform_is_semi_unitary(seed in any::<u64>(), k in 1usize..4, gap in 0usize..3, spare in 1usize..3) {
        let mut r = rng(seed);
        let t = k + gap;
        let m = t + spare;
        let cfg = SystemConfig::new(m, k, 1, t, 1.0).unwrap();
        let ch = model::sample_channel(&cfg, &mut r);
        let f = wax::assemble_lossless_transform(&ch, &LosslessParams::haar(t, m - k, &mut r)).unwrap();
        prop_assert!(unitarity_error(&f) < 1e-10);
        prop_assert!(wax::lossless_condition_error(&ch, &f) < 1e-10);
        // Semi-unitary F: Re tr(F^H F) = T.
        prop_assert!((re_tr(&f, &f) - t as f64).abs() < 1e-10);
    }
}
