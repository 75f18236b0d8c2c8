#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wax_core::model::{self, ChannelMatrix, SystemConfig};
use wax_core::wax::CombiningModule;
use wax_core::{c64, ComplexMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Instance {
    pub cfg: SystemConfig,
    pub ch: ChannelMatrix,
    pub a: CombiningModule,
}

pub fn instance(m: usize, k: usize, l: usize, t: usize, snr: f64, rng: &mut ChaCha8Rng) -> Instance {
    let cfg = SystemConfig::new(m, k, l, t, snr).unwrap();
    let ch = model::sample_channel(&cfg, rng);
    let a = CombiningModule::random(m, t, rng).unwrap();
    Instance { cfg, ch, a }
}

/// Singular values from the reference LAPACK-style implementation.
pub fn oracle_singular_values(b: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = b.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

pub fn oracle_nuclear_norm(b: &ComplexMatrix) -> f64 {
    oracle_singular_values(b).iter().sum()
}

/// `log2 det(I + snr H^H P H)` with `P` the orthogonal projector onto
/// `range(G)`, from a Hermitian eigendecomposition.
pub fn oracle_processed_mi(h: &ComplexMatrix, g: &ComplexMatrix, snr: f64) -> f64 {
    let gram = g.adjoint() * g;
    let inv = gram.try_inverse().expect("full column rank");
    let p = g * inv * g.adjoint();
    oracle_log2det(&(h.adjoint() * p * h), snr)
}

pub fn oracle_full_mi(h: &ComplexMatrix, snr: f64) -> f64 {
    oracle_log2det(&(h.adjoint() * h), snr)
}

fn oracle_log2det(gram: &ComplexMatrix, snr: f64) -> f64 {
    let n = gram.nrows();
    let m = DMatrix::<c64>::identity(n, n) + gram * c64::new(snr, 0.0);
    let herm = (&m + m.adjoint()) * c64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().map(|e| e.log2()).sum()
}

/// `Re tr(X^H Y)`.
pub fn re_tr(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    (x.adjoint() * y).trace().re
}
