//! Decentralized multi-antenna receive processing with unitary constraints.
//!
//! The receive chain is `z = X^H A^H W^H y`: block-diagonal unitary filters
//! `W = diag(W_1, …, W_{M_P})` at the antenna panels, a fixed semi-unitary
//! combining module `A` reducing `M` streams to `T`, and CPU-side processing
//! `X`. The crate provides
//!
//! * [`linalg`]: complex SVD, Procrustes, polar factor, QR split, Haar sampling;
//! * [`model`]: channel sampling and log-det mutual information;
//! * [`wax`]: block filters, the parameterization of all lossless
//!   semi-unitary transforms, and the bandwidth/complexity trade-off formulas;
//! * [`optim`]: alternating closed-form Procrustes ascent minimizing the
//!   distance between `W·A` and the lossless set;
//! * [`baseline`]: the unconstrained least-squares decomposition, its
//!   projection onto unitary blocks, and random isotropic filters.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// Negated float comparisons are deliberate: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod wax;

pub use error::{Result, WaxError};
pub use linalg::{c64, ComplexMatrix};
