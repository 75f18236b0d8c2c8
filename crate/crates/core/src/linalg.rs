//! Dense complex linear algebra with fixed conventions.
//!
//! Everything downstream relies on four contracts defined here:
//!
//! * [`svd`]: economy SVD by one-sided (Hestenes) Jacobi rotations, singular
//!   values sorted nonincreasing, rank-deficient directions completed to an
//!   orthonormal basis.
//! * [`procrustes`]: the unitary maximizer of `Re tr(U^H B)`, `U_B V_B^H`.
//! * [`qr_split`]: Householder QR with a real, strictly positive `R` diagonal,
//!   so the signal-space basis is unique and the null-space completion is a
//!   deterministic function of the input.
//! * [`haar_unitary`]: Haar sampling by phase-normalized QR of a complex
//!   Gaussian matrix.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, WaxError};

#[allow(non_camel_case_types)]
pub type c64 = Complex<f64>;

/// Dense complex matrix, column-major.
pub type ComplexMatrix = DMatrix<c64>;

/// Relative tolerance for unitarity and reconstruction checks.
pub const UNITARY_TOL: f64 = 1e-10;

/// Relative singular-value threshold below which a matrix is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 80;

/// Economy-size singular value decomposition `b = u · diag(s) · v^H`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `m × r` with orthonormal columns.
    pub u: ComplexMatrix,
    /// Length `r = min(m, n)`, nonincreasing.
    pub s: Vec<f64>,
    /// `n × r` with orthonormal columns.
    pub v: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        us * self.v.adjoint()
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&x| x > rel_tol * smax && x > 0.0).count()
    }
}

/// Right singular structure of a matrix with all `n` directions, including
/// the null space when `m < n`.
#[derive(Clone, Debug)]
pub struct RightSingular {
    /// Length `n`, nonincreasing. Entries past `min(m, n)` are numerically zero.
    pub s: Vec<f64>,
    /// `n × n` unitary.
    pub v: ComplexMatrix,
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(WaxError::NonFinite)
    }
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    libm::sqrt(m.iter().map(|z| z.norm_sqr()).sum())
}

/// `||M^H M − I||_F`, the distance of `m` from having orthonormal columns.
pub fn unitarity_error(m: &ComplexMatrix) -> f64 {
    let mut g = m.adjoint() * m;
    for i in 0..g.nrows() {
        g[(i, i)] -= c64::new(1.0, 0.0);
    }
    frobenius(&g)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Real part of `tr(X^H Y)`, i.e. the real Frobenius inner product.
pub fn re_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    debug_assert_eq!(x.shape(), y.shape());
    x.iter().zip(y.iter()).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

fn col_norm_sqr(a: &ComplexMatrix, j: usize) -> f64 {
    a.column(j).iter().map(|z| z.norm_sqr()).sum()
}

/// One-sided Jacobi: rotates the columns of `a` in place until they are
/// mutually orthogonal and returns the accumulated `n × n` unitary `v` with
/// `a_in · v = a_out`.
fn jacobi_orthogonalize(a: &mut ComplexMatrix) -> ComplexMatrix {
    let (m, n) = a.shape();
    let mut v = identity(n);
    let eps = f64::EPSILON;
    // Columns at rounding level relative to the whole matrix are treated as
    // zero; rotating them only accumulates error in `v`.
    let negligible = {
        let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        eps * eps * total
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = col_norm_sqr(a, p);
                let beta = col_norm_sqr(a, q);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let mut gamma = c64::new(0.0, 0.0);
                for i in 0..m {
                    gamma += a[(i, p)].conj() * a[(i, q)];
                }
                let g = gamma.norm();
                if g <= eps * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::hypot(1.0, zeta));
                let c = 1.0 / libm::hypot(1.0, t);
                let s = c * t;
                rotate_columns(a, p, q, c, s, phase);
                rotate_columns(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

#[inline]
fn rotate_columns(a: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase: c64) {
    for i in 0..a.nrows() {
        let ap = a[(i, p)];
        let aq = a[(i, q)] * phase;
        a[(i, p)] = ap * c - aq * s;
        a[(i, q)] = ap * s + aq * c;
    }
}

/// Sorted column norms and the permutation that sorts them nonincreasing.
fn sorted_norms(a: &ComplexMatrix) -> (Vec<f64>, Vec<usize>) {
    let norms: Vec<f64> = (0..a.ncols()).map(|j| libm::sqrt(col_norm_sqr(a, j))).collect();
    let mut order: Vec<usize> = (0..a.ncols()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));
    let s = order.iter().map(|&j| norms[j]).collect();
    (s, order)
}

/// Fills the columns of `u` flagged in `missing` with unit vectors orthogonal
/// to every other column. Each new column starts from the canonical basis
/// vector with the largest component outside the current span.
fn complete_orthonormal(u: &mut ComplexMatrix, missing: &[bool]) {
    let m = u.nrows();
    let mut filled: Vec<bool> = missing.iter().map(|&x| !x).collect();
    for j in 0..u.ncols() {
        if !missing[j] {
            continue;
        }
        let mut best = (0, -1.0);
        for i in 0..m {
            let in_span: f64 = (0..u.ncols()).filter(|&k| filled[k]).map(|k| u[(i, k)].norm_sqr()).sum();
            if 1.0 - in_span > best.1 {
                best = (i, 1.0 - in_span);
            }
        }
        let mut w = ComplexMatrix::zeros(m, 1);
        w[(best.0, 0)] = c64::new(1.0, 0.0);
        for _ in 0..2 {
            for k in (0..u.ncols()).filter(|&k| filled[k]) {
                let proj = u.column(k).dotc(&w.column(0));
                let col = u.column(k).clone_owned();
                w.column_mut(0).axpy(-proj, &col, c64::new(1.0, 0.0));
            }
        }
        let nrm = frobenius(&w);
        u.set_column(j, &(w.column(0) / c64::new(nrm, 0.0)));
        filled[j] = true;
    }
}

/// Two passes of modified Gram-Schmidt in column order, so leading
/// columns are the least perturbed.
fn reorthonormalize_columns(v: &mut ComplexMatrix) {
    for _ in 0..2 {
        for j in 0..v.ncols() {
            for k in 0..j {
                let proj = v.column(k).dotc(&v.column(j));
                let col = v.column(k).clone_owned();
                v.column_mut(j).axpy(-proj, &col, c64::new(1.0, 0.0));
            }
            let nrm = v.column(j).norm();
            v.column_mut(j).unscale_mut(nrm);
        }
    }
}

fn svd_tall(b: &ComplexMatrix) -> SvdResult {
    let (m, n) = b.shape();
    debug_assert!(m >= n);
    let mut a = b.clone();
    let v_raw = jacobi_orthogonalize(&mut a);
    let (s, order) = sorted_norms(&a);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut u = ComplexMatrix::zeros(m, n);
    let mut v = ComplexMatrix::zeros(n, n);
    let mut missing = alloc::vec![false; n];
    for (k, &j) in order.iter().enumerate() {
        v.set_column(k, &v_raw.column(j));
        if s[k] > 0.0 && s[k] > smax * 1e-13 {
            u.set_column(k, &(a.column(j) / c64::new(s[k], 0.0)));
        } else {
            missing[k] = true;
        }
    }
    if missing.iter().any(|&x| x) {
        complete_orthonormal(&mut u, &missing);
    }
    SvdResult { u, s, v }
}

/// Economy SVD with `r = min(rows, cols)`.
pub fn svd(b: &ComplexMatrix) -> Result<SvdResult> {
    ensure_finite(b)?;
    if b.nrows() >= b.ncols() {
        Ok(svd_tall(b))
    } else {
        let t = svd_tall(&b.adjoint());
        Ok(SvdResult { u: t.v, s: t.s, v: t.u })
    }
}

/// All `n` right singular directions of `b`, sorted by nonincreasing
/// singular value. For wide matrices the trailing columns of `v` span the
/// numerical null space.
pub fn right_singular(b: &ComplexMatrix) -> Result<RightSingular> {
    ensure_finite(b)?;
    let mut a = b.clone();
    let v_raw = jacobi_orthogonalize(&mut a);
    let (s, order) = sorted_norms(&a);
    let n = b.ncols();
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        v.set_column(k, &v_raw.column(j));
    }
    reorthonormalize_columns(&mut v);
    Ok(RightSingular { s, v })
}

/// Solves `max Re tr(U^H B)` over unitary `U`: returns `U_B V_B^H`.
///
/// The maximum equals the sum of the singular values of `b`. For rank
/// deficient `b` the maximizer is not unique; the zero matrix maps to the
/// identity.
pub fn procrustes(b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !b.is_square() {
        return Err(WaxError::DimensionMismatch {
            context: "procrustes",
            expected: (b.nrows(), b.nrows()),
            found: b.shape(),
        });
    }
    let f = svd(b)?;
    Ok(&f.u * f.v.adjoint())
}

/// Unitary factor `U` of the polar decomposition `W = U P`, the nearest
/// unitary matrix to `w` in Frobenius norm.
pub fn polar_factor(w: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !w.is_square() {
        return Err(WaxError::DimensionMismatch {
            context: "polar_factor",
            expected: (w.nrows(), w.nrows()),
            found: w.shape(),
        });
    }
    let f = svd(w)?;
    let smax = f.s.first().copied().unwrap_or(0.0);
    let smin = f.s.last().copied().unwrap_or(0.0);
    if !(smin > RANK_TOL * smax) {
        return Err(WaxError::DegenerateProjection { smin, smax });
    }
    Ok(&f.u * f.v.adjoint())
}

/// Householder QR producing the full `m × m` unitary `q` and `m × n` upper
/// triangular `r` with real nonnegative diagonal.
pub fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = identity(m);
    for j in 0..n.min(m) {
        let xnorm = libm::sqrt((j..m).map(|i| r[(i, j)].norm_sqr()).sum());
        if xnorm == 0.0 {
            continue;
        }
        let x0 = r[(j, j)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { c64::new(1.0, 0.0) };
        // Reflect x onto -phase·|x|·e_1, avoiding cancellation in v_0.
        let alpha = -phase * xnorm;
        let mut v: Vec<c64> = (j..m).map(|i| r[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let scale = 2.0 / vnorm2;
        for col in j..n {
            let mut dot = c64::new(0.0, 0.0);
            for (k, vk) in v.iter().enumerate() {
                dot += vk.conj() * r[(j + k, col)];
            }
            let f = dot * scale;
            for (k, vk) in v.iter().enumerate() {
                r[(j + k, col)] -= vk * f;
            }
        }
        // q <- q · H_j
        for row in 0..m {
            let mut dot = c64::new(0.0, 0.0);
            for (k, vk) in v.iter().enumerate() {
                dot += q[(row, j + k)] * vk;
            }
            let f = dot * scale;
            for (k, vk) in v.iter().enumerate() {
                q[(row, j + k)] -= f * vk.conj();
            }
        }
        for i in (j + 1)..m {
            r[(i, j)] = c64::new(0.0, 0.0);
        }
    }
    // Phase normalization: make diag(r) real and nonnegative.
    for j in 0..n.min(m) {
        let d = r[(j, j)];
        let dn = d.norm();
        if dn == 0.0 {
            continue;
        }
        let ph = d / dn;
        for col in j..n {
            r[(j, col)] *= ph.conj();
        }
        for row in 0..m {
            q[(row, j)] *= ph;
        }
        r[(j, j)] = c64::new(dn, 0.0);
    }
    (q, r)
}

/// QR split of a tall full-column-rank `h` into signal space, null space and
/// the triangular factor.
#[derive(Clone, Debug)]
pub struct QrSplit {
    /// `M × K` orthonormal basis of the column space of `h`.
    pub u_tilde: ComplexMatrix,
    /// `M × (M − K)` orthonormal basis of its orthogonal complement.
    pub n_h: ComplexMatrix,
    /// `K × K` upper triangular with strictly positive real diagonal.
    pub r_tilde: ComplexMatrix,
}

pub fn qr_split(h: &ComplexMatrix) -> Result<QrSplit> {
    ensure_finite(h)?;
    let (m, k) = h.shape();
    if m < k {
        return Err(WaxError::DimensionMismatch { context: "qr_split", expected: (k, k), found: (m, k) });
    }
    let f = svd(h)?;
    let smax = f.s.first().copied().unwrap_or(0.0);
    let smin = f.s.last().copied().unwrap_or(0.0);
    if k > 0 && !(smin > 1e-10 * smax) {
        return Err(WaxError::RankDeficient { context: "qr_split", smin, smax });
    }
    let (q, r) = householder_qr(h);
    Ok(QrSplit {
        u_tilde: q.columns(0, k).into_owned(),
        n_h: q.columns(k, m - k).into_owned(),
        r_tilde: r.rows(0, k).into_owned(),
    })
}

/// Matrix of i.i.d. circularly-symmetric complex Gaussians with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let sd = core::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64::new(sd * re, sd * im)
    })
}

/// Haar-distributed `n × n` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = complex_gaussian(n, n, rng);
    householder_qr(&g).0
}

/// First `t` columns of a Haar unitary of size `m`.
pub fn haar_semi_unitary<R: Rng + ?Sized>(m: usize, t: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if t > m {
        return Err(WaxError::InvalidDimension { context: "haar_semi_unitary", detail: "t must not exceed m" });
    }
    Ok(haar_unitary(m, rng).columns(0, t).into_owned())
}

/// Re-orthonormalizes a square matrix that drifted off the unitary group.
pub fn reunitarize(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    polar_factor(u)
}
