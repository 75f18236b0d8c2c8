//! Comparison methods.
//!
//! The unconstrained method solves
//! `min ||A X − W H||_F` over `X` and block-diagonal `W` under a norm
//! constraint. The problem is linear and homogeneous in the stacked unknown
//! `v = [vec(X); vec(W_1); …; vec(W_{M_P})]`, so its minimizer is the right
//! singular vector of the constraint operator with the smallest singular
//! value. A solution with `A X = W H` and invertible `W` is a decomposition
//! `H = W^{-1} A X`; the receive filter of the framework is therefore the
//! block inverse `W^{-1}`.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Result, WaxError};
use crate::linalg::{self, c64, ComplexMatrix, RANK_TOL};
use crate::model::{ChannelMatrix, SystemConfig};
use crate::wax::{self, BlockDiagonalFilter, CombiningModule};

/// Singular values within this fraction of the largest one count as tied
/// with the minimum.
const TIE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct UnconstrainedSolution {
    /// `M_P` blocks of size `L × L`, not necessarily invertible.
    pub w_blocks: Vec<ComplexMatrix>,
    /// `T × K`.
    pub x: ComplexMatrix,
    /// `||A X − W Ĥ||_F` with `Ĥ = H / ||H||_F` and `||v||_2 = 1`.
    pub residual: f64,
    /// Smallest singular value of the constraint operator.
    pub smallest_singular_value: f64,
    /// Number of singular values tied with the smallest one.
    pub tie_dimension: usize,
}

impl UnconstrainedSolution {
    /// Block inverses `W_m^{-1}`, the filters of the decomposition `H = W^{-1} A X`.
    pub fn decomposition_blocks(&self) -> Result<Vec<ComplexMatrix>> {
        self.w_blocks.iter().map(inverse).collect()
    }

    /// `G = diag(W_m^{-1}) A`, the `M × T` processing of the unconstrained method.
    pub fn processing_matrix(&self, a: &CombiningModule) -> Result<ComplexMatrix> {
        Ok(wax::apply_blocks(&self.decomposition_blocks()?, a.matrix()))
    }

    pub fn has_singular_block(&self) -> bool {
        self.w_blocks.iter().any(|b| inverse(b).is_err())
    }
}

fn inverse(b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let f = linalg::svd(b)?;
    let smax = f.s.first().copied().unwrap_or(0.0);
    let smin = f.s.last().copied().unwrap_or(0.0);
    if !(smin > RANK_TOL * smax) {
        return Err(WaxError::RankDeficient { context: "unconstrained filter block", smin, smax });
    }
    let mut vs = f.v.clone();
    for (j, s) in f.s.iter().enumerate() {
        vs.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(vs * f.u.adjoint())
}

/// Dense constraint operator mapping `v` to `vec(A X − W H)`.
pub fn constraint_operator(h: &ComplexMatrix, a: &ComplexMatrix, l: usize) -> ComplexMatrix {
    let (m, k) = h.shape();
    let t = a.ncols();
    let panels = m / l;
    let x_len = t * k;
    let mut phi = ComplexMatrix::zeros(m * k, x_len + panels * l * l);
    for kk in 0..k {
        // A X: column kk of the output depends on column kk of X.
        for tt in 0..t {
            let col = kk * t + tt;
            for i in 0..m {
                phi[(kk * m + i, col)] = a[(i, tt)];
            }
        }
        // −W H: output row p·L + i depends on W_p[i, j] through H[p·L + j, kk].
        for p in 0..panels {
            let off = x_len + p * l * l;
            for j in 0..l {
                let hv = h[(p * l + j, kk)];
                for i in 0..l {
                    phi[(kk * m + p * l + i, off + j * l + i)] = -hv;
                }
            }
        }
    }
    phi
}

/// Minimizes `||A X − W H||_F` over unit-norm `v`.
///
/// The channel is normalized to unit Frobenius norm first, which makes the
/// solution invariant to channel scaling. When the smallest singular value
/// is degenerate (an exact decomposition with several degrees of freedom),
/// the returned vector is the normalized projection of the identity filter
/// `(X = 0, W_m = I_L)` onto the tied subspace, which yields invertible
/// blocks for generic channels.
pub fn solve_unconstrained(ch: &ChannelMatrix, a: &CombiningModule, cfg: &SystemConfig) -> Result<UnconstrainedSolution> {
    let (m, k, l, t) = (cfg.m, cfg.k, cfg.l, cfg.t);
    if ch.h().shape() != (m, k) {
        return Err(WaxError::DimensionMismatch { context: "solve_unconstrained", expected: (m, k), found: ch.h().shape() });
    }
    if a.matrix().shape() != (m, t) {
        return Err(WaxError::DimensionMismatch {
            context: "solve_unconstrained",
            expected: (m, t),
            found: a.matrix().shape(),
        });
    }
    let scale = linalg::frobenius(ch.h());
    let h = ch.h() / c64::new(scale, 0.0);
    let phi = constraint_operator(&h, a.matrix(), l);
    let rs = linalg::right_singular(&phi)?;
    let n = phi.ncols();
    let smax = rs.s[0];
    let smin = rs.s[n - 1];
    let tied: Vec<usize> = (0..n).filter(|&j| rs.s[j] <= smin + TIE_TOL * smax).collect();

    let mut v = rs.v.columns(n - 1, 1).into_owned();
    if tied.len() > 1 {
        let x_len = t * k;
        let mut reference = ComplexMatrix::zeros(n, 1);
        for p in 0..cfg.m_p {
            for i in 0..l {
                reference[(x_len + p * l * l + i * l + i, 0)] = c64::new(1.0, 0.0);
            }
        }
        let mut proj = ComplexMatrix::zeros(n, 1);
        for &j in &tied {
            let col = rs.v.column(j);
            let coeff = col.dotc(&reference.column(0));
            proj.column_mut(0).axpy(coeff, &col, c64::new(1.0, 0.0));
        }
        let pn = linalg::frobenius(&proj);
        if pn > 1e-6 * linalg::frobenius(&reference) {
            v = proj / c64::new(pn, 0.0);
        }
    }
    let residual = linalg::frobenius(&(&phi * &v));

    let x = ComplexMatrix::from_fn(t, k, |r, c| v[c * t + r]);
    let w_blocks = (0..cfg.m_p)
        .map(|p| {
            let off = t * k + p * l * l;
            ComplexMatrix::from_fn(l, l, |r, c| v[off + c * l + r])
        })
        .collect();
    Ok(UnconstrainedSolution { w_blocks, x, residual, smallest_singular_value: smin, tie_dimension: tied.len() })
}

/// Unitary baseline filter with the indices of blocks that needed the
/// degenerate fallback.
#[derive(Clone, Debug)]
pub struct UnitaryProjection {
    pub filter: BlockDiagonalFilter,
    pub degenerate_blocks: Vec<usize>,
}

/// Nearest unitary filter to the decomposition filter `W^{-1}` of an
/// unconstrained solution.
///
/// For invertible `W_m = U_m P_m` the polar factor of `W_m^{-1}` is
/// `U_m^H`, so no inverse is formed. Singular blocks fall back to the
/// Procrustes maximizer of the block (the same projection, not unique) and
/// are reported in `degenerate_blocks`.
pub fn project_to_unitary_blocks(sol: &UnconstrainedSolution) -> Result<UnitaryProjection> {
    let mut degenerate_blocks = Vec::new();
    let mut blocks = Vec::with_capacity(sol.w_blocks.len());
    for (p, b) in sol.w_blocks.iter().enumerate() {
        let u = match linalg::polar_factor(b) {
            Ok(u) => u,
            Err(WaxError::DegenerateProjection { .. }) => {
                degenerate_blocks.push(p);
                linalg::procrustes(b)?
            }
            Err(e) => return Err(e),
        };
        blocks.push(u.adjoint());
    }
    Ok(UnitaryProjection { filter: BlockDiagonalFilter::from_blocks_unchecked(blocks), degenerate_blocks })
}

/// Independent Haar-distributed unitary blocks.
pub fn random_isotropic_filter<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> BlockDiagonalFilter {
    BlockDiagonalFilter::haar(cfg.m_p, cfg.l, rng)
}
