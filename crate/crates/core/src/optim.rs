//! Alternating closed-form ascent on
//! `J(W, Q, Q_0) = Re tr(A^H W^H F_L(Q, Q_0))`.
//!
//! Since `W A` and `F_L` are both semi-unitary,
//! `||W A − F_L||_F^2 = 2T − 2J`, so maximizing `J` minimizes the distance
//! from the achievable processing to the set of lossless transforms.
//! `J` is linear in each of `W_m`, `Q` and `Q_0` separately, and each
//! partial maximization is an orthogonal Procrustes problem solved exactly
//! by [`linalg::procrustes`]. Every step is therefore nondecreasing in `J`,
//! and `J <= T` bounds the iteration.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Result, WaxError};
use crate::linalg::{self, ComplexMatrix};
use crate::model::{ChannelMatrix, SystemConfig};
use crate::wax::{self, BlockDiagonalFilter, CombiningModule, LosslessParams};

/// Sweeps between unitarity checks on the iterates.
const REPROJECT_EVERY: usize = 100;
const DRIFT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "kebab-case"))]
pub enum Init {
    Identity,
    HaarRandom,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimOptions {
    pub max_iters: usize,
    /// Stop when `|ΔJ| < rel_tol · T` over one sweep.
    pub rel_tol: f64,
    pub restarts: usize,
    pub init: Init,
    /// Declare lossless when `T − J < lossless_tol`.
    pub lossless_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { max_iters: 500, rel_tol: 1e-9, restarts: 3, init: Init::HaarRandom, lossless_tol: 1e-6 }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(WaxError::InvalidConfig("max_iters and restarts must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.lossless_tol > 0.0) {
            return Err(WaxError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OptimResult {
    pub w: BlockDiagonalFilter,
    pub params: LosslessParams,
    /// `J` after each full sweep of the selected restart.
    pub j_history: Vec<f64>,
    pub converged: bool,
    pub lossless: bool,
    /// `D_L = 2T − 2J`.
    pub distance: f64,
    /// Restart that produced this result.
    pub restart: usize,
}

impl OptimResult {
    pub fn final_j(&self) -> f64 {
        self.j_history.last().copied().unwrap_or(0.0)
    }

    pub fn sweeps(&self) -> usize {
        self.j_history.len()
    }
}

/// `Re tr(A^H W^H F_L)`.
pub fn objective_j(w: &BlockDiagonalFilter, a: &CombiningModule, f_l: &ComplexMatrix) -> f64 {
    linalg::re_inner(&w.apply(a.matrix()), f_l)
}

/// Per-panel Procrustes: `W_m = procrustes(F_{L,m} A_m^H)` where `F_{L,m}`
/// is the `m`-th `L × T` row block of `F_L`.
pub fn step_w(a: &CombiningModule, f_l: &ComplexMatrix, l: usize) -> Result<BlockDiagonalFilter> {
    let m = a.antennas();
    if f_l.shape() != a.matrix().shape() {
        return Err(WaxError::DimensionMismatch { context: "step_w", expected: a.matrix().shape(), found: f_l.shape() });
    }
    if l == 0 || !m.is_multiple_of(l) {
        return Err(WaxError::InvalidDimension { context: "step_w", detail: "L must divide M" });
    }
    let blocks = (0..m / l)
        .map(|p| {
            let b = f_l.rows(p * l, l) * a.matrix().rows(p * l, l).adjoint();
            linalg::procrustes(&b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockDiagonalFilter::from_blocks_unchecked(blocks))
}

/// `B_Q = [Ũ_H^H; Q_0[:, :T−K]^H N_H^H] W A`.
pub fn q_update_matrix(w: &BlockDiagonalFilter, a: &CombiningModule, ch: &ChannelMatrix, q0: &ComplexMatrix) -> ComplexMatrix {
    let (k, t) = (ch.users(), a.streams());
    let wa = w.apply(a.matrix());
    let mut b = ComplexMatrix::zeros(t, t);
    b.rows_mut(0, k).copy_from(&(ch.signal_basis().adjoint() * &wa));
    if t > k {
        let sel = ch.null_basis() * q0.columns(0, t - k);
        b.rows_mut(k, t - k).copy_from(&(sel.adjoint() * &wa));
    }
    b
}

pub fn step_q(w: &BlockDiagonalFilter, a: &CombiningModule, ch: &ChannelMatrix, q0: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_dims(w, a, ch)?;
    linalg::procrustes(&q_update_matrix(w, a, ch, q0))
}

/// `B_{Q_0} = N_H^H W A [Q[K:T, :]^H, 0]`, zero-padded from `T − K` to `M − K` columns.
pub fn q0_update_matrix(w: &BlockDiagonalFilter, a: &CombiningModule, ch: &ChannelMatrix, q: &ComplexMatrix) -> ComplexMatrix {
    let (m, k, t) = (ch.antennas(), ch.users(), a.streams());
    let mut b = ComplexMatrix::zeros(m - k, m - k);
    if t > k && m > k {
        let wa = w.apply(a.matrix());
        let left = ch.null_basis().adjoint() * wa * q.rows(k, t - k).adjoint();
        b.columns_mut(0, t - k).copy_from(&left);
    }
    b
}

pub fn step_q0(w: &BlockDiagonalFilter, a: &CombiningModule, ch: &ChannelMatrix, q: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_dims(w, a, ch)?;
    linalg::procrustes(&q0_update_matrix(w, a, ch, q))
}

fn check_dims(w: &BlockDiagonalFilter, a: &CombiningModule, ch: &ChannelMatrix) -> Result<()> {
    let (m, k, t) = (ch.antennas(), ch.users(), a.streams());
    if a.antennas() != m || w.antennas() != m {
        return Err(WaxError::DimensionMismatch { context: "optim", expected: (m, t), found: (w.antennas(), t) });
    }
    if t < k || t > m {
        return Err(WaxError::InvalidDimension { context: "optim", detail: "need K <= T <= M" });
    }
    Ok(())
}

/// Runs `opts.restarts` independent ascents and keeps the one with the
/// largest final `J`.
pub fn optimize<R: Rng + ?Sized>(
    ch: &ChannelMatrix,
    a: &CombiningModule,
    cfg: &SystemConfig,
    opts: &OptimOptions,
    rng: &mut R,
) -> Result<OptimResult> {
    opts.validate()?;
    if ch.h().shape() != (cfg.m, cfg.k) || a.matrix().shape() != (cfg.m, cfg.t) {
        return Err(WaxError::DimensionMismatch { context: "optimize", expected: (cfg.m, cfg.t), found: a.matrix().shape() });
    }
    let mut best: Option<OptimResult> = None;
    for restart in 0..opts.restarts {
        let (w, params) = match opts.init {
            Init::Identity => (BlockDiagonalFilter::identity(cfg.m_p, cfg.l), LosslessParams::identity(cfg.t, cfg.m - cfg.k)),
            Init::HaarRandom => (
                BlockDiagonalFilter::haar(cfg.m_p, cfg.l, rng),
                LosslessParams::haar(cfg.t, cfg.m - cfg.k, rng),
            ),
        };
        let mut run = ascend(ch, a, cfg, opts, w, params)?;
        run.restart = restart;
        if best.as_ref().is_none_or(|b| run.final_j() > b.final_j()) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Single ascent from the given starting point.
pub fn ascend(
    ch: &ChannelMatrix,
    a: &CombiningModule,
    cfg: &SystemConfig,
    opts: &OptimOptions,
    mut w: BlockDiagonalFilter,
    mut params: LosslessParams,
) -> Result<OptimResult> {
    check_dims(&w, a, ch)?;
    let t = cfg.t as f64;
    let mut prev = objective_j(&w, a, &wax::assemble_lossless_transform(ch, &params)?);
    let mut j_history = Vec::new();
    let mut converged = false;
    for sweep in 1..=opts.max_iters {
        let f_l = wax::assemble_lossless_transform(ch, &params)?;
        w = step_w(a, &f_l, cfg.l)?;
        params.q = step_q(&w, a, ch, &params.q0)?;
        params.q0 = step_q0(&w, a, ch, &params.q)?;
        if sweep % REPROJECT_EVERY == 0 {
            reproject_if_drifted(&mut w, &mut params)?;
        }
        let j = objective_j(&w, a, &wax::assemble_lossless_transform(ch, &params)?);
        j_history.push(j);
        if libm::fabs(j - prev) < opts.rel_tol * t {
            converged = true;
            break;
        }
        prev = j;
    }
    let final_j = j_history.last().copied().unwrap_or(prev);
    Ok(OptimResult {
        w,
        params,
        j_history,
        converged,
        lossless: t - final_j < opts.lossless_tol,
        distance: 2.0 * t - 2.0 * final_j,
        restart: 0,
    })
}

fn reproject_if_drifted(w: &mut BlockDiagonalFilter, params: &mut LosslessParams) -> Result<()> {
    if w.max_unitarity_error() > DRIFT_TOL {
        w.reunitarize()?;
    }
    if linalg::unitarity_error(&params.q) > DRIFT_TOL {
        params.q = linalg::reunitarize(&params.q)?;
    }
    if linalg::unitarity_error(&params.q0) > DRIFT_TOL {
        params.q0 = linalg::reunitarize(&params.q0)?;
    }
    Ok(())
}
