//! WAX structures: block-diagonal filters, the combining module, lossless
//! semi-unitary transforms and the bandwidth/complexity trade-off.

use alloc::vec::Vec;

use rand::Rng;

use crate::baseline;
use crate::error::{Result, WaxError};
use crate::linalg::{self, c64, ComplexMatrix};
use crate::model::{self, ChannelMatrix, SystemConfig};

/// Unitarity tolerance for the framework's value types.
pub const STRUCT_TOL: f64 = 1e-9;

/// Residual below which the unconstrained decomposition is considered exact.
pub const EXACT_RESIDUAL: f64 = 1e-8;

/// `W = diag(W_1, …, W_{M_P})` with unitary `L × L` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagonalFilter {
    blocks: Vec<ComplexMatrix>,
}

impl BlockDiagonalFilter {
    pub fn new(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let l = check_square_blocks(&blocks, "BlockDiagonalFilter")?;
        for b in &blocks {
            if linalg::unitarity_error(b) > STRUCT_TOL * (l as f64).max(1.0) {
                return Err(WaxError::InvalidConfig("filter block is not unitary".into()));
            }
        }
        Ok(Self { blocks })
    }

    pub fn identity(panels: usize, l: usize) -> Self {
        Self { blocks: (0..panels).map(|_| linalg::identity(l)).collect() }
    }

    /// Independent Haar-distributed blocks.
    pub fn haar<R: Rng + ?Sized>(panels: usize, l: usize, rng: &mut R) -> Self {
        Self { blocks: (0..panels).map(|_| linalg::haar_unitary(l, rng)).collect() }
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<ComplexMatrix>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn panels(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.nrows())
    }

    pub fn antennas(&self) -> usize {
        self.panels() * self.block_size()
    }

    pub fn max_unitarity_error(&self) -> f64 {
        self.blocks.iter().map(linalg::unitarity_error).fold(0.0, f64::max)
    }

    /// `W · A` without materializing `W`.
    pub fn apply(&self, a: &ComplexMatrix) -> ComplexMatrix {
        apply_blocks(&self.blocks, a)
    }

    /// Re-projects every block onto the unitary group.
    pub fn reunitarize(&mut self) -> Result<()> {
        for b in &mut self.blocks {
            *b = linalg::reunitarize(b)?;
        }
        Ok(())
    }
}

fn check_square_blocks(blocks: &[ComplexMatrix], context: &'static str) -> Result<usize> {
    let l = blocks.first().map_or(0, |b| b.nrows());
    for b in blocks {
        if b.shape() != (l, l) {
            return Err(WaxError::DimensionMismatch { context, expected: (l, l), found: b.shape() });
        }
    }
    Ok(l)
}

/// Multiplies `diag(blocks)` into the rows of `a`.
pub fn apply_blocks(blocks: &[ComplexMatrix], a: &ComplexMatrix) -> ComplexMatrix {
    let l = blocks.first().map_or(0, |b| b.nrows());
    assert_eq!(blocks.len() * l, a.nrows(), "block filter does not match row count");
    let mut out = ComplexMatrix::zeros(a.nrows(), a.ncols());
    for (p, b) in blocks.iter().enumerate() {
        let prod = b * a.rows(p * l, l);
        out.rows_mut(p * l, l).copy_from(&prod);
    }
    out
}

/// Dense block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), b.shape()).copy_from(b);
        off += b.nrows();
    }
    out
}

/// The full `M × M` unitary `W`.
pub fn expand_filter(w: &BlockDiagonalFilter) -> ComplexMatrix {
    block_diag(w.blocks())
}

/// Fixed `M × T` semi-unitary combining module `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct CombiningModule {
    a: ComplexMatrix,
}

impl CombiningModule {
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        linalg::ensure_finite(&a)?;
        if a.ncols() > a.nrows() {
            return Err(WaxError::InvalidDimension { context: "CombiningModule", detail: "T must not exceed M" });
        }
        if linalg::unitarity_error(&a) > STRUCT_TOL * (a.ncols() as f64).max(1.0) {
            return Err(WaxError::InvalidConfig("combining module is not semi-unitary".into()));
        }
        Ok(Self { a })
    }

    /// Haar-random semi-unitary module.
    pub fn random<R: Rng + ?Sized>(m: usize, t: usize, rng: &mut R) -> Result<Self> {
        Ok(Self { a: linalg::haar_semi_unitary(m, t, rng)? })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn antennas(&self) -> usize {
        self.a.nrows()
    }

    pub fn streams(&self) -> usize {
        self.a.ncols()
    }

    /// `A_p`, the `L × T` row block feeding panel `p`.
    pub fn row_block(&self, panel: usize, l: usize) -> ComplexMatrix {
        self.a.rows(panel * l, l).into_owned()
    }
}

/// `(Q, Q_0)` parameterizing a lossless transform: `Q` is `T × T` and `Q_0`
/// is `(M − K) × (M − K)`, both unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct LosslessParams {
    pub q: ComplexMatrix,
    pub q0: ComplexMatrix,
}

impl LosslessParams {
    pub fn new(q: ComplexMatrix, q0: ComplexMatrix) -> Result<Self> {
        for (m, name) in [(&q, "Q"), (&q0, "Q0")] {
            if !m.is_square() {
                return Err(WaxError::DimensionMismatch {
                    context: "LosslessParams",
                    expected: (m.nrows(), m.nrows()),
                    found: m.shape(),
                });
            }
            if linalg::unitarity_error(m) > STRUCT_TOL * (m.nrows() as f64).max(1.0) {
                return Err(WaxError::InvalidConfig(alloc::format!("{name} is not unitary")));
            }
        }
        Ok(Self { q, q0 })
    }

    pub fn identity(t: usize, null_dim: usize) -> Self {
        Self { q: linalg::identity(t), q0: linalg::identity(null_dim) }
    }

    pub fn haar<R: Rng + ?Sized>(t: usize, null_dim: usize, rng: &mut R) -> Self {
        Self { q: linalg::haar_unitary(t, rng), q0: linalg::haar_unitary(null_dim, rng) }
    }

    pub fn streams(&self) -> usize {
        self.q.nrows()
    }
}

/// `F_L = [Ũ_H, N_H Q_0] [Q; 0]`.
///
/// Every `M × T` semi-unitary transform preserving `I(F^H y; s)` has this
/// form: a unitary mix of the full signal space with `T − K` directions of
/// the null space.
pub fn assemble_lossless_transform(ch: &ChannelMatrix, p: &LosslessParams) -> Result<ComplexMatrix> {
    let (m, k) = (ch.antennas(), ch.users());
    let t = p.streams();
    if t < k || t > m {
        return Err(WaxError::DimensionMismatch { context: "assemble_lossless_transform", expected: (t, k), found: (m, k) });
    }
    if p.q0.shape() != (m - k, m - k) {
        return Err(WaxError::DimensionMismatch {
            context: "assemble_lossless_transform",
            expected: (m - k, m - k),
            found: p.q0.shape(),
        });
    }
    let mut f = ch.signal_basis() * p.q.rows(0, k);
    if t > k {
        let null_part = ch.null_basis() * p.q0.columns(0, t - k);
        f += null_part * p.q.rows(k, t - k);
    }
    Ok(f)
}

/// `||Ũ_H^H F F^H Ũ_H − I_K||_F`, zero iff `f` is a lossless semi-unitary transform.
pub fn lossless_condition_error(ch: &ChannelMatrix, f: &ComplexMatrix) -> f64 {
    let c = ch.signal_basis().adjoint() * f;
    let mut g = &c * c.adjoint();
    for i in 0..g.nrows() {
        g[(i, i)] -= c64::new(1.0, 0.0);
    }
    linalg::frobenius(&g)
}

/// `H ≈ W A X` with the CPU stage fitted by least squares.
#[derive(Clone, Debug)]
pub struct WaxSolution {
    pub w: BlockDiagonalFilter,
    /// `T × K`.
    pub x: ComplexMatrix,
    /// `||W A X − H||_F`.
    pub residual: f64,
}

impl WaxSolution {
    /// Fits `X = (W A)^H H`, the least-squares CPU stage for semi-unitary `W A`.
    pub fn fit(w: BlockDiagonalFilter, a: &CombiningModule, ch: &ChannelMatrix) -> Self {
        let f = w.apply(a.matrix());
        let x = f.adjoint() * ch.h();
        let residual = linalg::frobenius(&(&f * &x - ch.h()));
        Self { w, x, residual }
    }
}

/// Trade-off for lossless unconstrained processing:
/// `T > max(M (K − L) / K, K − 1)`, in integer arithmetic.
pub fn tradeoff_satisfied(cfg: &SystemConfig) -> bool {
    let (m, k, l, t) = (cfg.m, cfg.k, cfg.l, cfg.t);
    t * k > m * (k - l) && t >= k
}

/// Smallest `T` satisfying [`tradeoff_satisfied`].
pub fn tradeoff_min_t(m: usize, k: usize, l: usize) -> usize {
    (m * (k - l) / k + 1).max(k)
}

/// `T_min = max(K, ⌊M (K − L) / (K + 1)⌋)`.
pub fn t_min(m: usize, k: usize, l: usize) -> usize {
    k.max(m * (k - l) / (k + 1))
}

/// Smallest `T ∈ [K, M]` for which the unconstrained decomposition is exact
/// (residual below [`EXACT_RESIDUAL`]) on every one of `trials` random
/// channel/combiner draws. Returns `M` if no smaller value qualifies.
pub fn empirical_t_min<R: Rng + ?Sized>(m: usize, k: usize, l: usize, trials: usize, rng: &mut R) -> Result<usize> {
    model::validate_dims(m, k, l)?;
    for t in k..m {
        let cfg = SystemConfig::new(m, k, l, t, 1.0)?;
        let mut exact = true;
        for _ in 0..trials.max(1) {
            let ch = model::sample_channel(&cfg, rng);
            let a = CombiningModule::random(m, t, rng)?;
            let sol = baseline::solve_unconstrained(&ch, &a, &cfg)?;
            if sol.residual >= EXACT_RESIDUAL {
                exact = false;
                break;
            }
        }
        if exact {
            return Ok(t);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(m: usize, k: usize, l: usize, t: usize) -> SystemConfig {
        SystemConfig::new(m, k, l, t, 1.0).unwrap()
    }

    #[test]
    fn tradeoff_values() {
        assert!(tradeoff_satisfied(&cfg(12, 4, 1, 10)));
        assert!(!tradeoff_satisfied(&cfg(12, 4, 1, 9)));
        assert!(tradeoff_satisfied(&cfg(12, 4, 4, 4)));
        assert_eq!(tradeoff_min_t(12, 4, 1), 10);
        assert_eq!(tradeoff_min_t(12, 4, 2), 7);
        assert_eq!(tradeoff_min_t(12, 4, 3), 4);
    }

    #[test]
    fn tradeoff_min_t_agrees_with_predicate() {
        for m in 1..=16 {
            for k in 1..=m {
                for l in (1..=k).filter(|l| m % l == 0) {
                    let tmin = tradeoff_min_t(m, k, l);
                    for t in k..=m {
                        assert_eq!(tradeoff_satisfied(&cfg(m, k, l, t)), t >= tmin, "m={m} k={k} l={l} t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn t_min_values() {
        assert_eq!(t_min(12, 4, 1), 7);
        assert_eq!(t_min(12, 4, 2), 4);
        assert_eq!(t_min(12, 4, 4), 4);
        assert_eq!(t_min(9, 3, 3), 3);
    }

    #[test]
    fn identity_params_select_signal_and_null_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = model::sample_channel(&cfg(6, 2, 1, 4), &mut rng);
        let f = assemble_lossless_transform(&ch, &LosslessParams::identity(4, 4)).unwrap();
        assert!(linalg::frobenius(&(f.columns(0, 2) - ch.signal_basis())) < 1e-15);
        assert!(linalg::frobenius(&(f.columns(2, 2) - ch.null_basis().columns(0, 2))) < 1e-15);
    }

    #[test]
    fn edge_cases_t_equals_k_and_m_equals_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = model::sample_channel(&cfg(5, 3, 1, 3), &mut rng);
        let p = LosslessParams::haar(3, 2, &mut rng);
        let f = assemble_lossless_transform(&ch, &p).unwrap();
        assert!(linalg::unitarity_error(&f) < 1e-12);
        assert!(lossless_condition_error(&ch, &f) < 1e-12);

        let square = model::sample_channel(&cfg(3, 3, 1, 3), &mut rng);
        let p = LosslessParams::haar(3, 0, &mut rng);
        let f = assemble_lossless_transform(&square, &p).unwrap();
        assert!(linalg::frobenius(&(&f - square.signal_basis() * &p.q)) < 1e-15);
    }

    #[test]
    fn assemble_rejects_bad_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = model::sample_channel(&cfg(6, 2, 1, 4), &mut rng);
        assert!(assemble_lossless_transform(&ch, &LosslessParams::identity(4, 3)).is_err());
        assert!(assemble_lossless_transform(&ch, &LosslessParams::identity(1, 4)).is_err());
        assert!(assemble_lossless_transform(&ch, &LosslessParams::identity(7, 4)).is_err());
    }

    #[test]
    fn expand_filter_cases() {
        assert_eq!(expand_filter(&BlockDiagonalFilter::identity(4, 3)), linalg::identity(12));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let single = BlockDiagonalFilter::haar(1, 4, &mut rng);
        assert_eq!(expand_filter(&single), single.blocks()[0]);
        let w = BlockDiagonalFilter::haar(3, 2, &mut rng);
        let a = CombiningModule::random(6, 4, &mut rng).unwrap();
        let dense = expand_filter(&w) * a.matrix();
        assert!(linalg::frobenius(&(&dense - w.apply(a.matrix()))) < 1e-14);
        assert!(linalg::unitarity_error(&dense) < STRUCT_TOL);
        assert!(linalg::unitarity_error(&expand_filter(&w)) < STRUCT_TOL);
    }

    #[test]
    fn value_types_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = linalg::complex_gaussian(3, 3, &mut rng);
        assert!(BlockDiagonalFilter::new(alloc::vec![g.clone()]).is_err());
        assert!(BlockDiagonalFilter::new(alloc::vec![linalg::identity(2), linalg::identity(3)]).is_err());
        assert!(CombiningModule::new(linalg::complex_gaussian(4, 2, &mut rng)).is_err());
        assert!(CombiningModule::new(linalg::complex_gaussian(2, 4, &mut rng)).is_err());
        assert!(LosslessParams::new(g, linalg::identity(2)).is_err());
        assert!(LosslessParams::new(linalg::identity(3), ComplexMatrix::zeros(0, 0)).is_ok());
    }

    #[test]
    fn wax_fit_of_lossless_product_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = cfg(4, 2, 2, 4);
        let ch = model::sample_channel(&c, &mut rng);
        let a = CombiningModule::random(4, 4, &mut rng).unwrap();
        let sol = WaxSolution::fit(BlockDiagonalFilter::haar(2, 2, &mut rng), &a, &ch);
        assert!(sol.residual < 1e-12);
        assert_eq!(sol.x.shape(), (4, 2));
    }

    #[test]
    fn empirical_t_min_when_l_equals_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(empirical_t_min(6, 2, 2, 3, &mut rng).unwrap(), 2);
        assert_eq!(empirical_t_min(8, 4, 4, 2, &mut rng).unwrap(), 4);
    }
}
