//! Narrowband uplink model `y = H s + n` with `s ~ CN(0, E_s I_K)` and
//! `n ~ CN(0, N_0 I_M)`.
//!
//! Mutual information is evaluated in closed form; no symbols are drawn.
//! All rates are in bits per channel use.

use rand::Rng;

use crate::error::{Result, WaxError};
use crate::linalg::{self, ComplexMatrix, QrSplit, RANK_TOL};

/// Dimensions and SNR of one scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemConfig {
    /// Antennas.
    pub m: usize,
    /// Single-antenna users.
    pub k: usize,
    /// Decentralized filter block size.
    pub l: usize,
    /// Streams forwarded to the CPU.
    pub t: usize,
    /// Panels, `m / l`.
    pub m_p: usize,
    /// Linear `E_s / N_0`.
    pub snr: f64,
}

impl SystemConfig {
    pub fn new(m: usize, k: usize, l: usize, t: usize, snr: f64) -> Result<Self> {
        validate_dims(m, k, l)?;
        if t < k || t > m {
            return Err(WaxError::InvalidConfig(alloc::format!("need K <= T <= M, got K={k}, T={t}, M={m}")));
        }
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(WaxError::InvalidConfig(alloc::format!("snr must be positive and finite, got {snr}")));
        }
        Ok(Self { m, k, l, t, m_p: m / l, snr })
    }

    pub fn with_t(&self, t: usize) -> Result<Self> {
        Self::new(self.m, self.k, self.l, t, self.snr)
    }

    pub fn with_snr(&self, snr: f64) -> Result<Self> {
        Self::new(self.m, self.k, self.l, self.t, snr)
    }
}

/// Checks `1 <= L <= K <= M` and `L | M`.
pub fn validate_dims(m: usize, k: usize, l: usize) -> Result<()> {
    if l == 0 || l > k || k > m {
        return Err(WaxError::InvalidConfig(alloc::format!("need 1 <= L <= K <= M, got L={l}, K={k}, M={m}")));
    }
    if !m.is_multiple_of(l) {
        return Err(WaxError::InvalidConfig(alloc::format!("L={l} does not divide M={m}")));
    }
    Ok(())
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// An `M × K` channel with its cached signal/null-space split.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    h: ComplexMatrix,
    qr: QrSplit,
}

impl ChannelMatrix {
    /// Fails if `h` is not full column rank.
    pub fn new(h: ComplexMatrix) -> Result<Self> {
        let qr = linalg::qr_split(&h)?;
        Ok(Self { h, qr })
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    /// Orthonormal basis of the signal space (`Ũ_H`).
    pub fn signal_basis(&self) -> &ComplexMatrix {
        &self.qr.u_tilde
    }

    /// Orthonormal basis of the orthogonal complement (`N_H`).
    pub fn null_basis(&self) -> &ComplexMatrix {
        &self.qr.n_h
    }

    pub fn r_tilde(&self) -> &ComplexMatrix {
        &self.qr.r_tilde
    }

    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    /// Channel scaled by a real factor; the QR cache is recomputed.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.h * crate::c64::new(factor, 0.0))
    }
}

/// I.i.d. Rayleigh channel, unit variance per entry.
pub fn sample_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelMatrix {
    loop {
        let h = linalg::complex_gaussian(cfg.m, cfg.k, rng);
        // Rank deficiency has probability zero; redraw if it ever trips.
        if let Ok(ch) = ChannelMatrix::new(h) {
            return ch;
        }
    }
}

/// `log2 det(I + snr · C^H C)` from the singular values of `c`.
pub fn log2det_gain(c: &ComplexMatrix, snr: f64) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let f = linalg::svd(c).expect("finite matrix");
    f.s.iter().map(|s| libm::log2(1.0 + snr * s * s)).sum()
}

/// Channel capacity `log2 det(I_K + snr H^H H)`.
pub fn mutual_information_full(ch: &ChannelMatrix, snr: f64) -> f64 {
    log2det_gain(ch.h(), snr)
}

/// `I(G^H y; s)` for a full-column-rank `M × T` processing matrix `g`.
///
/// The processed noise `G^H n` is colored unless `g` is semi-unitary, so the
/// rate is computed after whitening:
/// `log2 det(I_K + snr H^H G (G^H G)^{-1} G^H H)`. The projector is formed
/// from the left singular vectors of `g`.
pub fn mutual_information_processed(ch: &ChannelMatrix, g: &ComplexMatrix, snr: f64) -> Result<f64> {
    if g.nrows() != ch.antennas() {
        return Err(WaxError::DimensionMismatch {
            context: "mutual_information_processed",
            expected: (ch.antennas(), g.ncols()),
            found: g.shape(),
        });
    }
    let f = linalg::svd(g)?;
    let smax = f.s.first().copied().unwrap_or(0.0);
    let smin = f.s.last().copied().unwrap_or(0.0);
    if g.ncols() == 0 || !(smin > RANK_TOL * smax) {
        return Err(WaxError::RankDeficient { context: "mutual_information_processed", smin, smax });
    }
    let projected = f.u.adjoint() * ch.h();
    Ok(log2det_gain(&projected, snr))
}

/// Processed rate over channel capacity; `1.0` means information-lossless.
pub fn capacity_ratio(ch: &ChannelMatrix, g: &ComplexMatrix, snr: f64) -> Result<f64> {
    let full = mutual_information_full(ch, snr);
    let processed = mutual_information_processed(ch, g, snr)?;
    if full == 0.0 {
        return Ok(1.0);
    }
    Ok(processed / full)
}
