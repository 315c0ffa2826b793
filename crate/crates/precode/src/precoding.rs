//! Linear precoders for the downlink: centralized Wiener filter, zero
//! forcing, maximum ratio transmission, the whitening/matched-filter split
//! used by the partially decentralized architecture, and the per-cluster
//! local Wiener filter of the fully decentralized architecture.
//!
//! Conventions: the channel `H` is `U x B` (users by BS antennas), the
//! precoded vector is `x = P s` with `E||x||^2 <= rho2`, and user equipment
//! scales its received sample by a real precoding factor before detection.
//! All prepare/precode functions are pure; prepared states are immutable and
//! safe to share across workers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    gram, hpd_inverse, q_by_definition, searle_trace, CMatrix, CVector, NumericsError,
};

/// Scalars governing a precoder run.
///
/// `n0` is the complex noise variance per receive antenna, `rho2` the total
/// transmit power budget, `es` the average constellation symbol energy, and
/// `tau` the regularization scale of the fully decentralized precoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecoderConfig {
    pub users: usize,
    pub bs_antennas: usize,
    pub n0: f64,
    pub rho2: f64,
    pub es: f64,
    pub tau: f64,
}

impl PrecoderConfig {
    pub fn new(
        users: usize,
        bs_antennas: usize,
        n0: f64,
        rho2: f64,
        es: f64,
        tau: f64,
    ) -> Result<Self, PrecodingError> {
        if users == 0 || bs_antennas == 0 {
            return Err(PrecodingError::InvalidConfig(
                "users and bs_antennas must be at least 1".into(),
            ));
        }
        if !(n0 >= 0.0) || !(rho2 > 0.0) || !(es > 0.0) || !(tau >= 0.0) {
            return Err(PrecodingError::InvalidConfig(format!(
                "need n0 >= 0, rho2 > 0, es > 0, tau >= 0 (got n0={n0}, rho2={rho2}, es={es}, tau={tau})"
            )));
        }
        Ok(Self {
            users,
            bs_antennas,
            n0,
            rho2,
            es,
            tau,
        })
    }

    /// Replaces the noise variance, e.g. when sweeping SNR.
    pub fn with_n0(mut self, n0: f64) -> Self {
        self.n0 = n0;
        self
    }
}

/// Errors raised while preparing or applying a precoder.
#[derive(Debug, Error)]
pub enum PrecodingError {
    #[error("invalid precoder configuration: {0}")]
    InvalidConfig(String),
    #[error("{precoder} precoder: channel/config dimension mismatch ({details})")]
    DimensionMismatch {
        precoder: &'static str,
        details: String,
    },
    #[error("{precoder} precoder: regularized Gram is singular: {source}")]
    Singular {
        precoder: &'static str,
        source: NumericsError,
    },
    #[error("{precoder} precoder: zero channel (no transmit energy)")]
    ZeroChannel { precoder: &'static str },
    #[error("zero received power: effective channel H*P vanishes")]
    ZeroReceivedPower,
    #[error("receive-scale mode {mode} is not defined for this precoder")]
    UnsupportedScaleMode { mode: &'static str },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Prepared centralized Wiener-filter precoder.
///
/// Holds the regularizer `kappa = U * n0 / rho2`, the whitening matrix
/// `A^{-1}` with `A = H H^H + kappa I`, the unnormalized precoding matrix
/// `Q = H^H A^{-1}`, and the precoding factor `beta` such that `P = Q / beta`
/// meets the power budget with equality. Built by [`wf_prepare`] (or
/// [`zf_prepare`] for the `kappa = 0` limit).
#[derive(Debug, Clone)]
pub struct CentralWfState {
    pub kappa: f64,
    pub a_inv: CMatrix,
    pub q: CMatrix,
    pub beta: f64,
}

/// Prepared per-cluster Wiener-filter precoder for the fully decentralized
/// architecture, operating under the equal power split `rho2_c = rho2 / C`.
#[derive(Debug, Clone)]
pub struct LocalWfState {
    pub cluster_id: usize,
    pub kappa: f64,
    pub q: CMatrix,
    pub beta: f64,
    pub rho2_c: f64,
}

/// Whitening-node quantities derived from an externally assembled Gram
/// matrix: `(kappa, A^{-1}, beta)`.
///
/// This is the piece of the centralized precoder that the partially
/// decentralized master executes; it never touches `H` itself.
pub fn whitener_from_gram(
    g: &CMatrix,
    cfg: &PrecoderConfig,
) -> Result<(f64, CMatrix, f64), PrecodingError> {
    whitener_with_kappa(g, cfg, cfg.users as f64 * cfg.n0 / cfg.rho2, "wiener-filter")
}

fn whitener_with_kappa(
    g: &CMatrix,
    cfg: &PrecoderConfig,
    kappa: f64,
    precoder: &'static str,
) -> Result<(f64, CMatrix, f64), PrecodingError> {
    if g.rows() != cfg.users || !g.is_square() {
        return Err(PrecodingError::DimensionMismatch {
            precoder,
            details: format!(
                "Gram is {}x{}, expected {}x{}",
                g.rows(),
                g.cols(),
                cfg.users,
                cfg.users
            ),
        });
    }
    let a = g.add_scaled_identity(kappa)?;
    let a_inv = hpd_inverse(&a).map_err(|source| PrecodingError::Singular { precoder, source })?;
    // tr(Q^H Q) = tr(A^{-1} G A^{-1}) via the Searle shortcut.
    let tr_qhq = searle_trace(&a_inv, g, kappa)?;
    if !(tr_qhq > 0.0) {
        return Err(PrecodingError::ZeroChannel { precoder });
    }
    let beta = (cfg.es * tr_qhq / cfg.rho2).sqrt();
    Ok((kappa, a_inv, beta))
}

fn prepare_with_kappa(
    h: &CMatrix,
    cfg: &PrecoderConfig,
    kappa: f64,
    precoder: &'static str,
) -> Result<CentralWfState, PrecodingError> {
    if h.rows() != cfg.users || h.cols() != cfg.bs_antennas {
        return Err(PrecodingError::DimensionMismatch {
            precoder,
            details: format!(
                "channel is {}x{}, config says {}x{}",
                h.rows(),
                h.cols(),
                cfg.users,
                cfg.bs_antennas
            ),
        });
    }
    if h.cols() < h.rows() {
        return Err(PrecodingError::DimensionMismatch {
            precoder,
            details: format!("needs B >= U, got B={} U={}", h.cols(), h.rows()),
        });
    }
    let g = gram(h)?;
    let (kappa, a_inv, beta) = whitener_with_kappa(&g, cfg, kappa, precoder)?;
    let q = h.hermitian().mul(&a_inv)?;
    Ok(CentralWfState {
        kappa,
        a_inv,
        q,
        beta,
    })
}

/// Prepares the centralized Wiener-filter precoder for one channel
/// realization: `kappa = U * n0 / rho2`, `Q = H^H (H H^H + kappa I)^{-1}`,
/// and `beta` from the fast trace form.
pub fn wf_prepare(h: &CMatrix, cfg: &PrecoderConfig) -> Result<CentralWfState, PrecodingError> {
    prepare_with_kappa(h, cfg, cfg.users as f64 * cfg.n0 / cfg.rho2, "wiener-filter")
}

/// Zero-forcing limit: same pipeline with the regularizer forced to zero.
/// Fails with a singularity error when the Gram matrix is rank deficient.
pub fn zf_prepare(h: &CMatrix, cfg: &PrecoderConfig) -> Result<CentralWfState, PrecodingError> {
    prepare_with_kappa(h, cfg, 0.0, "zero-forcing")
}

/// Applies the prepared centralized precoder: `x = (1/beta) Q s`.
pub fn wf_precode(state: &CentralWfState, s: &CVector) -> Result<CVector, PrecodingError> {
    Ok(state.q.matvec(s)?.scale(1.0 / state.beta))
}

/// Whitens a transmit vector at the central node: `z = (1/beta) A^{-1} s`.
pub fn whiten(state: &CentralWfState, s: &CVector) -> Result<CVector, PrecodingError> {
    whiten_with(&state.a_inv, state.beta, s)
}

pub(crate) fn whiten_with(
    a_inv: &CMatrix,
    beta: f64,
    s: &CVector,
) -> Result<CVector, PrecodingError> {
    Ok(a_inv.matvec(s)?.scale(1.0 / beta))
}

/// Per-cluster matched filter applied to a whitened vector: `x_c = H_c^H z`.
pub fn local_matched_filter(h_c: &CMatrix, z: &CVector) -> Result<CVector, PrecodingError> {
    Ok(h_c.hermitian().matvec(z)?)
}

/// Maximum-ratio-transmission gain `gamma = sqrt(rho2 / (tr(H H^H) * es))`,
/// scaled so `x = gamma H^H s` meets the power budget with equality.
pub fn mrt_gain(h: &CMatrix, cfg: &PrecoderConfig) -> Result<f64, PrecodingError> {
    let energy = h.frobenius_norm_sq();
    if !(energy > 0.0) {
        return Err(PrecodingError::ZeroChannel { precoder: "mrt" });
    }
    Ok((cfg.rho2 / (energy * cfg.es)).sqrt())
}

/// Matched-filter precoding: `x = gamma H^H s`.
pub fn mrt_precode(
    h: &CMatrix,
    cfg: &PrecoderConfig,
    s: &CVector,
) -> Result<CVector, PrecodingError> {
    let gamma = mrt_gain(h, cfg)?;
    Ok(h.hermitian().matvec(s)?.scale(gamma))
}

/// Prepares the local Wiener filter of cluster `cluster_id` out of
/// `clusters`, under the equal power split and the scaled regularizer
/// `kappa_c = tau * U * n0 / rho2_c`.
///
/// `Q_c` uses whichever of the two equivalent regularized pseudo-inverse
/// forms inverts the smaller matrix: the `B_c x B_c` form when `B_c < U`,
/// the `U x U` form otherwise.
pub fn fd_prepare(
    h_c: &CMatrix,
    cfg: &PrecoderConfig,
    clusters: usize,
    cluster_id: usize,
) -> Result<LocalWfState, PrecodingError> {
    if clusters == 0 || cluster_id >= clusters {
        return Err(PrecodingError::InvalidConfig(format!(
            "cluster id {cluster_id} out of range for {clusters} clusters"
        )));
    }
    if h_c.rows() != cfg.users {
        return Err(PrecodingError::DimensionMismatch {
            precoder: "local-wf",
            details: format!(
                "cluster channel has {} rows, expected {}",
                h_c.rows(),
                cfg.users
            ),
        });
    }
    let rho2_c = cfg.rho2 / clusters as f64;
    let kappa = cfg.tau * cfg.users as f64 * cfg.n0 / rho2_c;
    let b_c = h_c.cols();
    let (q, tr_qhq) = if b_c < cfg.users {
        let q = q_by_definition(h_c, kappa).map_err(|source| match source {
            NumericsError::NotPositiveDefinite { .. } => PrecodingError::Singular {
                precoder: "local-wf",
                source,
            },
            other => PrecodingError::Numerics(other),
        })?;
        let tr = q.frobenius_norm_sq();
        (q, tr)
    } else {
        let g_c = gram(h_c)?;
        let a_c = g_c.add_scaled_identity(kappa)?;
        let a_inv = hpd_inverse(&a_c).map_err(|source| PrecodingError::Singular {
            precoder: "local-wf",
            source,
        })?;
        let tr = searle_trace(&a_inv, &g_c, kappa)?;
        let q = h_c.hermitian().mul(&a_inv)?;
        (q, tr)
    };
    if !(tr_qhq > 0.0) {
        return Err(PrecodingError::ZeroChannel {
            precoder: "local-wf",
        });
    }
    let beta = (tr_qhq * cfg.es / rho2_c).sqrt();
    Ok(LocalWfState {
        cluster_id,
        kappa,
        q,
        beta,
        rho2_c,
    })
}

/// Applies a prepared local precoder: `x_c = (1/beta_c) Q_c s`.
pub fn fd_precode(state: &LocalWfState, s: &CVector) -> Result<CVector, PrecodingError> {
    Ok(state.q.matvec(s)?.scale(1.0 / state.beta))
}

/// A precoder after preparation, as needed to derive the UE-side scale.
#[derive(Debug, Clone)]
pub enum PreparedPrecoder {
    Central(CentralWfState),
    Local(Vec<LocalWfState>),
    Mrt { gain: f64 },
}

impl PreparedPrecoder {
    /// Assembles the composite `B x U` precoding matrix `P` with `x = P s`.
    /// Local states must be ordered by cluster and match the column split
    /// of `h`.
    pub fn composite_matrix(&self, h: &CMatrix) -> Result<CMatrix, PrecodingError> {
        match self {
            PreparedPrecoder::Central(state) => Ok(state.q.scale(1.0 / state.beta)),
            PreparedPrecoder::Local(states) => {
                let blocks: Vec<CMatrix> =
                    states.iter().map(|st| st.q.scale(1.0 / st.beta)).collect();
                Ok(CMatrix::vconcat(&blocks)?)
            }
            PreparedPrecoder::Mrt { gain } => Ok(h.hermitian().scale(*gain)),
        }
    }
}

/// How the UE scales its received sample before hard detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxScaleMode {
    /// The precoding factor `beta` of the centralized Wiener filter; valid
    /// for the centralized and partially decentralized paths.
    WfBeta,
    /// The scalar minimizing `E||s - beta * y||^2` given full knowledge of
    /// the effective channel `M = H P` and the noise variance.
    GenieMmse,
}

/// UE-side receive scale for a prepared precoder.
///
/// `GenieMmse` evaluates `beta* = es * Re tr(M) / (es ||M||_F^2 + U n0)`
/// with `M = H P`, which is the closed-form minimizer of the mean-square
/// error over real scalars.
pub fn effective_rx_scale(
    h: &CMatrix,
    prepared: &PreparedPrecoder,
    cfg: &PrecoderConfig,
    mode: RxScaleMode,
) -> Result<f64, PrecodingError> {
    match mode {
        RxScaleMode::WfBeta => match prepared {
            PreparedPrecoder::Central(state) => Ok(state.beta),
            _ => Err(PrecodingError::UnsupportedScaleMode { mode: "wf_beta" }),
        },
        RxScaleMode::GenieMmse => {
            let p = prepared.composite_matrix(h)?;
            let m = h.mul(&p)?;
            let frob_sq = m.frobenius_norm_sq();
            if !(frob_sq > 0.0) {
                return Err(PrecodingError::ZeroReceivedPower);
            }
            let mut trace = Complex64::ZERO;
            for i in 0..m.rows() {
                trace += m.at(i, i);
            }
            Ok(cfg.es * trace.re / (cfg.es * frob_sq + cfg.users as f64 * cfg.n0))
        }
    }
}

/// Closed-form mean-square error `E||s - beta y||^2` for `y = H P s + n`:
/// `es * ||I - beta M||_F^2 + beta^2 U n0` with `M = H P`.
pub fn expected_mse(
    h: &CMatrix,
    p: &CMatrix,
    cfg: &PrecoderConfig,
    beta: f64,
) -> Result<f64, PrecodingError> {
    let m = h.mul(p)?;
    let deviation = CMatrix::identity(cfg.users).sub(&m.scale(beta))?;
    Ok(cfg.es * deviation.frobenius_norm_sq() + beta * beta * cfg.users as f64 * cfg.n0)
}

/// Selectable precoder algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precoder {
    CentralWf,
    Zf,
    Mrt,
    PdWf,
    FdWf,
}

impl Precoder {
    pub const ALL: [Precoder; 5] = [
        Precoder::CentralWf,
        Precoder::Zf,
        Precoder::Mrt,
        Precoder::PdWf,
        Precoder::FdWf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Precoder::CentralWf => "central-wf",
            Precoder::Zf => "zf",
            Precoder::Mrt => "mrt",
            Precoder::PdWf => "pd-wf",
            Precoder::FdWf => "fd-wf",
        }
    }

    /// True for precoders that assemble the full Gram at one node and
    /// therefore require `B >= U`.
    pub fn needs_central_prepare(&self) -> bool {
        matches!(self, Precoder::CentralWf | Precoder::Zf | Precoder::PdWf)
    }
}

impl std::fmt::Display for Precoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Precoder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "central-wf" | "wf" => Ok(Precoder::CentralWf),
            "zf" => Ok(Precoder::Zf),
            "mrt" => Ok(Precoder::Mrt),
            "pd-wf" => Ok(Precoder::PdWf),
            "fd-wf" => Ok(Precoder::FdWf),
            other => Err(format!(
                "unknown precoder `{other}` (expected one of central-wf, zf, mrt, pd-wf, fd-wf)"
            )),
        }
    }
}
