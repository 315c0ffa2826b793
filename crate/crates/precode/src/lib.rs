//! Linear Wiener-filter precoding for the massive MU-MIMO downlink, in
//! centralized and decentralized (feedforward) forms.
//!
//! A base station with `B` antennas serves `U` single-antenna users through a
//! flat-fading channel `H` (`U x B`). The library implements:
//!
//! - [`numerics`] — dense complex-matrix kernels: Gram products, Hermitian
//!   positive-definite inversion, trace/Frobenius reductions, and the
//!   matrix-inversion-lemma / Searle-trace identities used everywhere else.
//! - [`precoding`] — the precoder algorithms: centralized Wiener filter (WF)
//!   with the fast precoding-factor computation, zero forcing, maximum ratio
//!   transmission, the partially decentralized whitening + matched-filter
//!   split, and the fully decentralized per-cluster WF.
//! - [`fabric`] — a deterministic simulation of the multi-cluster feedforward
//!   architecture: antenna-array partitioning, Gram reduction over an adder
//!   tree, vector broadcasts, and an exact ledger of complex scalars moved
//!   per link.
//! - [`airlink`] — link-level simulation: Rayleigh channels, Gray-mapped QAM,
//!   AWGN, UE-side scaling, hard-decision detection, and Monte-Carlo BER
//!   measurement.
//! - [`harness`] — experiment specs, presets, sweep execution, and CSV/JSON
//!   emission (consumed by the `precode-sim` binary).
//!
//! Monte-Carlo trials are embarrassingly parallel; with the default `parallel`
//! feature they run on a rayon pool. Every trial owns its own RNG substream,
//! so sequential and parallel execution produce bit-identical results.

pub mod airlink;
pub mod fabric;
pub mod harness;
pub mod numerics;
pub mod precoding;

/// How data-parallel sections execute.
///
/// `Parallel` uses rayon when the `parallel` feature is enabled and silently
/// degrades to the sequential path otherwise; outputs are bit-identical in
/// all cases, so the mode only affects wall-clock time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl std::str::FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" | "serial" => Ok(ExecMode::Sequential),
            "parallel" => Ok(ExecMode::Parallel),
            other => Err(format!(
                "unknown execution mode `{other}` (expected `sequential` or `parallel`)"
            )),
        }
    }
}

impl std::fmt::Display for ExecMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExecMode::Sequential => write!(f, "sequential"),
            ExecMode::Parallel => write!(f, "parallel"),
        }
    }
}

/// Evaluates `f(0), .., f(n-1)` and collects the results in index order.
pub(crate) fn map_indexed<T, F>(n: usize, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => par_map(n, f),
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
