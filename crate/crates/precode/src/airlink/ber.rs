//! Monte-Carlo uncoded BER measurement.
//!
//! Each trial draws one narrowband channel realization, precodes a frame of
//! `slots_per_trial` transmit vectors with the selected algorithm (routing
//! the decentralized ones through the cluster fabric), superimposes the
//! per-cluster signals, adds noise, scales at the UE, and hard-decides.
//! Trials are keyed to RNG substreams by `(snr index, trial)`, so every
//! precoder sees the same channels, bits, and noise under a shared seed, and
//! parallel execution is bit-identical to sequential execution.

use serde::Serialize;

use crate::fabric::{
    run_fd_wf, run_pd_wf, superpose, BroadcastTopology, ClusterPartition, MessageLedger,
    WorkloadShape,
};
use crate::numerics::{CMatrix, CVector};
use crate::precoding::{
    effective_rx_scale, mrt_gain, mrt_precode, wf_precode, wf_prepare, zf_prepare, Precoder,
    PrecoderConfig, PreparedPrecoder, RxScaleMode,
};
use crate::{map_indexed, ExecMode};

use super::channel::{awgn, rayleigh_channel, trial_rng};
use super::{AirlinkError, Constellation, SymbolFrame};

/// Uncoded BER at one SNR point, with the configuration echoed for
/// self-contained reporting.
#[derive(Debug, Clone, Serialize)]
pub struct BerReport {
    pub precoder: Precoder,
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub users: usize,
    pub bs_antennas: usize,
    pub clusters: usize,
    pub qam_order: usize,
    pub tau: f64,
    pub seed: u64,
}

fn validate(
    precoder: Precoder,
    cfg: &PrecoderConfig,
    part: &ClusterPartition,
    constellation: &Constellation,
    trials: u64,
    slots_per_trial: usize,
) -> Result<(), AirlinkError> {
    if trials == 0 || slots_per_trial == 0 {
        return Err(AirlinkError::InvalidConfig(
            "need at least one trial and one slot per trial".into(),
        ));
    }
    if part.total_antennas() != cfg.bs_antennas {
        return Err(AirlinkError::InvalidConfig(format!(
            "partition covers {} antennas, config says {}",
            part.total_antennas(),
            cfg.bs_antennas
        )));
    }
    if precoder.needs_central_prepare() && cfg.bs_antennas < cfg.users {
        return Err(AirlinkError::InvalidConfig(format!(
            "{precoder} needs B >= U, got B={} U={}",
            cfg.bs_antennas, cfg.users
        )));
    }
    if (constellation.symbol_energy() - cfg.es).abs() > 1e-9 * cfg.es {
        return Err(AirlinkError::InvalidConfig(format!(
            "constellation energy {} does not match config es {}",
            constellation.symbol_energy(),
            cfg.es
        )));
    }
    Ok(())
}

/// SNR is defined as total transmit power over per-entry noise variance:
/// `snr = rho2 / n0`, swept in dB.
fn n0_for_snr_db(cfg: &PrecoderConfig, snr_db: f64) -> f64 {
    cfg.rho2 * 10f64.powf(-snr_db / 10.0)
}

/// One channel realization: returns `(bit_errors, bits)` over the frame.
fn simulate_trial(
    precoder: Precoder,
    cfg: &PrecoderConfig,
    part: &ClusterPartition,
    constellation: &Constellation,
    snr_index: u32,
    trial: u64,
    seed: u64,
    slots_per_trial: usize,
) -> Result<(u64, u64), AirlinkError> {
    let mut rng = trial_rng(seed, snr_index, trial);
    let h = rayleigh_channel(cfg.users, cfg.bs_antennas, &mut rng);
    let shape = WorkloadShape::new(1, slots_per_trial).expect("validated");
    let frame = SymbolFrame::random(shape, cfg.users, constellation, &mut rng);

    // Noiseless received vectors and the UE-side scale for this precoder.
    let (received, scale): (Vec<CVector>, f64) = match precoder {
        Precoder::CentralWf | Precoder::Zf => {
            let state = if precoder == Precoder::CentralWf {
                wf_prepare(&h, cfg)?
            } else {
                zf_prepare(&h, cfg)?
            };
            let received = frame
                .symbols
                .iter()
                .map(|s| Ok(h.matvec(&wf_precode(&state, s)?)?))
                .collect::<Result<Vec<_>, AirlinkError>>()?;
            (received, state.beta)
        }
        Precoder::Mrt => {
            let gain = mrt_gain(&h, cfg)?;
            let received = frame
                .symbols
                .iter()
                .map(|s| Ok(h.matvec(&mrt_precode(&h, cfg, s)?)?))
                .collect::<Result<Vec<_>, AirlinkError>>()?;
            let scale = effective_rx_scale(
                &h,
                &PreparedPrecoder::Mrt { gain },
                cfg,
                RxScaleMode::GenieMmse,
            )?;
            (received, scale)
        }
        Precoder::PdWf => {
            let mut ledger = MessageLedger::new();
            let run = run_pd_wf(
                &h,
                part,
                cfg,
                &frame,
                &mut ledger,
                ExecMode::Sequential,
                BroadcastTopology::Star,
            )?;
            let shards = crate::fabric::partition_channel(&h, part)?;
            (superpose(&run.outputs, &shards)?, run.beta)
        }
        Precoder::FdWf => {
            let mut ledger = MessageLedger::new();
            let run = run_fd_wf(
                &h,
                part,
                cfg,
                &frame,
                &mut ledger,
                ExecMode::Sequential,
                BroadcastTopology::Star,
            )?;
            let shards = crate::fabric::partition_channel(&h, part)?;
            let received = superpose(&run.outputs, &shards)?;
            let scale = effective_rx_scale(
                &h,
                &PreparedPrecoder::Local(run.states),
                cfg,
                RxScaleMode::GenieMmse,
            )?;
            (received, scale)
        }
    };

    let bps = constellation.bits_per_symbol() as u64;
    let mut bit_errors = 0u64;
    for (v, y0) in received.iter().enumerate() {
        let y = awgn(y0, cfg.n0, &mut rng);
        for u in 0..cfg.users {
            let detected = constellation.detect(y.at(u) * scale);
            let sent = frame.indices[v * cfg.users + u] as usize;
            let diff = constellation.label(detected) ^ constellation.label(sent);
            bit_errors += diff.count_ones() as u64;
        }
    }
    let bits = slots_per_trial as u64 * cfg.users as u64 * bps;
    Ok((bit_errors, bits))
}

/// Measures uncoded BER at a single SNR point over `trials` channel
/// realizations. `snr_index` keys the RNG substreams and must differ across
/// the points of one sweep.
#[allow(clippy::too_many_arguments)]
pub fn measure_ber_point(
    precoder: Precoder,
    cfg: &PrecoderConfig,
    part: &ClusterPartition,
    constellation: &Constellation,
    snr_db: f64,
    snr_index: u32,
    trials: u64,
    slots_per_trial: usize,
    seed: u64,
    exec: ExecMode,
) -> Result<BerReport, AirlinkError> {
    validate(precoder, cfg, part, constellation, trials, slots_per_trial)?;
    let point_cfg = cfg.with_n0(n0_for_snr_db(cfg, snr_db));
    let outcomes = map_indexed(trials as usize, exec, |t| {
        simulate_trial(
            precoder,
            &point_cfg,
            part,
            constellation,
            snr_index,
            t as u64,
            seed,
            slots_per_trial,
        )
    });
    let mut bit_errors = 0u64;
    let mut bits_total = 0u64;
    for outcome in outcomes {
        let (errors, bits) = outcome?;
        bit_errors += errors;
        bits_total += bits;
    }
    Ok(BerReport {
        precoder,
        snr_db,
        trials,
        bit_errors,
        bits_total,
        ber: bit_errors as f64 / bits_total as f64,
        users: cfg.users,
        bs_antennas: cfg.bs_antennas,
        clusters: part.num_clusters(),
        qam_order: constellation.order(),
        tau: cfg.tau,
        seed,
    })
}

/// Sweeps uncoded BER over an SNR grid (dB).
#[allow(clippy::too_many_arguments)]
pub fn measure_ber(
    precoder: Precoder,
    cfg: &PrecoderConfig,
    part: &ClusterPartition,
    constellation: &Constellation,
    snr_grid_db: &[f64],
    trials: u64,
    slots_per_trial: usize,
    seed: u64,
    exec: ExecMode,
) -> Result<Vec<BerReport>, AirlinkError> {
    snr_grid_db
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            measure_ber_point(
                precoder,
                cfg,
                part,
                constellation,
                snr_db,
                i as u32,
                trials,
                slots_per_trial,
                seed,
                exec,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_cfg(users: usize, antennas: usize) -> PrecoderConfig {
        PrecoderConfig::new(users, antennas, 0.1, 1.0, 1.0, 0.125).unwrap()
    }

    #[test]
    fn noiseless_wf_is_error_free() {
        // High SNR, B much larger than U: every bit must come back clean.
        let cfg = base_cfg(4, 64);
        let part = ClusterPartition::equal_split(64, 1).unwrap();
        let constellation = Constellation::qam(64, 1.0).unwrap();
        let report = measure_ber_point(
            Precoder::CentralWf,
            &cfg,
            &part,
            &constellation,
            120.0,
            0,
            20,
            7,
            99,
            ExecMode::Sequential,
        )
        .unwrap();
        assert_eq!(report.bit_errors, 0);
        assert_eq!(report.bits_total, 20 * 7 * 4 * 6);
    }

    #[test]
    fn pure_noise_ber_is_one_half() {
        let cfg = base_cfg(4, 16);
        let part = ClusterPartition::equal_split(16, 1).unwrap();
        let constellation = Constellation::qam(64, 1.0).unwrap();
        let report = measure_ber_point(
            Precoder::CentralWf,
            &cfg,
            &part,
            &constellation,
            -60.0,
            0,
            700,
            7,
            5,
            ExecMode::Sequential,
        )
        .unwrap();
        assert!(report.bits_total >= 100_000);
        assert!(
            (report.ber - 0.5).abs() <= 0.02,
            "pure-noise BER {}",
            report.ber
        );
    }

    #[test]
    fn parallel_equals_sequential() {
        let cfg = base_cfg(4, 32);
        let part = ClusterPartition::equal_split(32, 4).unwrap();
        let constellation = Constellation::qam(16, 1.0).unwrap();
        for precoder in [Precoder::CentralWf, Precoder::PdWf, Precoder::FdWf] {
            let seq = measure_ber_point(
                precoder,
                &cfg,
                &part,
                &constellation,
                10.0,
                2,
                50,
                3,
                1234,
                ExecMode::Sequential,
            )
            .unwrap();
            let par = measure_ber_point(
                precoder,
                &cfg,
                &part,
                &constellation,
                10.0,
                2,
                50,
                3,
                1234,
                ExecMode::Parallel,
            )
            .unwrap();
            assert_eq!(seq.bit_errors, par.bit_errors);
            assert_eq!(seq.bits_total, par.bits_total);
        }
    }

    #[test]
    fn pd_with_wide_channel_is_rejected() {
        let cfg = base_cfg(8, 4);
        let part = ClusterPartition::equal_split(4, 2).unwrap();
        let constellation = Constellation::qam(16, 1.0).unwrap();
        assert!(matches!(
            measure_ber_point(
                Precoder::PdWf,
                &cfg,
                &part,
                &constellation,
                10.0,
                0,
                10,
                2,
                1,
                ExecMode::Sequential,
            ),
            Err(AirlinkError::InvalidConfig(_))
        ));
    }

    #[test]
    fn mismatched_constellation_energy_is_rejected() {
        let cfg = base_cfg(4, 16);
        let part = ClusterPartition::equal_split(16, 2).unwrap();
        let constellation = Constellation::qam(16, 2.0).unwrap();
        assert!(measure_ber_point(
            Precoder::CentralWf,
            &cfg,
            &part,
            &constellation,
            10.0,
            0,
            10,
            2,
            1,
            ExecMode::Sequential,
        )
        .is_err());
    }
}
