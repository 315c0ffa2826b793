//! End-to-end execution of the partially and fully decentralized precoders
//! over the cluster fabric.
//!
//! Both pipelines run in two modes. `ExecMode::Sequential` executes every
//! worker step inline in plan order. `ExecMode::Parallel` spawns one worker
//! thread per cluster that communicates exclusively over channels along the
//! declared tree/star edges. Per-node accumulation order is fixed by the
//! reduce plan, so the two modes produce bit-identical outputs and ledgers.

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use crate::airlink::SymbolFrame;
use crate::numerics::{gram, CMatrix, CVector};
use crate::precoding::{
    fd_precode, fd_prepare, whiten_with, whitener_from_gram, LocalWfState, PrecoderConfig,
    PrecodingError,
};
use crate::ExecMode;

use super::{
    broadcast_edges, partition_channel, reduce_plan, BroadcastTopology, ClusterOutputs,
    ClusterPartition, Endpoint, FabricError, MessageLedger, PayloadKind,
};

/// Result of a partially decentralized run: per-cluster outputs plus the
/// precoding factor computed at the whitening node (the receive scale for
/// this architecture).
#[derive(Debug, Clone)]
pub struct PdWfRun {
    pub outputs: ClusterOutputs,
    pub beta: f64,
}

/// Result of a fully decentralized run: per-cluster outputs plus the
/// prepared local states, ordered by cluster.
#[derive(Debug, Clone)]
pub struct FdWfRun {
    pub outputs: ClusterOutputs,
    pub states: Vec<LocalWfState>,
}

fn validate_inputs(
    h: &CMatrix,
    part: &ClusterPartition,
    cfg: &PrecoderConfig,
    frame: &SymbolFrame,
) -> Result<Vec<CMatrix>, FabricError> {
    if h.rows() != cfg.users || h.cols() != cfg.bs_antennas {
        return Err(FabricError::InputMismatch(format!(
            "channel is {}x{}, config says {}x{}",
            h.rows(),
            h.cols(),
            cfg.users,
            cfg.bs_antennas
        )));
    }
    if frame.symbols.len() != frame.shape.vectors_per_frame() {
        return Err(FabricError::InputMismatch(format!(
            "frame carries {} vectors for shape {}x{}",
            frame.symbols.len(),
            frame.shape.n_subcarriers,
            frame.shape.n_slots
        )));
    }
    if frame.symbols.iter().any(|s| s.len() != cfg.users) {
        return Err(FabricError::InputMismatch(format!(
            "every transmit vector must have {} entries",
            cfg.users
        )));
    }
    partition_channel(h, part)
}

fn record_broadcast_and_local(
    ledger: &mut MessageLedger,
    part: &ClusterPartition,
    frame: &SymbolFrame,
    users: usize,
    kind: PayloadKind,
    topology: BroadcastTopology,
) {
    let vectors = frame.shape.vectors_per_frame() as u64;
    for (src, dst, depth) in broadcast_edges(part.num_clusters(), topology) {
        ledger.record(
            Endpoint::Cluster(src),
            Endpoint::Cluster(dst),
            kind,
            vectors * users as u64,
            depth,
        );
    }
    for (c, &b_c) in part.sizes().iter().enumerate() {
        ledger.record(
            Endpoint::Cluster(c),
            Endpoint::Rf(c),
            PayloadKind::LocalOut,
            vectors * b_c as u64,
            0,
        );
    }
}

/// Runs the partially decentralized Wiener filter over one frame:
/// per-cluster Grams, adder-tree reduction, central whitening, broadcast of
/// the whitened vectors, and per-cluster matched filters. The stacked
/// outputs equal the centralized precoder's output.
pub fn run_pd_wf(
    h: &CMatrix,
    part: &ClusterPartition,
    cfg: &PrecoderConfig,
    frame: &SymbolFrame,
    ledger: &mut MessageLedger,
    exec: ExecMode,
    topology: BroadcastTopology,
) -> Result<PdWfRun, FabricError> {
    if h.cols() < h.rows() {
        return Err(FabricError::InputMismatch(format!(
            "partially decentralized run needs B >= U, got B={} U={}",
            h.cols(),
            h.rows()
        )));
    }
    let shards = validate_inputs(h, part, cfg, frame)?;
    let (per_cluster, beta) = match exec {
        ExecMode::Sequential => pd_sequential(&shards, cfg, &frame.symbols)?,
        ExecMode::Parallel => pd_threaded(&shards, cfg, &frame.symbols)?,
    };

    let users = cfg.users;
    let n_sc = frame.shape.n_subcarriers as u64;
    for step in reduce_plan(part.num_clusters()) {
        ledger.record(
            Endpoint::Cluster(step.src),
            Endpoint::Cluster(step.dst),
            PayloadKind::GramPartial,
            n_sc * (users * users) as u64,
            step.level,
        );
    }
    record_broadcast_and_local(ledger, part, frame, users, PayloadKind::WhitenedVec, topology);

    Ok(PdWfRun {
        outputs: ClusterOutputs {
            shape: frame.shape,
            per_cluster,
        },
        beta,
    })
}

fn pd_sequential(
    shards: &[CMatrix],
    cfg: &PrecoderConfig,
    symbols: &[CVector],
) -> Result<(Vec<Vec<CVector>>, f64), FabricError> {
    let mut acc: Vec<CMatrix> = shards
        .iter()
        .map(|shard| gram(shard).expect("shards validated nonempty"))
        .collect();
    for step in reduce_plan(shards.len()) {
        let partial = acc[step.src].clone();
        acc[step.dst] = acc[step.dst].add(&partial)?;
    }
    let (_, a_inv, beta) = whitener_from_gram(&acc[0], cfg)?;
    let whitened: Vec<CVector> = symbols
        .iter()
        .map(|s| whiten_with(&a_inv, beta, s).expect("symbol dims validated"))
        .collect();
    let per_cluster = shards
        .iter()
        .map(|shard| {
            let filter = shard.hermitian();
            whitened
                .iter()
                .map(|z| filter.matvec(z).expect("whitened dims validated"))
                .collect()
        })
        .collect();
    Ok((per_cluster, beta))
}

/// Payload of a broadcast edge: the whitened frame plus the precoding
/// factor, or `None` when the whitening node failed.
type ZMsg = Option<(Arc<Vec<CVector>>, f64)>;

enum PdMsg {
    Done {
        cluster: usize,
        outputs: Vec<CVector>,
        beta: Option<f64>,
    },
    Failed {
        cluster: usize,
        error: PrecodingError,
    },
    Aborted,
}

struct PdWorkerIo {
    gram_in: Vec<mpsc::Receiver<CMatrix>>,
    gram_out: Option<mpsc::Sender<CMatrix>>,
    z_in: Option<mpsc::Receiver<ZMsg>>,
    z_out: Vec<mpsc::Sender<ZMsg>>,
}

fn pd_threaded(
    shards: &[CMatrix],
    cfg: &PrecoderConfig,
    symbols: &[CVector],
) -> Result<(Vec<Vec<CVector>>, f64), FabricError> {
    let clusters = shards.len();
    let mut ios: Vec<PdWorkerIo> = (0..clusters)
        .map(|_| PdWorkerIo {
            gram_in: Vec::new(),
            gram_out: None,
            z_in: None,
            z_out: Vec::new(),
        })
        .collect();
    // Reduce-plan order is ascending in level, so each node's inbound list
    // is already sorted the way the sequential mode accumulates.
    for step in reduce_plan(clusters) {
        let (tx, rx) = mpsc::channel();
        ios[step.src].gram_out = Some(tx);
        ios[step.dst].gram_in.push(rx);
    }
    // Data delivery reuses the reduction tree in reverse; only the ledger
    // distinguishes star from tree accounting.
    for (src, dst, _) in broadcast_edges(clusters, BroadcastTopology::Tree) {
        let (tx, rx) = mpsc::channel();
        ios[src].z_out.push(tx);
        ios[dst].z_in = Some(rx);
    }

    let (result_tx, result_rx) = mpsc::channel();
    thread::scope(|scope| {
        for (cluster, io) in ios.into_iter().enumerate() {
            let results = result_tx.clone();
            let shard = &shards[cluster];
            scope.spawn(move || pd_worker(cluster, io, shard, cfg, symbols, results));
        }
        drop(result_tx);
        collect_pd_results(clusters, result_rx)
    })
}

fn pd_worker(
    cluster: usize,
    io: PdWorkerIo,
    shard: &CMatrix,
    cfg: &PrecoderConfig,
    symbols: &[CVector],
    results: mpsc::Sender<PdMsg>,
) {
    let mut acc = gram(shard).expect("shards validated nonempty");
    for rx in &io.gram_in {
        let partial = rx.recv().expect("gram sender dropped");
        acc = acc.add(&partial).expect("gram dims validated");
    }
    let whitened: Arc<Vec<CVector>>;
    let mut beta_out = None;
    if cluster == 0 {
        match whitener_from_gram(&acc, cfg) {
            Ok((_, a_inv, beta)) => {
                let z: Vec<CVector> = symbols
                    .iter()
                    .map(|s| whiten_with(&a_inv, beta, s).expect("symbol dims validated"))
                    .collect();
                whitened = Arc::new(z);
                beta_out = Some(beta);
                for tx in &io.z_out {
                    let _ = tx.send(Some((whitened.clone(), beta)));
                }
            }
            Err(error) => {
                for tx in &io.z_out {
                    let _ = tx.send(None);
                }
                let _ = results.send(PdMsg::Failed { cluster, error });
                return;
            }
        }
    } else {
        io.gram_out
            .expect("non-master cluster has a tree parent")
            .send(acc)
            .expect("gram receiver dropped");
        let msg = io
            .z_in
            .expect("non-master cluster has a broadcast parent")
            .recv()
            .expect("broadcast sender dropped");
        match msg {
            Some((z, beta)) => {
                for tx in &io.z_out {
                    let _ = tx.send(Some((z.clone(), beta)));
                }
                whitened = z;
            }
            None => {
                for tx in &io.z_out {
                    let _ = tx.send(None);
                }
                let _ = results.send(PdMsg::Aborted);
                return;
            }
        }
    }
    let filter = shard.hermitian();
    let outputs = whitened
        .iter()
        .map(|z| filter.matvec(z).expect("whitened dims validated"))
        .collect();
    let _ = results.send(PdMsg::Done {
        cluster,
        outputs,
        beta: beta_out,
    });
}

fn collect_pd_results(
    clusters: usize,
    rx: mpsc::Receiver<PdMsg>,
) -> Result<(Vec<Vec<CVector>>, f64), FabricError> {
    let mut slots: Vec<Option<Vec<CVector>>> = (0..clusters).map(|_| None).collect();
    let mut beta = None;
    let mut failure: Option<PrecodingError> = None;
    for _ in 0..clusters {
        match rx.recv().expect("worker panicked") {
            PdMsg::Done {
                cluster,
                outputs,
                beta: b,
            } => {
                slots[cluster] = Some(outputs);
                if b.is_some() {
                    beta = b;
                }
            }
            PdMsg::Failed { error, .. } => failure = Some(error),
            PdMsg::Aborted => {}
        }
    }
    if let Some(error) = failure {
        return Err(error.into());
    }
    let per_cluster = slots
        .into_iter()
        .map(|s| s.expect("every cluster reported"))
        .collect();
    Ok((per_cluster, beta.expect("master reported beta")))
}

/// Runs the fully decentralized Wiener filter over one frame: the transmit
/// vectors are broadcast to every cluster, which then prepares and applies
/// its local precoder under the equal power split. No Gram traffic occurs.
pub fn run_fd_wf(
    h: &CMatrix,
    part: &ClusterPartition,
    cfg: &PrecoderConfig,
    frame: &SymbolFrame,
    ledger: &mut MessageLedger,
    exec: ExecMode,
    topology: BroadcastTopology,
) -> Result<FdWfRun, FabricError> {
    let shards = validate_inputs(h, part, cfg, frame)?;
    let (per_cluster, states) = match exec {
        ExecMode::Sequential => fd_sequential(&shards, cfg, &frame.symbols)?,
        ExecMode::Parallel => fd_threaded(&shards, cfg, &frame.symbols)?,
    };
    record_broadcast_and_local(ledger, part, frame, cfg.users, PayloadKind::SymbolVec, topology);
    Ok(FdWfRun {
        outputs: ClusterOutputs {
            shape: frame.shape,
            per_cluster,
        },
        states,
    })
}

type FdCluster = (Vec<CVector>, LocalWfState);

fn fd_sequential(
    shards: &[CMatrix],
    cfg: &PrecoderConfig,
    symbols: &[CVector],
) -> Result<(Vec<Vec<CVector>>, Vec<LocalWfState>), FabricError> {
    let clusters = shards.len();
    let mut outputs = Vec::with_capacity(clusters);
    let mut states = Vec::with_capacity(clusters);
    for (cluster, shard) in shards.iter().enumerate() {
        let (outs, state) = fd_cluster_work(cluster, clusters, shard, cfg, symbols)?;
        outputs.push(outs);
        states.push(state);
    }
    Ok((outputs, states))
}

fn fd_cluster_work(
    cluster: usize,
    clusters: usize,
    shard: &CMatrix,
    cfg: &PrecoderConfig,
    symbols: &[CVector],
) -> Result<FdCluster, PrecodingError> {
    let state = fd_prepare(shard, cfg, clusters, cluster)?;
    let outs = symbols
        .iter()
        .map(|s| fd_precode(&state, s).expect("symbol dims validated"))
        .collect();
    Ok((outs, state))
}

enum FdMsg {
    Done {
        cluster: usize,
        outputs: Vec<CVector>,
        state: LocalWfState,
    },
    Failed {
        cluster: usize,
        error: PrecodingError,
    },
}

fn fd_threaded(
    shards: &[CMatrix],
    cfg: &PrecoderConfig,
    symbols: &[CVector],
) -> Result<(Vec<Vec<CVector>>, Vec<LocalWfState>), FabricError> {
    let clusters = shards.len();
    let mut s_in: Vec<Option<mpsc::Receiver<Arc<Vec<CVector>>>>> =
        (0..clusters).map(|_| None).collect();
    let mut s_out: Vec<Vec<mpsc::Sender<Arc<Vec<CVector>>>>> =
        (0..clusters).map(|_| Vec::new()).collect();
    for (src, dst, _) in broadcast_edges(clusters, BroadcastTopology::Tree) {
        let (tx, rx) = mpsc::channel();
        s_out[src].push(tx);
        s_in[dst] = Some(rx);
    }

    let (result_tx, result_rx) = mpsc::channel();
    thread::scope(|scope| {
        for (cluster, (rx, txs)) in s_in.into_iter().zip(s_out.into_iter()).enumerate() {
            let results = result_tx.clone();
            let shard = &shards[cluster];
            scope.spawn(move || {
                let frame: Arc<Vec<CVector>> = match rx {
                    None => Arc::new(symbols.to_vec()),
                    Some(rx) => rx.recv().expect("broadcast sender dropped"),
                };
                for tx in &txs {
                    let _ = tx.send(frame.clone());
                }
                let msg = match fd_cluster_work(cluster, clusters, shard, cfg, &frame) {
                    Ok((outputs, state)) => FdMsg::Done {
                        cluster,
                        outputs,
                        state,
                    },
                    Err(error) => FdMsg::Failed { cluster, error },
                };
                let _ = results.send(msg);
            });
        }
        drop(result_tx);

        let mut slots: Vec<Option<FdCluster>> = (0..clusters).map(|_| None).collect();
        let mut failures: Vec<(usize, PrecodingError)> = Vec::new();
        for _ in 0..clusters {
            match result_rx.recv().expect("worker panicked") {
                FdMsg::Done {
                    cluster,
                    outputs,
                    state,
                } => slots[cluster] = Some((outputs, state)),
                FdMsg::Failed { cluster, error } => failures.push((cluster, error)),
            }
        }
        if !failures.is_empty() {
            // Deterministic error selection: lowest cluster id, matching the
            // sequential mode's first failure.
            failures.sort_by_key(|(cluster, _)| *cluster);
            return Err(failures.remove(0).1.into());
        }
        let mut outputs = Vec::with_capacity(clusters);
        let mut states = Vec::with_capacity(clusters);
        for slot in slots {
            let (outs, state) = slot.expect("every cluster reported");
            outputs.push(outs);
            states.push(state);
        }
        Ok((outputs, states))
    })
}
