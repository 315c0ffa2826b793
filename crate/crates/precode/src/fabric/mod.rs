//! Simulation of the feedforward multi-cluster fabric.
//!
//! The antenna array is partitioned into `C` clusters, each owning a column
//! block of the channel and its own compute worker. Partial Gram matrices
//! flow up a balanced binary adder tree to the master (cluster 0, which
//! co-hosts the whitening node); whitened or raw transmit vectors flow back
//! out over a star (or optional tree) broadcast. Every inter-cluster message
//! is tallied in a [`MessageLedger`] as an exact count of complex scalars.
//!
//! Execution is deterministic: workers only touch disjoint shards, the
//! reduction order is fixed by the tree structure, and the threaded mode
//! produces bit-identical outputs and ledgers to the sequential mode.

mod run;

pub use run::{run_fd_wf, run_pd_wf, FdWfRun, PdWfRun};

use serde::Serialize;
use std::fmt;
use std::io::Write;

use crate::numerics::{CMatrix, CVector, NumericsError};
use crate::precoding::PrecodingError;
use thiserror::Error;

/// Errors raised by fabric operations.
#[derive(Debug, Error)]
pub enum FabricError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid workload shape: {0}")]
    InvalidShape(String),
    #[error("fabric input mismatch: {0}")]
    InputMismatch(String),
    #[error(transparent)]
    Precoding(#[from] PrecodingError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Partition of `B` BS antennas into `C` contiguous clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl ClusterPartition {
    /// Builds a partition from explicit per-cluster antenna counts.
    pub fn from_sizes(sizes: Vec<usize>) -> Result<Self, FabricError> {
        if sizes.is_empty() {
            return Err(FabricError::InvalidPartition(
                "need at least one cluster".into(),
            ));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(FabricError::InvalidPartition(
                "every cluster needs at least one antenna".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        Ok(Self { sizes, offsets })
    }

    /// Equal split of `antennas` into `clusters` clusters.
    pub fn equal_split(antennas: usize, clusters: usize) -> Result<Self, FabricError> {
        if clusters == 0 || antennas == 0 {
            return Err(FabricError::InvalidPartition(
                "antennas and clusters must be at least 1".into(),
            ));
        }
        if antennas % clusters != 0 {
            return Err(FabricError::InvalidPartition(format!(
                "{antennas} antennas do not split evenly into {clusters} clusters; \
                 pass explicit cluster sizes instead"
            )));
        }
        Self::from_sizes(vec![antennas / clusters; clusters])
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_antennas(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Fraction of the array owned by cluster `c`.
    pub fn weight(&self, c: usize) -> f64 {
        self.sizes[c] as f64 / self.total_antennas() as f64
    }
}

/// Batched workload dimensions: the channel stays constant over
/// `n_subcarriers` independent narrowband systems for `n_slots` time slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WorkloadShape {
    pub n_subcarriers: usize,
    pub n_slots: usize,
}

impl WorkloadShape {
    pub fn new(n_subcarriers: usize, n_slots: usize) -> Result<Self, FabricError> {
        if n_subcarriers == 0 || n_slots == 0 {
            return Err(FabricError::InvalidShape(format!(
                "need at least one subcarrier and one slot (got {n_subcarriers} x {n_slots})"
            )));
        }
        Ok(Self {
            n_subcarriers,
            n_slots,
        })
    }

    /// Transmit vectors per frame.
    pub fn vectors_per_frame(&self) -> usize {
        self.n_subcarriers * self.n_slots
    }
}

/// What a message carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    /// Partial Gram matrix moving up the adder tree (`U*U` scalars per
    /// subcarrier).
    GramPartial,
    /// Whitened transmit vectors broadcast to the clusters.
    WhitenedVec,
    /// Raw transmit vectors broadcast to the clusters.
    SymbolVec,
    /// Precoded output handed from a worker to its own RF front end; not
    /// inter-cluster traffic.
    LocalOut,
}

impl PayloadKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PayloadKind::GramPartial => "gram_partial",
            PayloadKind::WhitenedVec => "whitened_vec",
            PayloadKind::SymbolVec => "symbol_vec",
            PayloadKind::LocalOut => "local_out",
        }
    }
}

/// A node that can source or sink messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Cluster(usize),
    /// RF front end attached to a cluster.
    Rf(usize),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Cluster(c) => write!(f, "cluster{c}"),
            Endpoint::Rf(c) => write!(f, "rf{c}"),
        }
    }
}

/// One ledger entry: an aggregated per-link message count for a frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageRecord {
    pub source: Endpoint,
    pub destination: Endpoint,
    pub payload_kind: PayloadKind,
    pub complex_scalars: u64,
    pub hop_depth: u32,
}

/// Exact account of complex scalars moved per link.
///
/// Counts are integers by construction; wire bytes are reported at 8 bytes
/// per complex scalar (the interconnect moves single-precision complex
/// values even though the simulation computes in double precision).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageLedger {
    records: Vec<MessageRecord>,
}

impl MessageLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &mut self,
        source: Endpoint,
        destination: Endpoint,
        payload_kind: PayloadKind,
        complex_scalars: u64,
        hop_depth: u32,
    ) {
        self.records.push(MessageRecord {
            source,
            destination,
            payload_kind,
            complex_scalars,
            hop_depth,
        });
    }

    pub fn records(&self) -> &[MessageRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Total complex scalars carried by messages of one payload kind.
    pub fn total_scalars(&self, kind: PayloadKind) -> u64 {
        self.records
            .iter()
            .filter(|r| r.payload_kind == kind)
            .map(|r| r.complex_scalars)
            .sum()
    }

    /// Total complex scalars crossing cluster boundaries (everything except
    /// local RF hand-off).
    pub fn inter_cluster_scalars(&self) -> u64 {
        self.records
            .iter()
            .filter(|r| r.payload_kind != PayloadKind::LocalOut)
            .map(|r| r.complex_scalars)
            .sum()
    }

    /// Number of messages of one payload kind.
    pub fn message_count(&self, kind: PayloadKind) -> usize {
        self.records
            .iter()
            .filter(|r| r.payload_kind == kind)
            .count()
    }

    /// Deepest hop among messages of one payload kind (0 when there are
    /// none).
    pub fn max_hop_depth(&self, kind: PayloadKind) -> u32 {
        self.records
            .iter()
            .filter(|r| r.payload_kind == kind)
            .map(|r| r.hop_depth)
            .max()
            .unwrap_or(0)
    }

    /// Writes the ledger as CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# schema: ledger-v1")?;
        writeln!(
            w,
            "source,destination,payload_kind,complex_scalars,bytes_at_8B_per_scalar,hop_depth"
        )?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.source,
                r.destination,
                r.payload_kind.as_str(),
                r.complex_scalars,
                r.complex_scalars * 8,
                r.hop_depth
            )?;
        }
        Ok(())
    }

    /// Serializes the ledger as a JSON array of records.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self
            .records
            .iter()
            .map(|r| {
                serde_json::json!({
                    "source": r.source.to_string(),
                    "destination": r.destination.to_string(),
                    "payload_kind": r.payload_kind.as_str(),
                    "complex_scalars": r.complex_scalars,
                    "bytes_at_8B_per_scalar": r.complex_scalars * 8,
                    "hop_depth": r.hop_depth,
                })
            })
            .collect::<Vec<_>>())
    }
}

/// One edge of the balanced binary adder tree: at `level`, the running sum
/// of `src` merges into `dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ReduceStep {
    pub level: u32,
    pub src: usize,
    pub dst: usize,
}

/// Pairwise reduction schedule over `clusters` leaves, rooted at cluster 0.
///
/// A balanced binary tree over `C` leaves has `C - 1` edges and depth
/// `ceil(log2 C)`; an odd node at any level advances unpaired.
pub(crate) fn reduce_plan(clusters: usize) -> Vec<ReduceStep> {
    let mut active: Vec<usize> = (0..clusters).collect();
    let mut steps = Vec::new();
    let mut level = 1;
    while active.len() > 1 {
        let mut next = Vec::with_capacity(active.len().div_ceil(2));
        let mut i = 0;
        while i < active.len() {
            if i + 1 < active.len() {
                steps.push(ReduceStep {
                    level,
                    src: active[i + 1],
                    dst: active[i],
                });
                next.push(active[i]);
                i += 2;
            } else {
                next.push(active[i]);
                i += 1;
            }
        }
        active = next;
        level += 1;
    }
    steps
}

/// How vectors are broadcast from the master to the other clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BroadcastTopology {
    /// One direct link from the master to every other cluster.
    #[default]
    Star,
    /// Reverse of the adder tree; same total volume, deeper hops.
    Tree,
}

impl std::str::FromStr for BroadcastTopology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "star" => Ok(BroadcastTopology::Star),
            "tree" => Ok(BroadcastTopology::Tree),
            other => Err(format!(
                "unknown broadcast topology `{other}` (expected `star` or `tree`)"
            )),
        }
    }
}

/// Broadcast edges `(src, dst, hop_depth)` for `clusters` clusters.
pub(crate) fn broadcast_edges(
    clusters: usize,
    topology: BroadcastTopology,
) -> Vec<(usize, usize, u32)> {
    match topology {
        BroadcastTopology::Star => (1..clusters).map(|c| (0, c, 1)).collect(),
        BroadcastTopology::Tree => {
            let steps = reduce_plan(clusters);
            let max_level = steps.iter().map(|s| s.level).max().unwrap_or(0);
            steps
                .iter()
                .rev()
                .map(|s| (s.dst, s.src, max_level - s.level + 1))
                .collect()
        }
    }
}

/// Splits `H` into per-cluster column blocks `[H_1, .., H_C]`.
pub fn partition_channel(
    h: &CMatrix,
    part: &ClusterPartition,
) -> Result<Vec<CMatrix>, FabricError> {
    if part.total_antennas() != h.cols() {
        return Err(FabricError::InvalidPartition(format!(
            "partition covers {} antennas but the channel has {} columns",
            part.total_antennas(),
            h.cols()
        )));
    }
    part.sizes
        .iter()
        .zip(part.offsets.iter())
        .map(|(&size, &offset)| h.column_block(offset, size).map_err(FabricError::from))
        .collect()
}

/// Sums per-cluster Gram matrices over the adder tree, recording one
/// aggregated `gram_partial` message per tree edge.
///
/// `subcarriers` scales the per-edge tally: the modeled workload ships one
/// `U x U` partial per subcarrier per edge, while the numeric sum is done
/// once because the frame shares a single channel realization.
pub fn gram_reduce_tree(
    local_grams: &[CMatrix],
    subcarriers: usize,
    ledger: &mut MessageLedger,
) -> Result<CMatrix, FabricError> {
    if local_grams.is_empty() {
        return Err(FabricError::InputMismatch(
            "no partial Gram matrices to reduce".into(),
        ));
    }
    if subcarriers == 0 {
        return Err(FabricError::InvalidShape(
            "subcarrier multiplicity must be at least 1".into(),
        ));
    }
    let u = local_grams[0].rows();
    if local_grams
        .iter()
        .any(|g| !g.is_square() || g.rows() != u)
    {
        return Err(FabricError::InputMismatch(format!(
            "all partial Grams must be {u}x{u}"
        )));
    }
    let payload = (subcarriers * u * u) as u64;
    let mut acc: Vec<CMatrix> = local_grams.to_vec();
    for step in reduce_plan(local_grams.len()) {
        acc[step.dst] = acc[step.dst].add(&acc[step.src])?;
        ledger.record(
            Endpoint::Cluster(step.src),
            Endpoint::Cluster(step.dst),
            PayloadKind::GramPartial,
            payload,
            step.level,
        );
    }
    Ok(acc.swap_remove(0))
}

/// Per-cluster precoded outputs for every `(subcarrier, slot)` pair of a
/// frame, indexed `subcarrier * n_slots + slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutputs {
    pub shape: WorkloadShape,
    pub per_cluster: Vec<Vec<CVector>>,
}

impl ClusterOutputs {
    pub fn n_vectors(&self) -> usize {
        self.shape.vectors_per_frame()
    }

    /// Concatenates the per-cluster outputs of one `(subcarrier, slot)`
    /// index into the full `B`-dimensional transmit vector.
    pub fn stacked(&self, index: usize) -> Result<CVector, FabricError> {
        let parts: Vec<CVector> = self
            .per_cluster
            .iter()
            .map(|outs| outs[index].clone())
            .collect();
        Ok(CVector::concat(&parts)?)
    }
}

/// Noiseless received vectors `y0 = sum_c H_c x_c` for every
/// `(subcarrier, slot)` pair.
pub fn superpose(
    outputs: &ClusterOutputs,
    shards: &[CMatrix],
) -> Result<Vec<CVector>, FabricError> {
    if shards.len() != outputs.per_cluster.len() {
        return Err(FabricError::InputMismatch(format!(
            "{} channel shards for {} cluster outputs",
            shards.len(),
            outputs.per_cluster.len()
        )));
    }
    let n = outputs.n_vectors();
    let users = shards[0].rows();
    let mut received = Vec::with_capacity(n);
    for i in 0..n {
        let mut y = CVector::zeros(users);
        for (shard, outs) in shards.iter().zip(outputs.per_cluster.iter()) {
            y = y.add(&shard.matvec(&outs[i])?)?;
        }
        received.push(y);
    }
    Ok(received)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn equal_split_and_weights() {
        let part = ClusterPartition::equal_split(256, 8).unwrap();
        assert_eq!(part.num_clusters(), 8);
        assert_eq!(part.sizes(), &[32; 8]);
        assert_eq!(part.offsets()[7], 224);
        assert!((part.weight(0) - 0.125).abs() < 1e-15);
        assert!(ClusterPartition::equal_split(10, 4).is_err());
        assert!(ClusterPartition::from_sizes(vec![4, 0, 4]).is_err());
    }

    #[test]
    fn partition_roundtrip() {
        let h = CMatrix::from_fn(3, 8, |r, c| Complex64::new((r * 8 + c) as f64, -1.0)).unwrap();
        let part = ClusterPartition::from_sizes(vec![2, 2, 4]).unwrap();
        let shards = partition_channel(&h, &part).unwrap();
        assert_eq!(shards.len(), 3);
        assert_eq!(shards[0].at(0, 1), Complex64::new(1.0, -1.0));
        assert_eq!(shards[2].at(0, 0), Complex64::new(4.0, -1.0));
        assert_eq!(CMatrix::hconcat(&shards).unwrap(), h);

        let single = ClusterPartition::from_sizes(vec![8]).unwrap();
        assert_eq!(partition_channel(&h, &single).unwrap()[0], h);

        let bad = ClusterPartition::from_sizes(vec![3, 3]).unwrap();
        assert!(partition_channel(&h, &bad).is_err());
    }

    #[test]
    fn reduce_plan_shapes() {
        assert!(reduce_plan(1).is_empty());
        let plan4 = reduce_plan(4);
        assert_eq!(plan4.len(), 3);
        assert_eq!(plan4.iter().map(|s| s.level).max().unwrap(), 2);
        for c in [2usize, 3, 5, 8] {
            let plan = reduce_plan(c);
            assert_eq!(plan.len(), c - 1);
            let depth = plan.iter().map(|s| s.level).max().unwrap();
            assert_eq!(depth, (c as f64).log2().ceil() as u32);
            // Root is the master cluster.
            assert!(plan.iter().all(|s| s.src != 0));
        }
    }

    #[test]
    fn gram_tree_single_cluster_is_free() {
        let g = CMatrix::identity(4);
        let mut ledger = MessageLedger::new();
        let total = gram_reduce_tree(std::slice::from_ref(&g), 1, &mut ledger).unwrap();
        assert_eq!(total, g);
        assert!(ledger.is_empty());
    }

    #[test]
    fn gram_tree_four_identities() {
        let grams = vec![CMatrix::identity(3); 4];
        let mut ledger = MessageLedger::new();
        let total = gram_reduce_tree(&grams, 1, &mut ledger).unwrap();
        assert!(total.max_abs_diff(&CMatrix::identity(3).scale(4.0)) < 1e-15);
        assert_eq!(ledger.message_count(PayloadKind::GramPartial), 3);
        assert_eq!(ledger.max_hop_depth(PayloadKind::GramPartial), 2);
        assert_eq!(ledger.total_scalars(PayloadKind::GramPartial), 3 * 9);
    }

    #[test]
    fn gram_tree_frame_scaling_matches_closed_form() {
        // C = 8, U = 16, N_sc = 1200: (C-1) * N_sc * U^2 = 2,150,400.
        let grams = vec![CMatrix::identity(16); 8];
        let mut ledger = MessageLedger::new();
        gram_reduce_tree(&grams, 1200, &mut ledger).unwrap();
        assert_eq!(ledger.total_scalars(PayloadKind::GramPartial), 2_150_400);
    }

    #[test]
    fn gram_tree_order_insensitive_up_to_rounding() {
        let mut grams = Vec::new();
        for seed in 0..6u64 {
            let m = CMatrix::from_fn(4, 4, |r, c| {
                Complex64::new(
                    ((seed * 16 + (r * 4 + c) as u64) as f64 * 0.37).sin(),
                    ((seed * 16 + (r * 4 + c) as u64) as f64 * 0.61).cos(),
                )
            })
            .unwrap();
            // Hermitian part, so inputs look like real partial Grams.
            let sym = m.add(&m.hermitian()).unwrap().scale(0.5);
            grams.push(sym);
        }
        let mut ledger = MessageLedger::new();
        let tree = gram_reduce_tree(&grams, 1, &mut ledger).unwrap();
        let mut linear = grams[0].clone();
        for g in &grams[1..] {
            linear = linear.add(g).unwrap();
        }
        assert!(tree.max_abs_diff(&linear) <= 1e-12 * linear.frobenius_norm());
    }

    #[test]
    fn broadcast_edge_counts() {
        let star = broadcast_edges(8, BroadcastTopology::Star);
        assert_eq!(star.len(), 7);
        assert!(star.iter().all(|&(src, _, depth)| src == 0 && depth == 1));

        let tree = broadcast_edges(8, BroadcastTopology::Tree);
        assert_eq!(tree.len(), 7);
        assert_eq!(tree.iter().map(|&(_, _, d)| d).max().unwrap(), 3);
        // Every non-master cluster is reached exactly once.
        let mut dsts: Vec<usize> = tree.iter().map(|&(_, dst, _)| dst).collect();
        dsts.sort_unstable();
        assert_eq!(dsts, (1..8).collect::<Vec<_>>());
    }

    #[test]
    fn ledger_csv_layout() {
        let mut ledger = MessageLedger::new();
        ledger.record(
            Endpoint::Cluster(1),
            Endpoint::Cluster(0),
            PayloadKind::GramPartial,
            256,
            1,
        );
        ledger.record(
            Endpoint::Cluster(0),
            Endpoint::Rf(0),
            PayloadKind::LocalOut,
            64,
            0,
        );
        let mut buf = Vec::new();
        ledger.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema: ledger-v1");
        assert_eq!(
            lines[1],
            "source,destination,payload_kind,complex_scalars,bytes_at_8B_per_scalar,hop_depth"
        );
        assert_eq!(lines[2], "cluster1,cluster0,gram_partial,256,2048,1");
        assert_eq!(lines[3], "cluster0,rf0,local_out,64,512,0");
        assert_eq!(ledger.inter_cluster_scalars(), 256);
    }
}
