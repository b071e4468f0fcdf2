//! Timestamped edge-stream ingestion, snapshot slicing and the dynamic
//! network data model.
//!
//! An input stream of `(src, dst, timestamp)` records is ordered by
//! timestamp (stable on ties), split into an initial portion plus a number
//! of roughly even slices, and accumulated into a sequence of cumulative
//! snapshots. Every snapshot is reduced to its largest connected component
//! and kept undirected and unweighted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense internal node index. Input labels are interned in input order.
pub type NodeId = u32;

/// Maps arbitrary string node labels to dense indices and back.
#[derive(Debug, Clone, Default)]
pub struct NodeInterner {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl NodeInterner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as NodeId;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn resolve(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One cleaned input record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRecord {
    pub src: NodeId,
    pub dst: NodeId,
    pub timestamp: i64,
}

/// A cleaned, time-ordered edge stream.
///
/// Records are sorted by timestamp with the original input order preserved
/// for ties; self-loops are dropped at ingestion. Duplicate records are kept
/// here (they collapse at snapshot level but still count as streaming edges).
#[derive(Debug, Clone)]
pub struct EdgeStream {
    records: Vec<EdgeRecord>,
    interner: NodeInterner,
}

impl EdgeStream {
    pub fn records(&self) -> &[EdgeRecord] {
        &self.records
    }

    pub fn interner(&self) -> &NodeInterner {
        &self.interner
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Build a stream from already-interned records (used by generators).
    pub fn from_parts(records: Vec<EdgeRecord>, interner: NodeInterner) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyStream);
        }
        let mut records = records;
        records.sort_by_key(|r| r.timestamp);
        Ok(Self { records, interner })
    }
}

/// Parse a line-oriented edge stream: `src dst timestamp` per line,
/// whitespace-separated, `#` starts a comment line.
pub fn ingest_edge_stream<R: BufRead>(reader: R) -> Result<EdgeStream> {
    let mut interner = NodeInterner::new();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected at least 3 fields, got {}", fields.len()),
            });
        }
        let timestamp: i64 = fields[2].parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad timestamp {:?}", fields[2]),
        })?;
        if fields[0] == fields[1] {
            // self-loop: dropped at ingestion
            continue;
        }
        let src = interner.intern(fields[0]);
        let dst = interner.intern(fields[1]);
        records.push(EdgeRecord { src, dst, timestamp });
    }
    if records.is_empty() {
        return Err(Error::EmptyStream);
    }
    // stable: equal timestamps keep input order
    records.sort_by_key(|r| r.timestamp);
    Ok(EdgeStream { records, interner })
}

/// An undirected, simple graph at one timestep.
///
/// Adjacency is symmetric with sorted neighbor lists and no self-loops.
/// Edge weights default to 1; a per-edge weight map can be attached for
/// weighted transition sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    adj: Vec<Vec<NodeId>>,
    weights: Option<Vec<Vec<f64>>>,
    nodes: Vec<NodeId>,
    num_edges: usize,
}

impl Snapshot {
    /// Build from an edge list. Self-loops are dropped, duplicates collapse.
    pub fn from_edges<I: IntoIterator<Item = (NodeId, NodeId)>>(edges: I) -> Self {
        Self::build(edges.into_iter().map(|(u, v)| (u, v, 1.0)), false)
    }

    /// Build from a weighted edge list; a duplicate edge keeps the last weight.
    pub fn from_weighted_edges<I: IntoIterator<Item = (NodeId, NodeId, f64)>>(edges: I) -> Self {
        Self::build(edges.into_iter(), true)
    }

    fn build<I: Iterator<Item = (NodeId, NodeId, f64)>>(edges: I, weighted: bool) -> Self {
        let mut map: BTreeMap<NodeId, BTreeMap<NodeId, f64>> = BTreeMap::new();
        for (u, v, w) in edges {
            if u == v {
                continue;
            }
            map.entry(u).or_default().insert(v, w);
            map.entry(v).or_default().insert(u, w);
        }
        let max_id = map.keys().next_back().map_or(0, |&m| m as usize + 1);
        let mut adj = vec![Vec::new(); max_id];
        let mut weights = if weighted {
            Some(vec![Vec::new(); max_id])
        } else {
            None
        };
        let mut nodes = Vec::with_capacity(map.len());
        let mut num_edges = 0usize;
        for (u, nbrs) in &map {
            nodes.push(*u);
            let row = &mut adj[*u as usize];
            row.reserve(nbrs.len());
            for (&v, &w) in nbrs {
                row.push(v);
                if let Some(ws) = weights.as_mut() {
                    ws[*u as usize].push(w);
                }
                if *u < v {
                    num_edges += 1;
                }
            }
        }
        Snapshot {
            adj,
            weights,
            nodes,
            num_edges,
        }
    }

    /// Sorted list of nodes present in this snapshot.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn contains(&self, u: NodeId) -> bool {
        (u as usize) < self.adj.len() && !self.adj[u as usize].is_empty()
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        self.adj
            .get(u as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Edge weights parallel to `neighbors(u)`; `None` means all 1.
    pub fn weight_row(&self, u: NodeId) -> Option<&[f64]> {
        self.weights
            .as_ref()
            .and_then(|ws| ws.get(u as usize))
            .map(Vec::as_slice)
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.neighbors(u).len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Iterate edges once each as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.iter().flat_map(move |&u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| u < v)
                .map(move |&v| (u, v))
        })
    }

    /// Full-scan check that adjacency is symmetric and self-loop free.
    pub fn check_symmetry(&self) -> bool {
        self.nodes.iter().all(|&u| {
            self.neighbors(u)
                .iter()
                .all(|&v| v != u && self.has_edge(v, u))
        })
    }
}

/// Restrict a snapshot to its largest connected component.
///
/// Ties on component size break toward the component containing the
/// smallest node id.
pub fn largest_connected_component(g: &Snapshot) -> Result<Snapshot> {
    if g.num_nodes() == 0 {
        return Err(Error::EmptyGraph("cannot take LCC of empty graph".into()));
    }
    let mut visited: BTreeSet<NodeId> = BTreeSet::new();
    let mut best: Option<Vec<NodeId>> = None;
    // nodes() is sorted, so the first component found among equals contains
    // the smallest node id
    for &start in g.nodes() {
        if visited.contains(&start) {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = vec![start];
        visited.insert(start);
        while let Some(u) = queue.pop() {
            component.push(u);
            for &v in g.neighbors(u) {
                if visited.insert(v) {
                    queue.push(v);
                }
            }
        }
        if best.as_ref().map_or(true, |b| component.len() > b.len()) {
            best = Some(component);
        }
    }
    let keep: BTreeSet<NodeId> = best.unwrap().into_iter().collect();
    let weighted = g.weights.is_some();
    let edges = g.edges().filter(|(u, _)| keep.contains(u)).map(|(u, v)| {
        let w = g
            .weight_row(u)
            .map(|ws| ws[g.neighbors(u).binary_search(&v).unwrap()])
            .unwrap_or(1.0);
        (u, v, w)
    });
    Ok(if weighted {
        Snapshot::from_weighted_edges(edges)
    } else {
        Snapshot::from_edges(edges.map(|(u, v, _)| (u, v)))
    })
}

/// New edges and the nodes they touch between two snapshots.
#[derive(Debug, Clone, Default)]
pub struct DeltaView {
    /// Edges present in `curr` but not `prev`, as `(u, v)` with `u < v`.
    pub new_edges: Vec<(NodeId, NodeId)>,
    /// Endpoints of the new edges.
    pub affected_nodes: BTreeSet<NodeId>,
}

/// Compute the streaming-edge delta between consecutive snapshots.
pub fn delta(prev: &Snapshot, curr: &Snapshot) -> DeltaView {
    let mut new_edges = Vec::new();
    let mut affected_nodes = BTreeSet::new();
    for (u, v) in curr.edges() {
        if !prev.has_edge(u, v) {
            new_edges.push((u, v));
            affected_nodes.insert(u);
            affected_nodes.insert(v);
        }
    }
    DeltaView {
        new_edges,
        affected_nodes,
    }
}

/// An ordered sequence of cumulative snapshots plus slicing bookkeeping.
#[derive(Debug, Clone)]
pub struct DynamicNetwork {
    snapshots: Vec<Snapshot>,
    /// Raw streaming-record count per online step (index 0 = step t=1).
    slice_sizes: Vec<usize>,
    /// Records used to build the initial snapshot.
    init_size: usize,
    /// Nodes of snapshot t-1 missing from snapshot t after LCC restriction.
    lcc_dropped: Vec<usize>,
    interner: NodeInterner,
}

impl DynamicNetwork {
    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    /// Number of online steps (snapshots minus one).
    pub fn num_steps(&self) -> usize {
        self.snapshots.len().saturating_sub(1)
    }

    pub fn slice_sizes(&self) -> &[usize] {
        &self.slice_sizes
    }

    pub fn init_size(&self) -> usize {
        self.init_size
    }

    pub fn lcc_dropped(&self) -> &[usize] {
        &self.lcc_dropped
    }

    pub fn interner(&self) -> &NodeInterner {
        &self.interner
    }

    /// Assemble a network from prebuilt snapshots (synthetic generators).
    pub fn from_parts(
        snapshots: Vec<Snapshot>,
        slice_sizes: Vec<usize>,
        interner: NodeInterner,
    ) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::EmptyGraph("network needs at least one snapshot".into()));
        }
        if slice_sizes.len() + 1 != snapshots.len() {
            return Err(Error::Config(format!(
                "{} snapshots need {} slice sizes, got {}",
                snapshots.len(),
                snapshots.len() - 1,
                slice_sizes.len()
            )));
        }
        let lcc_dropped = vec![0; slice_sizes.len()];
        Ok(Self {
            snapshots,
            slice_sizes,
            init_size: 0,
            lcc_dropped,
            interner,
        })
    }

    /// Summary of the slicing, ready to serialize.
    pub fn manifest(&self, num_slices: usize, init_fraction: f64) -> SliceManifest {
        SliceManifest {
            num_slices,
            init_fraction,
            init_records: self.init_size,
            slice_sizes: self.slice_sizes.clone(),
            node_counts: self.snapshots.iter().map(Snapshot::num_nodes).collect(),
            edge_counts: self.snapshots.iter().map(Snapshot::num_edges).collect(),
            degree_of_changes: degree_of_changes(self).ok(),
            lcc_dropped: self.lcc_dropped.clone(),
        }
    }
}

/// Structured record of one slicing: sizes, per-step counts and DoCs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceManifest {
    pub num_slices: usize,
    pub init_fraction: f64,
    pub init_records: usize,
    pub slice_sizes: Vec<usize>,
    pub node_counts: Vec<usize>,
    pub edge_counts: Vec<usize>,
    pub degree_of_changes: Option<f64>,
    pub lcc_dropped: Vec<usize>,
}

pub const DEFAULT_INIT_FRACTION: f64 = 0.2;

/// Slice a stream into an initial snapshot plus `num_slices` online steps.
///
/// The initial snapshot uses the first `floor(init_fraction * |stream|)`
/// records; the remainder is split into contiguous slices whose sizes differ
/// by at most one (earlier slices take the extra records). Each snapshot is
/// the largest connected component of the cumulative simple graph, so the
/// final snapshot is identical for every slice count.
pub fn slice_stream(
    stream: &EdgeStream,
    num_slices: usize,
    init_fraction: f64,
) -> Result<DynamicNetwork> {
    if !(0.0..=1.0).contains(&init_fraction) {
        return Err(Error::Config(format!(
            "init_fraction must be in [0,1], got {init_fraction}"
        )));
    }
    let init_count = (init_fraction * stream.len() as f64).floor() as usize;
    slice_stream_with_init(stream, num_slices, init_count)
}

/// Same as [`slice_stream`] with an explicit initial record count.
pub fn slice_stream_with_init(
    stream: &EdgeStream,
    num_slices: usize,
    init_count: usize,
) -> Result<DynamicNetwork> {
    if num_slices == 0 {
        return Err(Error::Config("num_slices must be >= 1".into()));
    }
    if init_count == 0 {
        return Err(Error::Config("initial portion is empty".into()));
    }
    if init_count > stream.len() {
        return Err(Error::Config(format!(
            "initial portion ({init_count}) exceeds stream length ({})",
            stream.len()
        )));
    }
    let records = stream.records();
    let remaining = records.len() - init_count;
    let base = remaining / num_slices;
    let extra = remaining % num_slices;

    let mut cumulative: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let add = |range: std::ops::Range<usize>, set: &mut BTreeSet<(NodeId, NodeId)>| {
        for r in &records[range] {
            let (a, b) = if r.src < r.dst {
                (r.src, r.dst)
            } else {
                (r.dst, r.src)
            };
            set.insert((a, b));
        }
    };

    add(0..init_count, &mut cumulative);
    let g0 = snapshot_of(&cumulative)?;
    let mut snapshots = vec![g0];
    let mut slice_sizes = Vec::with_capacity(num_slices);
    let mut lcc_dropped = Vec::with_capacity(num_slices);
    let mut offset = init_count;
    for s in 0..num_slices {
        let size = base + usize::from(s < extra);
        add(offset..offset + size, &mut cumulative);
        offset += size;
        let snap = snapshot_of(&cumulative)?;
        let prev = snapshots.last().unwrap();
        let dropped = prev
            .nodes()
            .iter()
            .filter(|&&u| !snap.contains(u))
            .count();
        lcc_dropped.push(dropped);
        slice_sizes.push(size);
        snapshots.push(snap);
    }
    Ok(DynamicNetwork {
        snapshots,
        slice_sizes,
        init_size: init_count,
        lcc_dropped,
        interner: stream.interner().clone(),
    })
}

fn snapshot_of(edges: &BTreeSet<(NodeId, NodeId)>) -> Result<Snapshot> {
    let snap = Snapshot::from_edges(edges.iter().copied());
    if snap.num_edges() == 0 {
        return Err(Error::EmptyGraph("snapshot has zero edges".into()));
    }
    largest_connected_component(&snap)
}

/// Average number of streaming records per online step.
///
/// Counts raw slice records (duplicates included), matching how slice sizes
/// are reported; deduplicated new edges are available via [`delta`].
pub fn degree_of_changes(net: &DynamicNetwork) -> Result<f64> {
    if net.snapshots.len() < 2 {
        return Err(Error::Config(
            "degree of changes needs at least 2 snapshots".into(),
        ));
    }
    let total: usize = net.slice_sizes.iter().sum();
    Ok(total as f64 / net.slice_sizes.len() as f64)
}
