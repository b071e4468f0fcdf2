//! Preferential-attachment graph generation for scalability benchmarks.
//!
//! Static mode grows one scale-free graph to a target size; dynamic mode
//! emits a cumulative snapshot sequence where every step adds a fixed
//! number of new nodes. Generated edges carry an insertion-order timestamp
//! so the output feeds the regular stream pipeline unchanged.

use std::io::Write;

use rand::prelude::*;

use crate::dyngraph::{DynamicNetwork, NodeId, NodeInterner, Snapshot};
use crate::error::{Error, Result};

/// Preferential-attachment parameters.
///
/// The seed component is a path on `seed_nodes` nodes; every later node
/// attaches `edges_per_new_node` distinct edges to existing nodes with
/// probability proportional to degree.
#[derive(Debug, Clone, Copy)]
pub struct BaConfig {
    pub seed_nodes: usize,
    pub edges_per_new_node: usize,
}

impl Default for BaConfig {
    fn default() -> Self {
        Self {
            seed_nodes: 4,
            edges_per_new_node: 4,
        }
    }
}

impl BaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.edges_per_new_node < 1 {
            return Err(Error::Config("edges_per_new_node must be >= 1".into()));
        }
        if self.seed_nodes < self.edges_per_new_node {
            return Err(Error::Config(
                "seed_nodes must be >= edges_per_new_node".into(),
            ));
        }
        if self.seed_nodes < 2 {
            return Err(Error::Config("seed_nodes must be >= 2".into()));
        }
        Ok(())
    }
}

/// A generated graph plus its edges in insertion order.
#[derive(Debug, Clone)]
pub struct BaGraph {
    pub edges: Vec<(NodeId, NodeId)>,
    pub snapshot: Snapshot,
}

/// Grow a scale-free graph to `n` nodes.
///
/// Degree-proportional choice draws uniformly from the list of edge
/// endpoints, which realizes exact preferential attachment; a new node's
/// targets are drawn without replacement.
pub fn ba_generate(n: usize, cfg: &BaConfig, rng: &mut impl Rng) -> Result<BaGraph> {
    let edges = ba_edges(n, cfg, rng)?;
    let snapshot = Snapshot::from_edges(edges.iter().copied());
    Ok(BaGraph { edges, snapshot })
}

fn ba_edges(n: usize, cfg: &BaConfig, rng: &mut impl Rng) -> Result<Vec<(NodeId, NodeId)>> {
    cfg.validate()?;
    if n < cfg.seed_nodes {
        return Err(Error::Config(format!(
            "target size {n} is below seed size {}",
            cfg.seed_nodes
        )));
    }
    let m = cfg.edges_per_new_node;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(cfg.seed_nodes - 1 + m * (n - cfg.seed_nodes));
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * edges.capacity());
    for i in 0..cfg.seed_nodes - 1 {
        let (u, v) = (i as NodeId, (i + 1) as NodeId);
        edges.push((u, v));
        endpoints.push(u);
        endpoints.push(v);
    }
    let mut targets: Vec<NodeId> = Vec::with_capacity(m);
    for v in cfg.seed_nodes..n {
        let v = v as NodeId;
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((v, t));
        }
        // endpoint list updated only after all m draws so a node's own new
        // edges do not bias its remaining target choices
        for &t in &targets {
            endpoints.push(v);
            endpoints.push(t);
        }
    }
    Ok(edges)
}

/// Dynamic-mode parameters: `nodes_per_snapshot` new nodes arrive at each
/// of `snapshots` cumulative snapshots.
#[derive(Debug, Clone, Copy)]
pub struct BaDynamicConfig {
    pub ba: BaConfig,
    pub nodes_per_snapshot: usize,
    pub snapshots: usize,
}

impl Default for BaDynamicConfig {
    fn default() -> Self {
        Self {
            ba: BaConfig::default(),
            nodes_per_snapshot: 4,
            snapshots: 20,
        }
    }
}

/// Generate a growing dynamic network.
///
/// The initial snapshot holds `seed_nodes + nodes_per_snapshot` nodes; every
/// later snapshot appends another `nodes_per_snapshot` preferentially
/// attached nodes, so the last snapshot has about
/// `nodes_per_snapshot * snapshots` nodes.
pub fn ba_dynamic(cfg: &BaDynamicConfig, rng: &mut impl Rng) -> Result<BaDynamic> {
    if cfg.snapshots < 2 {
        return Err(Error::Config("dynamic generation needs >= 2 snapshots".into()));
    }
    if cfg.nodes_per_snapshot < 1 {
        return Err(Error::Config("nodes_per_snapshot must be >= 1".into()));
    }
    let n_final = cfg.ba.seed_nodes + cfg.nodes_per_snapshot * cfg.snapshots;
    let edges = ba_edges(n_final, &cfg.ba, rng)?;

    // edge count after the seed path grows by m per node
    let m = cfg.ba.edges_per_new_node;
    let edges_at = |nodes: usize| (cfg.ba.seed_nodes - 1) + m * (nodes - cfg.ba.seed_nodes);

    let mut snapshots = Vec::with_capacity(cfg.snapshots);
    let mut slice_sizes = Vec::with_capacity(cfg.snapshots - 1);
    let mut prev_cut = 0usize;
    for t in 0..cfg.snapshots {
        let nodes = cfg.ba.seed_nodes + cfg.nodes_per_snapshot * (t + 1);
        let cut = edges_at(nodes);
        snapshots.push(Snapshot::from_edges(edges[..cut].iter().copied()));
        if t > 0 {
            slice_sizes.push(cut - prev_cut);
        }
        prev_cut = cut;
    }
    let mut interner = NodeInterner::new();
    for id in 0..n_final {
        interner.intern(&id.to_string());
    }
    let network = DynamicNetwork::from_parts(snapshots, slice_sizes, interner)?;
    Ok(BaDynamic { network, edges })
}

/// A generated dynamic network plus the underlying edge insertion order.
#[derive(Debug, Clone)]
pub struct BaDynamic {
    pub network: DynamicNetwork,
    pub edges: Vec<(NodeId, NodeId)>,
}

/// Write edges as a standard stream file with insertion-order timestamps.
pub fn write_edge_stream<W: Write>(edges: &[(NodeId, NodeId)], mut w: W) -> Result<()> {
    for (i, (u, v)) in edges.iter().enumerate() {
        writeln!(w, "{u} {v} {i}")?;
    }
    Ok(())
}
