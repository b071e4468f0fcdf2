//! Alias-sampled random walks with restart.
//!
//! Per-node alias tables give O(1) neighbor sampling from the degree- (or
//! weight-) proportional transition distribution. Walks restart to their
//! starting node with probability `R` at every step; `R = 0` is a plain
//! random walk, `R = 1` never leaves the start.

use std::collections::HashMap;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dyngraph::{NodeId, Snapshot};
use crate::error::{Error, Result};
use crate::seeds::{self, tag};

/// Walker-method alias table for a fixed discrete distribution.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
    weights: Vec<f64>,
    total: f64,
    index_dist: rand::distr::Uniform<usize>,
}

impl AliasTable {
    /// Build from non-negative weights with a positive sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite())
        {
            return Err(Error::Config(
                "alias table needs non-negative finite weights with positive sum".into(),
            ));
        }
        let n = weights.len();
        let mut prob: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, p) in prob.iter().enumerate() {
            if *p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            alias[s] = l;
            prob[l] = (prob[l] + prob[s]) - 1.0;
            if prob[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // leftovers are exactly 1 up to rounding
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }
        let index_dist = rand::distr::Uniform::new(0, n)
            .map_err(|e| Error::Config(format!("alias index distribution: {e}")))?;
        Ok(Self {
            prob,
            alias,
            weights: weights.to_vec(),
            total,
            index_dist,
        })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Normalized probability of outcome `i`.
    pub fn probability(&self, i: usize) -> f64 {
        self.weights[i] / self.total
    }

    /// Draw one outcome index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = self.index_dist.sample(rng);
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

/// Per-node transition samplers for one snapshot.
///
/// Tables exist only for nodes with degree >= 1 and are shared immutably;
/// an incremental update rebuilds only nodes whose neighborhood changed.
#[derive(Debug, Clone, Default)]
pub struct AliasTables {
    tables: Vec<Option<Arc<AliasTable>>>,
}

impl AliasTables {
    /// Build tables for every present node of `g`.
    pub fn build(g: &Snapshot) -> Result<Self> {
        if g.num_nodes() == 0 {
            return Err(Error::EmptyGraph("no nodes to build alias tables for".into()));
        }
        let mut tables = vec![None; max_index(g)];
        for &u in g.nodes() {
            tables[u as usize] = Some(Arc::new(node_table(g, u)?));
        }
        Ok(Self { tables })
    }

    /// Reuse unchanged tables from a previous snapshot, rebuilding only
    /// `changed` nodes and nodes that are new to `curr`.
    pub fn update(
        &self,
        prev: &Snapshot,
        curr: &Snapshot,
        changed: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self> {
        let mut tables = vec![None; max_index(curr)];
        for &u in curr.nodes() {
            let idx = u as usize;
            if prev.contains(u) {
                tables[idx] = self.tables.get(idx).cloned().flatten();
            }
        }
        for u in changed {
            if curr.contains(u) {
                tables[u as usize] = Some(Arc::new(node_table(curr, u)?));
            }
        }
        // nodes that entered the snapshot without being flagged still need tables
        for &u in curr.nodes() {
            if tables[u as usize].is_none() {
                tables[u as usize] = Some(Arc::new(node_table(curr, u)?));
            }
        }
        Ok(Self { tables })
    }

    pub fn table(&self, u: NodeId) -> Option<&AliasTable> {
        self.tables.get(u as usize).and_then(|t| t.as_deref())
    }

    /// Sample a neighbor of `u` under the transition distribution.
    pub fn sample_neighbor<R: Rng + ?Sized>(
        &self,
        g: &Snapshot,
        u: NodeId,
        rng: &mut R,
    ) -> Option<NodeId> {
        let table = self.table(u)?;
        let idx = table.sample(rng);
        Some(g.neighbors(u)[idx])
    }
}

fn max_index(g: &Snapshot) -> usize {
    g.nodes().last().map_or(0, |&m| m as usize + 1)
}

fn node_table(g: &Snapshot, u: NodeId) -> Result<AliasTable> {
    match g.weight_row(u) {
        Some(ws) => AliasTable::from_weights(ws),
        None => AliasTable::from_weights(&vec![1.0; g.degree(u)]),
    }
}

/// Walk parameters: `r` walks of length `l` per start node, restart
/// probability `R`.
#[derive(Debug, Clone, Copy)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub restart_prob: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 10,
            walk_length: 80,
            restart_prob: 0.0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node < 1 {
            return Err(Error::Config("walks_per_node must be >= 1".into()));
        }
        if self.walk_length < 2 {
            return Err(Error::Config("walk_length must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.restart_prob) {
            return Err(Error::Config("restart_prob must be in [0,1]".into()));
        }
        Ok(())
    }
}

/// One truncated random walk with restart from `start`.
///
/// A restart consumes a step: the start node occupies that position. The
/// walk ends early only when the current node has no neighbors, which
/// cannot happen on a connected snapshot.
pub fn rwr_walk<R: Rng + ?Sized>(
    g: &Snapshot,
    tables: &AliasTables,
    start: NodeId,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    cfg.validate()?;
    if !g.contains(start) {
        return Err(Error::MissingNode(start));
    }
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let mut current = start;
    while walk.len() < cfg.walk_length {
        let next = if rng.random::<f64>() < cfg.restart_prob {
            start
        } else {
            match tables.sample_neighbor(g, current, rng) {
                Some(v) => v,
                None => break,
            }
        };
        walk.push(next);
        current = next;
    }
    Ok(walk)
}

/// Generate `r` walks per start node, shuffled into a deterministic
/// per-seed order.
///
/// Every `(start, walk index)` pair draws from its own stream derived from
/// `base_seed`, so generation parallelizes without losing reproducibility.
pub fn generate_walks(
    g: &Snapshot,
    tables: &AliasTables,
    start_nodes: &[NodeId],
    cfg: &WalkConfig,
    base_seed: u64,
) -> Result<Vec<Vec<NodeId>>> {
    cfg.validate()?;
    if let Some(&bad) = start_nodes.iter().find(|&&u| !g.contains(u)) {
        return Err(Error::MissingNode(bad));
    }
    let mut walks: Vec<Vec<NodeId>> = start_nodes
        .par_iter()
        .flat_map_iter(|&u| (0..cfg.walks_per_node).map(move |w| (u, w)))
        .map(|(u, w)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[base_seed, u as u64, w as u64]));
            rwr_walk(g, tables, u, cfg, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut order_rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[base_seed, tag::SHUFFLE]));
    walks.shuffle(&mut order_rng);
    Ok(walks)
}

/// Visit counts over a walk corpus.
#[derive(Debug, Clone)]
pub struct WalkStats {
    pub visit_counts: HashMap<NodeId, u64>,
    pub unique_nodes: usize,
    pub total_positions: u64,
}

pub fn walk_statistics(walks: &[Vec<NodeId>]) -> Result<WalkStats> {
    if walks.is_empty() {
        return Err(Error::Config("walk statistics need at least one walk".into()));
    }
    let mut visit_counts: HashMap<NodeId, u64> = HashMap::new();
    let mut total = 0u64;
    for walk in walks {
        for &u in walk {
            *visit_counts.entry(u).or_insert(0) += 1;
            total += 1;
        }
    }
    Ok(WalkStats {
        unique_nodes: visit_counts.len(),
        total_positions: total,
        visit_counts,
    })
}
