//! Ensemble orchestration: per-learner restart probabilities and dimension
//! shares, walk generation, incremental training, concatenation and
//! rescaling.
//!
//! At every timestep each of the `M` base learners walks the current
//! snapshot with its own restart probability, trains on its own pair batch,
//! and contributes a `d_m`-wide block to the combined `d`-dimensional
//! embedding. Learners never interact, so they train in parallel; the
//! combined matrix is min-max rescaled per column before downstream use
//! while the raw learner weights stay untouched for the next timestep.

use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};
use std::sync::Arc;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyngraph::{delta, DeltaView, DynamicNetwork, NodeId, Snapshot};
use crate::error::{Error, Result};
use crate::sampler::{generate_walks, AliasTables, WalkConfig};
use crate::seeds::{self, tag};
use crate::sgns::{
    build_noise_distribution, extract_pairs, init_incremental, init_offline, sgd_train,
    LearnerState, TrainConfig,
};

/// How each learner explores the snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    /// Plain random walks (restart probability 0 for every learner).
    Rw,
    /// Random walks with restart, probabilities spread up to `max_restart`.
    Rwr,
}

/// Named method variants from the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Full method: multi-learner, restarts, rescaling.
    SgEdne,
    /// Single learner with plain random walks.
    DneRw,
    /// Multi-learner, plain walks, one shared walk corpus.
    EdneRwFix,
    /// Multi-learner, plain walks, independent corpora.
    EdneRw,
    /// Alias of the full method.
    EdneRwr,
    /// Full method without the rescaling step.
    EdneRwrWs,
}

impl Variant {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "sg-edne" => Self::SgEdne,
            "dne-rw" => Self::DneRw,
            "edne-rw-fix" => Self::EdneRwFix,
            "edne-rw" => Self::EdneRw,
            "edne-rwr" => Self::EdneRwr,
            "edne-rwr-ws" => Self::EdneRwrWs,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SgEdne => "sg-edne",
            Self::DneRw => "dne-rw",
            Self::EdneRwFix => "edne-rw-fix",
            Self::EdneRw => "edne-rw",
            Self::EdneRwr => "edne-rwr",
            Self::EdneRwrWs => "edne-rwr-ws",
        }
    }
}

/// Full configuration of the embedding pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub num_learners: usize,
    pub max_restart: f64,
    pub total_dim: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub noise_exponent: f64,
    pub sampler_mode: SamplerMode,
    pub shared_walks: bool,
    pub rescale: bool,
    /// Retrain from scratch every `k` timesteps to shed accumulated error.
    pub restart_every: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            num_learners: 5,
            max_restart: 0.1,
            total_dim: 128,
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            negatives: 5,
            learning_rate: 0.025,
            epochs: 1,
            noise_exponent: 0.75,
            sampler_mode: SamplerMode::Rwr,
            shared_walks: false,
            rescale: true,
            restart_every: None,
        }
    }
}

impl EnsembleConfig {
    /// Apply a named variant's flags.
    pub fn with_variant(mut self, variant: Variant) -> Self {
        match variant {
            Variant::SgEdne | Variant::EdneRwr => {
                self.sampler_mode = SamplerMode::Rwr;
                self.shared_walks = false;
                self.rescale = true;
            }
            Variant::DneRw => {
                self.num_learners = 1;
                self.sampler_mode = SamplerMode::Rw;
                self.shared_walks = false;
                self.rescale = true;
            }
            Variant::EdneRwFix => {
                self.sampler_mode = SamplerMode::Rw;
                self.shared_walks = true;
                self.rescale = true;
            }
            Variant::EdneRw => {
                self.sampler_mode = SamplerMode::Rw;
                self.shared_walks = false;
                self.rescale = true;
            }
            Variant::EdneRwrWs => {
                self.sampler_mode = SamplerMode::Rwr;
                self.shared_walks = false;
                self.rescale = false;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_learners < 1 {
            return Err(Error::Config("num_learners must be >= 1".into()));
        }
        if self.num_learners > self.total_dim {
            return Err(Error::Config(format!(
                "num_learners ({}) cannot exceed total_dim ({})",
                self.num_learners, self.total_dim
            )));
        }
        if !(0.0..=1.0).contains(&self.max_restart) {
            return Err(Error::Config("max_restart must be in [0,1]".into()));
        }
        self.train_config().validate()?;
        WalkConfig {
            walks_per_node: self.walks_per_node,
            walk_length: self.walk_length,
            restart_prob: 0.0,
        }
        .validate()
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            window: self.window,
            negatives: self.negatives,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            noise_exponent: self.noise_exponent,
            ..TrainConfig::default()
        }
    }

    fn restarts(&self) -> Vec<f64> {
        match self.sampler_mode {
            SamplerMode::Rw => vec![0.0; self.num_learners],
            SamplerMode::Rwr => assign_restarts(self.max_restart, self.num_learners),
        }
    }
}

/// Restart probabilities `R_m = (m-1) * R_max / M` for `m = 1..=M`.
pub fn assign_restarts(max_restart: f64, num_learners: usize) -> Vec<f64> {
    (0..num_learners)
        .map(|m| m as f64 * max_restart / num_learners as f64)
        .collect()
}

/// Dimension shares: `M-1` blocks of `floor(d/M)`, remainder on the last.
pub fn assign_dims(total_dim: usize, num_learners: usize) -> Result<Vec<usize>> {
    if num_learners == 0 {
        return Err(Error::Config("need at least one learner".into()));
    }
    if num_learners > total_dim {
        return Err(Error::Config(format!(
            "cannot split {total_dim} dims across {num_learners} learners"
        )));
    }
    let base = total_dim / num_learners;
    let mut dims = vec![base; num_learners];
    *dims.last_mut().unwrap() += total_dim % num_learners;
    Ok(dims)
}

/// The trained ensemble at some timestep.
#[derive(Debug, Clone)]
pub struct EnsembleModel {
    learners: Vec<LearnerState>,
    restarts: Vec<f64>,
    dims: Vec<usize>,
    timestep: usize,
    tables: AliasTables,
}

impl EnsembleModel {
    pub fn learners(&self) -> &[LearnerState] {
        &self.learners
    }

    pub fn restarts(&self) -> &[f64] {
        &self.restarts
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn timestep(&self) -> usize {
        self.timestep
    }
}

/// The concatenated (and optionally rescaled) embedding matrix for the
/// nodes of one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedEmbedding {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, u32>,
    dim: usize,
    data: Vec<f64>,
}

impl CombinedEmbedding {
    pub fn from_rows(nodes: Vec<NodeId>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if nodes.len() * dim != data.len() {
            return Err(Error::RowMismatch(format!(
                "{} nodes x {dim} dims != {} values",
                nodes.len(),
                data.len()
            )));
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i as u32))
            .collect();
        Ok(Self {
            nodes,
            index,
            dim,
            data,
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.index.contains_key(&node)
    }

    pub fn vector(&self, node: NodeId) -> Option<&[f64]> {
        self.index
            .get(&node)
            .map(|&r| &self.data[r as usize * self.dim..(r as usize + 1) * self.dim])
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Horizontally concatenate per-learner in-layer rows for `nodes`.
pub fn combine(learners: &[LearnerState], nodes: &[NodeId]) -> Result<CombinedEmbedding> {
    let dim: usize = learners.iter().map(|l| l.dim()).sum();
    let mut data = Vec::with_capacity(nodes.len() * dim);
    for &node in nodes {
        for learner in learners {
            let row = learner
                .vocab()
                .row_of(node)
                .ok_or(Error::RowMismatch(format!(
                    "learner vocabulary is missing node {node}"
                )))?;
            data.extend_from_slice(learner.in_row(row));
        }
    }
    CombinedEmbedding::from_rows(nodes.to_vec(), dim, data)
}

/// Min-max rescale every column to [0,1]; constant columns become zeros.
pub fn rescale_minmax_columns(emb: &mut CombinedEmbedding) {
    let (n, d) = (emb.nodes.len(), emb.dim);
    for col in 0..d {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..n {
            let v = emb.data[r * d + col];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = hi - lo;
        for r in 0..n {
            let v = &mut emb.data[r * d + col];
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
    }
}

/// Audit record of one embedding step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub timestep: usize,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub delta_edges: usize,
    pub delta_nodes: usize,
    /// Distinct walk-start nodes per learner.
    pub walk_starts: Vec<usize>,
    /// Emitted walk count per learner.
    pub walk_counts: Vec<usize>,
    /// Hash of each learner's walk corpus (equal corpora hash equal).
    pub corpus_hashes: Vec<u64>,
    /// Nodes visited by each learner's walks.
    pub visited: Vec<BTreeSet<NodeId>>,
    pub wall_secs: f64,
}

struct LearnerStep {
    state: LearnerState,
    walk_count: usize,
    corpus_hash: u64,
    visited: BTreeSet<NodeId>,
}

fn hash_corpus(walks: &[Vec<NodeId>]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    walks.hash(&mut h);
    h.finish()
}

fn train_learner(
    mut state: LearnerState,
    g: &Snapshot,
    tables: &AliasTables,
    walks: &[Vec<NodeId>],
    cfg: &EnsembleConfig,
    train_seed: u64,
) -> Result<LearnerStep> {
    let _ = (g, tables);
    let visited: BTreeSet<NodeId> = walks.iter().flatten().copied().collect();
    if !walks.is_empty() {
        let batch = extract_pairs(walks, cfg.window, state.vocab())?;
        if !batch.is_empty() {
            let noise = build_noise_distribution(&batch, cfg.noise_exponent)?;
            // negative draws dominate RNG traffic in the hot loop; a fast
            // non-crypto generator keeps the per-seed determinism contract
            let mut rng = rand::rngs::SmallRng::seed_from_u64(train_seed);
            sgd_train(&mut state, &batch, &noise, &cfg.train_config(), &mut rng)?;
        }
    }
    Ok(LearnerStep {
        state,
        walk_count: walks.len(),
        corpus_hash: hash_corpus(walks),
        visited,
    })
}

fn run_learners(
    states: Vec<LearnerState>,
    g: &Snapshot,
    tables: &AliasTables,
    starts: &[NodeId],
    restarts: &[f64],
    cfg: &EnsembleConfig,
    seed: u64,
    timestep: usize,
) -> Result<Vec<LearnerStep>> {
    // one shared corpus reproduces the fixed-sequence ablation variant
    let shared: Option<Arc<Vec<Vec<NodeId>>>> = if cfg.shared_walks {
        let walk_cfg = WalkConfig {
            walks_per_node: cfg.walks_per_node,
            walk_length: cfg.walk_length,
            restart_prob: restarts[0],
        };
        let base = seeds::derive(seed, tag::WALKS, 0, timestep as u64);
        Some(Arc::new(generate_walks(g, tables, starts, &walk_cfg, base)?))
    } else {
        None
    };
    states
        .into_par_iter()
        .enumerate()
        .map(|(m, state)| {
            let walks: Arc<Vec<Vec<NodeId>>> = match &shared {
                Some(w) => Arc::clone(w),
                None => {
                    let walk_cfg = WalkConfig {
                        walks_per_node: cfg.walks_per_node,
                        walk_length: cfg.walk_length,
                        restart_prob: restarts[m],
                    };
                    let base = seeds::derive(seed, tag::WALKS, m as u64, timestep as u64);
                    Arc::new(generate_walks(g, tables, starts, &walk_cfg, base)?)
                }
            };
            let train_seed = seeds::derive(seed, tag::TRAIN, m as u64, timestep as u64);
            train_learner(state, g, tables, &walks, cfg, train_seed)
        })
        .collect()
}

fn finish_step(
    model_learners: Vec<LearnerStep>,
    g: &Snapshot,
    cfg: &EnsembleConfig,
    d: &DeltaView,
    timestep: usize,
    started: Instant,
) -> (Vec<LearnerState>, CombinedEmbedding, StepReport) {
    let mut learners = Vec::with_capacity(model_learners.len());
    let mut walk_counts = Vec::new();
    let mut corpus_hashes = Vec::new();
    let mut visited = Vec::new();
    let walks_per_start = cfg.walks_per_node;
    for step in model_learners {
        walk_counts.push(step.walk_count);
        corpus_hashes.push(step.corpus_hash);
        visited.push(step.visited);
        learners.push(step.state);
    }
    let mut emb = combine(&learners, g.nodes()).expect("vocab covers snapshot nodes");
    if cfg.rescale {
        rescale_minmax_columns(&mut emb);
    }
    let report = StepReport {
        timestep,
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        delta_edges: d.new_edges.len(),
        delta_nodes: d.affected_nodes.len(),
        walk_starts: walk_counts
            .iter()
            .map(|&c| if walks_per_start == 0 { 0 } else { c / walks_per_start })
            .collect(),
        walk_counts,
        corpus_hashes,
        visited,
        wall_secs: started.elapsed().as_secs_f64(),
    };
    (learners, emb, report)
}

/// Train the ensemble from scratch on the initial snapshot.
///
/// Every learner walks from all nodes of the snapshot with its own restart
/// probability, initializes randomized weights and trains once.
pub fn step_offline(
    g0: &Snapshot,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<(EnsembleModel, CombinedEmbedding, StepReport)> {
    cfg.validate()?;
    if g0.num_nodes() == 0 {
        return Err(Error::EmptyGraph("offline step needs a non-empty snapshot".into()));
    }
    let started = Instant::now();
    let restarts = cfg.restarts();
    let dims = assign_dims(cfg.total_dim, cfg.num_learners)?;
    let tables = AliasTables::build(g0)?;
    let nodes = g0.nodes().to_vec();

    let states: Vec<LearnerState> = (0..cfg.num_learners)
        .map(|m| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seeds::derive(seed, tag::INIT, m as u64, 0));
            init_offline(&nodes, dims[m], &mut rng)
        })
        .collect::<Result<_>>()?;

    let steps = run_learners(states, g0, &tables, &nodes, &restarts, cfg, seed, 0)?;
    let all_affected = DeltaView {
        new_edges: g0.edges().collect(),
        affected_nodes: nodes.iter().copied().collect(),
    };
    let (learners, emb, report) = finish_step(steps, g0, cfg, &all_affected, 0, started);
    Ok((
        EnsembleModel {
            learners,
            restarts,
            dims,
            timestep: 0,
            tables,
        },
        emb,
        report,
    ))
}

/// Advance the ensemble by one timestep.
///
/// Affected nodes are the endpoints of edges new in `curr`; walks start only
/// there. Learners inherit all previous weights; rows for nodes that joined
/// the snapshot are appended before training. An empty delta skips training
/// and re-emits the combined embedding for the current node set.
pub fn step_online(
    model: &mut EnsembleModel,
    prev: &Snapshot,
    curr: &Snapshot,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<(CombinedEmbedding, StepReport)> {
    cfg.validate()?;
    if cfg.num_learners != model.learners.len() {
        return Err(Error::Config(format!(
            "model has {} learners, config asks for {}",
            model.learners.len(),
            cfg.num_learners
        )));
    }
    let started = Instant::now();
    let timestep = model.timestep + 1;
    let d = delta(prev, curr);

    // vocabulary grows to cover every node of the current snapshot
    let known = &model.learners[0];
    let new_nodes: Vec<NodeId> = curr
        .nodes()
        .iter()
        .copied()
        .filter(|&u| known.vocab().row_of(u).is_none())
        .collect();

    model.tables = model
        .tables
        .update(prev, curr, d.affected_nodes.iter().copied())?;

    let states: Vec<LearnerState> = model
        .learners
        .iter()
        .enumerate()
        .map(|(m, prev_state)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                seed,
                tag::INIT,
                m as u64,
                timestep as u64,
            ));
            init_incremental(prev_state, &new_nodes, &mut rng)
        })
        .collect::<Result<_>>()?;

    let starts: Vec<NodeId> = d.affected_nodes.iter().copied().collect();
    let steps = run_learners(
        states,
        curr,
        &model.tables,
        &starts,
        &model.restarts,
        cfg,
        seed,
        timestep,
    )?;
    let (learners, emb, report) = finish_step(steps, curr, cfg, &d, timestep, started);
    model.learners = learners;
    model.timestep = timestep;
    Ok((emb, report))
}

/// Drive the full pipeline over a dynamic network, invoking `on_step` with
/// each timestep's embedding and report.
pub fn embed_network<F>(
    net: &DynamicNetwork,
    cfg: &EnsembleConfig,
    seed: u64,
    mut on_step: F,
) -> Result<EnsembleModel>
where
    F: FnMut(usize, &CombinedEmbedding, &StepReport) -> Result<()>,
{
    let snapshots = net.snapshots();
    let (mut model, emb, report) = step_offline(&snapshots[0], cfg, seed)?;
    on_step(0, &emb, &report)?;
    for t in 1..snapshots.len() {
        let fresh_start = cfg
            .restart_every
            .map(|k| k > 0 && t % k == 0)
            .unwrap_or(false);
        if fresh_start {
            let (m, emb, report) = step_offline(&snapshots[t], cfg, seeds::mix(&[seed, t as u64]))?;
            model = m;
            model.timestep = t;
            on_step(t, &emb, &report)?;
        } else {
            let (emb, report) = step_online(&mut model, &snapshots[t - 1], &snapshots[t], cfg, seed)?;
            on_step(t, &emb, &report)?;
        }
    }
    Ok(model)
}

/// Write an embedding as text: header `N d`, then one line per node with
/// its label and `d` floats. Values round-trip exactly.
pub fn serialize_embedding<W: Write>(
    emb: &CombinedEmbedding,
    label_of: impl Fn(NodeId) -> String,
    mut w: W,
) -> Result<()> {
    writeln!(w, "{} {}", emb.len(), emb.dim())?;
    let mut line = String::new();
    for (i, &node) in emb.nodes().iter().enumerate() {
        line.clear();
        line.push_str(&label_of(node));
        for v in emb.row(i) {
            line.push(' ');
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Read an embedding written by [`serialize_embedding`], mapping labels
/// back to node ids.
pub fn deserialize_embedding<R: BufRead>(
    reader: R,
    resolve: impl Fn(&str) -> Option<NodeId>,
) -> Result<CombinedEmbedding> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::EmbeddingFormat("missing header".into()))??;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::EmbeddingFormat("bad node count in header".into()))?;
    let d: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::EmbeddingFormat("bad dimension in header".into()))?;
    let mut nodes = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let label = fields
            .next()
            .ok_or_else(|| Error::EmbeddingFormat(format!("empty row {i}")))?;
        let node = resolve(label)
            .ok_or_else(|| Error::EmbeddingFormat(format!("unknown node label {label:?}")))?;
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::EmbeddingFormat(format!("bad float {f:?} in row {i}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != d {
            return Err(Error::EmbeddingFormat(format!(
                "row {i} has {} values, expected {d}",
                values.len()
            )));
        }
        nodes.push(node);
        data.extend(values);
    }
    if nodes.len() != n {
        return Err(Error::EmbeddingFormat(format!(
            "expected {n} rows, found {}",
            nodes.len()
        )));
    }
    CombinedEmbedding::from_rows(nodes, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyngraph::{slice_stream_with_init, ingest_edge_stream};
    use std::io::Cursor;

    #[test]
    fn restart_assignment_examples() {
        let r = assign_restarts(0.1, 5);
        let expected = [0.0, 0.02, 0.04, 0.06, 0.08];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(assign_restarts(0.7, 1), vec![0.0]);
        let r = assign_restarts(0.9, 3);
        for (a, b) in r.iter().zip([0.0, 0.3, 0.6]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dim_assignment_examples() {
        assert_eq!(assign_dims(128, 5).unwrap(), vec![25, 25, 25, 25, 28]);
        assert_eq!(assign_dims(128, 1).unwrap(), vec![128]);
        assert_eq!(assign_dims(10, 3).unwrap(), vec![3, 3, 4]);
        assert!(assign_dims(3, 5).is_err());
    }

    fn ring(n: u32) -> Snapshot {
        Snapshot::from_edges((0..n).map(|i| (i, (i + 1) % n)))
    }

    fn small_cfg() -> EnsembleConfig {
        EnsembleConfig {
            num_learners: 3,
            total_dim: 10,
            walks_per_node: 2,
            walk_length: 8,
            window: 2,
            negatives: 2,
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn offline_output_shape_and_determinism() {
        let g = ring(12);
        let cfg = small_cfg();
        let (model, emb, report) = step_offline(&g, &cfg, 42).unwrap();
        assert_eq!(emb.len(), 12);
        assert_eq!(emb.dim(), 10);
        assert_eq!(model.dims(), &[3, 3, 4]);
        assert_eq!(report.walk_starts, vec![12, 12, 12]);

        let (_, emb2, _) = step_offline(&g, &cfg, 42).unwrap();
        assert_eq!(emb, emb2);
        let (_, emb3, _) = step_offline(&g, &cfg, 43).unwrap();
        assert_ne!(emb, emb3);
    }

    #[test]
    fn combined_dim_is_total_for_any_learner_count() {
        let g = ring(9);
        for m in [1usize, 2, 4, 7] {
            let cfg = EnsembleConfig {
                num_learners: m,
                total_dim: 7.max(m),
                walks_per_node: 1,
                walk_length: 4,
                window: 1,
                negatives: 1,
                ..EnsembleConfig::default()
            };
            let (_, emb, _) = step_offline(&g, &cfg, 7).unwrap();
            assert_eq!(emb.dim(), cfg.total_dim);
        }
    }

    #[test]
    fn column_block_layout_follows_learner_order() {
        let g = ring(8);
        let cfg = EnsembleConfig {
            rescale: false,
            ..small_cfg()
        };
        let (model, emb, _) = step_offline(&g, &cfg, 5).unwrap();
        let learner0 = &model.learners()[0];
        for (i, &node) in emb.nodes().iter().enumerate() {
            let row = learner0.vocab().row_of(node).unwrap();
            assert_eq!(&emb.row(i)[..3], learner0.in_row(row));
        }
    }

    #[test]
    fn online_step_walks_only_affected_nodes() {
        let text = "0 1 0\n1 2 1\n2 3 2\n3 4 3\n4 5 4\n5 0 5\n0 2 6\n1 3 7\n2 4 8\n3 5 9\n";
        let stream = ingest_edge_stream(Cursor::new(text)).unwrap();
        let net = slice_stream_with_init(&stream, 2, 6).unwrap();
        let cfg = small_cfg();
        let (mut model, _, _) = step_offline(net.snapshot(0), &cfg, 1).unwrap();
        let d = delta(net.snapshot(0), net.snapshot(1));
        let (_, report) = step_online(&mut model, net.snapshot(0), net.snapshot(1), &cfg, 1).unwrap();
        for m in 0..cfg.num_learners {
            assert_eq!(report.walk_starts[m], d.affected_nodes.len());
            assert_eq!(report.walk_counts[m], d.affected_nodes.len() * cfg.walks_per_node);
        }
    }

    #[test]
    fn online_untrained_rows_unchanged_before_rescale() {
        // ring plus a far-away chord added later
        let text = "0 1 0\n1 2 1\n2 3 2\n3 4 3\n4 5 4\n5 6 5\n6 7 6\n7 0 7\n0 4 10\n";
        let stream = ingest_edge_stream(Cursor::new(text)).unwrap();
        let net = slice_stream_with_init(&stream, 1, 8).unwrap();
        let cfg = EnsembleConfig {
            rescale: false,
            ..small_cfg()
        };
        let (mut model, _, _) = step_offline(net.snapshot(0), &cfg, 3).unwrap();
        let before = model.learners().to_vec();
        let (_, report) = step_online(&mut model, net.snapshot(0), net.snapshot(1), &cfg, 3).unwrap();
        for (m, learner) in model.learners().iter().enumerate() {
            for &node in net.snapshot(1).nodes() {
                if report.visited[m].contains(&node) {
                    continue;
                }
                let r_new = learner.vocab().row_of(node).unwrap();
                let r_old = before[m].vocab().row_of(node).unwrap();
                assert_eq!(learner.in_row(r_new), before[m].in_row(r_old));
            }
        }
    }

    #[test]
    fn shared_walks_use_one_corpus() {
        let g = ring(10);
        let cfg = EnsembleConfig {
            shared_walks: true,
            sampler_mode: SamplerMode::Rw,
            ..small_cfg()
        };
        let (_, _, report) = step_offline(&g, &cfg, 11).unwrap();
        assert!(report.corpus_hashes.windows(2).all(|w| w[0] == w[1]));

        let cfg_indep = EnsembleConfig {
            shared_walks: false,
            sampler_mode: SamplerMode::Rw,
            ..small_cfg()
        };
        let (_, _, report) = step_offline(&g, &cfg_indep, 11).unwrap();
        assert!(report.corpus_hashes.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn empty_delta_skips_training() {
        let g = ring(6);
        let cfg = small_cfg();
        let (mut model, emb0, _) = step_offline(&g, &cfg, 2).unwrap();
        let before = model.learners().to_vec();
        let (emb1, report) = step_online(&mut model, &g, &g, &cfg, 2).unwrap();
        assert_eq!(report.delta_nodes, 0);
        assert_eq!(report.walk_counts, vec![0; 3]);
        assert_eq!(emb1.len(), emb0.len());
        for (a, b) in model.learners().iter().zip(&before) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dne_rw_equals_isolated_learner() {
        // an M=1 rw run must match the learner-0 block of nothing else;
        // verify the single-learner pipeline is exactly the learner path
        let g = ring(10);
        let mut cfg = EnsembleConfig {
            total_dim: 6,
            walks_per_node: 2,
            walk_length: 6,
            window: 2,
            negatives: 2,
            ..EnsembleConfig::default()
        }
        .with_variant(Variant::DneRw);
        cfg.rescale = false;
        let (model, emb, _) = step_offline(&g, &cfg, 99).unwrap();

        // manual single-learner replay with the same derived seeds
        let tables = AliasTables::build(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(99, tag::INIT, 0, 0));
        let mut state = init_offline(g.nodes(), 6, &mut rng).unwrap();
        let walk_cfg = WalkConfig {
            walks_per_node: 2,
            walk_length: 6,
            restart_prob: 0.0,
        };
        let walks = generate_walks(
            &g,
            &tables,
            g.nodes(),
            &walk_cfg,
            seeds::derive(99, tag::WALKS, 0, 0),
        )
        .unwrap();
        let batch = extract_pairs(&walks, 2, state.vocab()).unwrap();
        let noise = build_noise_distribution(&batch, cfg.noise_exponent).unwrap();
        let mut train_rng = rand::rngs::SmallRng::seed_from_u64(seeds::derive(99, tag::TRAIN, 0, 0));
        let train_cfg = TrainConfig {
            window: 2,
            negatives: 2,
            ..TrainConfig::default()
        };
        sgd_train(&mut state, &batch, &noise, &train_cfg, &mut train_rng).unwrap();

        for (i, &node) in emb.nodes().iter().enumerate() {
            let row = state.vocab().row_of(node).unwrap();
            assert_eq!(emb.row(i), state.in_row(row));
        }
        assert_eq!(model.restarts(), &[0.0]);
    }

    #[test]
    fn learner_blocks_independent_of_ensemble_size() {
        // learner 0 of an M=2 run equals the M=1 run with the same seed
        let g = ring(12);
        let base = EnsembleConfig {
            num_learners: 2,
            total_dim: 8,
            walks_per_node: 2,
            walk_length: 6,
            window: 2,
            negatives: 2,
            sampler_mode: SamplerMode::Rw,
            rescale: false,
            ..EnsembleConfig::default()
        };
        let single = EnsembleConfig {
            num_learners: 1,
            total_dim: 4,
            ..base.clone()
        };
        let (_, emb2, _) = step_offline(&g, &base, 31).unwrap();
        let (_, emb1, _) = step_offline(&g, &single, 31).unwrap();
        for (i, &node) in emb2.nodes().iter().enumerate() {
            let v1 = emb1.vector(node).unwrap();
            assert_eq!(&emb2.row(i)[..4], v1);
        }
    }

    #[test]
    fn rescale_examples() {
        let mut emb = CombinedEmbedding::from_rows(
            vec![0, 1, 2],
            2,
            vec![0.0, 3.0, 5.0, 3.0, 10.0, 3.0],
        )
        .unwrap();
        rescale_minmax_columns(&mut emb);
        assert_eq!(emb.row(0), &[0.0, 0.0]);
        assert_eq!(emb.row(1), &[0.5, 0.0]);
        assert_eq!(emb.row(2), &[1.0, 0.0]);

        let mut emb =
            CombinedEmbedding::from_rows(vec![0, 1], 1, vec![0.0, 1.0]).unwrap();
        rescale_minmax_columns(&mut emb);
        assert_eq!(emb.data(), &[0.0, 1.0]);
    }

    #[test]
    fn rescaled_columns_stay_in_unit_interval() {
        let g = ring(15);
        let cfg = small_cfg();
        let (_, emb, _) = step_offline(&g, &cfg, 8).unwrap();
        for col in 0..emb.dim() {
            for r in 0..emb.len() {
                let v = emb.row(r)[col];
                assert!((0.0..=1.0).contains(&v) && v.is_finite());
            }
        }
    }

    #[test]
    fn embedding_roundtrip_and_validation() {
        let emb = CombinedEmbedding::from_rows(
            vec![4, 9],
            2,
            vec![0.125, -3.5e-7, 1.0, 2.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        serialize_embedding(&emb, |n| format!("n{n}"), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("2 2\n"));

        let back = deserialize_embedding(Cursor::new(&buf), |label| {
            label.strip_prefix('n').and_then(|s| s.parse().ok())
        })
        .unwrap();
        assert_eq!(back, emb);

        let bad = "2 2\nn4 0.5 1.5\nn9 0.25\n";
        let err = deserialize_embedding(Cursor::new(bad.as_bytes()), |label| {
            label.strip_prefix('n').and_then(|s| s.parse().ok())
        });
        assert!(matches!(err, Err(Error::EmbeddingFormat(_))));
    }

    #[test]
    fn variant_flags() {
        let c = EnsembleConfig::default().with_variant(Variant::DneRw);
        assert_eq!(c.num_learners, 1);
        assert_eq!(c.sampler_mode, SamplerMode::Rw);
        let c = EnsembleConfig::default().with_variant(Variant::EdneRwFix);
        assert!(c.shared_walks);
        let c = EnsembleConfig::default().with_variant(Variant::EdneRwrWs);
        assert!(!c.rescale);
        assert_eq!(Variant::parse("sg-edne"), Some(Variant::SgEdne));
        assert_eq!(Variant::parse("nope"), None);
    }

    #[test]
    fn restart_every_reinitializes() {
        let text = "0 1 0\n1 2 1\n2 0 2\n2 3 3\n3 4 4\n4 0 5\n1 3 6\n0 3 7\n";
        let stream = ingest_edge_stream(Cursor::new(text)).unwrap();
        let net = slice_stream_with_init(&stream, 4, 3).unwrap();
        let cfg = EnsembleConfig {
            restart_every: Some(2),
            ..small_cfg()
        };
        let mut reports = Vec::new();
        embed_network(&net, &cfg, 17, |t, _, r| {
            reports.push((t, r.walk_starts[0], r.num_nodes));
            Ok(())
        })
        .unwrap();
        assert_eq!(reports.len(), net.snapshots().len());
        // at t=2 and t=4 the walk-start count equals the full node set
        assert_eq!(reports[2].1, reports[2].2);
        assert_eq!(reports[4].1, reports[4].2);
    }
}
