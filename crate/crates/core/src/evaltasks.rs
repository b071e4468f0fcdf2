//! Downstream evaluation: graph reconstruction, node recommendation and
//! link prediction, with MAP@k and AUC as indices.
//!
//! Ranking tasks use cosine similarity between embeddings with ties broken
//! by ascending node index. Link prediction trains an incremental logistic
//! regression on edge features built from the current embeddings, using
//! this step's new edges as positives and sampled non-edges as negatives,
//! then scores the next step's new edges. The protocol runner averages
//! every task over timesteps and reports means over independent runs;
//! across several slicings of the same stream, the spread of those means
//! measures robustness.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyngraph::{delta, DynamicNetwork, NodeId, Snapshot};
use crate::ensemble::{embed_network, CombinedEmbedding, EnsembleConfig};
use crate::error::{Error, Result};
use crate::seeds::{self, tag};
use crate::sgns::sigmoid;

/// Downstream task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    Gr,
    Nr,
    Lp,
}

impl Task {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gr" => Some(Self::Gr),
            "nr" => Some(Self::Nr),
            "lp" => Some(Self::Lp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gr => "GR",
            Self::Nr => "NR",
            Self::Lp => "LP",
        }
    }
}

/// Binary operators turning two node embeddings into an edge feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    WeightedL1,
    WeightedL2,
}

impl FeatureMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::WeightedL1 => "L1",
            Self::WeightedL2 => "L2",
        }
    }
}

/// One reported index, e.g. `GR-MAP@5` or `LP-AUC-L1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    GrMap(usize),
    NrMap(usize),
    LpAuc(FeatureMode),
}

impl Metric {
    pub fn task(&self) -> Task {
        match self {
            Self::GrMap(_) => Task::Gr,
            Self::NrMap(_) => Task::Nr,
            Self::LpAuc(_) => Task::Lp,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Self::GrMap(k) | Self::NrMap(k) => Some(*k),
            Self::LpAuc(_) => None,
        }
    }

    pub fn metric_name(&self) -> String {
        match self {
            Self::GrMap(_) | Self::NrMap(_) => "MAP".into(),
            Self::LpAuc(mode) => format!("AUC-{}", mode.name()),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GrMap(k) => write!(f, "GR-MAP@{k}"),
            Self::NrMap(k) => write!(f, "NR-MAP@{k}"),
            Self::LpAuc(m) => write!(f, "LP-AUC-{}", m.name()),
        }
    }
}

/// Per-query relevant node sets.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub relevant: HashMap<NodeId, Vec<NodeId>>,
}

/// Cosine similarity; a zero-norm vector makes the pair similarity 0.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Rank `candidates` by descending cosine similarity to `query`, ties by
/// ascending node id; returns the top `k`. The query is skipped if it
/// appears among the candidates.
pub fn cosine_rank(
    emb: &CombinedEmbedding,
    query: NodeId,
    candidates: &[NodeId],
    k: usize,
) -> Result<Vec<NodeId>> {
    let qv = emb
        .vector(query)
        .ok_or(Error::MissingNode(query))?;
    let mut scored: Vec<(NodeId, f64)> = Vec::with_capacity(candidates.len());
    for &c in candidates {
        if c == query {
            continue;
        }
        let cv = emb.vector(c).ok_or(Error::MissingNode(c))?;
        scored.push((c, cosine_similarity(qv, cv)));
    }
    let cmp = |a: &(NodeId, f64), b: &(NodeId, f64)| {
        b.1.partial_cmp(&a.1)
            .expect("similarities are finite")
            .then(a.0.cmp(&b.0))
    };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    Ok(scored.into_iter().map(|(n, _)| n).collect())
}

/// Average precision truncated at rank `k`, normalized by
/// `min(k, |relevant|)` so a perfect ranking scores 1.
pub fn average_precision_at_k(
    ranked: &[NodeId],
    relevant: &HashSet<NodeId>,
    k: usize,
) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, n) in ranked.iter().take(k).enumerate() {
        if relevant.contains(n) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / k.min(relevant.len()) as f64
}

/// Queries evaluated vs skipped (empty truth or missing embedding).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapAudit {
    pub evaluated: usize,
    pub skipped: usize,
}

/// Mean of per-query AP@k; queries with an empty truth set are skipped and
/// counted in the audit.
pub fn map_at_k(
    rankings: &[(NodeId, Vec<NodeId>)],
    truth: &GroundTruth,
    k: usize,
) -> (Option<f64>, MapAudit) {
    let mut audit = MapAudit::default();
    let mut sum = 0.0;
    for (query, ranked) in rankings {
        let relevant: HashSet<NodeId> = match truth.relevant.get(query) {
            Some(r) if !r.is_empty() => r.iter().copied().collect(),
            _ => {
                audit.skipped += 1;
                continue;
            }
        };
        sum += average_precision_at_k(ranked, &relevant, k);
        audit.evaluated += 1;
    }
    if audit.evaluated == 0 {
        (None, audit)
    } else {
        (Some(sum / audit.evaluated as f64), audit)
    }
}

/// A task score with its coverage audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskValue {
    pub value: Option<f64>,
    pub audit: MapAudit,
}

/// Optional query/candidate subsampling for large graphs.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct GrSampling {
    pub max_queries: Option<usize>,
    pub max_candidates: Option<usize>,
    pub seed: u64,
}

/// Reconstruct a snapshot from embeddings: every node queries for its
/// neighbors among all other nodes.
pub fn graph_reconstruction(
    emb: &CombinedEmbedding,
    g: &Snapshot,
    k: usize,
    sampling: &GrSampling,
) -> Result<TaskValue> {
    let mut queries: Vec<NodeId> = g.nodes().to_vec();
    let mut candidates: Vec<NodeId> = g.nodes().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    if let Some(cap) = sampling.max_queries {
        if queries.len() > cap {
            queries.shuffle(&mut rng);
            queries.truncate(cap);
            queries.sort_unstable();
        }
    }
    if let Some(cap) = sampling.max_candidates {
        if candidates.len() > cap {
            candidates.shuffle(&mut rng);
            candidates.truncate(cap);
            candidates.sort_unstable();
        }
    }
    let mut audit = MapAudit::default();
    let usable: Vec<NodeId> = queries
        .iter()
        .copied()
        .filter(|&q| {
            let ok = emb.contains(q);
            if !ok {
                audit.skipped += 1;
            }
            ok
        })
        .collect();
    let rankings: Vec<(NodeId, Vec<NodeId>)> = usable
        .par_iter()
        .map(|&q| cosine_rank(emb, q, &candidates, k).map(|r| (q, r)))
        .collect::<Result<_>>()?;
    let truth = GroundTruth {
        relevant: usable
            .iter()
            .map(|&q| (q, g.neighbors(q).to_vec()))
            .collect(),
    };
    let (value, map_audit) = map_at_k(&rankings, &truth, k);
    audit.evaluated = map_audit.evaluated;
    audit.skipped += map_audit.skipped;
    Ok(TaskValue { value, audit })
}

/// Recommend neighbors for the affected nodes of the next snapshot using
/// the current embeddings; truth is each node's full (old and new)
/// neighborhood in the next snapshot. Affected nodes without an embedding
/// are skipped and audited.
pub fn node_recommendation(
    emb: &CombinedEmbedding,
    g_next: &Snapshot,
    affected: &BTreeSet<NodeId>,
    k: usize,
) -> Result<TaskValue> {
    let mut audit = MapAudit::default();
    let queries: Vec<NodeId> = affected
        .iter()
        .copied()
        .filter(|&q| {
            let ok = emb.contains(q) && g_next.contains(q);
            if !ok {
                audit.skipped += 1;
            }
            ok
        })
        .collect();
    if queries.is_empty() {
        return Ok(TaskValue { value: None, audit });
    }
    let candidates: Vec<NodeId> = g_next
        .nodes()
        .iter()
        .copied()
        .filter(|&n| emb.contains(n))
        .collect();
    let rankings: Vec<(NodeId, Vec<NodeId>)> = queries
        .par_iter()
        .map(|&q| cosine_rank(emb, q, &candidates, k).map(|r| (q, r)))
        .collect::<Result<_>>()?;
    let truth = GroundTruth {
        relevant: queries
            .iter()
            .map(|&q| (q, g_next.neighbors(q).to_vec()))
            .collect(),
    };
    let (value, map_audit) = map_at_k(&rankings, &truth, k);
    audit.evaluated = map_audit.evaluated;
    audit.skipped += map_audit.skipped;
    Ok(TaskValue { value, audit })
}

/// Elementwise `|z_u - z_v|` or `(z_u - z_v)^2`.
pub fn edge_features(z_u: &[f64], z_v: &[f64], mode: FeatureMode) -> Result<Vec<f64>> {
    if z_u.len() != z_v.len() {
        return Err(Error::RowMismatch(format!(
            "edge feature length mismatch: {} vs {}",
            z_u.len(),
            z_v.len()
        )));
    }
    Ok(z_u
        .iter()
        .zip(z_v)
        .map(|(a, b)| match mode {
            FeatureMode::WeightedL1 => (a - b).abs(),
            FeatureMode::WeightedL2 => (a - b) * (a - b),
        })
        .collect())
}

/// Incremental logistic regression over edge features.
#[derive(Debug, Clone)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LrModel {
    pub fn new(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }

    fn sgd_step(&mut self, features: &[f64], label: f64, lr: f64) {
        let err = label - self.predict(features);
        for (w, x) in self.weights.iter_mut().zip(features) {
            *w += lr * err * x;
        }
        self.bias += lr * err;
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite()) && self.bias.is_finite()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LpConfig {
    pub passes: usize,
    pub learning_rate: f64,
    /// Rejection-sampling budget per requested non-edge.
    pub max_retry_factor: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            passes: 5,
            learning_rate: 0.1,
            max_retry_factor: 100,
        }
    }
}

/// Uniformly sample `count` node pairs (with replacement) that are not
/// edges of `g`, from the given candidate nodes.
pub fn sample_non_edges(
    g: &Snapshot,
    candidates: &[NodeId],
    count: usize,
    max_retry_factor: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(NodeId, NodeId)>> {
    if candidates.len() < 2 {
        return Err(Error::NegativeSampling(
            "need at least two candidate nodes".into(),
        ));
    }
    let mut out = Vec::with_capacity(count);
    let budget = count.saturating_mul(max_retry_factor).max(max_retry_factor);
    let mut attempts = 0usize;
    while out.len() < count {
        if attempts >= budget {
            return Err(Error::NegativeSampling(format!(
                "{} non-edges found after {attempts} attempts",
                out.len()
            )));
        }
        attempts += 1;
        let u = candidates[rng.random_range(0..candidates.len())];
        let v = candidates[rng.random_range(0..candidates.len())];
        if u != v && !g.has_edge(u, v) {
            out.push((u, v));
        }
    }
    Ok(out)
}

/// Continue training the logistic regression on this step's new edges
/// (positives) against an equal number of sampled non-edges.
///
/// Weights carry over between calls; nothing is reinitialized.
pub fn lp_train_incremental(
    model: &mut LrModel,
    emb: &CombinedEmbedding,
    positives: &[(NodeId, NodeId)],
    g: &Snapshot,
    mode: FeatureMode,
    cfg: &LpConfig,
    rng: &mut impl Rng,
) -> Result<usize> {
    let usable: Vec<&(NodeId, NodeId)> = positives
        .iter()
        .filter(|(u, v)| emb.contains(*u) && emb.contains(*v))
        .collect();
    let skipped = positives.len() - usable.len();
    if usable.is_empty() {
        return Ok(skipped);
    }
    let covered: Vec<NodeId> = g
        .nodes()
        .iter()
        .copied()
        .filter(|&n| emb.contains(n))
        .collect();
    let negatives = sample_non_edges(g, &covered, usable.len(), cfg.max_retry_factor, rng)?;

    let mut examples: Vec<(Vec<f64>, f64)> = Vec::with_capacity(2 * usable.len());
    for (u, v) in &usable {
        let f = edge_features(emb.vector(*u).unwrap(), emb.vector(*v).unwrap(), mode)?;
        examples.push((f, 1.0));
    }
    for (u, v) in &negatives {
        let f = edge_features(emb.vector(*u).unwrap(), emb.vector(*v).unwrap(), mode)?;
        examples.push((f, 0.0));
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for _ in 0..cfg.passes {
        order.shuffle(rng);
        for &i in &order {
            let (f, y) = &examples[i];
            model.sgd_step(f, *y, cfg.learning_rate);
        }
    }
    if !model.is_finite() {
        return Err(Error::NonFinite("logistic regression weights".into()));
    }
    Ok(skipped)
}

/// AUC by rank-sum with average ranks for ties.
pub fn auc(scored: &[(f64, bool)]) -> Result<f64> {
    let n_pos = scored.iter().filter(|(_, l)| *l).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::MetricUndefined(format!(
            "AUC needs both classes, got {n_pos} positives / {n_neg} negatives"
        )));
    }
    let mut idx: Vec<usize> = (0..scored.len()).collect();
    idx.sort_by(|&a, &b| scored[a].0.partial_cmp(&scored[b].0).expect("finite scores"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scored[idx[j]].0 == scored[idx[i]].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &x in &idx[i..j] {
            if scored[x].1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Score the model on future new edges against sampled non-edges.
pub fn lp_evaluate(
    model: &LrModel,
    emb: &CombinedEmbedding,
    test_pos: &[(NodeId, NodeId)],
    test_neg: &[(NodeId, NodeId)],
    mode: FeatureMode,
) -> Result<TaskValue> {
    let mut audit = MapAudit::default();
    let mut scored = Vec::with_capacity(test_pos.len() + test_neg.len());
    for (set, label) in [(test_pos, true), (test_neg, false)] {
        for (u, v) in set {
            match (emb.vector(*u), emb.vector(*v)) {
                (Some(zu), Some(zv)) => {
                    scored.push((model.predict(&edge_features(zu, zv, mode)?), label));
                    audit.evaluated += 1;
                }
                _ => audit.skipped += 1,
            }
        }
    }
    match auc(&scored) {
        Ok(v) => Ok(TaskValue {
            value: Some(v),
            audit,
        }),
        Err(Error::MetricUndefined(_)) => Ok(TaskValue { value: None, audit }),
        Err(e) => Err(e),
    }
}

/// One per-timestep metric observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub run: usize,
    pub seed: u64,
    pub timestep: usize,
    pub metric: Metric,
    pub value: f64,
}

/// Evaluation protocol settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub method: EnsembleConfig,
    pub tasks: Vec<Task>,
    pub ks: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    pub lp: LpConfig,
    pub gr_sampling: GrSampling,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            method: EnsembleConfig::default(),
            tasks: vec![Task::Gr, Task::Nr, Task::Lp],
            ks: vec![5, 50],
            runs: 10,
            base_seed: 0,
            lp: LpConfig::default(),
            gr_sampling: GrSampling::default(),
        }
    }
}

/// Aggregated protocol output: per-timestep records, per-run timestep
/// averages, and their mean over runs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub records: Vec<MetricRecord>,
    pub per_run: BTreeMap<Metric, Vec<f64>>,
    pub means: BTreeMap<Metric, f64>,
    pub skipped_queries: usize,
}

/// Step through all timesteps for every run seed, score each requested
/// task per timestep, and average over timesteps and runs.
pub fn run_protocol(net: &DynamicNetwork, cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    if net.snapshots().len() < 2 {
        return Err(Error::Config("protocol needs at least 2 snapshots".into()));
    }
    if cfg.runs == 0 {
        return Err(Error::Config("protocol needs at least 1 run".into()));
    }
    let runs: Vec<(usize, Vec<MetricRecord>, usize)> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let seed = seeds::derive(cfg.base_seed, tag::RUN, run as u64, 0);
            let (records, skipped) = run_once(net, cfg, run, seed)?;
            Ok((run, records, skipped))
        })
        .collect::<Result<_>>()?;

    let mut report = ProtocolReport::default();
    let mut per_run_per_metric: BTreeMap<Metric, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for (run, records, skipped) in runs {
        report.skipped_queries += skipped;
        for rec in records {
            per_run_per_metric
                .entry(rec.metric)
                .or_default()
                .entry(run)
                .or_default()
                .push(rec.value);
            report.records.push(rec);
        }
    }
    for (metric, by_run) in per_run_per_metric {
        let averages: Vec<f64> = by_run
            .values()
            .map(|vals| vals.iter().sum::<f64>() / vals.len() as f64)
            .collect();
        let mean = averages.iter().sum::<f64>() / averages.len() as f64;
        report.per_run.insert(metric, averages);
        report.means.insert(metric, mean);
    }
    Ok(report)
}

fn run_once(
    net: &DynamicNetwork,
    cfg: &ProtocolConfig,
    run: usize,
    seed: u64,
) -> Result<(Vec<MetricRecord>, usize)> {
    let last_t = net.snapshots().len() - 1;
    let mut records = Vec::new();
    let mut skipped = 0usize;
    let mut lr_models: BTreeMap<FeatureMode, LrModel> =
        [FeatureMode::WeightedL1, FeatureMode::WeightedL2]
            .into_iter()
            .map(|m| (m, LrModel::new(cfg.method.total_dim)))
            .collect();

    let push = |records: &mut Vec<MetricRecord>,
                skipped: &mut usize,
                t: usize,
                metric: Metric,
                tv: TaskValue| {
        *skipped += tv.audit.skipped;
        if let Some(value) = tv.value {
            records.push(MetricRecord {
                run,
                seed,
                timestep: t,
                metric,
                value,
            });
        }
    };

    embed_network(net, &cfg.method, seed, |t, emb, _report| {
        let g_t = net.snapshot(t);
        if cfg.tasks.contains(&Task::Gr) {
            for &k in &cfg.ks {
                let sampling = GrSampling {
                    seed: seeds::mix(&[seed, tag::CONTROL, t as u64]),
                    ..cfg.gr_sampling
                };
                let tv = graph_reconstruction(emb, g_t, k, &sampling)?;
                push(&mut records, &mut skipped, t, Metric::GrMap(k), tv);
            }
        }
        if cfg.tasks.contains(&Task::Nr) && t < last_t {
            let next = net.snapshot(t + 1);
            let d = delta(g_t, next);
            for &k in &cfg.ks {
                let tv = node_recommendation(emb, next, &d.affected_nodes, k)?;
                push(&mut records, &mut skipped, t, Metric::NrMap(k), tv);
            }
        }
        if cfg.tasks.contains(&Task::Lp) && t >= 1 {
            let d_now = delta(net.snapshot(t - 1), g_t);
            for (&mode, model) in lr_models.iter_mut() {
                let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                    seed,
                    tag::LP_NEG,
                    mode as u64,
                    t as u64,
                ));
                skipped +=
                    lp_train_incremental(model, emb, &d_now.new_edges, g_t, mode, &cfg.lp, &mut rng)?;
            }
            if t < last_t {
                let next = net.snapshot(t + 1);
                let d_next = delta(g_t, next);
                if !d_next.new_edges.is_empty() {
                    let covered: Vec<NodeId> = next
                        .nodes()
                        .iter()
                        .copied()
                        .filter(|&n| emb.contains(n))
                        .collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                        seed,
                        tag::LP_TEST_NEG,
                        0,
                        t as u64,
                    ));
                    let usable_pos: Vec<(NodeId, NodeId)> = d_next
                        .new_edges
                        .iter()
                        .copied()
                        .filter(|(u, v)| emb.contains(*u) && emb.contains(*v))
                        .collect();
                    if !usable_pos.is_empty() {
                        let test_neg = sample_non_edges(
                            next,
                            &covered,
                            usable_pos.len(),
                            cfg.lp.max_retry_factor,
                            &mut rng,
                        )?;
                        for (&mode, model) in lr_models.iter() {
                            let tv = lp_evaluate(model, emb, &usable_pos, &test_neg, mode)?;
                            push(&mut records, &mut skipped, t, Metric::LpAuc(mode), tv);
                        }
                    } else {
                        skipped += d_next.new_edges.len();
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok((records, skipped))
}

/// One Table-style cell: per-slicing means, their mean and spread.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessCell {
    pub slicings: Vec<usize>,
    pub means: Vec<f64>,
    pub mean: f64,
    pub stdev: f64,
}

/// Combine per-slicing protocol reports into mean +/- stdev cells
/// (population stdev over the slicing means).
pub fn robustness_summary(
    per_slicing: &[(usize, &ProtocolReport)],
) -> BTreeMap<Metric, RobustnessCell> {
    let mut metrics: BTreeSet<Metric> = BTreeSet::new();
    for (_, report) in per_slicing {
        metrics.extend(report.means.keys().copied());
    }
    metrics
        .into_iter()
        .filter_map(|metric| {
            let mut slicings = Vec::new();
            let mut means = Vec::new();
            for (s, report) in per_slicing {
                if let Some(&m) = report.means.get(&metric) {
                    slicings.push(*s);
                    means.push(m);
                }
            }
            if means.is_empty() {
                return None;
            }
            let mean = means.iter().sum::<f64>() / means.len() as f64;
            let var =
                means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / means.len() as f64;
            Some((
                metric,
                RobustnessCell {
                    slicings,
                    means,
                    mean,
                    stdev: var.sqrt(),
                },
            ))
        })
        .collect()
}
