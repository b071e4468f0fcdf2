//! Skip-gram negative sampling: pair extraction, noise distribution, and
//! stochastic gradient ascent with incremental weight inheritance.
//!
//! A learner holds two trainable matrices. The in-layer rows are the node
//! embeddings handed downstream; the out-layer rows score contexts. For a
//! positive pair `(c, i)` and `q` noise rows `i'`, one step ascends
//! `log sigma(z_c . z'_i) + sum log sigma(-z_c . z'_i')`, touching only the
//! rows involved. Between timesteps, weights are copied row-for-row and new
//! nodes are appended with fresh initialization.

use std::collections::HashMap;

use rand::prelude::*;

use crate::dyngraph::NodeId;
use crate::error::{Error, Result};
use crate::sampler::AliasTable;

/// Numerically stable `1 / (1 + exp(-x))`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `log(sigmoid(x))`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Grow-only node-to-row mapping shared by both matrices of a learner.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocab {
    index: HashMap<NodeId, u32>,
    nodes: Vec<NodeId>,
}

impl Vocab {
    pub fn row_of(&self, node: NodeId) -> Option<u32> {
        self.index.get(&node).copied()
    }

    pub fn node_of(&self, row: u32) -> NodeId {
        self.nodes[row as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, node: NodeId) -> Result<u32> {
        if self.index.contains_key(&node) {
            return Err(Error::Config(format!("node {node} already in vocabulary")));
        }
        let row = self.nodes.len() as u32;
        self.nodes.push(node);
        self.index.insert(node, row);
        Ok(row)
    }
}

/// One base learner's trainable state.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    vocab: Vocab,
    dim: usize,
    in_embed: Vec<f64>,
    out_embed: Vec<f64>,
}

impl LearnerState {
    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.vocab.len()
    }

    pub fn in_row(&self, row: u32) -> &[f64] {
        let d = self.dim;
        &self.in_embed[row as usize * d..(row as usize + 1) * d]
    }

    pub fn out_row(&self, row: u32) -> &[f64] {
        let d = self.dim;
        &self.out_embed[row as usize * d..(row as usize + 1) * d]
    }

    /// Direct access for finite-difference probing in tests.
    pub fn in_embed_mut(&mut self) -> &mut [f64] {
        &mut self.in_embed
    }

    pub fn out_embed_mut(&mut self) -> &mut [f64] {
        &mut self.out_embed
    }

    pub fn all_finite(&self) -> bool {
        self.in_embed.iter().chain(&self.out_embed).all(|x| x.is_finite())
    }
}

fn push_random_row(state: &mut LearnerState, rng: &mut impl Rng) {
    let bound = 0.5 / state.dim as f64;
    for _ in 0..state.dim {
        state.in_embed.push(rng.random_range(-bound..bound));
    }
    state.out_embed.extend(std::iter::repeat(0.0).take(state.dim));
}

/// Fresh learner for `nodes`: in-layer rows uniform in `[-0.5/d, 0.5/d)`,
/// out-layer rows zero.
pub fn init_offline(nodes: &[NodeId], dim: usize, rng: &mut impl Rng) -> Result<LearnerState> {
    if nodes.is_empty() {
        return Err(Error::EmptyGraph("cannot initialize learner with no nodes".into()));
    }
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be >= 1".into()));
    }
    let mut state = LearnerState {
        vocab: Vocab::default(),
        dim,
        in_embed: Vec::with_capacity(nodes.len() * dim),
        out_embed: Vec::with_capacity(nodes.len() * dim),
    };
    for &node in nodes {
        state.vocab.push(node)?;
        push_random_row(&mut state, rng);
    }
    Ok(state)
}

/// Inherit weights from the previous timestep and append rows for new nodes.
///
/// Rows of existing nodes are copied bit-exact in both matrices.
pub fn init_incremental(
    prev: &LearnerState,
    new_nodes: &[NodeId],
    rng: &mut impl Rng,
) -> Result<LearnerState> {
    let mut state = prev.clone();
    for &node in new_nodes {
        state.vocab.push(node)?;
        push_random_row(&mut state, rng);
    }
    Ok(state)
}

/// Positive training pairs as vocabulary row indices.
#[derive(Debug, Clone, Default)]
pub struct PairBatch {
    pub pairs: Vec<(u32, u32)>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Slide a `s+1+s` window over each walk and emit (center, context) pairs,
/// truncated at sequence boundaries.
pub fn extract_pairs(walks: &[Vec<NodeId>], window: usize, vocab: &Vocab) -> Result<PairBatch> {
    if window < 1 {
        return Err(Error::Config("window must be >= 1".into()));
    }
    let total_positions: usize = walks.iter().map(Vec::len).sum();
    let mut pairs = Vec::with_capacity(total_positions.saturating_mul(2 * window));
    let mut rows: Vec<u32> = Vec::new();
    for walk in walks {
        // translate once per walk; pair emission then stays lookup-free
        rows.clear();
        for &node in walk {
            rows.push(vocab.row_of(node).ok_or(Error::VocabMiss(node))?);
        }
        for c in 0..rows.len() {
            let center_row = rows[c];
            let lo = c.saturating_sub(window);
            let hi = (c + window).min(rows.len() - 1);
            for j in lo..=hi {
                if j != c {
                    pairs.push((center_row, rows[j]));
                }
            }
        }
    }
    Ok(PairBatch { pairs })
}

/// Noise distribution over context rows: probability proportional to
/// `count^alpha`.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    rows: Vec<u32>,
    probs: Vec<f64>,
    table: AliasTable,
}

impl NoiseDistribution {
    pub fn support(&self) -> &[u32] {
        &self.rows
    }

    /// Probability of drawing support entry `i`.
    pub fn probability(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.rows[self.table.sample(rng)]
    }
}

pub fn build_noise_distribution(batch: &PairBatch, alpha: f64) -> Result<NoiseDistribution> {
    if batch.is_empty() {
        return Err(Error::Config("noise distribution needs a non-empty batch".into()));
    }
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for &(_, ctx) in &batch.pairs {
        *counts.entry(ctx).or_insert(0) += 1;
    }
    let mut rows: Vec<u32> = counts.keys().copied().collect();
    rows.sort_unstable();
    let weights: Vec<f64> = rows
        .iter()
        .map(|r| (counts[r] as f64).powf(alpha))
        .collect();
    let total: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / total).collect();
    let table = AliasTable::from_weights(&weights)?;
    Ok(NoiseDistribution { rows, probs, table })
}

/// Learning-rate schedule across one training call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSchedule {
    /// Decay linearly from the initial rate to `initial / 1e4`.
    LinearDecay,
    /// Keep the initial rate (useful for gradient checks).
    Constant,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub window: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub noise_exponent: f64,
    pub schedule: LrSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            window: 10,
            negatives: 5,
            learning_rate: 0.025,
            epochs: 1,
            noise_exponent: 0.75,
            schedule: LrSchedule::LinearDecay,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

const MIN_LR_FRACTION: f64 = 1e-4;

/// Gradient of one pair's objective with the given negatives.
///
/// `d_center` is the gradient w.r.t. the center's in-row; `d_out` maps each
/// distinct out-row to its accumulated gradient (a repeated negative row
/// sums its contributions). Everything is evaluated at the current state.
pub fn pair_gradients(
    state: &LearnerState,
    center: u32,
    context: u32,
    negatives: &[u32],
) -> (Vec<f64>, Vec<(u32, Vec<f64>)>) {
    let d = state.dim;
    let zc = state.in_row(center);
    let mut d_center = vec![0.0; d];
    let mut d_out: Vec<(u32, Vec<f64>)> = Vec::with_capacity(1 + negatives.len());

    let mut add_term = |row: u32, coeff: f64, d_center: &mut [f64]| {
        let zo = state.out_row(row);
        for k in 0..d {
            d_center[k] += coeff * zo[k];
        }
        if let Some(entry) = d_out.iter_mut().find(|(r, _)| *r == row) {
            for k in 0..d {
                entry.1[k] += coeff * zc[k];
            }
        } else {
            let g: Vec<f64> = zc.iter().map(|x| coeff * x).collect();
            d_out.push((row, g));
        }
    };

    let pos_dot: f64 = dot(zc, state.out_row(context));
    add_term(context, sigmoid(-pos_dot), &mut d_center);
    for &neg in negatives {
        let neg_dot: f64 = dot(zc, state.out_row(neg));
        add_term(neg, -sigmoid(neg_dot), &mut d_center);
    }
    (d_center, d_out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Train in place by stochastic gradient ascent over the batch.
///
/// Negatives are redrawn per positive pair from `noise`; each pair applies
/// one ascent step on its own objective. Only rows referenced by the batch
/// (centers in the in-layer, contexts and negatives in the out-layer) are
/// written.
pub fn sgd_train(
    state: &mut LearnerState,
    batch: &PairBatch,
    noise: &NoiseDistribution,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<()> {
    cfg.validate()?;
    if batch.is_empty() {
        return Ok(());
    }
    let rows = state.num_rows() as u32;
    if let Some(&(c, x)) = batch.pairs.iter().find(|&&(c, x)| c >= rows || x >= rows) {
        return Err(Error::RowMismatch(format!(
            "pair ({c},{x}) outside vocabulary of {rows} rows"
        )));
    }
    let d = state.dim;
    let total = (batch.len() * cfg.epochs) as f64;
    let mut processed = 0usize;
    let mut negs: Vec<u32> = Vec::with_capacity(cfg.negatives);
    let mut coeffs: Vec<f64> = Vec::with_capacity(cfg.negatives + 1);
    let mut grad_c: Vec<f64> = vec![0.0; d];

    for _ in 0..cfg.epochs {
        for &(center, context) in &batch.pairs {
            let lr = match cfg.schedule {
                LrSchedule::Constant => cfg.learning_rate,
                LrSchedule::LinearDecay => {
                    let frac = 1.0 - processed as f64 / total;
                    cfg.learning_rate * frac.max(MIN_LR_FRACTION)
                }
            };
            processed += 1;

            negs.clear();
            for _ in 0..cfg.negatives {
                negs.push(noise.sample(rng));
            }

            // coefficients and the center gradient come from dots at the
            // current point, before any row is written
            let c0 = center as usize * d;
            coeffs.clear();
            grad_c.iter_mut().for_each(|g| *g = 0.0);
            {
                let zc = &state.in_embed[c0..c0 + d];
                let mut accumulate = |row: u32, positive: bool| {
                    let o0 = row as usize * d;
                    let zo = &state.out_embed[o0..o0 + d];
                    let dot: f64 = zc.iter().zip(zo).map(|(a, b)| a * b).sum();
                    let coeff = if positive {
                        sigmoid(-dot)
                    } else {
                        -sigmoid(dot)
                    };
                    coeffs.push(coeff);
                    for (g, o) in grad_c.iter_mut().zip(zo) {
                        *g += coeff * o;
                    }
                };
                accumulate(context, true);
                for &neg in &negs {
                    accumulate(neg, false);
                }
            }
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient for pair ({center},{context})"
                )));
            }

            // out-layer rows move along the still-unmodified center row
            for (j, &row) in std::iter::once(&context).chain(&negs).enumerate() {
                let o0 = row as usize * d;
                let step = lr * coeffs[j];
                let zc = &state.in_embed[c0..c0 + d];
                let zo = &mut state.out_embed[o0..o0 + d];
                for (o, c) in zo.iter_mut().zip(zc) {
                    *o += step * c;
                }
            }
            let zc = &mut state.in_embed[c0..c0 + d];
            for (c, g) in zc.iter_mut().zip(&grad_c) {
                *c += lr * g;
            }
        }
    }
    Ok(())
}

/// Batch objective with pre-drawn negatives (deterministic).
///
/// `negatives[p]` holds the noise rows for pair `p`.
pub fn objective_value(state: &LearnerState, batch: &PairBatch, negatives: &[Vec<u32>]) -> f64 {
    debug_assert_eq!(batch.len(), negatives.len());
    batch
        .pairs
        .iter()
        .zip(negatives)
        .map(|(&(c, i), negs)| {
            let zc = state.in_row(c);
            let mut v = log_sigmoid(dot(zc, state.out_row(i)));
            for &n in negs {
                v += log_sigmoid(-dot(zc, state.out_row(n)));
            }
            v
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn walk(nodes: &[NodeId]) -> Vec<NodeId> {
        nodes.to_vec()
    }

    #[test]
    fn extract_pairs_boundary_truncation() {
        let state = init_offline(&[0, 1, 2], 4, &mut rng(0)).unwrap();
        let batch = extract_pairs(&[walk(&[0, 1, 2])], 1, state.vocab()).unwrap();
        let expected = vec![(0, 1), (1, 0), (1, 2), (2, 1)];
        assert_eq!(batch.pairs, expected);

        let batch = extract_pairs(&[walk(&[0, 1, 2])], 2, state.vocab()).unwrap();
        assert!(batch.pairs.contains(&(0, 2)));
        assert!(batch.pairs.contains(&(2, 0)));
        assert_eq!(batch.len(), 6);
    }

    #[test]
    fn extract_pairs_count_matches_brute_force() {
        let l = 23usize;
        let s = 4usize;
        let nodes: Vec<NodeId> = (0..l as u32).collect();
        let state = init_offline(&nodes, 2, &mut rng(1)).unwrap();
        let batch = extract_pairs(&[walk(&nodes)], s, state.vocab()).unwrap();
        let mut expected = 0usize;
        for c in 0..l {
            for j in c.saturating_sub(s)..=(c + s).min(l - 1) {
                if j != c {
                    expected += 1;
                }
            }
        }
        assert_eq!(batch.len(), expected);
    }

    #[test]
    fn extract_pairs_unknown_node_errors() {
        let state = init_offline(&[0, 1], 4, &mut rng(0)).unwrap();
        let err = extract_pairs(&[walk(&[0, 9])], 1, state.vocab()).unwrap_err();
        assert!(matches!(err, Error::VocabMiss(9)));
    }

    #[test]
    fn noise_distribution_counts_alpha_one() {
        let batch = PairBatch {
            pairs: vec![(0, 1), (0, 1), (0, 1), (0, 2)],
        };
        let noise = build_noise_distribution(&batch, 1.0).unwrap();
        assert_eq!(noise.support(), &[1, 2]);
        assert!((noise.probability(0) - 0.75).abs() < 1e-15);
        assert!((noise.probability(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn noise_distribution_alpha_three_quarters() {
        let batch = PairBatch {
            pairs: vec![(0, 1), (0, 1), (0, 1), (0, 2)],
        };
        let noise = build_noise_distribution(&batch, 0.75).unwrap();
        let w = 3f64.powf(0.75);
        assert!((noise.probability(0) - w / (w + 1.0)).abs() < 1e-12);
        assert!((noise.probability(1) - 1.0 / (w + 1.0)).abs() < 1e-12);
        let sum: f64 = (0..noise.support().len()).map(|i| noise.probability(i)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_distribution_uniform_counts_any_alpha() {
        let batch = PairBatch {
            pairs: vec![(0, 1), (0, 2), (0, 3)],
        };
        for alpha in [0.0, 0.5, 0.75, 1.0, 2.0] {
            let noise = build_noise_distribution(&batch, alpha).unwrap();
            for i in 0..3 {
                assert!((noise.probability(i) - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn init_offline_shape_and_bounds() {
        let nodes: Vec<NodeId> = (0..7).collect();
        let state = init_offline(&nodes, 5, &mut rng(2)).unwrap();
        assert_eq!(state.num_rows(), 7);
        assert_eq!(state.dim(), 5);
        let bound = 0.5 / 5.0;
        for r in 0..7 {
            assert!(state.in_row(r).iter().all(|x| x.abs() <= bound));
            assert!(state.out_row(r).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn init_offline_deterministic() {
        let nodes: Vec<NodeId> = (0..4).collect();
        let a = init_offline(&nodes, 8, &mut rng(77)).unwrap();
        let b = init_offline(&nodes, 8, &mut rng(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_incremental_copies_and_appends() {
        let prev = init_offline(&[10, 20], 3, &mut rng(5)).unwrap();
        let next = init_incremental(&prev, &[30], &mut rng(6)).unwrap();
        assert_eq!(next.num_rows(), 3);
        for r in 0..2 {
            assert_eq!(prev.in_row(r), next.in_row(r));
            assert_eq!(prev.out_row(r), next.out_row(r));
        }
        assert_eq!(next.vocab().row_of(30), Some(2));

        let same = init_incremental(&prev, &[], &mut rng(6)).unwrap();
        assert_eq!(prev, same);

        assert!(init_incremental(&prev, &[20], &mut rng(6)).is_err());
    }

    #[test]
    fn single_pair_step_increases_sigma() {
        let mut state = init_offline(&[0, 1], 4, &mut rng(9)).unwrap();
        // out rows start at zero; take a couple of steps so the dot moves
        let batch = PairBatch {
            pairs: vec![(0, 1)],
        };
        let noise = build_noise_distribution(&batch, 0.75).unwrap();
        let cfg = TrainConfig {
            negatives: 0,
            learning_rate: 0.05,
            epochs: 3,
            schedule: LrSchedule::Constant,
            ..TrainConfig::default()
        };
        let before = sigmoid(dot(state.in_row(0), state.out_row(1)));
        sgd_train(&mut state, &batch, &noise, &cfg, &mut rng(10)).unwrap();
        let after = sigmoid(dot(state.in_row(0), state.out_row(1)));
        assert!(after > before, "{after} <= {before}");
        assert!(state.all_finite());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let nodes: Vec<NodeId> = (0..6).collect();
        let mut state = init_offline(&nodes, 4, &mut rng(21)).unwrap();
        // move out rows off zero so gradients are nontrivial
        for x in state.out_embed_mut() {
            *x = 0.3 * (*x * 157.0).sin() + 0.1;
        }
        let center = 1u32;
        let context = 3u32;
        let negatives = vec![0u32, 3u32, 5u32]; // includes a repeat of context row
        let batch = PairBatch {
            pairs: vec![(center, context)],
        };
        let negs = vec![negatives.clone()];
        let (d_center, d_out) = pair_gradients(&state, center, context, &negatives);

        let h = 1e-6;
        let d = state.dim();
        let mut check = |analytic: f64, idx: usize, in_layer: bool| {
            let slot = if in_layer {
                &mut state.in_embed_mut()[idx]
            } else {
                &mut state.out_embed_mut()[idx]
            };
            let orig = *slot;
            *slot = orig + h;
            let up = objective_value(&state, &batch, &negs);
            let slot = if in_layer {
                &mut state.in_embed_mut()[idx]
            } else {
                &mut state.out_embed_mut()[idx]
            };
            *slot = orig - h;
            let down = objective_value(&state, &batch, &negs);
            let slot = if in_layer {
                &mut state.in_embed_mut()[idx]
            } else {
                &mut state.out_embed_mut()[idx]
            };
            *slot = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = analytic.abs().max(fd.abs()).max(1e-8);
            assert!(
                (analytic - fd).abs() / denom < 1e-4,
                "analytic {analytic} vs fd {fd}"
            );
        };

        for k in 0..d {
            check(d_center[k], center as usize * d + k, true);
        }
        for (row, grad) in &d_out {
            for k in 0..d {
                check(grad[k], *row as usize * d + k, false);
            }
        }
    }

    #[test]
    fn objective_zero_embeddings_is_log_half() {
        let state = LearnerState {
            vocab: {
                let mut v = Vocab::default();
                v.push(0).unwrap();
                v.push(1).unwrap();
                v
            },
            dim: 3,
            in_embed: vec![0.0; 6],
            out_embed: vec![0.0; 6],
        };
        let batch = PairBatch {
            pairs: vec![(0, 1), (1, 0)],
        };
        let q = 5usize;
        let negs = vec![vec![0; q], vec![1; q]];
        let v = objective_value(&state, &batch, &negs);
        let expected = 2.0 * (1 + q) as f64 * 0.5f64.ln();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn objective_invariant_to_pair_order_and_matches_naive() {
        let nodes: Vec<NodeId> = (0..5).collect();
        let mut state = init_offline(&nodes, 3, &mut rng(31)).unwrap();
        for x in state.out_embed_mut() {
            *x = (*x * 311.0).cos() * 0.2;
        }
        let batch = PairBatch {
            pairs: vec![(0, 1), (2, 3), (4, 0)],
        };
        let negs = vec![vec![2, 2], vec![0, 4], vec![1, 3]];
        let v = objective_value(&state, &batch, &negs);

        // naive unvectorized recomputation
        let mut naive = 0.0;
        for (p, &(c, i)) in batch.pairs.iter().enumerate() {
            let mut dot_ci = 0.0;
            for k in 0..3 {
                dot_ci += state.in_row(c)[k] * state.out_row(i)[k];
            }
            naive += (1.0 / (1.0 + (-dot_ci).exp())).ln();
            for &n in &negs[p] {
                let mut dn = 0.0;
                for k in 0..3 {
                    dn += state.in_row(c)[k] * state.out_row(n)[k];
                }
                naive += (1.0 / (1.0 + dn.exp())).ln();
            }
        }
        assert!((v - naive).abs() < 1e-12);

        let batch_rev = PairBatch {
            pairs: batch.pairs.iter().rev().copied().collect(),
        };
        let negs_rev: Vec<Vec<u32>> = negs.iter().rev().cloned().collect();
        let v_rev = objective_value(&state, &batch_rev, &negs_rev);
        assert!((v - v_rev).abs() < 1e-12);
    }

    #[test]
    fn training_touches_only_batch_rows() {
        let nodes: Vec<NodeId> = (0..8).collect();
        let mut state = init_offline(&nodes, 4, &mut rng(41)).unwrap();
        let before = state.clone();
        let batch = PairBatch {
            pairs: vec![(1, 2), (2, 1), (1, 3)],
        };
        let noise = build_noise_distribution(&batch, 0.75).unwrap();
        let cfg = TrainConfig::default();
        sgd_train(&mut state, &batch, &noise, &cfg, &mut rng(42)).unwrap();

        let touched_centers = [1u32, 2];
        let touched_out = [1u32, 2, 3]; // contexts; negatives come from the same support
        for r in 0..8u32 {
            if !touched_centers.contains(&r) {
                assert_eq!(state.in_row(r), before.in_row(r), "in row {r}");
            }
            if !touched_out.contains(&r) {
                assert_eq!(state.out_row(r), before.out_row(r), "out row {r}");
            }
        }
    }

    #[test]
    fn objective_improves_over_epochs() {
        // fixed tiny corpus: two triangles sharing structure
        let walks = vec![
            walk(&[0, 1, 2, 0, 1]),
            walk(&[3, 4, 5, 3, 4]),
            walk(&[0, 2, 1, 0, 2]),
            walk(&[5, 4, 3, 5, 4]),
        ];
        let nodes: Vec<NodeId> = (0..6).collect();
        let mut improved = 0;
        for seed in 0..5u64 {
            let mut state = init_offline(&nodes, 8, &mut rng(100 + seed)).unwrap();
            let batch = extract_pairs(&walks, 2, state.vocab()).unwrap();
            let noise = build_noise_distribution(&batch, 0.75).unwrap();
            // fixed negatives for measurement
            let mut meas_rng = rng(500 + seed);
            let negs: Vec<Vec<u32>> = (0..batch.len())
                .map(|_| (0..3).map(|_| noise.sample(&mut meas_rng)).collect())
                .collect();
            let before = objective_value(&state, &batch, &negs);
            let cfg = TrainConfig {
                negatives: 3,
                epochs: 10,
                ..TrainConfig::default()
            };
            sgd_train(&mut state, &batch, &noise, &cfg, &mut rng(200 + seed)).unwrap();
            let after = objective_value(&state, &batch, &negs);
            if after > before {
                improved += 1;
            }
        }
        assert!(improved >= 4, "objective improved in only {improved}/5 seeds");
    }

    #[test]
    fn objective_finite_for_large_dots() {
        assert!(log_sigmoid(50.0).is_finite());
        assert!(log_sigmoid(-50.0).is_finite());
        assert!(sigmoid(-50.0) > 0.0);
        assert!((log_sigmoid(-50.0) + 50.0).abs() < 1e-9);
    }

    #[test]
    fn sgd_rejects_out_of_range_rows() {
        let mut state = init_offline(&[0, 1], 2, &mut rng(0)).unwrap();
        let batch = PairBatch {
            pairs: vec![(0, 7)],
        };
        let noise = build_noise_distribution(
            &PairBatch {
                pairs: vec![(0, 1)],
            },
            1.0,
        )
        .unwrap();
        let err = sgd_train(&mut state, &batch, &noise, &TrainConfig::default(), &mut rng(1));
        assert!(matches!(err, Err(Error::RowMismatch(_))));
    }
}
