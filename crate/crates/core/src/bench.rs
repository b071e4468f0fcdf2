//! Scalability harness: time the offline and online stages over growing
//! synthetic inputs and fit a log-log slope.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{step_offline, step_online, EnsembleConfig};
use crate::error::Result;
use crate::seeds::{self, tag};
use crate::synthgen::{ba_dynamic, ba_generate, BaConfig, BaDynamicConfig};

/// Least-squares slope of `y` on `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Slope of `log2(secs)` against `log2(size)`.
pub fn log_log_slope(points: &[(usize, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, s)| ((n as f64).log2(), s.log2()))
        .collect();
    least_squares_slope(&logs)
}

/// Pipeline parameters scaled down for timing runs; the fitted slope does
/// not depend on these constants.
pub fn bench_config() -> EnsembleConfig {
    EnsembleConfig {
        num_learners: 2,
        total_dim: 32,
        walks_per_node: 2,
        walk_length: 20,
        window: 5,
        negatives: 2,
        ..EnsembleConfig::default()
    }
}

/// Time the offline stage on static graphs of the given sizes.
pub fn offline_bench(
    sizes: &[usize],
    ba: &BaConfig,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, tag::GEN, n as u64, 0));
        let g = ba_generate(n, ba, &mut rng)?;
        let started = Instant::now();
        let _ = step_offline(&g.snapshot, cfg, seeds::mix(&[seed, n as u64]))?;
        out.push((n, started.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// Time the online stage for dynamic networks with the given per-snapshot
/// node influx; reports mean seconds per online step.
pub fn online_bench(
    deltas: &[usize],
    snapshots: usize,
    ba: &BaConfig,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(deltas.len());
    for &dv in deltas {
        let gen_cfg = BaDynamicConfig {
            ba: *ba,
            nodes_per_snapshot: dv,
            snapshots,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, tag::GEN, dv as u64, 1));
        let dynamic = ba_dynamic(&gen_cfg, &mut rng)?;
        let net = &dynamic.network;
        let (mut model, _, _) = step_offline(net.snapshot(0), cfg, seeds::mix(&[seed, dv as u64]))?;
        let started = Instant::now();
        for t in 1..net.snapshots().len() {
            let _ = step_online(&mut model, net.snapshot(t - 1), net.snapshot(t), cfg, seed)?;
        }
        let secs = started.elapsed().as_secs_f64() / (net.snapshots().len() - 1) as f64;
        out.push((dv, secs));
    }
    Ok(out)
}
