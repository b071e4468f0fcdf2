//! Command-line front end: slicing, embedding, evaluation, parameter
//! sweeps, scalability benchmarks and walk statistics.
//!
//! Every command is deterministic given its configuration and `--seed`,
//! and writes a config echo next to its outputs. Exit codes: 0 success,
//! 1 usage error, 2 data error, 3 internal error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use sgedne::bench::{bench_config, log_log_slope, offline_bench, online_bench};
use sgedne::dyngraph::{
    degree_of_changes, ingest_edge_stream, slice_stream, DynamicNetwork, EdgeStream,
    DEFAULT_INIT_FRACTION,
};
use sgedne::ensemble::{
    deserialize_embedding, embed_network, serialize_embedding, EnsembleConfig, Variant,
};
use sgedne::evaltasks::{
    robustness_summary, run_protocol, Metric, ProtocolConfig, ProtocolReport, Task,
};
use sgedne::sampler::{generate_walks, walk_statistics, AliasTables, WalkConfig};
use sgedne::synthgen::BaConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Data(_) => EXIT_DATA,
            Self::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Internal(m) => m,
        }
    }
}

impl From<sgedne::Error> for CliError {
    fn from(e: sgedne::Error) -> Self {
        use sgedne::Error::*;
        match e {
            Config(_) => Self::Usage(e.to_string()),
            Parse { .. } | EmptyStream | EmptyGraph(_) | Io(_) | EmbeddingFormat(_)
            | MissingNode(_) | NegativeSampling(_) | MetricUndefined(_) => {
                Self::Data(e.to_string())
            }
            VocabMiss(_) | RowMismatch(_) | NonFinite(_) => Self::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Data(format!("json: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "sgedne", version, about = "Dynamic network embedding toolkit")]
struct Cli {
    /// Cap the rayon worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Slice an edge stream into dynamic networks with different DoCs.
    Slice(SliceArgs),
    /// Embed one sliced network, writing per-timestep embedding files.
    Embed(EmbedArgs),
    /// Run the evaluation protocol, optionally across several slicings.
    Eval(EvalArgs),
    /// Grid sweep over learner count and maximum restart probability.
    Sweep(SweepArgs),
    /// Scalability benchmark on synthetic preferential-attachment graphs.
    Bench(BenchArgs),
    /// Walk statistics for a list of restart probabilities.
    Walkstats(WalkstatsArgs),
}

#[derive(Args, Debug, Clone)]
struct MethodArgs {
    /// Method variant: sg-edne|dne-rw|edne-rw-fix|edne-rw|edne-rwr|edne-rwr-ws.
    #[arg(long)]
    variant: Option<String>,

    /// Number of base learners.
    #[arg(long = "M")]
    num_learners: Option<usize>,

    /// Maximum restart probability.
    #[arg(long)]
    rmax: Option<f64>,

    /// Unified embedding dimensionality.
    #[arg(long)]
    dim: Option<usize>,

    /// Walks per start node.
    #[arg(long)]
    walks: Option<usize>,

    /// Walk length.
    #[arg(long = "walk-len")]
    walk_len: Option<usize>,

    /// Sliding-window half width.
    #[arg(long)]
    window: Option<usize>,

    /// Negative samples per positive pair.
    #[arg(long)]
    negatives: Option<usize>,

    /// Initial learning rate.
    #[arg(long)]
    lr: Option<f64>,
}

#[derive(Args, Debug)]
struct SliceArgs {
    /// Edge-stream file: "src dst timestamp" per line.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Comma-separated slice counts, e.g. 20,40,60,80,100.
    #[arg(long, value_delimiter = ',')]
    slices: Option<Vec<usize>>,

    /// Fraction of records forming the initial snapshot.
    #[arg(long = "init-fraction")]
    init_fraction: Option<f64>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long)]
    input: Option<PathBuf>,

    /// Slice count for the network to embed.
    #[arg(long)]
    slices: Option<usize>,

    #[arg(long = "init-fraction")]
    init_fraction: Option<f64>,

    #[command(flatten)]
    method: MethodArgs,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    input: Option<PathBuf>,

    /// Slice counts to evaluate; several counts give a cross-DoCs summary.
    #[arg(long, value_delimiter = ',')]
    slices: Option<Vec<usize>>,

    #[arg(long = "init-fraction")]
    init_fraction: Option<f64>,

    /// Directory of embedding files from `embed` (single-run evaluation).
    #[arg(long)]
    embeddings: Option<PathBuf>,

    #[command(flatten)]
    method: MethodArgs,

    /// Tasks to score: gr,nr,lp.
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<String>>,

    /// MAP cutoffs.
    #[arg(long = "k", value_delimiter = ',')]
    ks: Option<Vec<usize>>,

    /// Independent runs per network.
    #[arg(long)]
    runs: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    input: Option<PathBuf>,

    #[arg(long)]
    slices: Option<usize>,

    #[arg(long = "init-fraction")]
    init_fraction: Option<f64>,

    /// Learner-count range, inclusive, e.g. 1..10.
    #[arg(long = "m-range")]
    m_range: Option<String>,

    /// Restart-probability range with step, e.g. 0.1..0.9:0.2.
    #[arg(long = "rmax-range")]
    rmax_range: Option<String>,

    #[command(flatten)]
    method: MethodArgs,

    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<String>>,

    #[arg(long = "k", value_delimiter = ',')]
    ks: Option<Vec<usize>>,

    #[arg(long)]
    runs: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Offline sizes as powers of two, e.g. 2^6..2^16.
    #[arg(long = "offline-sizes")]
    offline_sizes: Option<String>,

    /// Online per-snapshot node influx, e.g. 2^2..2^12.
    #[arg(long = "online-deltas")]
    online_deltas: Option<String>,

    /// Snapshot count for online runs.
    #[arg(long)]
    snapshots: Option<usize>,

    #[command(flatten)]
    method: MethodArgs,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WalkstatsArgs {
    #[arg(long)]
    input: Option<PathBuf>,

    #[arg(long)]
    slices: Option<usize>,

    #[arg(long = "init-fraction")]
    init_fraction: Option<f64>,

    /// Restart probabilities to profile.
    #[arg(long = "r-list", value_delimiter = ',')]
    r_list: Option<Vec<f64>>,

    /// Start node label; defaults to the highest-degree node.
    #[arg(long)]
    start: Option<String>,

    #[arg(long)]
    walks: Option<usize>,

    #[arg(long = "walk-len")]
    walk_len: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    out: Option<PathBuf>,
}

/// File-backed defaults; explicit flags win.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub slices: Option<Vec<usize>>,
    pub init_fraction: Option<f64>,
    pub variant: Option<String>,
    pub num_learners: Option<usize>,
    pub rmax: Option<f64>,
    pub dim: Option<usize>,
    pub walks: Option<usize>,
    pub walk_len: Option<usize>,
    pub window: Option<usize>,
    pub negatives: Option<usize>,
    pub lr: Option<f64>,
    pub tasks: Option<Vec<String>>,
    pub ks: Option<Vec<usize>>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let file_cfg = match load_file_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return e.code();
        }
    };
    let result = match cli.command {
        Command::Slice(a) => cmd_slice(a, &file_cfg),
        Command::Embed(a) => cmd_embed(a, &file_cfg),
        Command::Eval(a) => cmd_eval(a, &file_cfg),
        Command::Sweep(a) => cmd_sweep(a, &file_cfg),
        Command::Bench(a) => cmd_bench(a, &file_cfg),
        Command::Walkstats(a) => cmd_walkstats(a, &file_cfg),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn load_file_config(path: Option<&Path>) -> CliResult<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let file = File::open(p)
                .map_err(|e| CliError::Usage(format!("config file {}: {e}", p.display())))?;
            serde_json::from_reader(BufReader::new(file))
                .map_err(|e| CliError::Usage(format!("config file {}: {e}", p.display())))
        }
    }
}

fn method_config(args: &MethodArgs, file: &FileConfig) -> CliResult<EnsembleConfig> {
    let mut cfg = EnsembleConfig::default();
    if let Some(name) = args.variant.as_ref().or(file.variant.as_ref()) {
        let variant = Variant::parse(name)
            .ok_or_else(|| CliError::Usage(format!("unknown variant {name:?}")))?;
        cfg = cfg.with_variant(variant);
    }
    if let Some(m) = args.num_learners.or(file.num_learners) {
        cfg.num_learners = m;
    }
    if let Some(r) = args.rmax.or(file.rmax) {
        cfg.max_restart = r;
    }
    if let Some(d) = args.dim.or(file.dim) {
        cfg.total_dim = d;
    }
    if let Some(w) = args.walks.or(file.walks) {
        cfg.walks_per_node = w;
    }
    if let Some(l) = args.walk_len.or(file.walk_len) {
        cfg.walk_length = l;
    }
    if let Some(s) = args.window.or(file.window) {
        cfg.window = s;
    }
    if let Some(q) = args.negatives.or(file.negatives) {
        cfg.negatives = q;
    }
    if let Some(lr) = args.lr.or(file.lr) {
        cfg.learning_rate = lr;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_tasks(names: &[String]) -> CliResult<Vec<Task>> {
    names
        .iter()
        .map(|n| Task::parse(n).ok_or_else(|| CliError::Usage(format!("unknown task {n:?}"))))
        .collect()
}

fn load_stream(path: &Path) -> CliResult<EdgeStream> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("input {}: {e}", path.display())))?;
    Ok(ingest_edge_stream(BufReader::new(file))?)
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

fn out_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn warn_on_lcc_drops(net: &DynamicNetwork, slices: usize) {
    let dropped: usize = net.lcc_dropped().iter().sum();
    if dropped > 0 {
        eprintln!(
            "warning: {slices}-slice network dropped {dropped} node occurrences at LCC restriction; their embeddings are retained"
        );
    }
}

fn cmd_slice(args: SliceArgs, file: &FileConfig) -> CliResult<()> {
    let input = required(args.input.or(file.input.clone()), "input")?;
    let slices = required(args.slices.or(file.slices.clone()), "slices")?;
    if slices.is_empty() {
        return Err(CliError::Usage("slice list is empty".into()));
    }
    let init_fraction = args
        .init_fraction
        .or(file.init_fraction)
        .unwrap_or(DEFAULT_INIT_FRACTION);
    let out = required(args.out.or(file.out.clone()), "out")?;
    out_dir(&out)?;
    let stream = load_stream(&input)?;

    // cleaned ordered stream is persisted once; each manifest pins a slicing
    let stream_path = out.join("stream.txt");
    {
        let mut w = BufWriter::new(File::create(&stream_path)?);
        for r in stream.records() {
            writeln!(
                w,
                "{} {} {}",
                stream.interner().label(r.src),
                stream.interner().label(r.dst),
                r.timestamp
            )?;
        }
    }

    println!("slices  DoCs      nodes   edges");
    for &s in &slices {
        let net = slice_stream(&stream, s, init_fraction)?;
        warn_on_lcc_drops(&net, s);
        let manifest = net.manifest(s, init_fraction);
        let dir = out.join(format!("slices-{s}"));
        out_dir(&dir)?;
        write_json(&dir.join("manifest.json"), &manifest)?;
        let last = net.snapshots().last().unwrap();
        println!(
            "{s:<7} {:<9.2} {:<7} {}",
            degree_of_changes(&net)?,
            last.num_nodes(),
            last.num_edges()
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunManifest {
    config: EnsembleConfig,
    seed: u64,
    slices: usize,
    init_fraction: f64,
    timesteps: Vec<TimestepEntry>,
}

#[derive(Debug, Serialize)]
struct TimestepEntry {
    timestep: usize,
    nodes: usize,
    edges: usize,
    delta_edges: usize,
    delta_nodes: usize,
    walk_counts: Vec<usize>,
    wall_secs: f64,
}

fn cmd_embed(args: EmbedArgs, file: &FileConfig) -> CliResult<()> {
    let input = required(args.input.or(file.input.clone()), "input")?;
    let slices = required(
        args.slices
            .or_else(|| file.slices.as_ref().and_then(|v| v.first().copied())),
        "slices",
    )?;
    let init_fraction = args
        .init_fraction
        .or(file.init_fraction)
        .unwrap_or(DEFAULT_INIT_FRACTION);
    let out = required(args.out.or(file.out.clone()), "out")?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let cfg = method_config(&args.method, file)?;

    out_dir(&out)?;
    let emb_dir = out.join("embeddings");
    out_dir(&emb_dir)?;
    let stream = load_stream(&input)?;
    let net = slice_stream(&stream, slices, init_fraction)?;
    warn_on_lcc_drops(&net, slices);

    write_json(&out.join("config.json"), &cfg)?;
    let interner = net.interner().clone();
    let mut entries = Vec::new();
    embed_network(&net, &cfg, seed, |t, emb, report| {
        let path = emb_dir.join(format!("t{t:03}.emb"));
        let file = File::create(&path)?;
        serialize_embedding(emb, |n| interner.label(n).to_string(), BufWriter::new(file))?;
        entries.push(TimestepEntry {
            timestep: t,
            nodes: report.num_nodes,
            edges: report.num_edges,
            delta_edges: report.delta_edges,
            delta_nodes: report.delta_nodes,
            walk_counts: report.walk_counts.clone(),
            wall_secs: report.wall_secs,
        });
        Ok(())
    })?;
    let manifest = RunManifest {
        config: cfg,
        seed,
        slices,
        init_fraction,
        timesteps: entries,
    };
    write_json(&out.join("run_manifest.json"), &manifest)?;
    println!(
        "embedded {} timesteps into {}",
        manifest.timesteps.len(),
        emb_dir.display()
    );
    Ok(())
}

fn metrics_csv(path: &Path, reports: &[(usize, ProtocolReport)]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "slices,run,seed,timestep,task,metric,k,value")?;
    for (slices, report) in reports {
        for r in &report.records {
            writeln!(
                w,
                "{slices},{},{},{},{},{},{},{}",
                r.run,
                r.seed,
                r.timestep,
                r.metric.task().name(),
                r.metric.metric_name(),
                r.metric.k().map(|k| k.to_string()).unwrap_or_default(),
                r.value
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    tasks: Vec<Task>,
    ks: Vec<usize>,
    runs: usize,
    seed: u64,
    per_slicing: Vec<SlicingSummary>,
    cross_docs: Vec<CrossDocsCell>,
}

#[derive(Debug, Serialize)]
struct SlicingSummary {
    slices: usize,
    docs: f64,
    means: Vec<(String, f64)>,
}

#[derive(Debug, Serialize)]
struct CrossDocsCell {
    metric: String,
    per_slicing_means: Vec<f64>,
    mean: f64,
    stdev: f64,
}

fn cmd_eval(args: EvalArgs, file: &FileConfig) -> CliResult<()> {
    let input = required(args.input.or(file.input.clone()), "input")?;
    let slices = required(args.slices.or(file.slices.clone()), "slices")?;
    if slices.is_empty() {
        return Err(CliError::Usage("slice list is empty".into()));
    }
    let init_fraction = args
        .init_fraction
        .or(file.init_fraction)
        .unwrap_or(DEFAULT_INIT_FRACTION);
    let out = required(args.out.or(file.out.clone()), "out")?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let runs = args.runs.or(file.runs).unwrap_or(10);
    let task_names = args
        .tasks
        .or(file.tasks.clone())
        .unwrap_or_else(|| vec!["gr".into(), "nr".into(), "lp".into()]);
    let tasks = parse_tasks(&task_names)?;
    let ks = args.ks.or(file.ks.clone()).unwrap_or_else(|| vec![5, 50]);
    let method = method_config(&args.method, file)?;
    out_dir(&out)?;

    let stream = load_stream(&input)?;

    if let Some(emb_dir) = args.embeddings {
        let s = slices[0];
        let net = slice_stream(&stream, s, init_fraction)?;
        let report = eval_stored_embeddings(&net, &emb_dir, &tasks, &ks, seed)?;
        metrics_csv(&out.join("metrics.csv"), &[(s, report)])?;
        println!("evaluated stored embeddings from {}", emb_dir.display());
        return Ok(());
    }

    let mut reports: Vec<(usize, ProtocolReport)> = Vec::new();
    let mut summaries = Vec::new();
    for &s in &slices {
        let net = slice_stream(&stream, s, init_fraction)?;
        warn_on_lcc_drops(&net, s);
        let pcfg = ProtocolConfig {
            method: method.clone(),
            tasks: tasks.clone(),
            ks: ks.clone(),
            runs,
            base_seed: seed,
            ..ProtocolConfig::default()
        };
        let report = run_protocol(&net, &pcfg)?;
        summaries.push(SlicingSummary {
            slices: s,
            docs: degree_of_changes(&net)?,
            means: report
                .means
                .iter()
                .map(|(m, v)| (m.to_string(), *v))
                .collect(),
        });
        reports.push((s, report));
    }
    metrics_csv(&out.join("metrics.csv"), &reports)?;

    let borrowed: Vec<(usize, &ProtocolReport)> =
        reports.iter().map(|(s, r)| (*s, r)).collect();
    let cells = robustness_summary(&borrowed);
    let cross_docs: Vec<CrossDocsCell> = cells
        .iter()
        .map(|(metric, cell)| CrossDocsCell {
            metric: metric.to_string(),
            per_slicing_means: cell.means.clone(),
            mean: cell.mean,
            stdev: cell.stdev,
        })
        .collect();
    for cell in &cross_docs {
        println!("{}: {:.4} +/- {:.4}", cell.metric, cell.mean, cell.stdev);
    }
    let summary = EvalSummary {
        tasks,
        ks,
        runs,
        seed,
        per_slicing: summaries,
        cross_docs,
    };
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("config.json"), &method)?;
    Ok(())
}

/// Score stored per-timestep embedding files against the sliced network.
fn eval_stored_embeddings(
    net: &DynamicNetwork,
    emb_dir: &Path,
    tasks: &[Task],
    ks: &[usize],
    seed: u64,
) -> CliResult<ProtocolReport> {
    use sgedne::evaltasks as ev;
    let interner = net.interner();
    let last_t = net.snapshots().len() - 1;
    let mut report = ProtocolReport::default();
    let mut lr_models: std::collections::BTreeMap<ev::FeatureMode, ev::LrModel> =
        Default::default();
    let mut embeddings = Vec::new();
    for t in 0..=last_t {
        let path = emb_dir.join(format!("t{t:03}.emb"));
        let file = File::open(&path)
            .map_err(|e| CliError::Data(format!("embedding {}: {e}", path.display())))?;
        let emb = deserialize_embedding(BufReader::new(file), |label| interner.resolve(label))?;
        embeddings.push(emb);
    }
    let dim = embeddings[0].dim();
    for mode in [ev::FeatureMode::WeightedL1, ev::FeatureMode::WeightedL2] {
        lr_models.insert(mode, ev::LrModel::new(dim));
    }
    let push = |t: usize, metric: Metric, tv: ev::TaskValue, report: &mut ProtocolReport| {
        if let Some(value) = tv.value {
            report.records.push(ev::MetricRecord {
                run: 0,
                seed,
                timestep: t,
                metric,
                value,
            });
        }
    };
    for t in 0..=last_t {
        let emb = &embeddings[t];
        let g_t = net.snapshot(t);
        if tasks.contains(&Task::Gr) {
            for &k in ks {
                let tv = ev::graph_reconstruction(emb, g_t, k, &Default::default())?;
                push(t, Metric::GrMap(k), tv, &mut report);
            }
        }
        if tasks.contains(&Task::Nr) && t < last_t {
            let next = net.snapshot(t + 1);
            let d = sgedne::dyngraph::delta(g_t, next);
            for &k in ks {
                let tv = ev::node_recommendation(emb, next, &d.affected_nodes, k)?;
                push(t, Metric::NrMap(k), tv, &mut report);
            }
        }
        if tasks.contains(&Task::Lp) && t >= 1 {
            let d_now = sgedne::dyngraph::delta(net.snapshot(t - 1), g_t);
            for (&mode, model) in lr_models.iter_mut() {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed ^ (t as u64) << 8 ^ mode as u64,
                );
                ev::lp_train_incremental(
                    model,
                    emb,
                    &d_now.new_edges,
                    g_t,
                    mode,
                    &Default::default(),
                    &mut rng,
                )?;
            }
            if t < last_t {
                let next = net.snapshot(t + 1);
                let d_next = sgedne::dyngraph::delta(g_t, next);
                let usable: Vec<_> = d_next
                    .new_edges
                    .iter()
                    .copied()
                    .filter(|(u, v)| emb.contains(*u) && emb.contains(*v))
                    .collect();
                if !usable.is_empty() {
                    let covered: Vec<_> = next
                        .nodes()
                        .iter()
                        .copied()
                        .filter(|&n| emb.contains(n))
                        .collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed ^ (t as u64) << 16);
                    let neg = ev::sample_non_edges(next, &covered, usable.len(), 100, &mut rng)?;
                    for (&mode, model) in lr_models.iter() {
                        let tv = ev::lp_evaluate(model, emb, &usable, &neg, mode)?;
                        push(t, Metric::LpAuc(mode), tv, &mut report);
                    }
                }
            }
        }
    }
    Ok(report)
}

fn parse_usize_range(text: &str) -> CliResult<Vec<usize>> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::Usage(format!("range {text:?} must look like 1..10")))?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad range start in {text:?}")))?;
    let hi: usize = hi
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad range end in {text:?}")))?;
    if lo > hi {
        return Err(CliError::Usage(format!("empty range {text:?}")));
    }
    Ok((lo..=hi).collect())
}

fn parse_f64_range(text: &str) -> CliResult<Vec<f64>> {
    let (range, step) = text
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("range {text:?} must look like 0.1..0.9:0.2")))?;
    let (lo, hi) = range
        .split_once("..")
        .ok_or_else(|| CliError::Usage(format!("range {text:?} must look like 0.1..0.9:0.2")))?;
    let lo: f64 = lo.trim().parse().map_err(|_| {
        CliError::Usage(format!("bad range start in {text:?}"))
    })?;
    let hi: f64 = hi.trim().parse().map_err(|_| {
        CliError::Usage(format!("bad range end in {text:?}"))
    })?;
    let step: f64 = step.trim().parse().map_err(|_| {
        CliError::Usage(format!("bad range step in {text:?}"))
    })?;
    if !(step > 0.0) || hi < lo {
        return Err(CliError::Usage(format!("empty range {text:?}")));
    }
    let mut out = Vec::new();
    let mut v = lo;
    while v <= hi + 1e-12 {
        out.push((v * 1e9).round() / 1e9);
        v += step;
    }
    Ok(out)
}

/// Powers-of-two list: `2^6..2^16` (step x2) or a plain comma list.
fn parse_size_list(text: &str) -> CliResult<Vec<usize>> {
    if let Some((lo, hi)) = text.split_once("..") {
        let parse_pow = |s: &str| -> CliResult<u32> {
            s.trim()
                .strip_prefix("2^")
                .and_then(|e| e.parse().ok())
                .ok_or_else(|| CliError::Usage(format!("expected 2^k in {text:?}")))
        };
        let lo = parse_pow(lo)?;
        let hi = parse_pow(hi)?;
        if lo > hi {
            return Err(CliError::Usage(format!("empty range {text:?}")));
        }
        Ok((lo..=hi).map(|e| 1usize << e).collect())
    } else {
        text.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad size {s:?}")))
            })
            .collect()
    }
}

fn cmd_sweep(args: SweepArgs, file: &FileConfig) -> CliResult<()> {
    let input = required(args.input.or(file.input.clone()), "input")?;
    let slices = required(
        args.slices
            .or_else(|| file.slices.as_ref().and_then(|v| v.first().copied())),
        "slices",
    )?;
    let init_fraction = args
        .init_fraction
        .or(file.init_fraction)
        .unwrap_or(DEFAULT_INIT_FRACTION);
    let out = required(args.out.or(file.out.clone()), "out")?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let runs = args.runs.or(file.runs).unwrap_or(1);
    let tasks = parse_tasks(
        &args
            .tasks
            .or(file.tasks.clone())
            .unwrap_or_else(|| vec!["gr".into()]),
    )?;
    let ks = args.ks.or(file.ks.clone()).unwrap_or_else(|| vec![5]);
    let m_values = parse_usize_range(args.m_range.as_deref().unwrap_or("1..10"))?;
    let rmax_values = parse_f64_range(args.rmax_range.as_deref().unwrap_or("0.1..0.9:0.2"))?;
    let base_method = method_config(&args.method, file)?;
    out_dir(&out)?;

    let csv_path = out.join("sweep.csv");
    let mut done: BTreeSet<(usize, String)> = BTreeSet::new();
    let mut lines: Vec<String> = Vec::new();
    if csv_path.exists() {
        let text = fs::read_to_string(&csv_path)?;
        for line in text.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            if let (Some(m), Some(r)) = (fields.next(), fields.next()) {
                if let Ok(m) = m.parse::<usize>() {
                    done.insert((m, r.to_string()));
                }
            }
            lines.push(line.to_string());
        }
        println!("resuming sweep: {} completed points", done.len());
    }

    let stream = load_stream(&input)?;
    let net = slice_stream(&stream, slices, init_fraction)?;
    for &m in &m_values {
        for &rmax in &rmax_values {
            let key = (m, format!("{rmax}"));
            if done.contains(&key) {
                continue;
            }
            let mut method = base_method.clone();
            method.num_learners = m;
            method.max_restart = rmax;
            method.validate()?;
            let pcfg = ProtocolConfig {
                method: method.clone(),
                tasks: tasks.clone(),
                ks: ks.clone(),
                runs,
                base_seed: seed,
                ..ProtocolConfig::default()
            };
            let report = run_protocol(&net, &pcfg)?;
            let echo = csv_quote(&serde_json::to_string(&method)?);
            for (metric, value) in &report.means {
                lines.push(format!("{m},{rmax},{metric},{value},{echo}"));
            }
            // rewrite after each point so interrupted sweeps resume
            let mut w = BufWriter::new(File::create(&csv_path)?);
            writeln!(w, "m,rmax,metric,value,config")?;
            for l in &lines {
                writeln!(w, "{l}")?;
            }
            w.flush()?;
            println!("sweep point M={m} rmax={rmax} done");
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchSummary {
    offline_slope: f64,
    online_slope: f64,
    config: EnsembleConfig,
    seed: u64,
}

fn cmd_bench(args: BenchArgs, file: &FileConfig) -> CliResult<()> {
    let out = required(args.out.or(file.out.clone()), "out")?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let offline_sizes = parse_size_list(args.offline_sizes.as_deref().unwrap_or("2^6..2^16"))?;
    let online_deltas = parse_size_list(args.online_deltas.as_deref().unwrap_or("2^2..2^12"))?;
    let snapshots = args.snapshots.unwrap_or(20);
    out_dir(&out)?;

    // reduced constants keep the timing runs tractable; slopes are what matter
    let mut cfg = bench_config();
    if args.method.num_learners.is_some()
        || args.method.dim.is_some()
        || args.method.walks.is_some()
        || args.method.walk_len.is_some()
        || args.method.window.is_some()
        || args.method.negatives.is_some()
        || args.method.variant.is_some()
        || args.method.rmax.is_some()
        || args.method.lr.is_some()
    {
        cfg = method_config(&args.method, file)?;
    }
    let ba = BaConfig::default();

    let offline = offline_bench(&offline_sizes, &ba, &cfg, seed)?;
    {
        let mut w = BufWriter::new(File::create(out.join("bench_offline.csv"))?);
        writeln!(w, "nodes,secs")?;
        for (n, s) in &offline {
            writeln!(w, "{n},{s}")?;
        }
    }
    let offline_slope = log_log_slope(&offline);
    println!("offline slope (log2 time vs log2 nodes): {offline_slope:.3}");

    let online = online_bench(&online_deltas, snapshots, &ba, &cfg, seed)?;
    {
        let mut w = BufWriter::new(File::create(out.join("bench_online.csv"))?);
        writeln!(w, "delta_nodes,secs_per_step")?;
        for (n, s) in &online {
            writeln!(w, "{n},{s}")?;
        }
    }
    let online_slope = log_log_slope(&online);
    println!("online slope (log2 time vs log2 delta): {online_slope:.3}");

    write_json(
        &out.join("bench_summary.json"),
        &BenchSummary {
            offline_slope,
            online_slope,
            config: cfg,
            seed,
        },
    )?;
    Ok(())
}

fn cmd_walkstats(args: WalkstatsArgs, file: &FileConfig) -> CliResult<()> {
    let input = required(args.input.or(file.input.clone()), "input")?;
    let slices = required(
        args.slices
            .or_else(|| file.slices.as_ref().and_then(|v| v.first().copied())),
        "slices",
    )?;
    let init_fraction = args
        .init_fraction
        .or(file.init_fraction)
        .unwrap_or(DEFAULT_INIT_FRACTION);
    let r_list = required(args.r_list, "r-list")?;
    if r_list.is_empty() {
        return Err(CliError::Usage("r-list is empty".into()));
    }
    let out = required(args.out.or(file.out.clone()), "out")?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let walks = args.walks.or(file.walks).unwrap_or(10);
    let walk_len = args.walk_len.or(file.walk_len).unwrap_or(80);
    out_dir(&out)?;

    let stream = load_stream(&input)?;
    let net = slice_stream(&stream, slices, init_fraction)?;
    let g = net.snapshots().last().unwrap();
    let start = match args.start {
        Some(label) => net
            .interner()
            .resolve(&label)
            .filter(|&n| g.contains(n))
            .ok_or_else(|| {
                CliError::Data(format!("start node {label:?} not in the last snapshot"))
            })?,
        None => *g
            .nodes()
            .iter()
            .max_by_key(|&&n| (g.degree(n), std::cmp::Reverse(n)))
            .unwrap(),
    };
    let tables = AliasTables::build(g)?;

    let mut stats_w = BufWriter::new(File::create(out.join("walkstats.csv"))?);
    writeln!(stats_w, "restart,start,unique_nodes,total_positions")?;
    let mut visits_w = BufWriter::new(File::create(out.join("visits.csv"))?);
    writeln!(visits_w, "restart,node,count")?;
    for &r in &r_list {
        let cfg = WalkConfig {
            walks_per_node: walks,
            walk_length: walk_len,
            restart_prob: r,
        };
        let corpus = generate_walks(g, &tables, &[start], &cfg, seed)?;
        let stats = walk_statistics(&corpus)?;
        writeln!(
            stats_w,
            "{r},{},{},{}",
            net.interner().label(start),
            stats.unique_nodes,
            stats.total_positions
        )?;
        let mut counts: Vec<(sgedne::dyngraph::NodeId, u64)> =
            stats.visit_counts.into_iter().collect();
        counts.sort_unstable();
        for (node, count) in counts {
            writeln!(visits_w, "{r},{},{count}", net.interner().label(node))?;
        }
        println!(
            "R={r}: {} unique nodes over {} positions",
            stats.unique_nodes, stats.total_positions
        );
    }
    Ok(())
}
