use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgedne_cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn sgedne(args: &[&str]) -> i32 {
    let mut full = vec!["sgedne"];
    full.extend_from_slice(args);
    run(full)
}

fn write_ba_stream(path: &Path, nodes: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = sgedne::synthgen::ba_generate(nodes, &Default::default(), &mut rng).unwrap();
    let mut buf = Vec::new();
    sgedne::synthgen::write_edge_stream(&g.edges, &mut buf).unwrap();
    fs::write(path, buf).unwrap();
}

#[test]
fn slice_writes_manifests_with_antitone_docs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 120, 1);
    let out = dir.path().join("out");
    let code = sgedne(&[
        "slice",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "4,8,16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);

    let mut docs = Vec::new();
    let mut finals = Vec::new();
    for s in [4usize, 8, 16] {
        let manifest: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(out.join(format!("slices-{s}/manifest.json"))).unwrap(),
        )
        .unwrap();
        docs.push(manifest["degree_of_changes"].as_f64().unwrap());
        let nodes = manifest["node_counts"].as_array().unwrap();
        let edges = manifest["edge_counts"].as_array().unwrap();
        finals.push((
            nodes.last().unwrap().as_u64().unwrap(),
            edges.last().unwrap().as_u64().unwrap(),
        ));
        assert_eq!(manifest["num_slices"].as_u64().unwrap() as usize, s);
    }
    assert!(docs.windows(2).all(|w| w[1] <= w[0]));
    assert!(finals.windows(2).all(|w| w[0] == w[1]));
    assert!(out.join("stream.txt").exists());
}

#[test]
fn slice_missing_input_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = sgedne(&[
        "slice",
        "--input",
        dir.path().join("nope.txt").to_str().unwrap(),
        "--slices",
        "4",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn embed_writes_per_timestep_files_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 60, 2);
    let common = [
        "embed",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "3",
        "--M",
        "2",
        "--dim",
        "8",
        "--walks",
        "2",
        "--walk-len",
        "6",
        "--window",
        "2",
        "--negatives",
        "2",
        "--seed",
        "9",
    ];
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let mut args = common.to_vec();
        args.extend_from_slice(&["--out", out.to_str().unwrap()]);
        assert_eq!(sgedne(&args), EXIT_OK);
    }
    for t in 0..=3 {
        let name = format!("embeddings/t{t:03}.emb");
        let a = fs::read(out_a.join(&name)).unwrap();
        let b = fs::read(out_b.join(&name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "embedding file {name} differs between identical runs");
    }
    assert!(out_a.join("run_manifest.json").exists());
    assert!(out_a.join("config.json").exists());
}

#[test]
fn embed_variant_flag_selects_single_learner() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 40, 3);
    let out = dir.path().join("out");
    let code = sgedne(&[
        "embed",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "2",
        "--variant",
        "dne-rw",
        "--dim",
        "8",
        "--walks",
        "2",
        "--walk-len",
        "6",
        "--window",
        "2",
        "--negatives",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["num_learners"].as_u64(), Some(1));
    assert_eq!(cfg["sampler_mode"].as_str(), Some("rw"));
}

#[test]
fn eval_emits_metrics_and_cross_docs_summary() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 80, 4);
    let out = dir.path().join("out");
    let code = sgedne(&[
        "eval",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "2,4",
        "--M",
        "2",
        "--dim",
        "8",
        "--walks",
        "2",
        "--walk-len",
        "6",
        "--window",
        "2",
        "--negatives",
        "2",
        "--tasks",
        "gr,nr,lp",
        "--k",
        "5",
        "--runs",
        "2",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next().unwrap(),
        "slices,run,seed,timestep,task,metric,k,value"
    );
    assert!(metrics.lines().any(|l| l.contains(",GR,MAP,5,")));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let cells = summary["cross_docs"].as_array().unwrap();
    assert!(!cells.is_empty());
    for cell in cells {
        assert_eq!(cell["per_slicing_means"].as_array().unwrap().len(), 2);
        assert!(cell["stdev"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn eval_unknown_task_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 40, 6);
    let code = sgedne(&[
        "eval",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "2",
        "--tasks",
        "gr,bogus",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn eval_consumes_stored_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 60, 7);
    let emb_out = dir.path().join("emb");
    assert_eq!(
        sgedne(&[
            "embed",
            "--input",
            input.to_str().unwrap(),
            "--slices",
            "3",
            "--M",
            "2",
            "--dim",
            "8",
            "--walks",
            "2",
            "--walk-len",
            "6",
            "--window",
            "2",
            "--negatives",
            "2",
            "--out",
            emb_out.to_str().unwrap(),
        ]),
        EXIT_OK
    );
    let out = dir.path().join("eval");
    let code = sgedne(&[
        "eval",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "3",
        "--embeddings",
        emb_out.join("embeddings").to_str().unwrap(),
        "--tasks",
        "gr",
        "--k",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.lines().count() > 1);
}

#[test]
fn sweep_grid_is_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 50, 8);
    let out = dir.path().join("out");
    let args = [
        "sweep",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "2",
        "--m-range",
        "1..2",
        "--rmax-range",
        "0.1..0.3:0.2",
        "--dim",
        "8",
        "--walks",
        "1",
        "--walk-len",
        "4",
        "--window",
        "1",
        "--negatives",
        "1",
        "--k",
        "3",
        "--runs",
        "1",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(sgedne(&args), EXIT_OK);
    let first = fs::read_to_string(out.join("sweep.csv")).unwrap();
    // 2 x 2 grid, one metric row per point
    assert_eq!(first.lines().count(), 1 + 4);
    assert!(first.lines().skip(1).all(|l| l.contains("GR-MAP@3")));

    // rerun resumes: identical output, no duplicated points
    assert_eq!(sgedne(&args), EXIT_OK);
    let second = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn walkstats_requires_r_list_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 50, 9);
    let out = dir.path().join("out");
    let code = sgedne(&[
        "walkstats",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_USAGE, "missing r-list must be a usage error");

    let args = [
        "walkstats",
        "--input",
        input.to_str().unwrap(),
        "--slices",
        "2",
        "--r-list",
        "0,0.5,1",
        "--walks",
        "4",
        "--walk-len",
        "10",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(sgedne(&args), EXIT_OK);
    let first = fs::read_to_string(out.join("walkstats.csv")).unwrap();
    assert_eq!(sgedne(&args), EXIT_OK);
    let second = fs::read_to_string(out.join("walkstats.csv")).unwrap();
    assert_eq!(first, second);
    // R=1 never leaves the start node
    let last = first.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "1");
    assert_eq!(fields[2], "1");
}

#[test]
fn bench_fits_slopes_on_a_tiny_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let code = sgedne(&[
        "bench",
        "--offline-sizes",
        "2^6..2^8",
        "--online-deltas",
        "2^2..2^4",
        "--snapshots",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bench_summary.json")).unwrap())
            .unwrap();
    assert!(summary["offline_slope"].as_f64().unwrap().is_finite());
    assert!(summary["online_slope"].as_f64().unwrap().is_finite());
    assert!(out.join("bench_offline.csv").exists());
    assert!(out.join("bench_online.csv").exists());
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("stream.txt");
    write_ba_stream(&input, 40, 10);
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        serde_json::json!({
            "input": input,
            "slices": [2],
            "dim": 8,
            "walks": 2,
            "walk_len": 6,
            "window": 2,
            "negatives": 2,
            "num_learners": 2,
            "seed": 4
        })
        .to_string(),
    )
    .unwrap();
    let out = dir.path().join("out");
    // --M on the command line overrides the file's num_learners
    let code = sgedne(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "embed",
        "--M",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["num_learners"].as_u64(), Some(1));
    assert_eq!(cfg["total_dim"].as_u64(), Some(8));
}
