//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use awe::data::{archive_to_bytes, read_archive, Segment, SegmentArchive};
use awe::eval::{average_precision, dtw_distance, ScoredPair, ScoredPairList};
use awe::experiment::{run_reference_experiment, ExperimentConfig, ExperimentModel, ResultRow};
use awe::models::gradient_check_suite;
use awe::net::Matrix;
use awe::optim::{adadelta_scalar, AdadeltaConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// ---------------------------------------------------------------- 1

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let records = gradient_check_suite(20, 2024, 1e-5).expect("gradient check runs");
    let elapsed = start.elapsed();
    let worst = records.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    let checked: usize = records.iter().map(|r| r.checked).sum();
    let skipped: usize = records.iter().map(|r| r.skipped).sum();
    let all_checked = records.iter().all(|r| r.checked > 0);
    outcome(
        worst <= 1e-6 && all_checked && elapsed < Duration::from_secs(60),
        format!(
            "{} net/loss combinations, {checked} coordinates checked ({skipped} at kinks), worst relative error {worst:.2e} <= 1e-6, {:.1} s < 60 s",
            records.len(),
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------- 2

/// Threshold sweep straight from the definition: for every distinct
/// distance t, count pairs with distance <= t.
fn ap_oracle(pairs: &[ScoredPair]) -> f64 {
    let positives = pairs.iter().filter(|p| p.same).count() as f64;
    let mut thresholds: Vec<f64> = pairs.iter().map(|p| p.distance).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let tp = pairs.iter().filter(|p| p.same && p.distance <= t).count() as f64;
        let all = pairs.iter().filter(|p| p.distance <= t).count() as f64;
        let recall = tp / positives;
        ap += (tp / all) * (recall - prev_recall);
        prev_recall = recall;
    }
    ap
}

fn ap_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut tied = 0;
    let mut done = 0;
    while done < 1000 {
        let n = rng.random_range(2..=60);
        let types = rng.random_range(1..=n.min(12));
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..types)).collect();
        let levels = if done % 2 == 0 { Some(rng.random_range(2..=8)) } else { None };
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut d: f64 = rng.random_range(0.0..1.0);
                if let Some(k) = levels {
                    d = (d * k as f64).floor() / k as f64;
                }
                pairs.push(ScoredPair {
                    distance: d,
                    same: labels[i] == labels[j],
                });
            }
        }
        if !pairs.iter().any(|p| p.same) {
            continue;
        }
        if levels.is_some() {
            tied += 1;
        }
        let list = ScoredPairList {
            num_segments: n,
            pairs,
        };
        let ap = average_precision(&list).expect("positives present").ap;
        worst = worst.max((ap - ap_oracle(&list.pairs)).abs());
        done += 1;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(30),
        format!(
            "1000 instances ({tied} with forced ties), max |AP - oracle| = {worst:.1e} <= 1e-12, {:.1} s < 30 s",
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------- 3

fn frame_cosine_distance(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    (1.0 - (dot / (nx * ny)).clamp(-1.0, 1.0)) / 2.0
}

/// Enumerates every monotone path with steps (1,0), (0,1), (1,1); keeps the
/// cheapest (shortest among equals) and normalizes by its length.
fn dtw_oracle(x: &Matrix, y: &Matrix) -> f64 {
    fn walk(
        x: &Matrix,
        y: &Matrix,
        i: usize,
        j: usize,
        cost: f64,
        len: usize,
        best: &mut (f64, usize),
    ) {
        let cost = cost + frame_cosine_distance(x.row(i), y.row(j));
        let len = len + 1;
        if i + 1 == x.rows() && j + 1 == y.rows() {
            if cost < best.0 || (cost == best.0 && len < best.1) {
                *best = (cost, len);
            }
            return;
        }
        if i + 1 < x.rows() && j + 1 < y.rows() {
            walk(x, y, i + 1, j + 1, cost, len, best);
        }
        if i + 1 < x.rows() {
            walk(x, y, i + 1, j, cost, len, best);
        }
        if j + 1 < y.rows() {
            walk(x, y, i, j + 1, cost, len, best);
        }
    }
    let mut best = (f64::INFINITY, usize::MAX);
    walk(x, y, 0, 0, 0.0, 0, &mut best);
    best.0 / best.1 as f64
}

fn random_sequence<R: Rng>(rng: &mut R, t: usize, b: usize) -> Matrix {
    Matrix::from_vec(t, b, (0..t * b).map(|_| rng.random_range(-1.0..1.0)).collect())
}

fn dtw_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let b = rng.random_range(1..=4);
        let (t1, t2) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let x = random_sequence(&mut rng, t1, b);
        let y = random_sequence(&mut rng, t2, b);
        let d = dtw_distance(&x, &y).expect("valid sequences");
        worst = worst.max((d - dtw_oracle(&x, &y)).abs());
    }
    let mut worst_self = 0.0f64;
    let mut worst_sym = 0.0f64;
    for _ in 0..100 {
        let b = rng.random_range(1..=6);
        let (t1, t2) = (rng.random_range(1..=30), rng.random_range(1..=30));
        let x = random_sequence(&mut rng, t1, b);
        let y = random_sequence(&mut rng, t2, b);
        worst_self = worst_self.max(dtw_distance(&x, &x).unwrap().abs());
        worst_sym = worst_sym
            .max((dtw_distance(&x, &y).unwrap() - dtw_distance(&y, &x).unwrap()).abs());
    }
    outcome(
        worst <= 1e-12 && worst_self == 0.0 && worst_sym <= 1e-12,
        format!(
            "500 pairs with T <= 8: max |dtw - oracle| = {worst:.1e} <= 1e-12; 100 inputs: max dtw(X,X) = {worst_self:.1e}, max asymmetry {worst_sym:.1e} <= 1e-12"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn adadelta_arithmetic() -> Outcome {
    let cfg = AdadeltaConfig {
        rho: 0.9,
        epsilon: 1e-6,
    };
    let (rho, eps) = (0.9f64, 1e-6f64);
    let (g1, g2) = (1.0f64, 0.5f64);
    // by hand: E[g²]₁ = (1−ρ)g₁², Δx₁ = −√ε/√(E[g²]₁+ε)·g₁,
    // E[Δx²]₁ = (1−ρ)Δx₁², E[g²]₂ = ρE[g²]₁ + (1−ρ)g₂²,
    // Δx₂ = −√(E[Δx²]₁+ε)/√(E[g²]₂+ε)·g₂
    let eg1 = (1.0 - rho) * g1 * g1;
    let dx1 = -(eps.sqrt() / (eg1 + eps).sqrt()) * g1;
    let edx1 = (1.0 - rho) * dx1 * dx1;
    let eg2 = rho * eg1 + (1.0 - rho) * g2 * g2;
    let dx2 = -((edx1 + eps).sqrt() / (eg2 + eps).sqrt()) * g2;

    let (mut x, mut sg, mut su) = (0.0, 0.0, 0.0);
    let a1 = adadelta_scalar(&mut x, g1, &mut sg, &mut su, &cfg);
    let a2 = adadelta_scalar(&mut x, g2, &mut sg, &mut su, &cfg);
    let err = (a1 - dx1).abs().max((a2 - dx2).abs()).max((x - (dx1 + dx2)).abs());
    let reference = (a1 - (-3.16226e-3)).abs() < 5e-9;
    outcome(
        err <= 1e-12 && reference,
        format!("Δx₁ = {a1:.6e} (≈ −3.16226e-3), Δx₂ = {a2:.6e}, max error vs hand values {err:.1e} <= 1e-12"),
    )
}

// ---------------------------------------------------------------- 5, 6

fn row(rows: &[ResultRow], model: ExperimentModel) -> &ResultRow {
    rows.iter().find(|r| r.model == model).expect("model in results")
}

fn end_to_end(rows: &[ResultRow], elapsed: Duration) -> Outcome {
    let hinge = row(rows, ExperimentModel::SiameseCosHinge).ap_mean;
    let coscos2 = row(rows, ExperimentModel::SiameseCoscos2).ap_mean;
    let dtw = row(rows, ExperimentModel::Dtw).ap_mean;
    let cnn = row(rows, ExperimentModel::ClassifierCnn).ap_mean;
    let dnn = row(rows, ExperimentModel::ClassifierDnn).ap_mean;
    let pass = hinge >= 0.90
        && hinge > coscos2
        && hinge > dtw
        && cnn > dnn
        && elapsed < Duration::from_secs(15 * 60);
    outcome(
        pass,
        format!(
            "mean test AP over {} seeds: cos-hinge {hinge:.4} >= 0.90, > coscos2 {coscos2:.4}, > DTW {dtw:.4}; CNN {cnn:.4} > DNN {dnn:.4}; {:.0} s < 900 s",
            row(rows, ExperimentModel::SiameseCosHinge).per_seed.len(),
            secs(elapsed)
        ),
    )
}

fn lda_compaction(rows: &[ResultRow], classes: usize) -> Outcome {
    let hinge = row(rows, ExperimentModel::SiameseCosHinge).ap_mean;
    let lda = row(rows, ExperimentModel::SiameseCosHingeLda);
    let expected_dim = 10.min(classes - 1);
    let loss = hinge - lda.ap_mean;
    outcome(
        lda.dim == expected_dim && loss <= 0.02,
        format!(
            "LDA to {} dims (min(10, {classes} - 1) = {expected_dim}): AP {:.4} vs {hinge:.4}, loss {loss:.4} <= 0.02",
            lda.dim, lda.ap_mean
        ),
    )
}

// ---------------------------------------------------------------- 7

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_awe"))
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn dimension_sweep(dir: &Path) -> Outcome {
    let out = dir.join("sweep");
    let out_s = out.to_str().unwrap();
    if !run_cli(&["sweep-dim", "--dims", "10,50,200,500", "--out", out_s]) {
        return outcome(false, "sweep-dim failed");
    }
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap_or_default();
    let aps: Vec<(usize, f64)> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some((f.get(1)?.parse().ok()?, f.get(2)?.parse().ok()?))
        })
        .collect();
    let Some(&(_, ap500)) = aps.iter().find(|(d, _)| *d == 500) else {
        return outcome(false, format!("no width-500 row in {text:?}"));
    };
    let wide: Vec<&(usize, f64)> = aps.iter().filter(|(d, _)| *d >= 200).collect();
    let pass = aps.len() == 4 && wide.iter().all(|(_, ap)| (ap - ap500).abs() <= 0.05);
    let listing: Vec<String> = aps.iter().map(|(d, ap)| format!("{d}: {ap:.4}")).collect();
    outcome(
        pass,
        format!("mean AP by width [{}]; widths >= 200 within 0.05 of width 500", listing.join(", ")),
    )
}

// ---------------------------------------------------------------- 8

const SMALL_CONFIG: &str = r#"{
  "synth": {"num_types": 6, "tokens_per_type": 6, "duration_range": [20, 40]},
  "train": {"max_epochs": 2, "batch_size": 8, "pad": {"n_pad": 48}},
  "experiment": {
    "synth": {"num_types": 6, "tokens_per_type": 6, "duration_range": [20, 40]},
    "seeds": [1, 2], "n_pad": 48, "max_epochs": 2, "batch_size": 8
  }
}"#;

/// Runs the whole command sequence into `root` with the given thread count.
fn pipeline(root: &Path, threads: &str) -> Result<(), String> {
    let config = root.join("config.json");
    std::fs::write(&config, SMALL_CONFIG).map_err(|e| e.to_string())?;
    let c = config.to_str().unwrap();
    let p = |s: &str| root.join(s).to_str().unwrap().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--out".into(), p("raw")],
        vec![
            "cmvn".into(), "--input".into(), p("raw/train.awe"), p("raw/dev.awe"), p("raw/test.awe"),
            "--out".into(), p("norm"),
        ],
        vec!["pairs".into(), "--input".into(), p("norm/train.awe"), "--out".into(), p("pairs")],
        vec![
            "train-classifier".into(), "--train".into(), p("norm/train.awe"), "--dev".into(),
            p("norm/dev.awe"), "--out".into(), p("cnn"),
        ],
        vec![
            "train-classifier".into(), "--kind".into(), "dnn".into(), "--train".into(),
            p("norm/train.awe"), "--dev".into(), p("norm/dev.awe"), "--out".into(), p("dnn"),
        ],
        vec![
            "train-siamese".into(), "--loss".into(), "coscos2".into(), "--train".into(),
            p("norm/train.awe"), "--dev".into(), p("norm/dev.awe"), "--out".into(), p("coscos2"),
        ],
        vec![
            "train-siamese".into(), "--pairs".into(), p("pairs/pairs.txt"), "--train".into(),
            p("norm/train.awe"), "--dev".into(), p("norm/dev.awe"), "--out".into(), p("hinge"),
        ],
        vec![
            "embed".into(), "--model".into(), p("hinge/model.awec"), "--input".into(),
            p("norm/train.awe"), "--out".into(), p("emb_train"),
        ],
        vec![
            "embed".into(), "--model".into(), p("hinge/model.awec"), "--input".into(),
            p("norm/test.awe"), "--out".into(), p("emb_test"),
        ],
        vec![
            "embed".into(), "--model".into(), p("cnn/model.awec"), "--input".into(),
            p("norm/test.awe"), "--out".into(), p("emb_cnn"),
        ],
        vec![
            "lda-fit".into(), "--embeddings".into(), p("emb_train/embeddings.awee"), "--dim".into(),
            "3".into(), "--out".into(), p("lda"),
        ],
        vec![
            "lda-apply".into(), "--lda".into(), p("lda/lda.awel"), "--embeddings".into(),
            p("emb_test/embeddings.awee"), "--out".into(), p("emb_lda"),
        ],
        vec!["eval-ap".into(), "--embeddings".into(), p("emb_test/embeddings.awee"), "--out".into(), p("ap")],
        vec!["eval-ap".into(), "--embeddings".into(), p("emb_lda/embeddings.awee"), "--out".into(), p("ap_lda")],
        vec!["eval-dtw".into(), "--input".into(), p("norm/test.awe"), "--out".into(), p("dtw")],
        vec!["sweep-dim".into(), "--dims".into(), "4,8".into(), "--out".into(), p("sweep")],
        vec![
            "sweep-dim".into(), "--family".into(), "bottleneck".into(), "--dims".into(), "3".into(),
            "--out".into(), p("sweep_bn"),
        ],
        vec!["grad-check".into(), "--networks".into(), "2".into(), "--out".into(), p("gradcheck")],
        vec!["experiment".into(), "--out".into(), p("experiment")],
    ];
    for step in steps {
        let mut args: Vec<&str> = step.iter().map(String::as_str).collect();
        args.extend(["--config", c, "--seed", "5", "--threads", threads]);
        if !run_cli(&args) {
            return Err(format!("`awe {}` failed", step.join(" ")));
        }
    }
    Ok(())
}

fn files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism(dir: &Path) -> Outcome {
    let (a, b) = (dir.join("run_a"), dir.join("run_b"));
    for (root, threads) in [(&a, "1"), (&b, "3")] {
        std::fs::create_dir_all(root).unwrap();
        if let Err(e) = pipeline(root, threads) {
            return outcome(false, e);
        }
    }
    let (fa, fb) = (files(&a), files(&b));
    if fa != fb {
        return outcome(false, "runs produced different file sets");
    }
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).unwrap())
        .map(|f| f.display().to_string())
        .collect();
    let checkpoints = fa.iter().filter(|f| f.extension().is_some_and(|e| e == "awec")).count();
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "19 commands run twice (1 vs 3 threads): {} output files including {checkpoints} checkpoints bit-identical",
                fa.len()
            )
        } else {
            format!("differing outputs: {}", differing.join(", "))
        },
    )
}

// ---------------------------------------------------------------- 9

fn random_label<R: Rng>(rng: &mut R) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'z', 'é', 'ß', '語', '_', '0', ' '];
    let len = rng.random_range(0..12);
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

fn format_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = 0;
    let mut total_bytes = 0;
    for _ in 0..200 {
        let dim = rng.random_range(1..=16);
        let count = rng.random_range(0..=12);
        let segments = (0..count)
            .map(|_| {
                let t = rng.random_range(1..=40);
                let scale = 10f64.powi(rng.random_range(-6..=6));
                let frames = Matrix::from_vec(
                    t,
                    dim,
                    (0..t * dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect(),
                );
                Segment::new(random_label(&mut rng), random_label(&mut rng), frames)
            })
            .collect();
        let archive = SegmentArchive::from_segments(dim, segments).unwrap();
        let first = archive_to_bytes(&archive).unwrap();
        let second = archive_to_bytes(&read_archive(&first[..]).unwrap()).unwrap();
        total_bytes += first.len();
        if first != second {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("200 random archives ({total_bytes} bytes): {failures} differ after write -> read -> write"),
    )
}

fn main() {
    // `cargo test -- --list` and filters from other targets must not start
    // the long-running checks
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            return;
        }
    }
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name, o: Outcome| {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };

    record("1 gradient correctness", gradient_check());
    record("2 AP oracle equivalence", ap_equivalence());
    record("3 DTW oracle equivalence", dtw_equivalence());
    record("4 ADADELTA arithmetic", adadelta_arithmetic());
    record("9 format round-trip", format_round_trip());
    record("8 determinism", determinism(dir.path()));

    let config = ExperimentConfig::default();
    let start = Instant::now();
    let rows = run_reference_experiment(&config).expect("reference experiment runs");
    let elapsed = start.elapsed();
    let classes = awe::experiment::PreparedCorpus::new(&config).unwrap().vocab.len();
    for r in &rows {
        println!(
            "      {:<26} dim {:>3}  AP {:.4} ± {:.4}  per seed {:?}",
            r.model.name(),
            r.dim,
            r.ap_mean,
            r.ap_std,
            r.per_seed.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>()
        );
    }
    record("5 end-to-end ordering", end_to_end(&rows, elapsed));
    record("6 LDA compaction", lda_compaction(&rows, classes));
    record("7 dimensionality sweep", dimension_sweep(dir.path()));

    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
