//! One line per acceptance criterion. Run with
//! `cargo test --release -p senticast --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senticast::corpus::read_corpus_csv;
use senticast::eval::{compare_runs, metrics, r_squared, ExperimentConfig, ExperimentData, Marker};
use senticast::market_data::{parse_ohlcv_csv, CsvSchema};
use senticast::sentiment::{
    aggregate_daily, discretize, distribution, load_interchange_scores, read_daily_csv, Label, MessageSentiment,
};
use senticast::synth::{generate, SynthConfig};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn gradient_correctness() -> Verdict {
    let start = Instant::now();
    let worst = common::gradient_suite_worst();
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < 1e-4 && secs < 10.0, format!("max rel err {worst:.2e} over 20 instances, {secs:.2}s"))
}

fn metric_oracle() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (a, p) = common::random_vectors(seed);
        let m = metrics(&a, &p).unwrap();
        let (mse, mae, r2) = common::metrics_oracle(&a, &p);
        worst = worst.max((m.mse - mse).abs()).max((m.mae - mae).abs()).max((m.r2.unwrap() - r2.unwrap()).abs());
    }
    let (a, _) = common::random_vectors(7);
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let mean_r2 = r_squared(&a, &vec![mean; a.len()]).unwrap();
    let perfect = metrics(&a, &a).unwrap();
    let perfect_ok = (perfect.mse, perfect.mae, perfect.r2) == (0.0, 0.0, Some(1.0));
    verdict(
        worst <= 1e-12 && mean_r2 == 0.0 && perfect_ok,
        format!("max |diff| {worst:.1e} on 100 vectors; mean-predictor R2 {mean_r2}; perfect ok {perfect_ok}"),
    )
}

fn aggregation_oracle() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut shape_ok = true;
    for seed in 0..50 {
        let (corpus, sents) = common::random_scored_corpus(seed);
        let got = aggregate_daily(&sents, &corpus).unwrap();
        let want = common::aggregate_oracle(&corpus, &sents);
        shape_ok &= got.len() == want.len();
        for (g, (day, score, n)) in got.iter().zip(&want) {
            shape_ok &= g.date == *day && g.n == *n;
            worst = worst.max((g.score - score).abs());
        }
    }
    let edges = [
        (-1.0, Label::Negative),
        (-0.1 - 1e-9, Label::Negative),
        (-0.1, Label::Neutral),
        (0.0, Label::Neutral),
        (0.1, Label::Neutral),
        (0.1 + 1e-9, Label::Positive),
        (1.0, Label::Positive),
    ];
    let edges_ok = edges.iter().all(|&(x, want)| discretize(x).ok() == Some(want));
    verdict(
        worst <= 1e-12 && shape_ok && edges_ok,
        format!("max |diff| {worst:.1e} on 50 corpora; day spans match {shape_ok}; interval edges ok {edges_ok}"),
    )
}

fn synthetic_signal_recovery() -> Verdict {
    let seeds: Vec<u64> = (1..=8).collect();
    let cfg = ExperimentConfig::default();
    let data = |beta: f64| {
        let s = generate(&SynthConfig { days: 400, beta, noise_sd: 0.02, ..SynthConfig::default() }).unwrap();
        ExperimentData::new(&s.prices, s.daily).unwrap()
    };

    let start = Instant::now();
    let signal = compare_runs(&data(0.5), &cfg, &seeds).unwrap().report;
    let secs = start.elapsed().as_secs_f64();
    let wins = signal.pairs.iter().filter(|p| p.multimodal.metrics.mse < p.baseline.metrics.mse).count();
    let marked = signal.average_delta.mse_marker == Marker::Better && signal.average_delta.mae_marker == Marker::Better;

    let null = compare_runs(&data(0.0), &cfg, &seeds).unwrap().report;
    let rel = null.average_delta.mse.abs() / null.average_baseline.mse;

    verdict(
        wins >= 7 && marked && secs < 120.0 && rel <= 0.10,
        format!(
            "beta=0.5: {wins}/8 paired wins, avg MSE {:.3e} -> {:.3e}, MSE/MAE marked better {marked}, {secs:.1}s; \
             beta=0: |avg delta| = {:.1}% of baseline MSE",
            signal.average_baseline.mse,
            signal.average_multimodal.mse,
            100.0 * rel
        ),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_senticast")
}

fn run_cli(cwd: &Path, args: &[&str]) -> bool {
    Command::new(bin()).current_dir(cwd).args(args).output().map(|o| o.status.success()).unwrap_or(false)
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Full synth -> features -> train -> compare -> report chain inside `root`,
/// with relative paths so the effective configs are comparable too.
fn pipeline_run(root: &Path) -> bool {
    fs::create_dir_all(root).unwrap();
    let (prices, daily) = ("synth/prices.canon.csv", "synth/sentiment_daily.csv");
    let run = |args: &[&str]| run_cli(root, args);
    run(&["synth", "--days", "120", "--seed", "11", "--out", "synth"])
        && run(&["features", "--prices", prices, "--daily", daily, "--out", "features"])
        && run(&[
            "train", "--prices", prices, "--daily", daily, "--variant", "multimodal", "--seed", "5", "--epochs", "15",
            "--hidden", "6", "--out", "train",
        ])
        && run(&[
            "compare", "--prices", prices, "--daily", daily, "--seeds", "1..8", "--epochs", "10", "--hidden", "6",
            "--out", "compare",
        ])
        && run(&["report", "--comparison", "compare/comparison.csv", "--out", "report"])
}

fn determinism() -> Verdict {
    let tmp = tempfile::TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if !(pipeline_run(&a) && pipeline_run(&b)) {
        return Verdict::Fail("a pipeline command failed".into());
    }
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    let ckpts = sa.keys().filter(|k| k.extension().is_some_and(|e| e == "ckpt")).count();
    let differing: Vec<String> = sa
        .iter()
        .filter(|(k, v)| sb.get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    verdict(
        differing.is_empty() && sa.len() == sb.len() && ckpts == 17,
        format!("{} files compared ({ckpts} checkpoints), {} differ {:?}", sa.len(), differing.len(), differing),
    )
}

fn dataset_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../dataset")
}

fn table_replication() -> Verdict {
    let dir = dataset_dir();
    let (prices, daily) = (dir.join("prices.canon.csv"), dir.join("sentiment_daily.csv"));
    if !(prices.is_file() && daily.is_file()) {
        return Verdict::Skip(format!(
            "dataset not present ({}); exact table values are not reproducible anyway, criteria 1-5 substitute",
            dir.display()
        ));
    }
    let prices = parse_ohlcv_csv(fs::File::open(prices).unwrap(), &CsvSchema::default()).unwrap();
    let daily = read_daily_csv(fs::File::open(daily).unwrap()).unwrap();
    let data = ExperimentData::new(&prices, daily).unwrap();
    let seeds: Vec<u64> = (1..=8).collect();
    let r = compare_runs(&data, &ExperimentConfig::default(), &seeds).unwrap().report;
    let (b, m) = (r.average_baseline, r.average_multimodal);
    let r2_up = matches!((b.r2, m.r2), (Some(x), Some(y)) if y > x);
    verdict(
        m.mse < b.mse && r2_up,
        format!("avg MSE {:.3e} -> {:.3e}, avg R2 {:?} -> {:?} (direction only)", b.mse, m.mse, b.r2, m.r2),
    )
}

fn distribution_replication() -> Verdict {
    let dir = dataset_dir();
    let (corpus, scores) = (dir.join("corpus.csv"), dir.join("scores.csv"));
    if corpus.is_file() && scores.is_file() {
        let corpus = read_corpus_csv(fs::File::open(corpus).unwrap()).unwrap();
        let loaded = load_interchange_scores(fs::File::open(scores).unwrap(), &corpus).unwrap();
        let d = distribution(&loaded.sentiments).unwrap();
        let off = [(d.positive, 26.94), (d.neutral, 60.96), (d.negative, 12.10)]
            .iter()
            .map(|(got, want)| (got - want).abs())
            .fold(0.0, f64::max);
        return verdict(off <= 1.5, format!("{:.2}/{:.2}/{:.2}, max deviation {off:.2} pp", d.positive, d.neutral, d.negative));
    }
    // without the dataset: shares sum to 100 and the interval edges hold
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let n = rng.random_range(1..500);
        let sents: Vec<MessageSentiment> = (0..n)
            .map(|index| MessageSentiment {
                index,
                label: [Label::Negative, Label::Neutral, Label::Positive][rng.random_range(0..3)],
                gamma: rng.random_range(0.0..=1.0),
            })
            .collect();
        let d = distribution(&sents).unwrap();
        worst = worst.max((d.positive + d.neutral + d.negative - 100.0).abs());
    }
    let edges_ok = discretize(-0.1).ok() == Some(Label::Neutral)
        && discretize(0.1).ok() == Some(Label::Neutral)
        && discretize(-0.1 - 1e-9).ok() == Some(Label::Negative)
        && discretize(0.1 + 1e-9).ok() == Some(Label::Positive);
    let detail = format!("stand-in (dataset absent): max |sum - 100| {worst:.1e} over 200 label sets; edges ok {edges_ok}");
    verdict(worst <= 0.01 && edges_ok, detail)
}

fn main() {
    type Check = fn() -> Verdict;
    let criteria: [(&str, Check); 7] = [
        ("1 gradient correctness", gradient_correctness),
        ("2 metric oracle", metric_oracle),
        ("3 aggregation oracle", aggregation_oracle),
        ("4 synthetic signal recovery", synthetic_signal_recovery),
        ("5 determinism", determinism),
        ("6 table replication (dataset)", table_replication),
        ("7 sentiment distribution", distribution_replication),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Verdict::Pass(d) => println!("PASS  {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
            Verdict::Skip(d) => println!("SKIP  {name}: {d}"),
        }
    }
    println!("SKIP  8 interchange contract (secondary): adapter not built here; loader side is covered by the sentiment tests");
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
