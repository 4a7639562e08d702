use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn senticast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_senticast")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

/// Semicolon-separated market export with vendor column names.
fn write_market_export(dir: &Path, days: usize) -> String {
    let mut text = String::from("timeOpen;timeClose;open;high;low;close;volume;marketCap\n");
    for i in 0..days {
        let base = 0.40 + 0.01 * ((i * 7 % 11) as f64 - 5.0) / 5.0;
        text.push_str(&format!(
            "2023-06-{:02}T00:00:00.000Z;2023-06-{:02}T23:59:59.999Z;{:.4};{:.4};{:.4};{:.4};{};{}\n",
            i + 1,
            i + 1,
            base,
            base * 1.03,
            base * 0.97,
            base * 1.01,
            40_000_000 + 1_000_000 * i,
            760_000_000 + 5_000_000 * i
        ));
    }
    let path = p(dir, "mana.csv");
    fs::write(&path, text).unwrap();
    path
}

fn write_chat_export(dir: &Path) -> String {
    let rows = [
        "AuthorID,Author,Date,Content,Attachments,Reactions",
        "111,alice,2023-06-01T10:00:00.000+00:00,gm everyone great day,,",
        "222,bob,2023-06-01T11:00:00.000+00:00,this update is broken and slow,,\"👍 (2)\"",
        "333,carol,2023-06-02T09:30:00.000+00:00,   ,,",
        "333,carol,2023-06-02T09:31:00.000+00:00,,https://cdn.example/img.png,",
        "999,tipbot,2023-06-02T12:00:00.000+00:00,awesome tip received,,",
        "111,alice,2023-06-03T08:00:00.000+00:00,when is the next event,,",
        "111,alice,2023-06-03T08:00:00.000+00:00,when is the next event,,",
        "222,bob,not-a-date,lost message,,",
        "444,dave,2023-06-04T20:15:00.000+00:00,love the new wearables,,",
        "555,erin,2023-06-05T07:45:00.000+00:00,market looks bearish and sad,,",
    ];
    let path = p(dir, "export.csv");
    fs::write(&path, rows.join("\n") + "\n").unwrap();
    path
}

fn ingest(dir: &Path, out: &str) -> Output {
    let market = write_market_export(dir, 10);
    let chat = write_chat_export(dir);
    senticast(&[
        "ingest",
        "--ohlcv",
        &market,
        "--chat",
        &chat,
        "--delimiter",
        ";",
        "--columns",
        "date=timeOpen,market_cap=marketCap",
        "--bots",
        "999",
        "--out",
        out,
    ])
}

#[test]
fn ingest_writes_canonical_files_and_log() {
    let tmp = TempDir::new().unwrap();
    let out = p(tmp.path(), "data");
    let o = ingest(tmp.path(), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = fs::read_to_string(Path::new(&out).join("ingest.log")).unwrap();
    for line in [
        "price days: 10",
        "messages parsed: 9",
        "rows rejected: 1",
        "kept: 5",
        "dropped empty: 1",
        "dropped attachment-only: 1",
        "dropped bot: 1",
        "dropped duplicate: 1",
    ] {
        assert!(log.contains(line), "missing `{line}` in\n{log}");
    }
    assert!(log.contains("malformed timestamp `not-a-date`"));
    let corpus = fs::read_to_string(Path::new(&out).join("corpus.csv")).unwrap();
    assert_eq!(corpus.lines().count(), 6);
    assert!(!corpus.contains("alice"), "raw handles must not leak");
    let prices = fs::read_to_string(Path::new(&out).join("prices.canon.csv")).unwrap();
    assert!(prices.starts_with("date,open,high,low,close,volume,market_cap,typical\n"));
    assert!(Path::new(&out).join("ingest.effective.conf").is_file());

    let again = p(tmp.path(), "again");
    assert!(ingest(tmp.path(), &again).status.success());
    for f in ["prices.canon.csv", "corpus.csv", "ingest.log"] {
        assert_eq!(fs::read(Path::new(&out).join(f)).unwrap(), fs::read(Path::new(&again).join(f)).unwrap());
    }
}

#[test]
fn missing_market_column_is_a_parse_error() {
    let tmp = TempDir::new().unwrap();
    let market = p(tmp.path(), "bad.csv");
    fs::write(&market, "date,open,high,low,volume,market_cap\n2023-01-01,1,1,1,1,1\n").unwrap();
    let chat = write_chat_export(tmp.path());
    let o = senticast(&["ingest", "--ohlcv", &market, "--chat", &chat, "--out", &p(tmp.path(), "o")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("close"), "{}", stderr(&o));
}

#[test]
fn sentiment_providers_and_strict_mode() {
    let tmp = TempDir::new().unwrap();
    let data = p(tmp.path(), "data");
    assert!(ingest(tmp.path(), &data).status.success());
    let corpus = p(Path::new(&data), "corpus.csv");

    let lex = p(tmp.path(), "lex");
    let o = senticast(&["sentiment", "--corpus", &corpus, "--provider", "lexicon", "--out", &lex]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let total: f64 = text
        .lines()
        .filter_map(|l| l.split_once(": ").and_then(|(_, v)| v.strip_suffix('%')))
        .map(|v| v.parse::<f64>().unwrap())
        .sum();
    assert!((total - 100.0).abs() < 0.011, "{text}");
    let daily = fs::read_to_string(Path::new(&lex).join("sentiment_daily.csv")).unwrap();
    assert_eq!(daily.lines().count(), 1 + 5);

    // the lexicon's own scores are a complete interchange file
    let scores = p(Path::new(&lex), "scores.csv");
    let full = p(tmp.path(), "full");
    let o = senticast(&[
        "sentiment", "--corpus", &corpus, "--provider", "interchange", "--scores", &scores, "--strict", "true", "--out",
        &full,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("unmatched score rows: 0\nunscored messages: 0\nduplicate score rows: 0"));
    assert_eq!(
        fs::read(Path::new(&lex).join("sentiment_daily.csv")).unwrap(),
        fs::read(Path::new(&full).join("sentiment_daily.csv")).unwrap()
    );

    let partial = p(tmp.path(), "partial.csv");
    let text = fs::read_to_string(&scores).unwrap();
    let kept: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
    fs::write(&partial, kept.join("\n") + "\n").unwrap();
    let args = |strict: &'static str, out: &str| {
        senticast(&[
            "sentiment", "--corpus", &corpus, "--provider", "interchange", "--scores", &partial, "--strict", strict,
            "--out", out,
        ])
    };
    let o = args("true", &p(tmp.path(), "strict"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = args("false", &p(tmp.path(), "lenient"));
    assert!(o.status.success());
    assert!(stdout(&o).contains("unscored messages: 1"));
}

#[test]
fn compare_protocol_outputs() {
    let tmp = TempDir::new().unwrap();
    let synth = p(tmp.path(), "synth");
    let o = senticast(&["synth", "--days", "90", "--seed", "7", "--out", &synth]);
    assert!(o.status.success(), "{}", stderr(&o));
    let prices = fs::read_to_string(Path::new(&synth).join("prices.canon.csv")).unwrap();
    assert_eq!(prices.lines().count(), 91);

    let config = p(tmp.path(), "run.conf");
    fs::write(&config, "# small model\nepochs = 9\nhidden = 3\nlookback = 7\n").unwrap();
    let out = p(tmp.path(), "cmp");
    let o = senticast(&[
        "compare",
        "--config",
        &config,
        "--prices",
        &p(Path::new(&synth), "prices.canon.csv"),
        "--daily",
        &p(Path::new(&synth), "sentiment_daily.csv"),
        "--seeds",
        "1..8",
        "--epochs",
        "4",
        "--variant-features",
        "tau,vol,senti",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = Path::new(&out);
    let csv = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16 + 2);
    assert_eq!(csv.lines().filter(|l| l.starts_with("avg,")).count(), 2);
    let eff = fs::read_to_string(out.join("compare.effective.conf")).unwrap();
    assert!(eff.contains("epochs = 4") && eff.contains("hidden = 3") && eff.contains("lookback = 7"), "{eff}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_multimodal_3.json")).unwrap()).unwrap();
    assert_eq!(report["features"], serde_json::json!(["tau", "vol", "senti"]));
    assert_eq!(report["config"]["train"]["epochs"], 4);
    for f in ["run_baseline_8_series.csv", "run_multimodal_1.ckpt", "sentiment_daily.csv", "comparison.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }

    let r = senticast(&["report", "--comparison", &p(out, "comparison.csv")]);
    assert!(r.status.success());
    assert_eq!(stdout(&r), fs::read_to_string(out.join("comparison.txt")).unwrap());
}

#[test]
fn compare_without_sentiment_skips_the_daily_file() {
    let tmp = TempDir::new().unwrap();
    let synth = p(tmp.path(), "synth");
    assert!(senticast(&["synth", "--days", "60", "--out", &synth]).status.success());
    let out = p(tmp.path(), "cmp");
    let o = senticast(&[
        "compare", "--prices", &p(Path::new(&synth), "prices.canon.csv"), "--seeds", "1,2", "--epochs", "2",
        "--hidden", "2", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("sentiment_daily.csv not written"));
    assert!(!Path::new(&out).join("sentiment_daily.csv").exists());
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(senticast(&["--help"]).status.code(), Some(0));
    assert_eq!(senticast(&["compare", "--help"]).status.code(), Some(0));
    assert_eq!(senticast(&["--version"]).status.code(), Some(0));
    assert_eq!(senticast(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(senticast(&["compare", "--bogus", "1"]).status.code(), Some(1));
    let tmp = TempDir::new().unwrap();
    let o = senticast(&["compare", "--prices", "/nonexistent.csv", "--out", &p(tmp.path(), "o")]);
    assert_eq!(o.status.code(), Some(1));
    let conf = p(tmp.path(), "bad.conf");
    fs::write(&conf, "colour = blue\n").unwrap();
    let o = senticast(&["synth", "--config", &conf, "--out", &p(tmp.path(), "o")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
    let o = senticast(&["compare", "--seeds", "1,1", "--prices", &conf, "--out", &p(tmp.path(), "o")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn divergence_exits_with_code_4() {
    let tmp = TempDir::new().unwrap();
    let synth = p(tmp.path(), "synth");
    assert!(senticast(&["synth", "--days", "60", "--out", &synth]).status.success());
    let o = senticast(&[
        "train", "--prices", &p(Path::new(&synth), "prices.canon.csv"), "--daily",
        &p(Path::new(&synth), "sentiment_daily.csv"), "--optimizer", "sgd", "--clip", "0", "--lr", "1e300",
        "--epochs", "20", "--hidden", "2", "--out", &p(tmp.path(), "t"),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}
