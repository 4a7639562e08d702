//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senticast::corpus::{Corpus, RawMessage};
use senticast::neural::LstmModel;
use senticast::sentiment::{Label, MessageSentiment};

pub const FD_STEP: f64 = 1e-5;

pub fn numeric_gradient(model: &LstmModel, window: &[f64], target: f64) -> Vec<f64> {
    let mut probe = model.clone();
    (0..model.params().len())
        .map(|k| {
            let orig = probe.params()[k];
            probe.params_mut()[k] = orig + FD_STEP;
            let up = probe.loss(window, target).unwrap();
            probe.params_mut()[k] = orig - FD_STEP;
            let down = probe.loss(window, target).unwrap();
            probe.params_mut()[k] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-9 {
        0.0
    } else {
        (a - n).abs() / scale
    }
}

pub fn random_instance(seed: u64, d: usize, h: usize, steps: usize) -> (LstmModel, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let mut model = LstmModel::init(d, h, seed);
    // move every parameter off its init point (forget bias 1, zero biases)
    for p in model.params_mut() {
        *p += rng.random_range(-0.3..0.3);
    }
    let window = (0..steps * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    (model, window, rng.random_range(-0.5..0.5))
}

pub fn worst_gradient_error(model: &LstmModel, window: &[f64], target: f64) -> f64 {
    let (_, trace) = model.forward(window).unwrap();
    let analytic = model.backward(&trace, window, target).unwrap();
    let numeric = numeric_gradient(model, window, target);
    analytic
        .0
        .iter()
        .zip(&numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max)
}

/// Twenty instances alternating d=1 and d=4 with H=3, L=4.
pub fn gradient_suite_worst() -> f64 {
    (0..20u64)
        .map(|seed| {
            let d = if seed % 2 == 0 { 1 } else { 4 };
            let (model, window, target) = random_instance(seed, d, 3, 4);
            worst_gradient_error(&model, &window, target)
        })
        .fold(0.0, f64::max)
}

/// Straight loops, no shared helpers.
pub fn metrics_oracle(actual: &[f64], predicted: &[f64]) -> (f64, f64, Option<f64>) {
    let n = actual.len() as f64;
    let mut se = 0.0;
    let mut ae = 0.0;
    let mut sum = 0.0;
    for i in 0..actual.len() {
        let e = actual[i] - predicted[i];
        se += e * e;
        ae += e.abs();
        sum += actual[i];
    }
    let mean = sum / n;
    let mut sst = 0.0;
    for a in actual {
        sst += (a - mean) * (a - mean);
    }
    let r2 = if sst == 0.0 { None } else { Some(1.0 - se / sst) };
    (se / n, ae / n, r2)
}

pub fn random_vectors(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..200);
    let actual: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
    let predicted = actual.iter().map(|a| a + rng.random_range(-0.05..0.05)).collect();
    (actual, predicted)
}

pub fn ts(day: NaiveDate, secs: i64) -> DateTime<Utc> {
    Utc.from_utc_datetime(&day.and_hms_opt(0, 0, 0).unwrap()) + Duration::seconds(secs)
}

pub fn message(at: DateTime<Utc>, author: &str, content: &str) -> RawMessage {
    RawMessage {
        timestamp: at,
        author_id: author.to_string(),
        content: content.to_string(),
        attachments: 0,
        reactions: 0,
    }
}

/// A small corpus over a few days with random labels and confidences.
pub fn random_scored_corpus(seed: u64) -> (Corpus, Vec<MessageSentiment>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + Duration::days(rng.random_range(0..300));
    let n = rng.random_range(1..40);
    let msgs: Vec<RawMessage> = (0..n)
        .map(|i| {
            let at = ts(start, rng.random_range(0..6 * 86_400));
            message(at, &format!("a{}", rng.random_range(0..5)), &format!("msg {i}"))
        })
        .collect();
    let corpus = Corpus::from_messages(msgs);
    let sents = (0..corpus.len())
        .map(|index| MessageSentiment {
            index,
            label: [Label::Negative, Label::Neutral, Label::Positive][rng.random_range(0..3)],
            gamma: rng.random_range(0.0..=1.0),
        })
        .collect();
    (corpus, sents)
}

/// Group by UTC day, sum s*gamma, divide by count; empty days in the span are 0.
pub fn aggregate_oracle(corpus: &Corpus, sents: &[MessageSentiment]) -> Vec<(NaiveDate, f64, usize)> {
    let mut groups: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for s in sents {
        let m = &corpus.messages()[s.index];
        let sign = match s.label {
            Label::Negative => -1.0,
            Label::Neutral => 0.0,
            Label::Positive => 1.0,
        };
        groups.entry(m.timestamp.date_naive()).or_default().push(sign * s.gamma);
    }
    let first = corpus.messages().first().unwrap().timestamp.date_naive();
    let last = corpus.messages().last().unwrap().timestamp.date_naive();
    let mut out = Vec::new();
    let mut day = first;
    while day <= last {
        match groups.get(&day) {
            Some(v) => {
                let mut total = 0.0;
                for x in v {
                    total += x;
                }
                out.push((day, total / v.len() as f64, v.len()));
            }
            None => out.push((day, 0.0, 0)),
        }
        day += Duration::days(1);
    }
    out
}
