//! Paired baseline vs multimodal runs on synthetic data with a planted
//! sentiment signal.
//!
//! cargo run --release --example compare_variants -- [beta] [epochs]

use std::time::Instant;

use senticast::eval::{compare_runs, render_comparison_text, ExperimentConfig, ExperimentData};
use senticast::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let beta: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let mut cfg = ExperimentConfig::default();
    if let Some(e) = args.next() {
        cfg.train.epochs = e.parse()?;
    }

    let synth = generate(&SynthConfig { beta, ..SynthConfig::default() })?;
    let data = ExperimentData::new(&synth.prices, synth.daily)?;
    let seeds: Vec<u64> = (1..=8).collect();

    let started = Instant::now();
    let outcome = compare_runs(&data, &cfg, &seeds)?;
    print!("{}", render_comparison_text(&outcome.report.table()));
    let wins = outcome.report.pairs.iter().filter(|p| p.delta.mse < 0.0).count();
    println!("multimodal lower MSE in {wins}/{} runs; {:.1}s", seeds.len(), started.elapsed().as_secs_f64());
    Ok(())
}
