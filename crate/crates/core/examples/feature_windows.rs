//! Align prices with sentiment, fit the scaler on the training prefix and
//! build lookback windows.

use senticast::eval::{prepare, ExperimentConfig, ExperimentData};
use senticast::features::Variant;
use senticast::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = generate(&SynthConfig { days: 60, ..SynthConfig::default() })?;
    let data = ExperimentData::new(&synth.prices, synth.daily)?;
    let cfg = ExperimentConfig { lookback: 5, ..ExperimentConfig::default() };

    for variant in [Variant::Baseline, Variant::Multimodal] {
        let split = prepare(&data, &cfg, variant)?;
        let first = &split.train[0];
        println!(
            "{variant}: features [{}], {} train / {} test samples",
            split.features,
            split.train.len(),
            split.test.len()
        );
        println!(
            "  sample 0: window {}..{}, target {:+.5} realized {}",
            first.window_start, first.window_end, first.target, first.date
        );
        for t in 0..first.lookback {
            let row: Vec<String> = first.step(t).iter().map(|v| format!("{v:.3}")).collect();
            println!("    t{t}: {}", row.join(" "));
        }
    }
    Ok(())
}
