//! Train one multimodal model, checkpoint it and reload it.

use senticast::eval::{prepare, run_experiment, ExperimentConfig, ExperimentData};
use senticast::features::Variant;
use senticast::neural::{predict, Checkpoint};
use senticast::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = generate(&SynthConfig { days: 200, ..SynthConfig::default() })?;
    let data = ExperimentData::new(&synth.prices, synth.daily)?;
    let mut cfg = ExperimentConfig::default();
    cfg.train.epochs = 80;
    cfg.train.hidden_dim = 16;

    let run = run_experiment(&data, &cfg, Variant::Multimodal)?;
    let losses = &run.report.train_losses;
    for (e, l) in losses.iter().enumerate().step_by(10) {
        println!("epoch {e:>3}  loss {l:.6}");
    }
    let m = run.report.metrics;
    println!("test mse {:.3e}  mae {:.5}  r2 {:?}", m.mse, m.mae, m.r2);

    let bytes = run.checkpoint.to_bytes();
    let restored = Checkpoint::from_bytes(&bytes)?;
    let test = prepare(&data, &cfg, Variant::Multimodal)?.test;
    let again = predict(&restored.model, &test)?;
    let same = again.iter().zip(&run.report.series).all(|(a, p)| *a == p.predicted);
    println!("checkpoint {} bytes, config {}, reload reproduces predictions: {same}", bytes.len(), run.report.config_hash);
    Ok(())
}
