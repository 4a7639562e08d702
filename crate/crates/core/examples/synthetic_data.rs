//! Generate the planted-signal dataset and recover the coefficient by regression.

use senticast::market_data::log_returns;
use senticast::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for beta in [0.0, 0.5] {
        let data = generate(&SynthConfig { beta, ..SynthConfig::default() })?;
        let r = log_returns(&data.prices)?;
        let xs: Vec<f64> = (1..r.len()).map(|t| data.daily[t - 1].score).collect();
        let ys: Vec<f64> = (1..r.len()).map(|t| r[t].r).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        println!(
            "beta {beta}: {} days {}..{}, fitted slope {:.3}",
            data.prices.len(),
            data.prices.first_date(),
            data.prices.last_date(),
            cov / var
        );
    }
    Ok(())
}
