//! Synthetic market + sentiment series with a planted sentiment signal.
//!
//! Daily sentiment is i.i.d. normal (clipped to `[-1, 1]`); the return
//! measured from day `t` to `t + 1` is `beta * S_{t-1} + eps_t` with Gaussian
//! `eps_t`. Prices are integrated from the returns and bars are built so that
//! their typical price equals the integrated price.

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::market_data::{MarketDataError, OhlcvBar, PriceSeries};
use crate::sentiment::{discretize, DailySentiment};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub days: usize,
    pub seed: u64,
    pub beta: f64,
    pub noise_sd: f64,
    pub sentiment_sd: f64,
    pub start: NaiveDate,
    pub start_price: f64,
    /// Circulating supply; market cap is `price * supply`.
    pub supply: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            days: 400,
            seed: 1,
            beta: 0.5,
            noise_sd: 0.02,
            sentiment_sd: 0.1,
            start: NaiveDate::from_ymd_opt(2023, 6, 15).expect("valid date"),
            start_price: 0.4,
            supply: 1.9e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub prices: PriceSeries,
    pub daily: Vec<DailySentiment>,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData, MarketDataError> {
    if cfg.days < 2 {
        return Err(MarketDataError::TooShort);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let senti_dist = Normal::new(0.0, cfg.sentiment_sd.max(0.0)).expect("finite sd");
    let noise = Normal::new(0.0, cfg.noise_sd.max(0.0)).expect("finite sd");
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let scores: Vec<f64> = (0..cfg.days).map(|_| senti_dist.sample(&mut rng).clamp(-1.0, 1.0)).collect();
    let mut taus = Vec::with_capacity(cfg.days);
    taus.push(cfg.start_price);
    for t in 0..cfg.days - 1 {
        let signal = if t == 0 { 0.0 } else { cfg.beta * scores[t - 1] };
        let r = signal + noise.sample(&mut rng);
        taus.push(taus[t] * r.exp());
    }

    let mut bars = Vec::with_capacity(cfg.days);
    let mut daily = Vec::with_capacity(cfg.days);
    for (t, (&tau, &score)) in taus.iter().zip(&scores).enumerate() {
        let date = cfg.start + Duration::days(t as i64);
        let spread: f64 = rng.random_range(0.005..0.04);
        let open_pos: f64 = rng.random_range(-1.0..1.0);
        let volume = (5e7f64.ln() + 0.4 * std_normal.sample(&mut rng)).exp();
        let n = rng.random_range(5..30);
        bars.push(OhlcvBar {
            date,
            open: tau * (1.0 + spread * open_pos),
            high: tau * (1.0 + spread),
            low: tau * (1.0 - spread),
            close: tau,
            volume,
            market_cap: tau * cfg.supply,
        });
        daily.push(DailySentiment {
            date,
            score,
            n,
            klass: discretize(score).expect("clamped score"),
        });
    }
    Ok(SynthData {
        prices: PriceSeries::from_bars(bars)?,
        daily,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::log_returns;

    #[test]
    fn shape_and_determinism() {
        let cfg = SynthConfig {
            seed: 7,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        assert_eq!(a.prices.len(), 400);
        assert_eq!(a.daily.len(), 400);
        assert_eq!(a, generate(&cfg).unwrap());
        assert_ne!(a, generate(&SynthConfig { seed: 8, ..cfg }).unwrap());
    }

    #[test]
    fn planted_signal_is_recoverable_by_regression() {
        let data = generate(&SynthConfig::default()).unwrap();
        let r = log_returns(&data.prices).unwrap();
        // least-squares slope of r_t on S_{t-1}
        let pairs: Vec<(f64, f64)> = (1..r.len()).map(|t| (data.daily[t - 1].score, r[t].r)).collect();
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = pairs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        assert!((cov / var - 0.5).abs() < 0.05, "slope {}", cov / var);
    }

    #[test]
    fn null_signal() {
        let data = generate(&SynthConfig {
            beta: 0.0,
            ..SynthConfig::default()
        })
        .unwrap();
        let r = log_returns(&data.prices).unwrap();
        let sd = (r.iter().map(|p| p.r * p.r).sum::<f64>() / r.len() as f64).sqrt();
        assert!((sd - 0.02).abs() < 0.004, "sd {sd}");
    }
}
