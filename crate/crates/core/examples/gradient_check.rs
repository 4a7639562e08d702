//! Compare analytic BPTT gradients with central finite differences.

use senticast::neural::LstmModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (d, h, steps) = (4, 3, 4);
    let model = LstmModel::init(d, h, 3);
    let window: Vec<f64> = (0..steps * d).map(|i| ((i * 37 % 17) as f64 / 8.5) - 1.0).collect();
    let target = 0.12;

    let (_, trace) = model.forward(&window)?;
    let analytic = model.backward(&trace, &window, target)?;

    let step = 1e-5;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for k in 0..model.params().len() {
        let orig = probe.params()[k];
        probe.params_mut()[k] = orig + step;
        let up = probe.loss(&window, target)?;
        probe.params_mut()[k] = orig - step;
        let down = probe.loss(&window, target)?;
        probe.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * step);
        let scale = numeric.abs().max(analytic.0[k].abs());
        if scale > 1e-9 {
            worst = worst.max((numeric - analytic.0[k]).abs() / scale);
        }
    }
    println!("{} parameters, max relative error {worst:.3e}", model.params().len());
    Ok(())
}
