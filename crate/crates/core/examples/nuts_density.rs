//! Fit a two-component Gaussian mixture to bimodal prices with NUTS and
//! compare posterior-predictive draws to the data with the KS statistic.
//!
//! `cargo run --release --example nuts_density`

use idprice::eval::ks_statistic;
use idprice::numerics::SeededRng;
use idprice::nuts::{fit_mixture, posterior_predictive, NutsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::new(42);
    let prices: Vec<f64> = (0..500)
        .map(|_| {
            if rng.uniform() < 0.3 {
                -5.0 + rng.normal()
            } else {
                5.0 + rng.normal()
            }
        })
        .collect();

    let config = NutsConfig {
        warmup: 500,
        samples: 1000,
        chains: 2,
        ..NutsConfig::default()
    };
    let (model, samples) = fit_mixture(&prices, 2, &config)?;
    println!(
        "{} draws, {} divergent, mean acceptance {:.2}",
        samples.len(),
        samples.divergences(),
        samples.mean_accept_stat()
    );
    for (i, name) in samples.names.iter().enumerate() {
        let col = samples.column(i);
        println!(
            "{name:>8}: {:.3}",
            col.iter().sum::<f64>() / col.len() as f64
        );
    }

    let predicted = posterior_predictive(&model, &samples, 5000, &mut SeededRng::new(43))?;
    println!(
        "KS(predictive, data) = {:.4}",
        ks_statistic(&predicted, &prices)?
    );
    Ok(())
}
