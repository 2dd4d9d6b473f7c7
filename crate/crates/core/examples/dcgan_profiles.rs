//! Train the convolutional DCGAN on synthetic daily profiles and sample new
//! ones; every sample stays inside the training price envelope.
//!
//! `cargo run --release --example dcgan_profiles`

use idprice::dcgan::{sample_prices, train_dcgan, GanHyper};
use idprice::numerics::{MinMaxScaler, SeededRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::new(3);
    let days: Vec<Vec<f64>> = (0..64)
        .map(|_| {
            let level = 30.0 + 20.0 * rng.uniform();
            (0..24)
                .map(|h| {
                    let peak = if (7..10).contains(&h) || (17..20).contains(&h) {
                        15.0
                    } else {
                        0.0
                    };
                    level + peak + 2.0 * rng.normal()
                })
                .collect()
        })
        .collect();
    let pooled: Vec<f64> = days.iter().flatten().copied().collect();
    let scaler = MinMaxScaler::fit(&pooled)?;
    let scaled: Vec<Vec<f64>> = days.iter().map(|d| scaler.scale_all(d)).collect();

    let hyper = GanHyper {
        epochs: 300,
        seed: 42,
        ..GanHyper::default()
    };
    let (generator, _, history) = train_dcgan(&scaled, &hyper)?;
    let last = history.value.len() - 1;
    println!(
        "after {} epochs: V(D, G) {:.3}, generator loss {:.3}",
        hyper.epochs, history.value[last], history.generator_loss[last]
    );

    let set = sample_prices(&generator, &scaler, 5, &mut SeededRng::new(9));
    println!("envelope [{:.2}, {:.2}]", scaler.min, scaler.max);
    for profile in &set.profiles {
        let cells: Vec<String> = profile.iter().map(|p| format!("{p:.0}")).collect();
        println!("{}", cells.join(" "));
    }
    Ok(())
}
