//! Train the LSTM on a noisy daily price cycle and roll out a 24-hour profile
//! recursively and one step ahead.
//!
//! `cargo run --release --example lstm_scenarios`

use idprice::lstm::{generate_profile, train_lstm, LstmHyper, Rollout};
use idprice::market_data::sliding_windows;
use idprice::numerics::{MinMaxScaler, SeededRng};

fn prices(hours: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..hours)
        .map(|t| 45.0 + 15.0 * (2.0 * std::f64::consts::PI * t as f64 / 24.0).sin() + rng.normal())
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::new(1);
    let history = prices(24 * 14, &mut rng);
    let (train, test) = history.split_at(24 * 12);

    let scaler = MinMaxScaler::fit(train)?;
    let scaled =
        |v: &[f64]| -> Vec<Option<f64>> { scaler.scale_all(v).into_iter().map(Some).collect() };
    let hyper = LstmHyper {
        hidden_dim: 16,
        epochs: 150,
        seed: 42,
        ..LstmHyper::default()
    };
    let (params, curve) = train_lstm(
        &sliding_windows(&scaled(train), hyper.window),
        &sliding_windows(&scaled(test), hyper.window),
        &hyper,
    )?;
    for epoch in [0, 49, 99, 149] {
        println!(
            "epoch {epoch:>3}: train {:.2e}, test {:.2e}",
            curve.train[epoch], curve.test[epoch]
        );
    }

    let seed_window = &test[..24];
    let observed = &test[24..47];
    let recursive = generate_profile(&params, &scaler, seed_window, 24, Rollout::Recursive)?;
    let one_step = generate_profile(
        &params,
        &scaler,
        seed_window,
        24,
        Rollout::OneStepAhead(observed),
    )?;
    println!("hour  actual  recursive  one-step");
    for h in 0..24 {
        let actual = test.get(24 + h).copied().unwrap_or(f64::NAN);
        println!(
            "{h:>4}  {actual:6.2}  {:9.2}  {:8.2}",
            recursive[h], one_step[h]
        );
    }
    Ok(())
}
