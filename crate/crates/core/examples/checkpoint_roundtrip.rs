//! Drive the command layer in-process: train a small NUTS mixture from a
//! market file, reload the checkpoint, and generate draws from it.
//!
//! `cargo run --release --example checkpoint_roundtrip`

use idprice::cli::{cmd_generate, cmd_train, Checkpoint, GenerateRequest, ModelKind, RunConfig};
use idprice::market_data::DateRange;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("idprice-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("market.csv");
    let mut text = String::from(
        "timestamp,zone,da_price,id_high,id_low,id_last,id_avg,buy_volume,sell_volume\n",
    );
    for day in 1..=10 {
        for h in 0..24 {
            let p = if h < 6 { 20.0 } else { 55.0 } + (day * h % 7) as f64;
            text.push_str(&format!(
                "2020-02-{day:02}T{h:02}:00,SE2,{p},{p},{p},{p},{p},1,1\n"
            ));
        }
    }
    std::fs::write(&input, text)?;

    let mut config = RunConfig {
        input: Some(input),
        train_range: "2020-02-01..2020-02-10".parse::<DateRange>()?,
        test_range: None,
        out: dir.clone(),
        seed: Some(5),
        ..RunConfig::default()
    };
    config.nuts.warmup = 300;
    config.nuts.samples = 300;
    for path in cmd_train(&config, ModelKind::Nuts)? {
        println!("wrote {}", path.display());
    }

    let checkpoint = Checkpoint::load(&dir.join("nuts_checkpoint.json"))?;
    println!(
        "kind {:?}, zone {}, fingerprint {}",
        checkpoint.kind,
        checkpoint.zone,
        &checkpoint.fingerprint[..16]
    );
    let request = GenerateRequest {
        count: Some(10),
        ..GenerateRequest::default()
    };
    for path in cmd_generate(&config, &dir.join("nuts_checkpoint.json"), &request)? {
        print!("{}", std::fs::read_to_string(path)?);
    }
    Ok(())
}
