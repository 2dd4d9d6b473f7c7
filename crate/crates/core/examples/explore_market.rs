//! Parse a small two-zone market file and print the hourly variation, the
//! share of hours with equal prices across zones, and an ID price histogram.
//!
//! `cargo run --example explore_market`

use idprice::eval::empirical_pdf_bins;
use idprice::market_data::{
    complete_profiles, parse_market_csv, price_spread, price_variation, similar_price_table,
    PriceField,
};

fn market_csv() -> String {
    let mut text = String::from(
        "timestamp,zone,da_price,id_high,id_low,id_last,id_avg,buy_volume,sell_volume\n",
    );
    for day in 1..=7 {
        for h in 0..24 {
            let base = 40.0 + 12.0 * (std::f64::consts::PI * h as f64 / 12.0).sin();
            for (zone, shift) in [("SE3", 0.0), ("SE4", if h % 3 == 0 { 0.0 } else { 2.5 })] {
                let da = base + shift;
                let avg = da + (day as f64 - 4.0);
                text.push_str(&format!(
                    "2021-03-{day:02}T{h:02}:00,{zone},{da:.2},{:.2},{:.2},{avg:.2},{avg:.2},12.5,9.0\n",
                    avg + 6.0,
                    avg - 4.0,
                ));
            }
        }
    }
    text
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (high, low, avg) = (57.40, 39.12, 43.67);
    println!(
        "one hour: high {high}, low {low}, avg {avg} -> spread {:.2}, variation {:.2}%",
        price_spread(high, low),
        price_variation(high, low, avg)?
    );

    let series = parse_market_csv(&market_csv(), "synthetic")?;
    println!(
        "{} records in zones {:?}",
        series.len(),
        series.zones().collect::<Vec<_>>()
    );

    for row in similar_price_table(&series, &["SE3", "SE4"])? {
        for (field, share) in &row.fields {
            if let Some(s) = share {
                println!(
                    "{} {field}: equal in {}/{} hours ({:.1}%)",
                    row.year, s.matching, s.overlap, s.percent
                );
            }
        }
    }

    let days = complete_profiles(&series, "SE3", PriceField::Avg)?;
    println!("{} complete SE3 day profiles", days.len());

    let hist = empirical_pdf_bins(&series.values("SE3", PriceField::Avg)?, 8)?;
    for (i, d) in hist.density.iter().enumerate() {
        println!(
            "[{:6.2}, {:6.2}) {}",
            hist.edges[i],
            hist.edges[i + 1],
            "#".repeat((d * 400.0) as usize)
        );
    }
    Ok(())
}
