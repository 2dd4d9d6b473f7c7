//! Summary statistics, shared-edge histograms and the KS distance for the
//! bundled actual/generated price fixtures.
//!
//! `cargo run --example evaluate_fixtures`

use std::path::Path;

use idprice::cli::read_price_values;
use idprice::eval::compare_report;
use idprice::market_data::PriceField;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let actual = read_price_values(&dir.join("summary_actual.csv"), None, PriceField::Avg)?;
    let generated = read_price_values(&dir.join("summary_generated.csv"), None, PriceField::Avg)?;
    let report = compare_report(&actual, &generated, 20)?;

    println!(
        "{:>6} {:>9} {:>9} {:>7}",
        "", "actual", "generated", "delta"
    );
    let (a, g, d) = (&report.actual, &report.generated, &report.deltas);
    for (name, x, y, z) in [
        ("mean", a.mean, g.mean, d.mean),
        ("std", a.std, g.std, d.std),
        ("min", a.min, g.min, d.min),
        ("25%", a.p25, g.p25, d.p25),
        ("50%", a.p50, g.p50, d.p50),
        ("75%", a.p75, g.p75, d.p75),
        ("max", a.max, g.max, d.max),
    ] {
        println!("{name:>6} {x:9.2} {y:9.2} {z:7.2}");
    }
    println!("KS = {:.4}", report.ks);
    print!("{}", report.histogram_csv());
    Ok(())
}
