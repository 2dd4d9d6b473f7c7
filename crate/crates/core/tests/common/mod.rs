#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use idprice::numerics::SeededRng;

pub const HEADER: &str =
    "timestamp,zone,da_price,id_high,id_low,id_last,id_avg,buy_volume,sell_volume";

/// Hourly two-zone market file starting at `start`, `days` long. SE3 has a
/// daily sine shape plus noise; SE4 shares SE3's day-ahead price on even hours.
/// The 2020-01-03 hour 12 SE3 row carries high/low/avg 57.40/39.12/43.67.
pub fn market_csv(start: NaiveDate, days: i64, seed: u64) -> String {
    let mut rng = SeededRng::new(seed);
    let mut out = String::from(HEADER);
    out.push('\n');
    for d in 0..days {
        let date = start + Duration::days(d);
        for h in 0..24u32 {
            let base =
                40.0 + 15.0 * (2.0 * PI * h as f64 / 24.0).sin() + 2.0 * (d as f64 * 0.3).sin();
            let da3 = (base * 100.0).round() / 100.0;
            for zone in ["SE3", "SE4"] {
                let da = if zone == "SE3" || h % 2 == 0 {
                    da3
                } else {
                    da3 + 1.5
                };
                let mut avg = base + rng.normal() * 2.0;
                let mut high = avg + 3.0 + rng.uniform() * 4.0;
                let mut low = avg - 3.0 - rng.uniform() * 4.0;
                if zone == "SE3" && date == NaiveDate::from_ymd_opt(2020, 1, 3).unwrap() && h == 12
                {
                    (high, low, avg) = (57.40, 39.12, 43.67);
                }
                let last = (avg + low) / 2.0;
                out.push_str(&format!(
                    "{}T{h:02}:00,{zone},{da:.2},{high:.2},{low:.2},{last:.2},{avg:.2},{:.1},{:.1}\n",
                    date,
                    10.0 + rng.uniform() * 5.0,
                    12.0 + rng.uniform() * 5.0,
                ));
            }
        }
    }
    out
}

pub fn write_market(dir: &Path, start: NaiveDate, days: i64) -> PathBuf {
    let path = dir.join("market.csv");
    std::fs::write(&path, market_csv(start, days, 5)).unwrap();
    path
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_column(path: &Path, column: &str) -> Vec<f64> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let idx = reader
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == column)
        .unwrap();
    reader
        .records()
        .map(|r| r.unwrap()[idx].parse().unwrap())
        .collect()
}

/// The `idprice` binary, run with `args`; returns (exit code, stdout, stderr).
pub fn idprice(args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_idprice"));
    cmd.args(args).env_remove("IDPRICE_CI");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}
