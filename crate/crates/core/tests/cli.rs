mod common;

use std::f64::consts::PI;
use std::fs;

use common::{date, fixture, idprice, read_column, write_market};
use idprice::cli::{Checkpoint, ModelKind};
use serde_json::Value;

fn s(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn explore_writes_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_market(dir.path(), date(2020, 1, 1), 4);
    let da = dir.path().join("da.csv");
    fs::write(&da, "zone,type,da_volume\nSE3,buy,5000\nSE3,sell,4000\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, stderr) = idprice(
        &[
            "explore",
            "--input",
            &s(&input),
            "--da-volumes",
            &s(&da),
            "--out",
            &s(&out),
        ],
        &[],
    );
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout.lines().count(), 4);

    let variation = fs::read_to_string(out.join("variation.csv")).unwrap();
    assert!(variation
        .starts_with("timestamp,zone,hour,id_high,id_low,id_avg,spread,variation_percent\n"));
    let row = variation
        .lines()
        .find(|l| l.starts_with("2020-01-03T12:00,SE3"))
        .unwrap();
    assert!(row.ends_with(",18.28,41.86"), "{row}");
    assert_eq!(variation.lines().count(), 1 + 4 * 24 * 2);

    let similar = fs::read_to_string(out.join("similar_prices.csv")).unwrap();
    let mut lines = similar.lines();
    assert_eq!(
        lines.next().unwrap(),
        "year,da_percent,da_hours,high_percent,high_hours,low_percent,low_hours,last_percent,last_hours,avg_percent,avg_hours"
    );
    // day-ahead prices agree on even hours only
    assert!(lines.next().unwrap().starts_with("2020,50.00,48,"));

    let share = fs::read_to_string(out.join("volume_share.csv")).unwrap();
    assert!(share.starts_with("zone,type,da_volume,id_volume,id_share_percent\n"));
    let buy = share
        .lines()
        .find(|l| l.starts_with("SE3,buy,5000,"))
        .unwrap();
    let cells: Vec<&str> = buy.split(',').collect();
    let id: f64 = cells[3].parse().unwrap();
    assert_eq!(cells[4], format!("{:.1}", 100.0 * id / 5000.0));
    assert!(share.lines().any(|l| l.starts_with("SE4,sell,,")));

    let hist = fs::read_to_string(out.join("histograms.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 2 * 5 * 50);
}

#[test]
fn explore_range_and_zone_filters() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_market(dir.path(), date(2020, 1, 1), 4);
    let (code, _, stderr) = idprice(
        &[
            "explore",
            "--input",
            &s(&input),
            "--zone",
            "SE3",
            "--range",
            "2020-01-02..2020-01-02",
            "--bins",
            "10",
            "--out",
            &s(dir.path()),
        ],
        &[],
    );
    assert_eq!(code, 0, "{stderr}");
    let variation = fs::read_to_string(dir.path().join("variation.csv")).unwrap();
    assert_eq!(variation.lines().count(), 25);
    assert!(variation
        .lines()
        .skip(1)
        .all(|l| l.starts_with("2020-01-02T") && l.contains(",SE3,")));

    let (code, _, stderr) = idprice(
        &[
            "explore",
            "--input",
            &s(&input),
            "--zone",
            "SE9",
            "--out",
            &s(dir.path()),
        ],
        &[],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("no data for zone SE9"), "{stderr}");
}

#[test]
fn missing_files_are_data_errors_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let (code, _, stderr) = idprice(
        &["explore", "--input", &s(&missing), "--out", &s(dir.path())],
        &[],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("nope.csv"), "{stderr}");

    let actual = fixture("summary_actual.csv");
    let (code, _, stderr) = idprice(
        &[
            "evaluate",
            "--actual",
            &s(&actual),
            "--generated",
            &s(&missing),
            "--out",
            &s(dir.path()),
        ],
        &[],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("nope.csv"), "{stderr}");

    let (code, _, stderr) = idprice(
        &["generate", "--checkpoint", &s(&missing), "--seed", "1"],
        &[],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("nope.csv"), "{stderr}");
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_market(dir.path(), date(2020, 1, 1), 3);
    let (code, _, _) = idprice(&["train"], &[]);
    assert_eq!(code, 1);
    let (code, _, _) = idprice(&["frobnicate"], &[]);
    assert_eq!(code, 1);
    let (code, out, _) = idprice(&["--help"], &[]);
    assert_eq!(code, 0);
    assert!(out.contains("explore") && out.contains("evaluate"));

    let config = dir.path().join("bad.toml");
    fs::write(&config, "[nuts]\ntarget_accept = 1.5\n").unwrap();
    let out = dir.path().join("out");
    let (code, _, stderr) = idprice(
        &[
            "train",
            "--model",
            "nuts",
            "--config",
            &s(&config),
            "--input",
            &s(&input),
            "--zone",
            "SE3",
            "--seed",
            "1",
            "--out",
            &s(&out),
        ],
        &[],
    );
    assert_eq!(code, 1, "{stderr}");
    assert!(!out.exists(), "nothing is written before validation");

    fs::write(&config, "unknown_key = 3\n").unwrap();
    let (code, _, _) = idprice(
        &["explore", "--config", &s(&config), "--input", &s(&input)],
        &[],
    );
    assert_eq!(code, 1);

    let (code, _, stderr) = idprice(
        &[
            "train",
            "--model",
            "nuts",
            "--input",
            &s(&input),
            "--zone",
            "SE3",
            "--train-range",
            "2020",
            "--test-range",
            "2020-06-01..2020-06-30",
            "--seed",
            "1",
        ],
        &[],
    );
    assert_eq!(code, 1);
    assert!(stderr.contains("overlap"), "{stderr}");
}

#[test]
fn ci_mode_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_market(dir.path(), date(2020, 1, 1), 3);
    let args = [
        "train",
        "--model",
        "nuts",
        "--input",
        &s(&input),
        "--zone",
        "SE3",
        "--warmup",
        "20",
        "--samples",
        "20",
        "--out",
        &s(dir.path()),
    ];
    let (code, _, stderr) = idprice(&args, &[("IDPRICE_CI", "1")]);
    assert_eq!(code, 1);
    assert!(stderr.contains("--seed"), "{stderr}");

    let config = dir.path().join("seed.toml");
    fs::write(&config, "seed = 11\n").unwrap();
    let mut with_config = args.to_vec();
    let c = s(&config);
    with_config.extend(["--config", &c]);
    let (code, _, stderr) = idprice(&with_config, &[("IDPRICE_CI", "1")]);
    assert_eq!(code, 0, "{stderr}");
    let ck = Checkpoint::load(&dir.path().join("nuts_checkpoint.json")).unwrap();
    assert_eq!(ck.seed, 11);

    // outside CI mode a fresh seed is drawn and recorded
    let (code, _, stderr) = idprice(&args, &[]);
    assert_eq!(code, 0, "{stderr}");
    Checkpoint::load(&dir.path().join("nuts_checkpoint.json")).unwrap();
}

#[test]
fn nuts_and_dcgan_round_trip_through_generate() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_market(dir.path(), date(2020, 1, 1), 10);
    let out = s(dir.path());
    let base = [
        "--input",
        &s(&input),
        "--zone",
        "SE4",
        "--field",
        "high",
        "--seed",
        "3",
        "--out",
        &out,
    ];

    let mut nuts = vec![
        "train",
        "--model",
        "nuts",
        "--warmup",
        "100",
        "--samples",
        "200",
        "--hour",
        "12",
    ];
    nuts.extend(base);
    let (code, _, stderr) = idprice(&nuts, &[]);
    assert_eq!(code, 0, "{stderr}");
    let ck = Checkpoint::load(&dir.path().join("nuts_checkpoint.json")).unwrap();
    assert_eq!(ck.kind, ModelKind::Nuts);
    assert_eq!(ck.zone, "SE4");
    let posterior = fs::read_to_string(dir.path().join("nuts_posterior.csv")).unwrap();
    assert!(posterior.starts_with("mu1,mu2,sigma1,sigma2,weight1,weight2,"));
    assert_eq!(posterior.lines().count(), 201);

    let mut gan = vec![
        "train",
        "--model",
        "dcgan",
        "--epochs",
        "10",
        "--batch-size",
        "4",
    ];
    gan.extend(base);
    let (code, _, stderr) = idprice(&gan, &[]);
    assert_eq!(code, 0, "{stderr}");
    let history = fs::read_to_string(dir.path().join("dcgan_history.csv")).unwrap();
    assert!(history.starts_with("epoch,gan_value,generator_loss\n"));
    assert_eq!(history.lines().count(), 11);

    for (kind, file) in [
        ("nuts", "nuts_generated.csv"),
        ("dcgan", "dcgan_generated.csv"),
    ] {
        let ck = s(&dir.path().join(format!("{kind}_checkpoint.json")));
        let (code, _, stderr) = idprice(
            &[
                "generate",
                "--checkpoint",
                &ck,
                "--count",
                "0",
                "--seed",
                "1",
                "--out",
                &out,
            ],
            &[],
        );
        assert_eq!(code, 0, "{stderr}");
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        assert_eq!(text.lines().count(), 1, "{kind}: header only");

        let (code, _, stderr) = idprice(
            &[
                "generate",
                "--checkpoint",
                &ck,
                "--count",
                "30",
                "--seed",
                "1",
                "--out",
                &out,
            ],
            &[],
        );
        assert_eq!(code, 0, "{stderr}");
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        assert_eq!(text.lines().count(), 31);

        let (code, _, _) = idprice(
            &[
                "generate",
                "--checkpoint",
                &ck,
                "--date",
                "2020-01-05",
                "--seed",
                "1",
                "--out",
                &out,
            ],
            &[],
        );
        assert_eq!(code, 1, "{kind}: --date is lstm-only");
    }

    // generated dcgan prices respect the training envelope
    let ck = Checkpoint::load(&dir.path().join("dcgan_checkpoint.json")).unwrap();
    let scaler = ck.scaler.unwrap();
    let text = fs::read_to_string(dir.path().join("dcgan_generated.csv")).unwrap();
    assert!(text.starts_with("h00,h01,"));
    for line in text.lines().skip(1) {
        for v in line.split(',') {
            let v: f64 = v.parse().unwrap();
            assert!(v >= scaler.min && v <= scaler.max);
        }
    }
}

fn sine_market(days: i64) -> String {
    let mut out = String::from(common::HEADER);
    out.push('\n');
    for d in 0..days {
        let day = date(2020, 1, 1) + chrono::Duration::days(d);
        for h in 0..24 {
            let t = (d * 24 + h) as f64;
            let p = 50.0 + 20.0 * (2.0 * PI * t / 24.0).sin();
            out.push_str(&format!("{day}T{h:02}:00,SE3,{p},{p},{p},{p},{p},1,1\n"));
        }
    }
    out
}

#[test]
fn lstm_on_sine_trains_and_generates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sine.csv");
    fs::write(&input, sine_market(14)).unwrap();
    let out = s(dir.path());
    let (code, _, stderr) = idprice(
        &[
            "train",
            "--model",
            "lstm",
            "--input",
            &s(&input),
            "--train-range",
            "2020-01-01..2020-01-10",
            "--test-range",
            "2020-01-11..2020-01-14",
            "--seed",
            "42",
            "--out",
            &out,
        ],
        &[],
    );
    assert_eq!(code, 0, "{stderr}");
    let ck_path = dir.path().join("lstm_checkpoint.json");
    let ck = Checkpoint::load(&ck_path).unwrap();
    let (hyper, _) = ck.lstm_params().unwrap();
    assert_eq!(
        (hyper.hidden_dim, hyper.window, hyper.epochs),
        (32, 24, 500)
    );
    // bit-exact re-serialization
    assert_eq!(ck.to_json(), fs::read_to_string(&ck_path).unwrap());

    let test_mse = read_column(&dir.path().join("lstm_loss.csv"), "test_mse");
    assert_eq!(test_mse.len(), 500);
    assert!(*test_mse.last().unwrap() < 1e-2, "{:?}", test_mse.last());

    let (code, _, stderr) = idprice(
        &[
            "generate",
            "--checkpoint",
            &s(&ck_path),
            "--input",
            &s(&input),
            "--date",
            "2020-01-12",
            "--out",
            &out,
        ],
        &[],
    );
    assert_eq!(code, 0, "{stderr}");
    let generated = fs::read_to_string(dir.path().join("lstm_generated.csv")).unwrap();
    let prices: Vec<f64> = generated
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(prices.len(), 24);
    for (h, p) in prices.iter().enumerate() {
        let truth = 50.0 + 20.0 * (2.0 * PI * h as f64 / 24.0).sin();
        assert!((p - truth).abs() < 5.0, "hour {h}: {p} vs {truth}");
    }

    let (code, _, stderr) = idprice(
        &[
            "generate",
            "--checkpoint",
            &s(&ck_path),
            "--input",
            &s(&input),
            "--date",
            "2020-01-01",
            "--out",
            &out,
        ],
        &[],
    );
    assert_eq!(code, 2, "no history before the first day: {stderr}");
    let (code, _, _) = idprice(
        &["generate", "--checkpoint", &s(&ck_path), "--count", "3"],
        &[],
    );
    assert_eq!(code, 1);
}

#[test]
fn evaluate_reports_on_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    let actual = s(&fixture("summary_actual.csv"));
    let generated = s(&fixture("summary_generated.csv"));

    let (code, _, stderr) = idprice(
        &[
            "evaluate",
            "--actual",
            &actual,
            "--generated",
            &actual,
            "--out",
            &out,
        ],
        &[],
    );
    assert_eq!(code, 0, "{stderr}");
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["ks"].as_f64().unwrap(), 0.0);

    let (code, _, stderr) = idprice(
        &[
            "evaluate",
            "--actual",
            &actual,
            "--generated",
            &generated,
            "--bins",
            "20",
            "--out",
            &out,
        ],
        &[],
    );
    assert_eq!(code, 0, "{stderr}");
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!((report["deltas"]["mean"].as_f64().unwrap() - 0.25).abs() <= 0.02);
    assert!((report["deltas"]["std"].as_f64().unwrap() - 6.89).abs() <= 0.02);
    assert!((report["actual"]["max"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    let hist = fs::read_to_string(dir.path().join("histograms.csv")).unwrap();
    assert!(hist.starts_with("bin_left,bin_right,density_actual,density_generated\n"));
    assert_eq!(hist.lines().count(), 21);

    let (code, _, _) = idprice(
        &[
            "evaluate",
            "--actual",
            &actual,
            "--generated",
            &generated,
            "--column",
            "nope",
            "--out",
            &out,
        ],
        &[],
    );
    assert_eq!(code, 2);
}

#[test]
fn evaluate_reads_market_and_scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_market(dir.path(), date(2020, 1, 1), 3);
    let scenarios = dir.path().join("scen.csv");
    let mut text = String::from("h00,h01\n");
    text.push_str("40,41\n42,43\n");
    fs::write(&scenarios, text).unwrap();
    let (code, _, stderr) = idprice(
        &[
            "evaluate",
            "--actual",
            &s(&input),
            "--generated",
            &s(&scenarios),
            "--field",
            "da",
            "--out",
            &s(dir.path()),
        ],
        &[],
    );
    assert_eq!(code, 0, "{stderr}");
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["actual"]["count"].as_u64().unwrap(), 3 * 24 * 2);
    assert_eq!(report["generated"]["count"].as_u64().unwrap(), 4);
}
