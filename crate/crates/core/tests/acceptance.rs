//! Acceptance criteria 1-14, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails; the process exits non-zero if any criterion failed.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use idprice::dcgan::{self, Architecture, GanHyper};
use idprice::eval::{self, compare_report, stat_summary};
use idprice::lstm::{self, LstmHyper, LstmParams};
use idprice::market_data::{price_spread, price_variation, sliding_windows, volume_share};
use idprice::numerics::{finite_diff_grad, MinMaxScaler, SeededRng};
use idprice::nuts::{self, IsotropicGaussian, NutsConfig, PhasePoint};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_variation() -> Outcome {
    let v = price_variation(57.40, 39.12, 43.67).map_err(|e| e.to_string())?;
    let s = price_spread(57.40, 39.12);
    check(
        (v - 41.86).abs() <= 0.01 && (s - 18.28).abs() <= 0.005,
        format!("variation {v:.4}%, spread {s:.4}"),
    )
}

fn c2_volume_share() -> Outcome {
    // zone, side, DA volume, ID volume, printed share
    let rows = [
        ("SE1", "buy", 865237.5, 18832.4, 2.2),
        ("SE1", "sell", 2086117.5, 40491.2, 1.9),
        ("SE2", "buy", 915577.1, 60801.5, 6.6),
        ("SE2", "sell", 3403113.4, 81473.3, 2.4),
        ("SE3", "buy", 5638029.1, 72795.2, 1.3),
        ("SE3", "sell", 4570174.9, 66343.0, 1.5),
        ("SE4", "buy", 1578820.0, 35793.1, 2.3),
        ("SE4", "sell", 280141.5, 11692.8, 4.2),
    ];
    let mut bad = Vec::new();
    for (zone, side, da, id, printed) in rows {
        let share = volume_share(id, da).map_err(|e| e.to_string())?;
        if ((share * 10.0).round() / 10.0 - printed).abs() > 1e-9 {
            bad.push(format!("{zone} {side}: {share:.3} vs {printed}"));
        }
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            "8/8 rows".into()
        } else {
            bad.join("; ")
        },
    )
}

fn c3_bptt() -> Outcome {
    let mut worst: f64 = 0.0;
    for hidden in [1, 2, 4] {
        for steps in [1, 3, 5] {
            for seed in 0..10u64 {
                let mut rng = SeededRng::new(seed);
                let params = LstmParams::init(1, hidden, &mut rng);
                let xs: Vec<Vec<f64>> = (0..steps).map(|_| vec![rng.normal()]).collect();
                let ys: Vec<f64> = (0..steps).map(|_| rng.normal()).collect();
                let analytic = lstm::lstm_backprop(&params, &xs, &ys)
                    .map_err(|e| e.to_string())?
                    .to_flat();
                let loss = |flat: &[f64]| {
                    let p = LstmParams::from_flat(1, hidden, flat).unwrap();
                    let (pred, _) = lstm::lstm_sequence_forward(&p, &xs).unwrap();
                    lstm::mse_loss(&pred, &ys).unwrap()
                };
                let numeric =
                    finite_diff_grad(loss, &params.to_flat(), 1e-5).map_err(|e| e.to_string())?;
                for (a, n) in analytic.iter().zip(&numeric) {
                    let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                    worst = worst.max(rel);
                }
            }
        }
    }
    check(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over 90 cases"),
    )
}

fn sine(range: std::ops::Range<usize>) -> Vec<f64> {
    range
        .map(|t| 50.0 + 20.0 * (2.0 * PI * t as f64 / 24.0).sin())
        .collect()
}

fn c4_lstm_curve() -> Outcome {
    let train = sine(0..240);
    let test = sine(240..336);
    let scaler = MinMaxScaler::fit(&train).map_err(|e| e.to_string())?;
    let windows = |v: &[f64]| {
        let scaled: Vec<Option<f64>> = scaler.scale_all(v).into_iter().map(Some).collect();
        sliding_windows(&scaled, 24)
    };
    let hyper = LstmHyper {
        seed: 42,
        ..LstmHyper::default()
    };
    let (_, curve) =
        lstm::train_lstm(&windows(&train), &windows(&test), &hyper).map_err(|e| e.to_string())?;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let first_within = |v: &[f64]| {
        let m = min(v);
        v.iter().position(|&x| x <= 1.05 * m)
    };
    let (tr, te) = (first_within(&curve.train), first_within(&curve.test));
    let final_test = *curve.test.last().unwrap();
    let plateau = tr.is_some_and(|e| e < 300) && te.is_some_and(|e| e < 300);
    check(
        plateau && final_test < 1e-2,
        format!(
            "within 5% of minimum from epoch train {:?} / test {:?} (need < 300); \
             test MSE at 500 = {final_test:.2e} (need < 1e-2)",
            tr, te
        ),
    )
}

fn c5_zero_lstm() -> Outcome {
    let params = LstmParams::zeros(1, 4);
    let mut rng = SeededRng::new(3);
    let mut max_abs: f64 = 0.0;
    for len in [1, 7, 50] {
        let xs: Vec<Vec<f64>> = (0..len).map(|_| vec![rng.normal() * 100.0]).collect();
        let (pred, state) = lstm::lstm_sequence_forward(&params, &xs).map_err(|e| e.to_string())?;
        for v in pred.iter().chain(&state.output).chain(&state.cell) {
            max_abs = max_abs.max(v.abs());
        }
    }
    check(max_abs == 0.0, format!("max |output| {max_abs}"))
}

fn c6_gan_value() -> Outcome {
    let eps = dcgan::LOG_EPS;
    let optimum = dcgan::gan_value(&[1.0 - eps; 8], &[eps; 8]).map_err(|e| e.to_string())?;
    let half = dcgan::gan_value(&[0.5; 8], &[0.5; 8]).map_err(|e| e.to_string())?;
    check(
        optimum.abs() <= 1e-5 && (half + 1.386294).abs() <= 1e-6,
        format!("V(optimum) {optimum:.3e}, V(0.5) {half:.7}"),
    )
}

fn c7_dcgan_degenerate() -> Outcome {
    let target: Vec<f64> = (0..24)
        .map(|h| 0.6 * (2.0 * PI * h as f64 / 24.0).sin() - 0.1)
        .collect();
    let data = vec![target.clone(); 32];
    let hyper = GanHyper {
        architecture: Architecture::Dense,
        seed: 42,
        epochs: 2000,
        ..GanHyper::default()
    };
    let (g, _, _) = dcgan::train_dcgan(&data, &hyper).map_err(|e| e.to_string())?;
    let mut rng = SeededRng::new(42);
    let mut mean = [0.0; 24];
    for _ in 0..100 {
        let l: Vec<f64> = (0..g.latent_dim()).map(|_| rng.normal()).collect();
        let x = dcgan::generator_forward(&g, &l).map_err(|e| e.to_string())?;
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / 100.0;
        }
    }
    let err = mean
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        err <= 0.15,
        format!("max per-hour |mean - target| {err:.4}"),
    )
}

fn c8_dcgan_envelope() -> Outcome {
    let prices = common::read_column(&common::fixture("summary_actual.csv"), "price");
    let scaler = MinMaxScaler::fit(&prices).map_err(|e| e.to_string())?;
    let profiles: Vec<Vec<f64>> = prices
        .chunks_exact(24)
        .take(64)
        .map(|c| scaler.scale_all(c))
        .collect();
    let hyper = GanHyper {
        seed: 42,
        epochs: 50,
        ..GanHyper::default()
    };
    let (g, _, _) = dcgan::train_dcgan(&profiles, &hyper).map_err(|e| e.to_string())?;
    let set = dcgan::sample_prices(&g, &scaler, 1000, &mut SeededRng::new(8));
    let pooled = set.pooled();
    let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    check(
        scaler.min == -29.21 && scaler.max == 100.0 && lo >= -29.21 && hi <= 100.0,
        format!(
            "scaler [{}, {}], {} generated prices in [{lo:.2}, {hi:.2}]",
            scaler.min,
            scaler.max,
            pooled.len()
        ),
    )
}

fn c9_nuts_gaussian() -> Outcome {
    let config = NutsConfig {
        warmup: 1000,
        samples: 5000,
        seed: 42,
        ..NutsConfig::default()
    };
    let samples = nuts::nuts_sample(&IsotropicGaussian::standard(1), &[0.0], &config)
        .map_err(|e| e.to_string())?;
    let xs = samples.column(0);
    let s = stat_summary(&xs).map_err(|e| e.to_string())?;
    let var = s.std * s.std;
    let accept = samples.mean_accept_stat();
    let div = samples.divergences();
    check(
        s.mean.abs() < 0.05
            && (0.9..=1.1).contains(&var)
            && (0.7..=0.9).contains(&accept)
            && div == 0,
        format!(
            "mean {:.4}, var {var:.4}, accept {accept:.3}, divergences {div}",
            s.mean
        ),
    )
}

fn c10_leapfrog() -> Outcome {
    let target = IsotropicGaussian::standard(1);
    let start = PhasePoint::new(&target, vec![1.0], vec![0.0]);
    let step = nuts::leapfrog(&target, &start, 0.1);
    let dh = (step.hamiltonian() - start.hamiltonian()).abs();
    let mut back = step.clone();
    back.momentum[0] = -back.momentum[0];
    let back = nuts::leapfrog(&target, &back, 0.1);
    let rev = (back.theta[0] - 1.0)
        .abs()
        .max((back.momentum[0] + 0.0).abs());
    let half = nuts::leapfrog(&target, &start, 0.05);
    let dh_half = (half.hamiltonian() - start.hamiltonian()).abs();
    let ratio = dh / dh_half;
    check(
        (step.theta[0] - 0.995).abs() < 1e-12
            && (step.momentum[0] + 0.09975).abs() < 1e-12
            && (dh - 1.25e-5).abs() <= 1e-7
            && rev <= 1e-12
            && ratio >= 6.0,
        format!(
            "theta' {:.6}, r' {:.6}, |dH| {dh:.4e}, reversal error {rev:.1e}, dH ratio {ratio:.2}",
            step.theta[0], step.momentum[0]
        ),
    )
}

fn c11_mixture() -> Outcome {
    let mut rng = SeededRng::new(42);
    let data: Vec<f64> = (0..500)
        .map(|_| {
            let u = rng.uniform();
            let z = rng.normal();
            if u < 0.3 {
                -5.0 + z
            } else {
                5.0 + z
            }
        })
        .collect();
    let config = NutsConfig {
        warmup: 1000,
        samples: 5000,
        seed: 42,
        ..NutsConfig::default()
    };
    let (model, samples) = nuts::fit_mixture(&data, 2, &config).map_err(|e| e.to_string())?;
    let generated = nuts::posterior_predictive(&model, &samples, 5000, &mut SeededRng::new(43))
        .map_err(|e| e.to_string())?;
    let ks = eval::ks_statistic(&generated, &data).map_err(|e| e.to_string())?;
    check(
        ks < 0.08,
        format!("KS {ks:.4}, {} divergences", samples.divergences()),
    )
}

fn c12_summary_fixtures() -> Outcome {
    let actual = common::read_column(&common::fixture("summary_actual.csv"), "price");
    let generated = common::read_column(&common::fixture("summary_generated.csv"), "price");
    let s = stat_summary(&actual).map_err(|e| e.to_string())?;
    let expected = [
        ("mean", s.mean, 15.33),
        ("std", s.std, 17.37),
        ("min", s.min, -29.21),
        ("p25", s.p25, 1.83),
        ("p50", s.p50, 10.31),
        ("p75", s.p75, 22.50),
        ("max", s.max, 100.00),
    ];
    let mut bad: Vec<String> = expected
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 0.01)
        .map(|(name, got, want)| format!("{name} {got:.4} vs {want}"))
        .collect();
    let report =
        compare_report(&actual, &generated, eval::DEFAULT_BINS).map_err(|e| e.to_string())?;
    let (dm, ds) = (report.deltas.mean, report.deltas.std);
    if (dm - 0.25).abs() > 0.02 {
        bad.push(format!("mean delta {dm:.4}"));
    }
    if (ds - 6.89).abs() > 0.02 {
        bad.push(format!("std delta {ds:.4}"));
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            format!("7/7 statistics; mean delta {dm:.4}, std delta {ds:.4}")
        } else {
            bad.join("; ")
        },
    )
}

fn run_cli(args: &[String]) -> Result<(), String> {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, _, err) = common::idprice(&refs, &[("IDPRICE_CI", "1")]);
    if code == 0 {
        Ok(())
    } else {
        Err(format!("{} exited {code}: {}", refs.join(" "), err.trim()))
    }
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn c13_determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = common::write_market(root.path(), common::date(2020, 1, 1), 20);
    let input = input.to_string_lossy().into_owned();
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out = root.path().join(run);
        let o = out.to_string_lossy().into_owned();
        let data = |model: &str| -> Vec<String> {
            [
                "train",
                "--model",
                model,
                "--input",
                &input,
                "--zone",
                "SE3",
                "--train-range",
                "2020-01-01..2020-01-14",
                "--test-range",
                "2020-01-15..2020-01-20",
                "--seed",
                "42",
                "--out",
                &o,
            ]
            .iter()
            .map(|s| s.to_string())
            .collect()
        };
        let mut lstm = data("lstm");
        lstm.extend(["--epochs", "20", "--hidden", "4"].map(String::from));
        let mut gan = data("dcgan");
        gan.extend(["--epochs", "50", "--batch-size", "4"].map(String::from));
        let mut mix = data("nuts");
        mix.extend(["--warmup", "100", "--samples", "200", "--chains", "2"].map(String::from));
        for args in [lstm, gan, mix] {
            run_cli(&args)?;
        }
        let ck = |m: &str| {
            out.join(format!("{m}_checkpoint.json"))
                .to_string_lossy()
                .into_owned()
        };
        let generate = |m: &str, extra: &[&str]| -> Vec<String> {
            let mut v: Vec<String> = [
                "generate",
                "--checkpoint",
                &ck(m),
                "--seed",
                "7",
                "--out",
                &o,
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            v.extend(extra.iter().map(|s| s.to_string()));
            v
        };
        run_cli(&generate(
            "lstm",
            &[
                "--input",
                &input,
                "--date",
                "2020-01-16",
                "--date",
                "2020-01-17",
            ],
        ))?;
        run_cli(&generate("dcgan", &["--count", "20"]))?;
        run_cli(&generate("nuts", &["--count", "500"]))?;
        runs.push(snapshot(&out));
    }
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = runs[0]
        .iter()
        .zip(&runs[1])
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    check(
        names.len() == 9 && runs[0].len() == runs[1].len() && differing.is_empty(),
        format!("{} files compared, differing: {differing:?}", names.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 13] = [
        (
            1,
            "variation arithmetic",
            c1_variation,
            Duration::from_secs(1),
        ),
        (
            2,
            "volume-share arithmetic",
            c2_volume_share,
            Duration::from_secs(1),
        ),
        (
            3,
            "LSTM gradient fidelity",
            c3_bptt,
            Duration::from_secs(10),
        ),
        (
            4,
            "LSTM learning curve shape",
            c4_lstm_curve,
            Duration::from_secs(60),
        ),
        (
            5,
            "LSTM trivial forward",
            c5_zero_lstm,
            Duration::from_secs(1),
        ),
        (
            6,
            "GAN objective anchors",
            c6_gan_value,
            Duration::from_secs(1),
        ),
        (
            7,
            "DCGAN degenerate convergence",
            c7_dcgan_degenerate,
            Duration::from_secs(120),
        ),
        (
            8,
            "DCGAN range envelope",
            c8_dcgan_envelope,
            Duration::from_secs(5),
        ),
        (
            9,
            "NUTS unit Gaussian",
            c9_nuts_gaussian,
            Duration::from_secs(30),
        ),
        (
            10,
            "leapfrog integrator",
            c10_leapfrog,
            Duration::from_secs(1),
        ),
        (
            11,
            "NUTS mixture recovery",
            c11_mixture,
            Duration::from_secs(120),
        ),
        (
            12,
            "summary statistics fixtures",
            c12_summary_fixtures,
            Duration::from_secs(1),
        ),
        (
            13,
            "determinism sweep",
            c13_determinism,
            Duration::from_secs(300),
        ),
    ];
    let suite = Instant::now();
    let mut failed = Vec::new();
    for (id, name, f, budget) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = t.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.1?}, budget {budget:?}")),
            Err(d) => (false, d),
        };
        println!(
            "[{}] {id:>2}. {name}: {detail} ({elapsed:.2?})",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failed.push(id);
        }
    }
    let total = suite.elapsed();
    let within = total < Duration::from_secs(600);
    println!(
        "[{}] 14. full suite runtime: {total:.1?} (budget 600 s)",
        if within { "PASS" } else { "FAIL" }
    );
    if !within {
        failed.push(14);
    }
    if failed.is_empty() {
        println!("acceptance: 14/14 criteria passed");
    } else {
        println!(
            "acceptance: {}/14 criteria passed; failed: {failed:?}",
            14 - failed.len()
        );
        std::process::exit(1);
    }
}
