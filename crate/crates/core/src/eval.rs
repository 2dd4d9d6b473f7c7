//! Distribution-level comparison of actual and generated prices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default histogram resolution.
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{0}")]
    Domain(String),
    #[error("histogram edges must be finite and strictly increasing")]
    Edges,
}

/// Count, moments and order statistics of a sample. Percentiles interpolate
/// linearly between order statistics at position `p·(n − 1)`; the standard
/// deviation uses the `n − 1` denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

fn check_values(values: &[f64]) -> Result<(), EvalError> {
    if values.is_empty() {
        return Err(EvalError::Domain("empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::Domain(
            "sample contains non-finite values".into(),
        ));
    }
    Ok(())
}

/// Linear-interpolation percentile of sorted data, `p` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn stat_summary(values: &[f64]) -> Result<StatSummary, EvalError> {
    check_values(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(StatSummary {
        count: values.len(),
        mean,
        std,
        min: sorted[0],
        p25: percentile_sorted(&sorted, 0.25),
        p50: percentile_sorted(&sorted, 0.50),
        p75: percentile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Density histogram: `density[i] = count[i] / (n · width[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub total: usize,
    /// Values outside the edges that were counted in an end bin.
    pub clipped: usize,
}

impl Histogram {
    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `Σ density · width`; one for non-empty input.
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.widths())
            .map(|(d, w)| d * w)
            .sum()
    }
}

/// `bins` equal-width edges over `[lo, hi]`. A zero-width range is widened
/// by one unit on each side.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>, EvalError> {
    if bins == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(EvalError::Edges);
    }
    let (lo, hi) = if hi == lo {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    Ok(edges)
}

/// Histogram of `values` over `edges`. The last bin is closed on the right.
pub fn empirical_pdf(values: &[f64], edges: &[f64]) -> Result<Histogram, EvalError> {
    check_values(values)?;
    if edges.len() < 2
        || edges.iter().any(|e| !e.is_finite())
        || edges.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(EvalError::Edges);
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    let mut clipped = 0;
    for &v in values {
        let bin = if v < edges[0] {
            clipped += 1;
            0
        } else if v > edges[bins] {
            clipped += 1;
            bins - 1
        } else {
            // First edge strictly greater than v, minus one.
            edges
                .partition_point(|&e| e <= v)
                .saturating_sub(1)
                .min(bins - 1)
        };
        counts[bin] += 1;
    }
    let n = values.len() as f64;
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (n * (w[1] - w[0])))
        .collect();
    Ok(Histogram {
        edges: edges.to_vec(),
        density,
        total: values.len(),
        clipped,
    })
}

/// Histogram with `bins` equal-width bins spanning the data.
pub fn empirical_pdf_bins(values: &[f64], bins: usize) -> Result<Histogram, EvalError> {
    check_values(values)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    empirical_pdf(values, &uniform_edges(lo, hi, bins)?)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    check_values(a)?;
    check_values(b)?;
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Absolute differences between two summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryDeltas {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

impl SummaryDeltas {
    fn between(a: &StatSummary, b: &StatSummary) -> Self {
        Self {
            mean: (a.mean - b.mean).abs(),
            std: (a.std - b.std).abs(),
            min: (a.min - b.min).abs(),
            p25: (a.p25 - b.p25).abs(),
            p50: (a.p50 - b.p50).abs(),
            p75: (a.p75 - b.p75).abs(),
            max: (a.max - b.max).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub actual: StatSummary,
    pub generated: StatSummary,
    pub histogram_actual: Histogram,
    pub histogram_generated: Histogram,
    pub ks: f64,
    pub deltas: SummaryDeltas,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `bin_left,bin_right,density_actual,density_generated`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,density_actual,density_generated\n");
        let edges = &self.histogram_actual.edges;
        for i in 0..edges.len() - 1 {
            out.push_str(&format!(
                "{},{},{},{}\n",
                edges[i],
                edges[i + 1],
                self.histogram_actual.density[i],
                self.histogram_generated.density[i]
            ));
        }
        out
    }
}

/// Summaries, histograms on shared edges spanning both samples, the KS
/// statistic and absolute summary deltas.
pub fn compare_report(
    actual: &[f64],
    generated: &[f64],
    bins: usize,
) -> Result<EvalReport, EvalError> {
    let summary_a = stat_summary(actual)?;
    let summary_g = stat_summary(generated)?;
    let edges = uniform_edges(
        summary_a.min.min(summary_g.min),
        summary_a.max.max(summary_g.max),
        bins,
    )?;
    Ok(EvalReport {
        histogram_actual: empirical_pdf(actual, &edges)?,
        histogram_generated: empirical_pdf(generated, &edges)?,
        ks: ks_statistic(actual, generated)?,
        deltas: SummaryDeltas::between(&summary_a, &summary_g),
        actual: summary_a,
        generated: summary_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;
    use proptest::prelude::*;

    #[test]
    fn summary_examples() {
        let s = stat_summary(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.mean, s.p50, s.min, s.max), (3.0, 3.0, 1.0, 5.0));
        assert_eq!((s.p25, s.p75), (2.0, 4.0));
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-15);
        let c = stat_summary(&[7.5; 9]).unwrap();
        assert_eq!(
            (c.mean, c.std, c.p25, c.p50, c.p75),
            (7.5, 0.0, 7.5, 7.5, 7.5)
        );
        assert!(stat_summary(&[]).is_err());
        // numpy.percentile([1, 2, 3, 4], 25) == 1.75
        assert_eq!(stat_summary(&[4.0, 1.0, 3.0, 2.0]).unwrap().p25, 1.75);
    }

    #[test]
    fn histogram_examples() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let edges = uniform_edges(0.0, 1.0, 10).unwrap();
        let h = empirical_pdf(&values, &edges).unwrap();
        assert!(h.density.iter().all(|d| (d - 1.0).abs() < 1e-12));
        assert_eq!(h.clipped, 0);

        let single = empirical_pdf(&[0.25], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(single.density, vec![2.0, 0.0]);

        let clipped = empirical_pdf(&[-5.0, 0.5, 9.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(clipped.clipped, 2);
        assert!((clipped.integral() - 1.0).abs() < 1e-12);

        assert_eq!(empirical_pdf(&[1.0], &[1.0, 1.0]), Err(EvalError::Edges));
        assert_eq!(empirical_pdf(&[1.0], &[2.0, 1.0]), Err(EvalError::Edges));
        assert_eq!(empirical_pdf(&[1.0], &[1.0]), Err(EvalError::Edges));
        assert_eq!(empirical_pdf_bins(&[3.0, 3.0], 4).unwrap().integral(), 1.0);
    }

    #[test]
    fn ks_examples() {
        let a = [0.1, 0.5, 0.9];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_statistic(&a, &[2.1, 2.5, 2.9]).unwrap(), 1.0);
        assert!(ks_statistic(&[], &a).is_err());
    }

    fn brute_force_ks(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ks_matches_brute_force() {
        let mut rng = SeededRng::new(1);
        for _ in 0..20 {
            let a: Vec<f64> = (0..50).map(|_| rng.normal()).collect();
            let b: Vec<f64> = (0..50)
                .map(|_| (rng.normal() * 4.0).round() / 4.0 + 0.3)
                .collect();
            let d = ks_statistic(&a, &b).unwrap();
            assert!((d - brute_force_ks(&a, &b)).abs() < 1e-15);
        }
    }

    #[test]
    fn report_edges_are_symmetric() {
        let a = [1.0, 2.0, 3.0, 10.0];
        let b = [-4.0, 0.0, 2.5];
        let ab = compare_report(&a, &b, 7).unwrap();
        let ba = compare_report(&b, &a, 7).unwrap();
        assert_eq!(ab.histogram_actual.edges, ba.histogram_actual.edges);
        assert_eq!(ab.actual, ba.generated);
        assert_eq!(ab.ks, ba.ks);
        assert_eq!(ab.histogram_actual.edges, ab.histogram_generated.edges);
        assert_eq!(ab.histogram_csv().lines().count(), 8);
        let same = compare_report(&a, &a, 5).unwrap();
        assert_eq!(same.ks, 0.0);
        assert_eq!(same.deltas.mean + same.deltas.std + same.deltas.p50, 0.0);
        let json: serde_json::Value = serde_json::from_str(&same.to_json()).unwrap();
        assert_eq!(json["ks"], 0.0);
    }

    proptest! {
        #[test]
        fn percentiles_are_monotone(v in prop::collection::vec(-1e3f64..1e3, 1..80)) {
            let s = stat_summary(&v).unwrap();
            prop_assert!(s.min <= s.p25 && s.p25 <= s.p50 && s.p50 <= s.p75 && s.p75 <= s.max);
            prop_assert!(s.std >= 0.0);
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let t = stat_summary(&sorted).unwrap();
            prop_assert_eq!((s.min, s.p25, s.p50, s.p75, s.max), (t.min, t.p25, t.p50, t.p75, t.max));
        }

        #[test]
        fn histogram_integrates_to_one(v in prop::collection::vec(-1e3f64..1e3, 1..200), bins in 1usize..60) {
            let h = empirical_pdf_bins(&v, bins).unwrap();
            prop_assert!((h.integral() - 1.0).abs() < 1e-9);
            prop_assert_eq!(h.clipped, 0);
        }

        #[test]
        fn ks_is_symmetric_and_bounded(
            a in prop::collection::vec(-10f64..10.0, 1..40),
            b in prop::collection::vec(-10f64..10.0, 1..40),
        ) {
            let d = ks_statistic(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
            prop_assert!((d - brute_force_ks(&a, &b)).abs() < 1e-12);
        }
    }
}
