//! Hourly day-ahead / intraday market records and the exploratory
//! statistics computed over them: price variation within an hour, the share
//! of hours where all bidding zones clear at the same price, and intraday
//! volume as a share of day-ahead volume.
//!
//! Timestamps are zone-local delivery hours exactly as published. An optional
//! UTC offset suffix (`+02:00`) lets the repeated hour of a 25-hour day be
//! told apart from a duplicate row.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column contract for market CSV files.
pub const CSV_HEADER: [&str; 9] = [
    "timestamp",
    "zone",
    "da_price",
    "id_high",
    "id_low",
    "id_last",
    "id_avg",
    "buy_volume",
    "sell_volume",
];

/// Two prices are "the same" when they differ by at most this much (EUR/MWh),
/// half the published 0.01 resolution.
pub const SAME_PRICE_TOLERANCE: f64 = 0.005;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketDataError {
    #[error("format error: {0}")]
    Format(String),
    #[error("duplicate record for zone {zone} at {timestamp}")]
    Duplicate { zone: String, timestamp: String },
    #[error("no data for zone {0}")]
    UnknownZone(String),
    #[error("price variation is undefined when the average price is zero")]
    UndefinedVariation,
    #[error("invalid price range: high {high} is below low {low}")]
    InvalidRange { high: f64, low: f64 },
    #[error("no timestamps where all zones report {0}")]
    EmptyOverlap(PriceField),
    #[error("at least two zones are required, got {0}")]
    TooFewZones(usize),
    #[error("day-ahead volume must be positive, got {0}")]
    NonPositiveVolume(f64),
    #[error("invalid date range `{0}`")]
    DateRange(String),
}

/// Which price column a computation reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceField {
    Da,
    High,
    Low,
    Last,
    Avg,
}

impl PriceField {
    pub const ALL: [PriceField; 5] = [
        PriceField::Da,
        PriceField::High,
        PriceField::Low,
        PriceField::Last,
        PriceField::Avg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PriceField::Da => "da",
            PriceField::High => "high",
            PriceField::Low => "low",
            PriceField::Last => "last",
            PriceField::Avg => "avg",
        }
    }
}

impl fmt::Display for PriceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriceField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "da" => Ok(PriceField::Da),
            "high" => Ok(PriceField::High),
            "low" => Ok(PriceField::Low),
            "last" => Ok(PriceField::Last),
            "avg" => Ok(PriceField::Avg),
            other => Err(format!(
                "unknown price field `{other}` (expected avg|high|low|last|da)"
            )),
        }
    }
}

/// A delivery hour in zone-local time, optionally tagged with its UTC offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HourStamp {
    local: NaiveDateTime,
    offset_minutes: Option<i32>,
}

impl HourStamp {
    pub fn new(local: NaiveDateTime) -> Self {
        Self {
            local,
            offset_minutes: None,
        }
    }

    pub fn with_offset(local: NaiveDateTime, offset_minutes: i32) -> Self {
        Self {
            local,
            offset_minutes: Some(offset_minutes),
        }
    }

    pub fn from_ymdh(year: i32, month: u32, day: u32, hour: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day)
            .and_then(|d| d.and_hms_opt(hour, 0, 0))
            .map(Self::new)
    }

    pub fn local(&self) -> NaiveDateTime {
        self.local
    }

    pub fn date(&self) -> NaiveDate {
        self.local.date()
    }

    pub fn hour(&self) -> u32 {
        self.local.hour()
    }

    pub fn offset_minutes(&self) -> Option<i32> {
        self.offset_minutes
    }
}

impl Ord for HourStamp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Same wall-clock hour: the larger offset happened first (DST fall-back).
        self.local.cmp(&other.local).then_with(|| {
            other
                .offset_minutes
                .unwrap_or(0)
                .cmp(&self.offset_minutes.unwrap_or(0))
        })
    }
}

impl PartialOrd for HourStamp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for HourStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.local.format("%Y-%m-%dT%H:%M"))?;
        if let Some(off) = self.offset_minutes {
            let sign = if off < 0 { '-' } else { '+' };
            let a = off.abs();
            write!(f, "{sign}{:02}:{:02}", a / 60, a % 60)?;
        }
        Ok(())
    }
}

impl FromStr for HourStamp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (body, offset) = split_offset(s)?;
        let local = [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%d %H:%M",
        ]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(body, fmt).ok())
        .or_else(|| {
            // bare "YYYY-MM-DDTHH"
            let (d, h) = body.split_once(['T', ' '])?;
            let date = NaiveDate::parse_from_str(d, "%Y-%m-%d").ok()?;
            date.and_hms_opt(h.parse().ok()?, 0, 0)
        })
        .ok_or_else(|| format!("unparseable timestamp `{s}`"))?;
        if local.minute() != 0 || local.second() != 0 {
            return Err(format!("timestamp `{s}` is not on an hour boundary"));
        }
        Ok(Self {
            local,
            offset_minutes: offset,
        })
    }
}

fn split_offset(s: &str) -> Result<(&str, Option<i32>), String> {
    if let Some(body) = s.strip_suffix('Z') {
        return Ok((body, Some(0)));
    }
    // An offset looks like ±HH:MM after the time part.
    if s.len() > 6 {
        let (body, tail) = s.split_at(s.len() - 6);
        let bytes = tail.as_bytes();
        if (bytes[0] == b'+' || bytes[0] == b'-') && bytes[3] == b':' && body.contains(['T', ' ']) {
            let hours: i32 = tail[1..3]
                .parse()
                .map_err(|_| format!("bad UTC offset in `{s}`"))?;
            let mins: i32 = tail[4..6]
                .parse()
                .map_err(|_| format!("bad UTC offset in `{s}`"))?;
            let total = hours * 60 + mins;
            return Ok((body, Some(if bytes[0] == b'-' { -total } else { total })));
        }
    }
    Ok((s, None))
}

/// One zone-hour observation. Prices in EUR/MWh, volumes in MW.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceRecord {
    pub timestamp: HourStamp,
    pub zone: String,
    pub da_price: Option<f64>,
    pub id_high: Option<f64>,
    pub id_low: Option<f64>,
    pub id_last: Option<f64>,
    pub id_avg: Option<f64>,
    pub buy_volume: Option<f64>,
    pub sell_volume: Option<f64>,
}

impl PriceRecord {
    pub fn field(&self, field: PriceField) -> Option<f64> {
        match field {
            PriceField::Da => self.da_price,
            PriceField::High => self.id_high,
            PriceField::Low => self.id_low,
            PriceField::Last => self.id_last,
            PriceField::Avg => self.id_avg,
        }
    }

    /// Checks the per-record invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        if let (Some(h), Some(l)) = (self.id_high, self.id_low) {
            if l > h {
                return Err(format!("id_low {l} exceeds id_high {h}"));
            }
        }
        if let (Some(h), Some(l), Some(a)) = (self.id_high, self.id_low, self.id_avg) {
            if a < l || a > h {
                return Err(format!("id_avg {a} outside [id_low {l}, id_high {h}]"));
            }
        }
        for (name, v) in [
            ("buy_volume", self.buy_volume),
            ("sell_volume", self.sell_volume),
        ] {
            if let Some(v) = v {
                if v < 0.0 {
                    return Err(format!("{name} is negative ({v})"));
                }
            }
        }
        if self.zone.is_empty() {
            return Err("empty zone label".into());
        }
        Ok(())
    }

    /// Intraday variation for this hour, if high/low/avg were all traded.
    pub fn variation(&self) -> Option<Result<f64, MarketDataError>> {
        Some(price_variation(self.id_high?, self.id_low?, self.id_avg?))
    }
}

/// A row the parser skipped, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowWarning {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Time-ordered records grouped by zone; at most one record per
/// (zone, timestamp).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarketSeries {
    source: String,
    zones: BTreeMap<String, Vec<PriceRecord>>,
    warnings: Vec<RowWarning>,
}

impl MarketSeries {
    /// Build from records in any order. Fails on a duplicate key.
    pub fn from_records(
        source: impl Into<String>,
        records: impl IntoIterator<Item = PriceRecord>,
    ) -> Result<Self, MarketDataError> {
        let mut zones: BTreeMap<String, Vec<PriceRecord>> = BTreeMap::new();
        for r in records {
            zones.entry(r.zone.clone()).or_default().push(r);
        }
        for (zone, recs) in zones.iter_mut() {
            recs.sort_by_key(|r| r.timestamp);
            if let Some(w) = recs.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
                return Err(MarketDataError::Duplicate {
                    zone: zone.clone(),
                    timestamp: w[0].timestamp.to_string(),
                });
            }
        }
        Ok(Self {
            source: source.into(),
            zones,
            warnings: Vec::new(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn warnings(&self) -> &[RowWarning] {
        &self.warnings
    }

    pub fn zones(&self) -> impl Iterator<Item = &str> {
        self.zones.keys().map(String::as_str)
    }

    pub fn records(&self, zone: &str) -> Option<&[PriceRecord]> {
        self.zones.get(zone).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PriceRecord> {
        self.zones.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.zones.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Earliest and latest timestamp across all zones.
    pub fn coverage(&self) -> Option<(HourStamp, HourStamp)> {
        let first = self
            .zones
            .values()
            .filter_map(|r| r.first())
            .map(|r| r.timestamp)
            .min()?;
        let last = self
            .zones
            .values()
            .filter_map(|r| r.last())
            .map(|r| r.timestamp)
            .max()?;
        Some((first, last))
    }

    /// Records whose delivery date falls inside `range`.
    pub fn filter_dates(&self, range: &DateRange) -> MarketSeries {
        let zones = self
            .zones
            .iter()
            .map(|(z, recs)| {
                let kept: Vec<_> = recs
                    .iter()
                    .filter(|r| range.contains(r.timestamp.date()))
                    .cloned()
                    .collect();
                (z.clone(), kept)
            })
            .filter(|(_, recs)| !recs.is_empty())
            .collect();
        MarketSeries {
            source: self.source.clone(),
            zones,
            warnings: Vec::new(),
        }
    }

    /// Only the named zone; errors if it has no records.
    pub fn zone_only(&self, zone: &str) -> Result<MarketSeries, MarketDataError> {
        let recs = self
            .zones
            .get(zone)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| MarketDataError::UnknownZone(zone.to_string()))?;
        Ok(MarketSeries {
            source: self.source.clone(),
            zones: BTreeMap::from([(zone.to_string(), recs.clone())]),
            warnings: Vec::new(),
        })
    }

    /// Present values of one field for one zone, in time order.
    pub fn values(&self, zone: &str, field: PriceField) -> Result<Vec<f64>, MarketDataError> {
        let recs = self
            .records(zone)
            .ok_or_else(|| MarketDataError::UnknownZone(zone.to_string()))?;
        Ok(recs.iter().filter_map(|r| r.field(field)).collect())
    }

    /// Hour-by-hour values of one field with `None` for missing prices and for
    /// hours absent between consecutive records.
    pub fn hourly(
        &self,
        zone: &str,
        field: PriceField,
    ) -> Result<Vec<(HourStamp, Option<f64>)>, MarketDataError> {
        let recs = self
            .records(zone)
            .ok_or_else(|| MarketDataError::UnknownZone(zone.to_string()))?;
        let mut out = Vec::with_capacity(recs.len());
        let mut prev: Option<NaiveDateTime> = None;
        for r in recs {
            let t = r.timestamp.local();
            if let Some(p) = prev {
                let mut gap = p + Duration::hours(1);
                while gap < t {
                    out.push((HourStamp::new(gap), None));
                    gap += Duration::hours(1);
                }
            }
            out.push((r.timestamp, r.field(field)));
            prev = Some(t);
        }
        Ok(out)
    }

    /// CSV rendering under the column contract; `parse_market_csv` reads it
    /// back unchanged.
    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for r in self.iter() {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.timestamp,
                r.zone,
                fmt(r.da_price),
                fmt(r.id_high),
                fmt(r.id_low),
                fmt(r.id_last),
                fmt(r.id_avg),
                fmt(r.buy_volume),
                fmt(r.sell_volume),
            ));
        }
        out
    }
}

fn parse_optional(raw: &str, column: &str) -> Result<Option<f64>, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("column {column}: `{raw}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("column {column}: non-finite value `{raw}`"));
    }
    Ok(Some(v))
}

fn parse_row(row: &csv::StringRecord) -> Result<PriceRecord, String> {
    if row.len() != CSV_HEADER.len() {
        return Err(format!(
            "expected {} columns, found {}",
            CSV_HEADER.len(),
            row.len()
        ));
    }
    let timestamp: HourStamp = row[0].parse()?;
    let num = |i: usize| parse_optional(&row[i], CSV_HEADER[i]);
    let record = PriceRecord {
        timestamp,
        zone: row[1].trim().to_string(),
        da_price: num(2)?,
        id_high: num(3)?,
        id_low: num(4)?,
        id_last: num(5)?,
        id_avg: num(6)?,
        buy_volume: num(7)?,
        sell_volume: num(8)?,
    };
    record.validate()?;
    Ok(record)
}

/// Parse a market CSV document.
///
/// Ill-formed rows are skipped and reported through
/// [`MarketSeries::warnings`]; a missing or wrong header and a repeated
/// (zone, timestamp) key are hard errors.
pub fn parse_market_csv(text: &str, source: &str) -> Result<MarketSeries, MarketDataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| MarketDataError::Format(e.to_string()))?
        .clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found.is_empty() || found == [""] {
        return Err(MarketDataError::Format("missing header row".into()));
    }
    if found != CSV_HEADER {
        return Err(MarketDataError::Format(format!(
            "header must be `{}`, found `{}`",
            CSV_HEADER.join(","),
            found.join(",")
        )));
    }

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: HashMap<(String, HourStamp), u64> = HashMap::new();
    for result in reader.records() {
        let row = match result {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                warnings.push(RowWarning {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        match parse_row(&row) {
            Ok(rec) => {
                let key = (rec.zone.clone(), rec.timestamp);
                if let Some(first) = seen.insert(key, line) {
                    return Err(MarketDataError::Duplicate {
                        zone: rec.zone,
                        timestamp: format!("{} (lines {first} and {line})", rec.timestamp),
                    });
                }
                records.push(rec);
            }
            Err(message) => warnings.push(RowWarning { line, message }),
        }
    }
    let mut series = MarketSeries::from_records(source, records)?;
    series.warnings = warnings;
    Ok(series)
}

/// Intraday price variation of one hour, in percent: (high − low) / avg × 100.
pub fn price_variation(high: f64, low: f64, avg: f64) -> Result<f64, MarketDataError> {
    if high < low {
        return Err(MarketDataError::InvalidRange { high, low });
    }
    if avg == 0.0 {
        return Err(MarketDataError::UndefinedVariation);
    }
    Ok((high - low) / avg * 100.0)
}

/// Absolute spread of one hour, high − low (EUR/MWh).
pub fn price_spread(high: f64, low: f64) -> f64 {
    high - low
}

/// Result of a same-price count across zones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarPrices {
    pub percent: f64,
    pub matching: usize,
    pub overlap: usize,
}

/// Share of hours (among those where every zone reports `field`) in which
/// all zones' prices agree within [`SAME_PRICE_TOLERANCE`].
pub fn similar_price_fraction(
    series: &MarketSeries,
    zones: &[&str],
    field: PriceField,
) -> Result<SimilarPrices, MarketDataError> {
    similar_price_fraction_with(series, zones, field, SAME_PRICE_TOLERANCE)
}

pub fn similar_price_fraction_with(
    series: &MarketSeries,
    zones: &[&str],
    field: PriceField,
    tolerance: f64,
) -> Result<SimilarPrices, MarketDataError> {
    let (matching, overlap) = count_similar(series, zones, field, tolerance, |_| true)?;
    if overlap == 0 {
        return Err(MarketDataError::EmptyOverlap(field));
    }
    Ok(SimilarPrices {
        percent: 100.0 * matching as f64 / overlap as f64,
        matching,
        overlap,
    })
}

fn count_similar(
    series: &MarketSeries,
    zones: &[&str],
    field: PriceField,
    tolerance: f64,
    keep: impl Fn(&HourStamp) -> bool,
) -> Result<(usize, usize), MarketDataError> {
    if zones.len() < 2 {
        return Err(MarketDataError::TooFewZones(zones.len()));
    }
    let mut per_zone = Vec::with_capacity(zones.len());
    for &zone in zones {
        let recs = series
            .records(zone)
            .ok_or_else(|| MarketDataError::UnknownZone(zone.to_string()))?;
        let map: HashMap<HourStamp, f64> = recs
            .iter()
            .filter(|r| keep(&r.timestamp))
            .filter_map(|r| r.field(field).map(|v| (r.timestamp, v)))
            .collect();
        per_zone.push(map);
    }
    let (first, rest) = per_zone.split_first().expect("at least two zones");
    let mut matching = 0;
    let mut overlap = 0;
    for (stamp, &v0) in first {
        let mut lo = v0;
        let mut hi = v0;
        let mut complete = true;
        for other in rest {
            match other.get(stamp) {
                Some(&v) => {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if complete {
            overlap += 1;
            if hi - lo <= tolerance {
                matching += 1;
            }
        }
    }
    Ok((matching, overlap))
}

/// One calendar year of same-price shares, one entry per price field
/// (`None` when no hour had that field in every zone).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarPriceRow {
    pub year: i32,
    pub fields: Vec<(PriceField, Option<SimilarPrices>)>,
}

/// Same-price shares per calendar year and field across `zones`.
pub fn similar_price_table(
    series: &MarketSeries,
    zones: &[&str],
) -> Result<Vec<SimilarPriceRow>, MarketDataError> {
    let mut years: Vec<i32> = series.iter().map(|r| r.timestamp.date().year()).collect();
    years.sort_unstable();
    years.dedup();
    let mut rows = Vec::with_capacity(years.len());
    for year in years {
        let mut fields = Vec::with_capacity(PriceField::ALL.len());
        for field in PriceField::ALL {
            let (matching, overlap) =
                count_similar(series, zones, field, SAME_PRICE_TOLERANCE, |t| {
                    t.date().year() == year
                })?;
            let entry = (overlap > 0).then(|| SimilarPrices {
                percent: 100.0 * matching as f64 / overlap as f64,
                matching,
                overlap,
            });
            fields.push((field, entry));
        }
        rows.push(SimilarPriceRow { year, fields });
    }
    Ok(rows)
}

/// Intraday volume as a percentage of day-ahead volume.
pub fn volume_share(id_volume: f64, da_volume: f64) -> Result<f64, MarketDataError> {
    if da_volume <= 0.0 || da_volume.is_nan() {
        return Err(MarketDataError::NonPositiveVolume(da_volume));
    }
    Ok(100.0 * id_volume / da_volume)
}

/// 24 hourly slots of one price column for one zone-day. Missing hours stay
/// `None`; they are never zero-filled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayProfile {
    pub date: NaiveDate,
    pub zone: String,
    pub field: PriceField,
    pub values: Vec<Option<f64>>,
}

impl DayProfile {
    pub const HOURS: usize = 24;

    /// Profile from exactly 24 present values.
    pub fn from_values(date: NaiveDate, zone: &str, field: PriceField, values: &[f64]) -> Self {
        assert_eq!(values.len(), Self::HOURS, "a day profile has 24 slots");
        Self {
            date,
            zone: zone.to_string(),
            field,
            values: values.iter().copied().map(Some).collect(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// All 24 values, if none is missing.
    pub fn complete_values(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }

    pub fn min(&self) -> Option<f64> {
        self.present().reduce(f64::min)
    }

    pub fn max(&self) -> Option<f64> {
        self.present().reduce(f64::max)
    }
}

/// Extract the 24-hour profile of `field` for `zone` on `date`. On a day with
/// a repeated hour the first occurrence fills the slot.
pub fn day_profile(
    series: &MarketSeries,
    zone: &str,
    date: NaiveDate,
    field: PriceField,
) -> Result<DayProfile, MarketDataError> {
    let recs = series
        .records(zone)
        .ok_or_else(|| MarketDataError::UnknownZone(zone.to_string()))?;
    let mut values = vec![None; DayProfile::HOURS];
    let mut filled = [false; DayProfile::HOURS];
    for r in recs.iter().filter(|r| r.timestamp.date() == date) {
        let h = r.timestamp.hour() as usize;
        if !filled[h] {
            values[h] = r.field(field);
            filled[h] = true;
        }
    }
    Ok(DayProfile {
        date,
        zone: zone.to_string(),
        field,
        values,
    })
}

/// All complete day profiles for `zone` in date order.
pub fn complete_profiles(
    series: &MarketSeries,
    zone: &str,
    field: PriceField,
) -> Result<Vec<DayProfile>, MarketDataError> {
    let recs = series
        .records(zone)
        .ok_or_else(|| MarketDataError::UnknownZone(zone.to_string()))?;
    let mut dates: Vec<NaiveDate> = recs.iter().map(|r| r.timestamp.date()).collect();
    dates.dedup();
    let mut out = Vec::new();
    for date in dates {
        let p = day_profile(series, zone, date, field)?;
        if p.is_complete() {
            out.push(p);
        }
    }
    Ok(out)
}

/// (input window, next value) pairs over a sequence with gaps. Windows never
/// straddle a `None`. A zero `window` yields no pairs.
pub fn sliding_windows(values: &[Option<f64>], window: usize) -> Vec<(Vec<f64>, f64)> {
    if window == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for segment in values.split(Option::is_none) {
        let seg: Vec<f64> = segment.iter().map(|v| v.expect("split on None")).collect();
        if seg.len() <= window {
            continue;
        }
        for start in 0..seg.len() - window {
            out.push((seg[start..start + window].to_vec(), seg[start + window]));
        }
    }
    out
}

/// Inclusive calendar-date interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, MarketDataError> {
        if end < start {
            return Err(MarketDataError::DateRange(format!("{start}..{end}")));
        }
        Ok(Self { start, end })
    }

    pub fn year(year: i32) -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year"),
            end: NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year"),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for DateRange {
    type Err = MarketDataError;

    /// `YYYY` or `YYYY-MM-DD..YYYY-MM-DD` (both ends inclusive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MarketDataError::DateRange(s.to_string());
        let s = s.trim();
        if let Some((a, b)) = s.split_once("..") {
            let start = NaiveDate::parse_from_str(a.trim(), "%Y-%m-%d").map_err(|_| bad())?;
            let end = NaiveDate::parse_from_str(b.trim(), "%Y-%m-%d").map_err(|_| bad())?;
            return DateRange::new(start, end);
        }
        let year: i32 = s.parse().map_err(|_| bad())?;
        NaiveDate::from_ymd_opt(year, 1, 1).ok_or_else(bad)?;
        Ok(DateRange::year(year))
    }
}
