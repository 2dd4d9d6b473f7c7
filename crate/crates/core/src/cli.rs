//! Command-line surface: `idprice explore|train|generate|evaluate`.
//!
//! Every command reads its settings from an optional TOML config file and
//! command-line flags, with flags taking precedence. Randomized commands are
//! reproducible given `--seed`; with `IDPRICE_CI=1` a seed is mandatory.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 data, 3 numerical
//! divergence or sampler quality.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveTime};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dcgan::{self, Architecture, Discriminator, GanError, GanHyper, Generator};
use crate::eval::{self, EvalError, DEFAULT_BINS};
use crate::lstm::{self, LstmError, LstmHyper, LstmParams, Rollout};
use crate::market_data::{self, DateRange, DayProfile, MarketDataError, MarketSeries, PriceField};
use crate::numerics::{MinMaxScaler, NumericsError, ParamLayout, SeededRng};
use crate::nuts::{self, MixtureModel, MixtureTarget, NutsConfig, NutsError, PosteriorSamples};

/// Version written into and required from checkpoints.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Environment variable that makes `--seed` mandatory for randomized commands.
pub const CI_ENV: &str = "IDPRICE_CI";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<MarketDataError> for CliError {
    fn from(e: MarketDataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::Divergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LstmError> for CliError {
    fn from(e: LstmError) -> Self {
        match e {
            LstmError::Divergence { .. } | LstmError::TrainingDiverged { .. } => {
                CliError::Numerical(e.to_string())
            }
            LstmError::Numerics(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GanError> for CliError {
    fn from(e: GanError) -> Self {
        match e {
            GanError::Divergence { .. } => CliError::Numerical(e.to_string()),
            GanError::Numerics(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NutsError> for CliError {
    fn from(e: NutsError) -> Self {
        match e {
            NutsError::Config(_) => CliError::Config(e.to_string()),
            NutsError::Domain(_) => CliError::Data(e.to_string()),
            NutsError::Density(_) | NutsError::Tuning { .. } | NutsError::Quality { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    Dcgan,
    Nuts,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Dcgan => "dcgan",
            ModelKind::Nuts => "nuts",
        }
    }
}

/// Flattened parameter block with its logical shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

fn arrays_from_layout(layout: &ParamLayout, flat: &[f64]) -> Vec<NamedArray> {
    layout
        .split(flat)
        .into_iter()
        .map(|(block, data)| NamedArray {
            name: block.name.clone(),
            shape: block.shape.clone(),
            data: data.to_vec(),
        })
        .collect()
}

fn flat_from_arrays(layout: &ParamLayout, arrays: &[NamedArray]) -> Result<Vec<f64>, CliError> {
    if layout.blocks().len() != arrays.len() {
        return Err(CliError::Data(format!(
            "checkpoint has {} parameter arrays, model expects {}",
            arrays.len(),
            layout.blocks().len()
        )));
    }
    let mut flat = Vec::with_capacity(layout.total_len());
    for (block, array) in layout.blocks().iter().zip(arrays) {
        if block.name != array.name || block.shape != array.shape || block.len() != array.data.len()
        {
            return Err(CliError::Data(format!(
                "checkpoint array {} {:?} does not match expected {} {:?}",
                array.name, array.shape, block.name, block.shape
            )));
        }
        flat.extend_from_slice(&array.data);
    }
    Ok(flat)
}

/// Mixture settings stored with a NUTS checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NutsHyper {
    pub model: MixtureModel,
    pub config: NutsConfig,
    /// Hour of day the fit was restricted to, if any.
    pub hour: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelHyper {
    Lstm(LstmHyper),
    Dcgan(GanHyper),
    Nuts(NutsHyper),
}

/// Trained model on disk: versioned JSON whose floats round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub kind: ModelKind,
    pub hyper: ModelHyper,
    pub arrays: Vec<NamedArray>,
    pub scaler: Option<MinMaxScaler>,
    pub seed: u64,
    /// SHA-256 of the training values.
    pub fingerprint: String,
    pub zone: String,
    pub field: PriceField,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let c: Checkpoint = serde_json::from_str(text)
            .map_err(|e| CliError::Data(format!("malformed checkpoint: {e}")))?;
        if c.format_version != CHECKPOINT_VERSION {
            return Err(CliError::Data(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                c.format_version
            )));
        }
        let tag = match &c.hyper {
            ModelHyper::Lstm(_) => ModelKind::Lstm,
            ModelHyper::Dcgan(_) => ModelKind::Dcgan,
            ModelHyper::Nuts(_) => ModelKind::Nuts,
        };
        if tag != c.kind {
            return Err(CliError::Data(format!(
                "checkpoint kind {} disagrees with its hyperparameters ({})",
                c.kind.as_str(),
                tag.as_str()
            )));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read_file(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<PathBuf, CliError> {
        write_file(path, &self.to_json())
    }

    fn scaler(&self) -> Result<MinMaxScaler, CliError> {
        self.scaler
            .ok_or_else(|| CliError::Data("checkpoint has no scaler".into()))
    }

    pub fn lstm_params(&self) -> Result<(LstmHyper, LstmParams), CliError> {
        let ModelHyper::Lstm(hyper) = &self.hyper else {
            return Err(CliError::Usage("not an lstm checkpoint".into()));
        };
        let layout = LstmParams::layout_for(1, hyper.hidden_dim);
        let flat = flat_from_arrays(&layout, &self.arrays)?;
        Ok((*hyper, LstmParams::from_flat(1, hyper.hidden_dim, &flat)?))
    }

    pub fn gan_networks(&self) -> Result<(GanHyper, Generator, Discriminator), CliError> {
        let ModelHyper::Dcgan(hyper) = &self.hyper else {
            return Err(CliError::Usage("not a dcgan checkpoint".into()));
        };
        let mut g = Generator::new(hyper);
        let mut d = Discriminator::new(hyper);
        let layout_g = g.net.layout("generator");
        let layout_d = d.net.layout("discriminator");
        let split = layout_g.blocks().len().min(self.arrays.len());
        g.net
            .set_flat(&flat_from_arrays(&layout_g, &self.arrays[..split])?)?;
        d.net
            .set_flat(&flat_from_arrays(&layout_d, &self.arrays[split..])?)?;
        Ok((hyper.clone(), g, d))
    }

    pub fn posterior(&self) -> Result<(NutsHyper, PosteriorSamples), CliError> {
        let ModelHyper::Nuts(hyper) = &self.hyper else {
            return Err(CliError::Usage("not a nuts checkpoint".into()));
        };
        let dim = hyper.model.dim();
        let array = self
            .arrays
            .iter()
            .find(|a| a.name == "posterior")
            .ok_or_else(|| CliError::Data("checkpoint has no posterior array".into()))?;
        if array.shape.len() != 2
            || array.shape[1] != dim
            || array.data.len() != array.shape[0] * dim
        {
            return Err(CliError::Data(format!(
                "posterior array shape {:?} does not fit a {dim}-parameter model",
                array.shape
            )));
        }
        let target = MixtureTarget {
            model: &hyper.model,
            data: &[],
        };
        let draws: Vec<Vec<f64>> = array.data.chunks(dim).map(<[f64]>::to_vec).collect();
        let n = draws.len();
        let samples = PosteriorSamples {
            names: nuts::LogDensity::param_names(&target),
            draws,
            stats: Vec::new(),
            chain: vec![0; n],
        };
        Ok((hyper.clone(), samples))
    }
}

/// SHA-256 (hex) over the little-endian bytes of `values`.
pub fn fingerprint(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    format!("{:x}", hasher.finalize())
}

/// Config-file document; every key is optional and flags override it.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input: Option<PathBuf>,
    pub zone: Option<String>,
    pub field: Option<PriceField>,
    pub train_range: Option<String>,
    pub test_range: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub bins: Option<usize>,
    #[serde(default)]
    pub lstm: LstmSection,
    #[serde(default)]
    pub dcgan: DcganSection,
    #[serde(default)]
    pub nuts: NutsSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmSection {
    pub hidden_dim: Option<usize>,
    pub window: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcganSection {
    pub architecture: Option<Architecture>,
    pub latent_dim: Option<usize>,
    pub dense_widths: Option<Vec<usize>>,
    pub conv_channels: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr_generator: Option<f64>,
    pub lr_discriminator: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NutsSection {
    pub components: Option<usize>,
    pub warmup: Option<usize>,
    pub samples: Option<usize>,
    pub target_accept: Option<f64>,
    pub max_depth: Option<usize>,
    pub chains: Option<usize>,
    pub hour: Option<u32>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub zone: Option<String>,
    pub field: PriceField,
    pub train_range: DateRange,
    pub test_range: Option<DateRange>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub bins: usize,
    pub lstm: LstmHyper,
    pub dcgan: GanHyper,
    pub components: usize,
    pub nuts: NutsConfig,
    pub hour: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            zone: None,
            field: PriceField::Avg,
            train_range: DateRange::year(2020),
            test_range: Some(DateRange::year(2021)),
            out: PathBuf::from("."),
            seed: None,
            bins: DEFAULT_BINS,
            lstm: LstmHyper::default(),
            dcgan: GanHyper::default(),
            components: 2,
            nuts: NutsConfig::default(),
            hour: None,
        }
    }
}

fn parse_range(s: &str) -> Result<DateRange, CliError> {
    s.parse()
        .map_err(|e: MarketDataError| CliError::Config(e.to_string()))
}

impl RunConfig {
    /// Apply a config file over the defaults.
    pub fn from_file(file: &ConfigFile) -> Result<Self, CliError> {
        let mut c = Self::default();
        if let Some(v) = &file.input {
            c.input = Some(v.clone());
        }
        if let Some(v) = &file.zone {
            c.zone = Some(v.clone());
        }
        if let Some(v) = file.field {
            c.field = v;
        }
        if let Some(v) = &file.train_range {
            c.train_range = parse_range(v)?;
        }
        if let Some(v) = &file.test_range {
            c.test_range = Some(parse_range(v)?);
        }
        if let Some(v) = &file.out {
            c.out = v.clone();
        }
        c.seed = file.seed.or(c.seed);
        c.bins = file.bins.unwrap_or(c.bins);
        let l = &file.lstm;
        c.lstm.hidden_dim = l.hidden_dim.unwrap_or(c.lstm.hidden_dim);
        c.lstm.window = l.window.unwrap_or(c.lstm.window);
        c.lstm.epochs = l.epochs.unwrap_or(c.lstm.epochs);
        c.lstm.learning_rate = l.learning_rate.unwrap_or(c.lstm.learning_rate);
        c.lstm.clip_norm = l.clip_norm.unwrap_or(c.lstm.clip_norm);
        let g = &file.dcgan;
        c.dcgan.architecture = g.architecture.unwrap_or(c.dcgan.architecture);
        c.dcgan.latent_dim = g.latent_dim.unwrap_or(c.dcgan.latent_dim);
        if let Some(w) = &g.dense_widths {
            c.dcgan.dense_widths = w.clone();
        }
        c.dcgan.conv_channels = g.conv_channels.unwrap_or(c.dcgan.conv_channels);
        c.dcgan.epochs = g.epochs.unwrap_or(c.dcgan.epochs);
        c.dcgan.batch_size = g.batch_size.unwrap_or(c.dcgan.batch_size);
        c.dcgan.lr_generator = g.lr_generator.unwrap_or(c.dcgan.lr_generator);
        c.dcgan.lr_discriminator = g.lr_discriminator.unwrap_or(c.dcgan.lr_discriminator);
        let n = &file.nuts;
        c.components = n.components.unwrap_or(c.components);
        c.nuts.warmup = n.warmup.unwrap_or(c.nuts.warmup);
        c.nuts.samples = n.samples.unwrap_or(c.nuts.samples);
        c.nuts.target_accept = n.target_accept.unwrap_or(c.nuts.target_accept);
        c.nuts.max_depth = n.max_depth.unwrap_or(c.nuts.max_depth);
        c.nuts.chains = n.chains.unwrap_or(c.nuts.chains);
        c.hour = n.hour.or(c.hour);
        Ok(c)
    }

    /// Structural checks that must pass before any data is read.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(test) = &self.test_range {
            if test.overlaps(&self.train_range) {
                return Err(CliError::Config(format!(
                    "train range {} and test range {test} overlap",
                    self.train_range
                )));
            }
        }
        if self.out.as_os_str().is_empty() {
            return Err(CliError::Config("output directory is empty".into()));
        }
        if self
            .input
            .as_ref()
            .is_some_and(|p| p.as_os_str().is_empty())
        {
            return Err(CliError::Config("input path is empty".into()));
        }
        if self.bins == 0 {
            return Err(CliError::Config("bins must be positive".into()));
        }
        if self.hour.is_some_and(|h| h > 23) {
            return Err(CliError::Config("hour must be in 0..=23".into()));
        }
        self.lstm
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.nuts.validate()?;
        if !(1..=5).contains(&self.components) {
            return Err(CliError::Config(format!(
                "components must be in 1..=5, got {}",
                self.components
            )));
        }
        Ok(())
    }

    /// The seed for a randomized command: the configured one, or fresh
    /// entropy outside CI mode.
    pub fn resolve_seed(&self) -> Result<u64, CliError> {
        match self.seed {
            Some(s) => Ok(s),
            None if ci_mode() => Err(CliError::Usage(format!(
                "{CI_ENV}=1 requires an explicit --seed"
            ))),
            None => Ok(SeededRng::from_entropy().next_u64()),
        }
    }

    fn input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Usage("--input is required".into()))
    }
}

fn ci_mode() -> bool {
    std::env::var(CI_ENV).is_ok_and(|v| v == "1")
}

fn load_series(path: &Path) -> Result<MarketSeries, CliError> {
    let text = read_file(path)?;
    let series = market_data::parse_market_csv(&text, &path.display().to_string())
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for w in series.warnings() {
        eprintln!("warning: {}:{}: {}", path.display(), w.line, w.message);
    }
    Ok(series)
}

fn resolve_zone(series: &MarketSeries, zone: Option<&str>) -> Result<String, CliError> {
    match zone {
        Some(z) if series.records(z).is_some() => Ok(z.to_string()),
        Some(z) => Err(MarketDataError::UnknownZone(z.to_string()).into()),
        None => {
            let zones: Vec<&str> = series.zones().collect();
            match zones.as_slice() {
                [only] => Ok(only.to_string()),
                [] => Err(CliError::Data("input contains no records".into())),
                many => Err(CliError::Usage(format!(
                    "--zone is required (available: {})",
                    many.join(", ")
                ))),
            }
        }
    }
}

fn fmt2(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn variation_csv(series: &MarketSeries) -> String {
    let mut out =
        String::from("timestamp,zone,hour,id_high,id_low,id_avg,spread,variation_percent\n");
    for r in series.iter() {
        let (Some(h), Some(l), Some(a)) = (r.id_high, r.id_low, r.id_avg) else {
            continue;
        };
        let variation = market_data::price_variation(h, l, a).ok();
        out.push_str(&format!(
            "{},{},{},{h},{l},{a},{},{}\n",
            r.timestamp,
            r.zone,
            r.timestamp.hour(),
            fmt2(Some(market_data::price_spread(h, l))),
            fmt2(variation)
        ));
    }
    out
}

const FIELD_ORDER: [PriceField; 5] = [
    PriceField::Da,
    PriceField::High,
    PriceField::Low,
    PriceField::Last,
    PriceField::Avg,
];

fn similar_prices_csv(series: &MarketSeries) -> Result<String, CliError> {
    let mut out = String::from("year");
    for f in FIELD_ORDER {
        out.push_str(&format!(",{f}_percent,{f}_hours"));
    }
    out.push('\n');
    let zones: Vec<&str> = series.zones().collect();
    if zones.len() < 2 {
        eprintln!("note: similar_prices.csv needs at least two zones; writing header only");
        return Ok(out);
    }
    for row in market_data::similar_price_table(series, &zones)? {
        out.push_str(&row.year.to_string());
        for f in FIELD_ORDER {
            match row
                .fields
                .iter()
                .find(|(g, _)| *g == f)
                .and_then(|(_, s)| *s)
            {
                Some(s) => out.push_str(&format!(",{:.2},{}", s.percent, s.matching)),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn read_da_volumes(path: &Path) -> Result<BTreeMap<(String, String), f64>, CliError> {
    let text = read_file(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["zone", "type", "da_volume"] {
        return Err(CliError::Data(format!(
            "{}: expected header zone,type,da_volume",
            path.display()
        )));
    }
    let mut map = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let volume: f64 = row[2].trim().parse().map_err(|_| {
            CliError::Data(format!(
                "{}:{}: bad da_volume `{}`",
                path.display(),
                i + 2,
                &row[2]
            ))
        })?;
        map.insert((row[0].to_string(), row[1].to_lowercase()), volume);
    }
    Ok(map)
}

fn volume_share_csv(
    series: &MarketSeries,
    da: Option<&BTreeMap<(String, String), f64>>,
) -> Result<String, CliError> {
    let mut out = String::from("zone,type,da_volume,id_volume,id_share_percent\n");
    for zone in series.zones() {
        let recs = series.records(zone).unwrap_or_default();
        for (kind, volume) in [
            ("buy", recs.iter().filter_map(|r| r.buy_volume).sum::<f64>()),
            (
                "sell",
                recs.iter().filter_map(|r| r.sell_volume).sum::<f64>(),
            ),
        ] {
            let da_volume = da.and_then(|m| m.get(&(zone.to_string(), kind.to_string())).copied());
            let share = match da_volume {
                Some(d) => Some(market_data::volume_share(volume, d)?),
                None => None,
            };
            out.push_str(&format!(
                "{zone},{kind},{},{volume},{}\n",
                da_volume.map(|d| d.to_string()).unwrap_or_default(),
                share.map(|s| format!("{s:.1}")).unwrap_or_default()
            ));
        }
    }
    Ok(out)
}

fn histograms_csv(series: &MarketSeries, bins: usize) -> Result<String, CliError> {
    let mut out = String::from("zone,field,bin_left,bin_right,density\n");
    for zone in series.zones() {
        for f in FIELD_ORDER {
            let values = series.values(zone, f)?;
            if values.is_empty() {
                continue;
            }
            let h = eval::empirical_pdf_bins(&values, bins)?;
            for (i, d) in h.density.iter().enumerate() {
                out.push_str(&format!(
                    "{zone},{f},{},{},{d}\n",
                    h.edges[i],
                    h.edges[i + 1]
                ));
            }
        }
    }
    Ok(out)
}

/// Market exploration reports: `variation.csv`, `similar_prices.csv`,
/// `volume_share.csv` and `histograms.csv`.
pub fn cmd_explore(
    config: &RunConfig,
    range: Option<&DateRange>,
    da_volumes: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let mut series = load_series(config.input()?)?;
    if let Some(r) = range {
        series = series.filter_dates(r);
    }
    let scoped = match &config.zone {
        Some(z) => series.zone_only(z)?,
        None => series.clone(),
    };
    if scoped.is_empty() {
        return Err(CliError::Data("no records in the selected range".into()));
    }
    let da = da_volumes.map(read_da_volumes).transpose()?;
    let out = &config.out;
    Ok(vec![
        write_file(&out.join("variation.csv"), &variation_csv(&scoped))?,
        write_file(
            &out.join("similar_prices.csv"),
            &similar_prices_csv(&series)?,
        )?,
        write_file(
            &out.join("volume_share.csv"),
            &volume_share_csv(&scoped, da.as_ref())?,
        )?,
        write_file(
            &out.join("histograms.csv"),
            &histograms_csv(&scoped, config.bins)?,
        )?,
    ])
}

/// Hourly values of the configured zone/field with their dates.
fn hourly_values(
    series: &MarketSeries,
    zone: &str,
    field: PriceField,
) -> Result<Vec<(NaiveDate, u32, Option<f64>)>, CliError> {
    Ok(series
        .hourly(zone, field)?
        .into_iter()
        .map(|(t, v)| (t.date(), t.hour(), v))
        .collect())
}

/// `(window, target)` pairs whose whole span lies in `range`, scaled.
fn windows_in(
    hourly: &[(NaiveDate, u32, Option<f64>)],
    scaler: &MinMaxScaler,
    window: usize,
    target_range: &DateRange,
    window_range: Option<&DateRange>,
) -> Vec<(Vec<f64>, f64)> {
    let mut pairs = Vec::new();
    for i in window..hourly.len() {
        if !target_range.contains(hourly[i].0) {
            continue;
        }
        let span = &hourly[i - window..=i];
        if let Some(r) = window_range {
            if !span.iter().all(|(d, _, _)| r.contains(*d)) {
                continue;
            }
        }
        let values: Option<Vec<f64>> = span.iter().map(|(_, _, v)| *v).collect();
        if let Some(v) = values {
            let scaled = scaler.scale_all(&v);
            pairs.push((scaled[..window].to_vec(), scaled[window]));
        }
    }
    pairs
}

fn train_values(
    series: &MarketSeries,
    zone: &str,
    field: PriceField,
    range: &DateRange,
    hour: Option<u32>,
) -> Vec<f64> {
    series
        .records(zone)
        .unwrap_or_default()
        .iter()
        .filter(|r| range.contains(r.timestamp.date()))
        .filter(|r| hour.is_none_or(|h| r.timestamp.hour() == h))
        .filter_map(|r| r.field(field))
        .collect()
}

/// Train the selected model and write its checkpoint and history.
pub fn cmd_train(config: &RunConfig, model: ModelKind) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let seed = config.resolve_seed()?;
    let series = load_series(config.input()?)?;
    let zone = resolve_zone(&series, config.zone.as_deref())?;
    let field = config.field;
    let train = train_values(&series, &zone, field, &config.train_range, None);
    if train.is_empty() {
        return Err(CliError::Data(format!(
            "no {field} prices for zone {zone} in train range {}",
            config.train_range
        )));
    }
    let out = &config.out;
    let name = model.as_str();
    let (checkpoint, history_name, history) = match model {
        ModelKind::Lstm => {
            let hyper = LstmHyper {
                seed,
                ..config.lstm
            };
            let scaler = MinMaxScaler::fit(&train)?;
            let hourly = hourly_values(&series, &zone, field)?;
            let train_pairs = windows_in(
                &hourly,
                &scaler,
                hyper.window,
                &config.train_range,
                Some(&config.train_range),
            );
            if train_pairs.is_empty() {
                return Err(CliError::Data(format!(
                    "no gap-free {}-hour windows in the train range",
                    hyper.window
                )));
            }
            let test_pairs = config
                .test_range
                .map(|r| windows_in(&hourly, &scaler, hyper.window, &r, None))
                .unwrap_or_default();
            let (params, curve) = lstm::train_lstm(&train_pairs, &test_pairs, &hyper)?;
            let checkpoint = Checkpoint {
                format_version: CHECKPOINT_VERSION,
                kind: model,
                hyper: ModelHyper::Lstm(hyper),
                arrays: arrays_from_layout(&params.layout(), &params.to_flat()),
                scaler: Some(scaler),
                seed,
                fingerprint: fingerprint(&train),
                zone: zone.clone(),
                field,
            };
            (checkpoint, "lstm_loss.csv", curve.to_csv())
        }
        ModelKind::Dcgan => {
            let hyper = GanHyper {
                seed,
                ..config.dcgan.clone()
            };
            let profiles: Vec<Vec<f64>> = market_data::complete_profiles(&series, &zone, field)?
                .into_iter()
                .filter(|p| config.train_range.contains(p.date))
                .filter_map(|p| p.complete_values())
                .collect();
            if profiles.is_empty() {
                return Err(CliError::Data(format!(
                    "no complete {}-hour profiles in the train range",
                    DayProfile::HOURS
                )));
            }
            let pooled: Vec<f64> = profiles.iter().flatten().copied().collect();
            let scaler = MinMaxScaler::fit(&pooled)?;
            let scaled: Vec<Vec<f64>> = profiles.iter().map(|p| scaler.scale_all(p)).collect();
            hyper
                .validate(scaled.len())
                .map_err(|e| CliError::Config(e.to_string()))?;
            let (g, d, history) = dcgan::train_dcgan(&scaled, &hyper)?;
            let mut arrays = arrays_from_layout(&g.net.layout("generator"), &g.net.to_flat());
            arrays.extend(arrays_from_layout(
                &d.net.layout("discriminator"),
                &d.net.to_flat(),
            ));
            let checkpoint = Checkpoint {
                format_version: CHECKPOINT_VERSION,
                kind: model,
                hyper: ModelHyper::Dcgan(hyper),
                arrays,
                scaler: Some(scaler),
                seed,
                fingerprint: fingerprint(&pooled),
                zone: zone.clone(),
                field,
            };
            (checkpoint, "dcgan_history.csv", history.to_csv())
        }
        ModelKind::Nuts => {
            let data = train_values(&series, &zone, field, &config.train_range, config.hour);
            let nuts_config = NutsConfig {
                seed,
                ..config.nuts.clone()
            };
            let (mixture, samples) = nuts::fit_mixture(&data, config.components, &nuts_config)?;
            let dim = mixture.dim();
            let checkpoint = Checkpoint {
                format_version: CHECKPOINT_VERSION,
                kind: model,
                hyper: ModelHyper::Nuts(NutsHyper {
                    model: mixture,
                    config: nuts_config,
                    hour: config.hour,
                }),
                arrays: vec![NamedArray {
                    name: "posterior".into(),
                    shape: vec![samples.len(), dim],
                    data: samples.draws.iter().flatten().copied().collect(),
                }],
                scaler: None,
                seed,
                fingerprint: fingerprint(&data),
                zone: zone.clone(),
                field,
            };
            (checkpoint, "nuts_posterior.csv", samples.to_csv())
        }
    };
    Ok(vec![
        checkpoint.save(&out.join(format!("{name}_checkpoint.json")))?,
        write_file(&out.join(history_name), &history)?,
    ])
}

/// What to generate from a checkpoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerateRequest {
    /// Scenario count (dcgan, nuts).
    pub count: Option<usize>,
    /// Dates to profile (lstm).
    pub dates: Vec<NaiveDate>,
    /// Feed observed prices instead of predictions (lstm).
    pub one_step: bool,
}

/// Default scenario count for dcgan and nuts.
pub const DEFAULT_COUNT: usize = 100;

fn lstm_profiles(
    config: &RunConfig,
    checkpoint: &Checkpoint,
    request: &GenerateRequest,
) -> Result<String, CliError> {
    let (hyper, params) = checkpoint.lstm_params()?;
    let scaler = checkpoint.scaler()?;
    let series = load_series(config.input()?)?;
    let hourly = hourly_values(&series, &checkpoint.zone, checkpoint.field)?;
    let mut out = String::from("date,hour,price\n");
    for &date in &request.dates {
        let midnight = date.and_time(NaiveTime::MIN);
        let before: Vec<&(NaiveDate, u32, Option<f64>)> = hourly
            .iter()
            .filter(|(d, h, _)| d.and_hms_opt(*h, 0, 0).is_some_and(|t| t < midnight))
            .collect();
        let last_hour = midnight - Duration::hours(1);
        let contiguous = before
            .last()
            .is_some_and(|(d, h, _)| d.and_hms_opt(*h, 0, 0) == Some(last_hour));
        let window: Option<Vec<f64>> = (contiguous && before.len() >= hyper.window)
            .then(|| {
                before[before.len() - hyper.window..]
                    .iter()
                    .map(|e| e.2)
                    .collect()
            })
            .flatten();
        let window = window.ok_or_else(|| {
            CliError::Data(format!(
                "{date}: needs {} gap-free hours of {} in zone {} right before midnight",
                hyper.window, checkpoint.field, checkpoint.zone
            ))
        })?;
        let observed: Vec<f64>;
        let rollout = if request.one_step {
            let day: Option<Vec<f64>> = hourly
                .iter()
                .filter(|(d, _, _)| *d == date)
                .take(DayProfile::HOURS - 1)
                .map(|e| e.2)
                .collect();
            observed = day
                .filter(|v| v.len() == DayProfile::HOURS - 1)
                .ok_or_else(|| {
                    CliError::Data(format!("{date}: one-step mode needs observed hours 0..=22"))
                })?;
            Rollout::OneStepAhead(&observed)
        } else {
            Rollout::Recursive
        };
        let profile =
            lstm::generate_profile(&params, &scaler, &window, DayProfile::HOURS, rollout)?;
        for (h, p) in profile.iter().enumerate() {
            out.push_str(&format!("{date},{h},{p}\n"));
        }
    }
    Ok(out)
}

/// Sample scenarios from a checkpoint: lstm writes 24 rows per date, dcgan
/// `count` 24-column rows, nuts `count` single-column draws.
pub fn cmd_generate(
    config: &RunConfig,
    checkpoint_path: &Path,
    request: &GenerateRequest,
) -> Result<Vec<PathBuf>, CliError> {
    let checkpoint = Checkpoint::load(checkpoint_path)?;
    let (name, body) = match checkpoint.kind {
        ModelKind::Lstm => {
            if request.count.is_some() {
                return Err(CliError::Usage(
                    "--count does not apply to lstm checkpoints; use --date".into(),
                ));
            }
            if request.dates.is_empty() {
                return Err(CliError::Usage(
                    "lstm generation needs at least one --date".into(),
                ));
            }
            (
                "lstm_generated.csv",
                lstm_profiles(config, &checkpoint, request)?,
            )
        }
        kind => {
            if !request.dates.is_empty() || request.one_step {
                return Err(CliError::Usage(format!(
                    "--date and --one-step apply to lstm checkpoints, not {}",
                    kind.as_str()
                )));
            }
            let count = request.count.unwrap_or(DEFAULT_COUNT);
            let mut rng = SeededRng::new(config.resolve_seed()?);
            if kind == ModelKind::Dcgan {
                let (_, g, _) = checkpoint.gan_networks()?;
                let set = dcgan::sample_prices(&g, &checkpoint.scaler()?, count, &mut rng);
                ("dcgan_generated.csv", set.to_csv())
            } else {
                let (hyper, samples) = checkpoint.posterior()?;
                let draws = if count == 0 {
                    Vec::new()
                } else {
                    nuts::posterior_predictive(&hyper.model, &samples, count, &mut rng)?
                };
                let mut body = String::from("price\n");
                for d in draws {
                    body.push_str(&format!("{d}\n"));
                }
                ("nuts_generated.csv", body)
            }
        }
    };
    Ok(vec![write_file(&config.out.join(name), &body)?])
}

fn market_column(field: PriceField) -> &'static str {
    match field {
        PriceField::Da => "da_price",
        PriceField::High => "id_high",
        PriceField::Low => "id_low",
        PriceField::Last => "id_last",
        PriceField::Avg => "id_avg",
    }
}

/// Price values from a CSV file. The column is `column` if given, the
/// configured field for market files, `price` if present, and otherwise every
/// column pooled (scenario files). Empty cells are skipped.
pub fn read_price_values(
    path: &Path,
    column: Option<&str>,
    field: PriceField,
) -> Result<Vec<f64>, CliError> {
    let text = read_file(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let columns: Vec<usize> = if let Some(c) = column {
        vec![find(c)
            .ok_or_else(|| CliError::Data(format!("{}: no column named {c}", path.display())))?]
    } else if headers
        .iter()
        .map(String::as_str)
        .eq(market_data::CSV_HEADER)
    {
        vec![find(market_column(field)).expect("market header")]
    } else if let Some(i) = find("price") {
        vec![i]
    } else {
        (0..headers.len()).collect()
    };
    let mut values = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        for &c in &columns {
            let cell = row.get(c).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Data(format!(
                    "{}:{}: not a number: `{cell}`",
                    path.display(),
                    i + 2
                ))
            })?;
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no price values",
            path.display()
        )));
    }
    Ok(values)
}

/// Compare two price files; writes `report.json` and `histograms.csv`.
pub fn cmd_evaluate(
    config: &RunConfig,
    actual: &Path,
    generated: &Path,
    column: Option<&str>,
) -> Result<Vec<PathBuf>, CliError> {
    if config.bins == 0 {
        return Err(CliError::Config("bins must be positive".into()));
    }
    let a = read_price_values(actual, column, config.field)?;
    let g = read_price_values(generated, column, config.field)?;
    let report = eval::compare_report(&a, &g, config.bins)?;
    let mut json = report.to_json();
    json.push('\n');
    Ok(vec![
        write_file(&config.out.join("report.json"), &json)?,
        write_file(&config.out.join("histograms.csv"), &report.histogram_csv())?,
    ])
}

/// Intraday electricity price modelling: explore market data, train LSTM,
/// DCGAN or NUTS price models, generate scenarios and evaluate them.
#[derive(Debug, Parser)]
#[command(name = "idprice", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variation, same-price, volume-share and histogram reports.
    Explore(ExploreArgs),
    /// Train a model and write its checkpoint and history.
    Train(TrainArgs),
    /// Draw scenarios from a checkpoint.
    Generate(GenerateArgs),
    /// Compare actual and generated price distributions.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Market CSV (timestamp,zone,da_price,id_high,id_low,id_last,id_avg,buy_volume,sell_volume).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub zone: Option<String>,
    /// Price column: avg, high, low, last or da.
    #[arg(long)]
    pub field: Option<PriceField>,
    /// `YYYY` or `YYYY-MM-DD..YYYY-MM-DD`.
    #[arg(long)]
    pub train_range: Option<String>,
    #[arg(long)]
    pub test_range: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExploreArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict the reports to this date range.
    #[arg(long)]
    pub range: Option<String>,
    /// Day-ahead volumes CSV (zone,type,da_volume) for volume_share.csv.
    #[arg(long)]
    pub da_volumes: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// LSTM hidden size.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// LSTM input window in hours.
    #[arg(long)]
    pub window: Option<usize>,
    /// LSTM learning rate.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// DCGAN latent size.
    #[arg(long)]
    pub latent: Option<usize>,
    #[arg(long, value_enum)]
    pub architecture: Option<ArchitectureArg>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Mixture components for NUTS.
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub target_accept: Option<f64>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Fit NUTS to a single hour of day.
    #[arg(long)]
    pub hour: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ArchitectureArg {
    Conv,
    Dense,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Market CSV supplying the history before each --date (lstm).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Day to generate a 24-hour profile for (lstm); repeatable.
    #[arg(long = "date")]
    pub dates: Vec<NaiveDate>,
    /// Advance the window over observed prices instead of predictions (lstm).
    #[arg(long)]
    pub one_step: bool,
    /// Number of scenarios (dcgan, nuts).
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub actual: PathBuf,
    #[arg(long)]
    pub generated: PathBuf,
    /// Column to read from both files.
    #[arg(long)]
    pub column: Option<String>,
    /// Price column when a file is a market CSV.
    #[arg(long)]
    pub field: Option<PriceField>,
    #[arg(long)]
    pub bins: Option<usize>,
}

fn base_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::from_file(&ConfigFile::load(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    if common.seed.is_some() {
        config.seed = common.seed;
    }
    Ok(config)
}

fn apply_data(config: &mut RunConfig, data: &DataArgs) -> Result<(), CliError> {
    if let Some(v) = &data.input {
        config.input = Some(v.clone());
    }
    if let Some(v) = &data.zone {
        config.zone = Some(v.clone());
    }
    if let Some(v) = data.field {
        config.field = v;
    }
    if let Some(v) = &data.train_range {
        config.train_range = parse_range(v)?;
    }
    if let Some(v) = &data.test_range {
        config.test_range = Some(parse_range(v)?);
    }
    Ok(())
}

/// Resolve flags and config into a [`RunConfig`] and run the command.
pub fn dispatch(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    match &cli.command {
        Command::Explore(a) => {
            let mut config = base_config(&a.common)?;
            apply_data(&mut config, &a.data)?;
            config.bins = a.bins.unwrap_or(config.bins);
            let range = a.range.as_deref().map(parse_range).transpose()?;
            cmd_explore(&config, range.as_ref(), a.da_volumes.as_deref())
        }
        Command::Train(a) => {
            let mut config = base_config(&a.common)?;
            apply_data(&mut config, &a.data)?;
            match a.model {
                ModelKind::Lstm => {
                    let l = &mut config.lstm;
                    l.epochs = a.epochs.unwrap_or(l.epochs);
                    l.hidden_dim = a.hidden.unwrap_or(l.hidden_dim);
                    l.window = a.window.unwrap_or(l.window);
                    l.learning_rate = a.learning_rate.unwrap_or(l.learning_rate);
                }
                ModelKind::Dcgan => {
                    let g = &mut config.dcgan;
                    g.epochs = a.epochs.unwrap_or(g.epochs);
                    g.latent_dim = a.latent.unwrap_or(g.latent_dim);
                    g.batch_size = a.batch_size.unwrap_or(g.batch_size);
                    if let Some(lr) = a.learning_rate {
                        g.lr_generator = lr;
                        g.lr_discriminator = lr;
                    }
                    if let Some(arch) = a.architecture {
                        g.architecture = match arch {
                            ArchitectureArg::Conv => Architecture::Conv,
                            ArchitectureArg::Dense => Architecture::Dense,
                        };
                    }
                }
                ModelKind::Nuts => {
                    config.components = a.components.unwrap_or(config.components);
                    let n = &mut config.nuts;
                    n.warmup = a.warmup.unwrap_or(n.warmup);
                    n.samples = a.samples.unwrap_or(n.samples);
                    n.target_accept = a.target_accept.unwrap_or(n.target_accept);
                    n.chains = a.chains.unwrap_or(n.chains);
                    config.hour = a.hour.or(config.hour);
                }
            }
            cmd_train(&config, a.model)
        }
        Command::Generate(a) => {
            let mut config = base_config(&a.common)?;
            if let Some(v) = &a.input {
                config.input = Some(v.clone());
            }
            let request = GenerateRequest {
                count: a.count,
                dates: a.dates.clone(),
                one_step: a.one_step,
            };
            cmd_generate(&config, &a.checkpoint, &request)
        }
        Command::Evaluate(a) => {
            let mut config = base_config(&a.common)?;
            config.bins = a.bins.unwrap_or(config.bins);
            if let Some(f) = a.field {
                config.field = f;
            }
            cmd_evaluate(&config, &a.actual, &a.generated, a.column.as_deref())
        }
    }
}

/// Entry point for the binary: parse, run, report, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_checkpoint() -> Checkpoint {
        let mut rng = SeededRng::new(1);
        let params = LstmParams::init(1, 3, &mut rng);
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            kind: ModelKind::Lstm,
            hyper: ModelHyper::Lstm(LstmHyper {
                hidden_dim: 3,
                ..LstmHyper::default()
            }),
            arrays: arrays_from_layout(&params.layout(), &params.to_flat()),
            scaler: Some(MinMaxScaler::fit(&[-29.21, 0.1 + 0.2, 100.0]).unwrap()),
            seed: 7,
            fingerprint: fingerprint(&[1.0, 2.0]),
            zone: "SE3".into(),
            field: PriceField::Avg,
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let c = sample_checkpoint();
        let back = Checkpoint::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        for (a, b) in back.arrays.iter().zip(&c.arrays) {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let (_, params) = back.lstm_params().unwrap();
        assert_eq!(params.hidden_dim(), 3);
    }

    #[test]
    fn checkpoint_rejects_version_and_kind_mismatch() {
        let mut c = sample_checkpoint();
        c.format_version = 99;
        assert!(matches!(
            Checkpoint::from_json(&c.to_json()),
            Err(CliError::Data(_))
        ));
        let mut c = sample_checkpoint();
        c.kind = ModelKind::Nuts;
        assert!(Checkpoint::from_json(&c.to_json()).is_err());
        assert!(Checkpoint::from_json("{").is_err());
        let mut c = sample_checkpoint();
        c.arrays[0].shape = vec![1, 1];
        assert!(c.lstm_params().is_err());
    }

    #[test]
    fn fingerprint_tracks_values() {
        assert_eq!(fingerprint(&[1.0]), fingerprint(&[1.0]));
        assert_ne!(fingerprint(&[1.0]), fingerprint(&[1.0000000001]));
        assert_eq!(fingerprint(&[]).len(), 64);
    }

    #[test]
    fn config_file_and_overrides() {
        let file = ConfigFile::parse(
            r#"
            zone = "SE3"
            field = "high"
            train_range = "2019"
            test_range = "2020-01-01..2020-06-30"
            seed = 9
            [lstm]
            hidden_dim = 4
            [dcgan]
            architecture = "dense"
            [nuts]
            components = 3
            target_accept = 0.9
            "#,
        )
        .unwrap();
        let c = RunConfig::from_file(&file).unwrap();
        assert_eq!(c.zone.as_deref(), Some("SE3"));
        assert_eq!(c.field, PriceField::High);
        assert_eq!(c.train_range, DateRange::year(2019));
        assert_eq!(c.lstm.hidden_dim, 4);
        assert_eq!(c.dcgan.architecture, Architecture::Dense);
        assert_eq!(c.components, 3);
        assert_eq!(c.nuts.target_accept, 0.9);
        assert_eq!(c.seed, Some(9));
        c.validate().unwrap();
        assert!(matches!(
            ConfigFile::parse("bogus = 1"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn validation_catches_bad_settings() {
        let mut c = RunConfig::default();
        c.nuts.target_accept = 1.5;
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let c = RunConfig {
            test_range: Some(DateRange::year(2020)),
            ..RunConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().exit_code(), 1);
        let c = RunConfig {
            out: PathBuf::new(),
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Config(String::new()).exit_code(), 1);
        assert_eq!(CliError::Data(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 3);
        let e: CliError = NutsError::Quality {
            divergent: 5,
            total: 10,
            rate: 0.5,
        }
        .into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = LstmError::TrainingDiverged { epoch: 3 }.into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = MarketDataError::UnknownZone("SE9".into()).into();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn clap_grammar_parses() {
        let cli = Cli::try_parse_from([
            "idprice",
            "train",
            "--model",
            "nuts",
            "--input",
            "x.csv",
            "--zone",
            "SE3",
            "--field",
            "avg",
            "--train-range",
            "2020",
            "--components",
            "2",
            "--warmup",
            "10",
            "--samples",
            "10",
            "--seed",
            "1",
            "--out",
            "o",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Train(ref a) if a.model == ModelKind::Nuts));
        assert!(Cli::try_parse_from(["idprice", "train"]).is_err());
        assert!(Cli::try_parse_from([
            "idprice",
            "generate",
            "--checkpoint",
            "c.json",
            "--date",
            "2021-01-13"
        ])
        .is_ok());
    }
}
