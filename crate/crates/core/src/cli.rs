//! Batch command-line front end. Every command reads one TOML run
//! configuration, validates it before doing any work, writes its outputs
//! into the output directory together with the effective configuration, and
//! produces byte-identical files when rerun with the same configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::astro::GeoLocation;
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate_models, run_scenario, runs_with_seeds, ExperimentResult, MetricReport, PresetColumns, RunRecord, ScenarioSpec,
};
use crate::features::{build_candidate_matrix, FeatureCatalog, RawData};
use crate::ingest::{
    read_holiday_csv, read_load_csv, read_tide_csv, read_weather_csv, write_holiday_csv, write_load_csv, write_tide_csv,
    write_weather_csv, WeatherOptions, DEFAULT_MAX_GAP,
};
use crate::interpret::{
    balance_point, combo_label, default_combos, group_experiment, lag_correlation_scan, pdp, rank_single_features,
    write_group_csv, write_rank_csv, GridSpec, GroupExperimentRow, GroupSizes,
};
use crate::models::{
    grid_search, train_matrix, GbrtConfig, MlpConfig, ModelConfig, ModelKind, ParamAxis, SvrConfig, TrainedModel,
};
use crate::selection::{select_top_k, Scaling, SelectionConfig, DEFAULT_VARIANCE_THRESHOLD};
use crate::synth::{generate, SynthConfig};
use crate::timeseries::{
    random_holdout, split_by_date, DatasetSplit, FeatureAspect, FeatureMatrix, Frequency, LoadSeries, Timestamp,
};

/// Name of the copy of the effective configuration in every output directory.
pub const CONFIG_COPY: &str = "run_config.toml";

#[derive(Debug, Parser)]
#[command(name = "msfload", version, about = "Multi-source feature load forecasting toolkit")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; outputs do not depend on this value.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides the configuration's output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse the input files and report what the catalog builds from them.
    IngestCheck,
    /// Run LV-KB selection and write the per-feature report.
    Select,
    /// Select features, tune (optionally) and train each configured model.
    Train,
    /// Predict the test rows with a saved model.
    Forecast,
    /// Score a saved model, or run the repeated train/test protocol.
    Evaluate,
    /// Compare feature scenarios and aspect combinations.
    Scenario,
    /// Partial dependence of one feature plus its balance point.
    Pdp,
    /// Single-feature ranking on top of the load lags.
    Rank,
    /// Lagged correlation between one feature and the load.
    Lagscan,
    /// Generate a synthetic dataset as ingestible CSV files.
    Synth,
}

impl Command {
    fn needs_data(self) -> bool {
        !matches!(self, Command::Synth)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub catalog: PathBuf,
    pub load: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holidays: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tides: Option<PathBuf>,
    #[serde(default = "default_frequency")]
    pub frequency: Frequency,
    #[serde(default = "default_max_gap")]
    pub max_gap: usize,
}

fn default_frequency() -> Frequency {
    Frequency::DailyPeak
}

fn default_max_gap() -> usize {
    DEFAULT_MAX_GAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    pub threshold: f64,
    pub k: usize,
    pub scaling: Scaling,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_VARIANCE_THRESHOLD,
            k: 55,
            scaling: Scaling::Raw,
        }
    }
}

impl SelectionSection {
    pub fn to_config(&self) -> SelectionConfig {
        SelectionConfig {
            variance_threshold: self.threshold,
            k: self.k,
            scaling: self.scaling,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxisConfig {
    pub kind: ModelKind,
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsSection {
    pub kinds: Vec<ModelKind>,
    /// Folds for grid-search cross-validation.
    pub folds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svr: Option<SvrConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gbrt: Option<GbrtConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mlp: Option<MlpConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<GridAxisConfig>,
}

impl Default for ModelsSection {
    fn default() -> Self {
        Self {
            kinds: ModelKind::ALL.to_vec(),
            folds: 5,
            svr: None,
            gbrt: None,
            mlp: None,
            grid: Vec::new(),
        }
    }
}

impl ModelsSection {
    pub fn config_for(&self, kind: ModelKind) -> ModelConfig {
        match kind {
            ModelKind::Svr => self.svr.clone().map(ModelConfig::Svr),
            ModelKind::Gbrt => self.gbrt.clone().map(ModelConfig::Gbrt),
            ModelKind::Mlp => self.mlp.clone().map(ModelConfig::Mlp),
        }
        .unwrap_or_else(|| ModelConfig::default_for(kind))
    }

    pub fn configs(&self) -> Vec<ModelConfig> {
        self.kinds.iter().map(|k| self.config_for(*k)).collect()
    }

    pub fn axes_for(&self, kind: ModelKind) -> Vec<ParamAxis> {
        self.grid
            .iter()
            .filter(|a| a.kind == kind)
            .map(|a| ParamAxis {
                param: a.param.clone(),
                values: a.values.clone(),
            })
            .collect()
    }
}

/// How rows are split into training and test sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum Protocol {
    /// Rows strictly before `cutoff` train, the rest test (one run).
    ByDate { cutoff: Timestamp },
    /// Random holdout of `fraction` of the rows, repeated with seeds
    /// `seed, seed + 1, …` for `iterations` runs.
    Holdout {
        fraction: f64,
        #[serde(default = "one")]
        iterations: usize,
    },
}

fn one() -> usize {
    1
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol::Holdout {
            fraction: 0.2,
            iterations: 1,
        }
    }
}

impl Protocol {
    pub fn seeds(&self, base: u64) -> Vec<u64> {
        match self {
            Protocol::ByDate { .. } => vec![base],
            Protocol::Holdout { iterations, .. } => (0..*iterations as u64).map(|i| base + i).collect(),
        }
    }

    pub fn split(&self, matrix: &FeatureMatrix, seed: u64) -> Result<DatasetSplit> {
        match self {
            Protocol::ByDate { cutoff } => split_by_date(matrix, *cutoff),
            Protocol::Holdout { fraction, .. } => random_holdout(matrix, *fraction, seed),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Protocol::Holdout { fraction, iterations } = self {
            if !(*fraction > 0.0 && *fraction < 1.0) {
                return Err(Error::Config(format!("protocol: holdout fraction must lie in (0, 1), got {fraction}")));
            }
            if *iterations == 0 {
                return Err(Error::Config("protocol: iterations must be >= 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    /// Preset scenario names (S1..S4).
    pub names: Vec<String>,
    pub preset_columns: PresetColumns,
    /// Additional user-defined scenarios.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub custom: Vec<ScenarioSpec>,
    /// Also run the seven aspect-combination experiments.
    pub combos: bool,
    pub group_sizes: GroupSizes,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            names: ScenarioSpec::PRESET_NAMES.iter().map(|s| s.to_string()).collect(),
            preset_columns: PresetColumns::default(),
            custom: Vec::new(),
            combos: true,
            group_sizes: GroupSizes::default(),
        }
    }
}

impl ScenarioSection {
    pub fn specs(&self) -> Result<Vec<ScenarioSpec>> {
        let mut specs = self
            .names
            .iter()
            .map(|n| ScenarioSpec::preset(n, &self.preset_columns))
            .collect::<Result<Vec<_>>>()?;
        specs.extend(self.custom.iter().cloned());
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdpSection {
    pub feature: String,
    pub model: ModelKind,
    /// Columns the explained model is trained on; empty means the LV-KB
    /// selection plus `feature`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<String>,
    pub grid: GridSpec,
}

impl Default for PdpSection {
    fn default() -> Self {
        Self {
            feature: "temp_max_f".into(),
            model: ModelKind::Gbrt,
            features: Vec::new(),
            grid: GridSpec::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankSection {
    /// Features to rank; empty means every non-lag candidate.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LagscanSection {
    pub feature: String,
    pub max_lag: usize,
}

impl Default for LagscanSection {
    fn default() -> Self {
        Self {
            feature: "clear_sky_ghi".into(),
            max_lag: 80,
        }
    }
}

/// Everything one run needs; stored verbatim next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Saved model used by `forecast` and `evaluate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_file: Option<PathBuf>,
    /// Also write wall-clock timing tables (these differ between runs).
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub models: ModelsSection,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub pdp: PdpSection,
    #[serde(default)]
    pub rank: RankSection,
    #[serde(default)]
    pub lagscan: LagscanSection,
    #[serde(default)]
    pub synth: SynthConfig,
    /// Location of generated data; defaults to Portland, Maine.
    #[serde(default = "GeoLocation::portland_me")]
    pub synth_location: GeoLocation,
}

fn default_seed() -> u64 {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty configuration deserializes")
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` and resolves every relative path against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        if let Some(m) = &mut self.model_file {
            fix(m);
        }
        if let Some(d) = &mut self.data {
            fix(&mut d.catalog);
            fix(&mut d.load);
            for p in [&mut d.weather, &mut d.holidays, &mut d.tides].into_iter().flatten() {
                fix(p);
            }
        }
    }

    /// Checks everything `command` will use, before any file is read.
    pub fn validate(&self, command: Command) -> Result<()> {
        if command.needs_data() && self.data.is_none() {
            return Err(Error::Config(format!("`{command:?}` needs a [data] section")));
        }
        let selection = self.selection.to_config();
        selection
            .validate()
            .map_err(|e| Error::Config(format!("selection: {e}")))?;
        if self.models.kinds.is_empty() {
            return Err(Error::Config("models: kinds must not be empty".into()));
        }
        for cfg in self.models.configs() {
            cfg.validate().map_err(|e| Error::Config(format!("models.{}: {e}", cfg.kind())))?;
        }
        if self.models.folds < 2 {
            return Err(Error::Config("models: folds must be >= 2".into()));
        }
        for axis in &self.models.grid {
            if axis.values.is_empty() {
                return Err(Error::Config(format!("models.grid: `{}` has no values", axis.param)));
            }
            let mut probe = self.models.config_for(axis.kind);
            for v in &axis.values {
                probe.set(&axis.param, *v).map_err(|e| Error::Config(format!("models.grid: {e}")))?;
                probe.validate().map_err(|e| Error::Config(format!("models.grid: {e}")))?;
            }
        }
        self.protocol.validate()?;
        match command {
            Command::Forecast if self.model_file.is_none() => {
                return Err(Error::Config("forecast needs `model_file`".into()));
            }
            Command::Scenario => {
                self.scenario.specs()?;
            }
            Command::Pdp => {
                if self.pdp.feature.is_empty() {
                    return Err(Error::Config("pdp: feature must be set".into()));
                }
                self.pdp.grid.values(&[0.0, 1.0]).map_err(|e| Error::Config(format!("pdp: {e}")))?;
            }
            Command::Lagscan if self.lagscan.max_lag == 0 => {
                return Err(Error::Config("lagscan: max_lag must be >= 1".into()));
            }
            Command::Synth => {
                self.synth.validate().map_err(|e| Error::Config(format!("synth: {e}")))?;
                self.synth_location
                    .validate()
                    .map_err(|e| Error::Config(format!("synth_location: {e}")))?;
            }
            _ => {}
        }
        Ok(())
    }
}

/// Ingested inputs and the candidate matrix the catalog builds from them.
pub struct Dataset {
    pub catalog: FeatureCatalog,
    pub load: LoadSeries,
    pub raw: RawData,
    pub holidays: usize,
    pub matrix: FeatureMatrix,
}

pub fn load_dataset(data: &DataConfig) -> Result<Dataset> {
    let mut catalog = FeatureCatalog::from_path(&data.catalog)?;
    let load = read_load_csv(&data.load, data.frequency)?;
    let mut raw = RawData::default();
    if let Some(p) = &data.weather {
        let opts = WeatherOptions {
            expected: Vec::new(),
            max_gap: data.max_gap,
        };
        raw.extend(read_weather_csv(p, &opts)?);
    }
    if let Some(p) = &data.tides {
        let offset = load.timestamps()[0].offset();
        raw.extend(read_tide_csv(p, offset)?);
    }
    let mut holidays = 0;
    if let Some(p) = &data.holidays {
        let set = read_holiday_csv(p)?;
        holidays = set.len();
        catalog = catalog.with_holidays(set);
    }
    let matrix = build_candidate_matrix(&catalog, &raw, &load)?;
    Ok(Dataset {
        catalog,
        load,
        raw,
        holidays,
        matrix,
    })
}

fn write_out(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::File {
        path: path.clone(),
        message: e.to_string(),
    })?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn to_csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// The data columns a saved model expects, in its order; a mismatch is a
/// schema error telling the user how to fix it.
fn project_for_model(model: &TrainedModel, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let missing: Vec<&str> = model
        .feature_names
        .iter()
        .map(String::as_str)
        .filter(|n| matrix.index_of(n).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "the data lack model columns [{}]; rebuild the data with the catalog the model was trained on, or retrain",
            missing.join(", ")
        )));
    }
    matrix.select_columns(&model.feature_names)
}

/// LV-KB on the training rows, returning the projected split.
fn select_on_train(split: &DatasetSplit, selection: &SelectionConfig) -> Result<(DatasetSplit, Vec<String>)> {
    let (train, report) = select_top_k(&split.train, selection)?;
    if report.k_exceeds_survivors {
        info!("k = {} exceeds the {} gate survivors; using all of them", selection.k, report.survivors);
    }
    let names: Vec<String> = train.names().iter().map(|s| s.to_string()).collect();
    let test = split.test.select_columns(&names)?;
    Ok((
        DatasetSplit {
            train,
            test,
            train_rows: split.train_rows.clone(),
            test_rows: split.test_rows.clone(),
            rule: split.rule.clone(),
        },
        names,
    ))
}

/// Runs `command` with `cfg`, writing into `cfg.out`.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate(command)?;
    let out = &cfg.out;
    fs::create_dir_all(out).map_err(|e| Error::File {
        path: out.clone(),
        message: e.to_string(),
    })?;
    let mut written = vec![write_out(out, CONFIG_COPY, cfg.to_toml_string()?)?];
    if command == Command::Synth {
        written.extend(cmd_synth(cfg)?);
        return Ok(written);
    }
    let data = load_dataset(cfg.data.as_ref().expect("validated"))?;
    written.extend(match command {
        Command::IngestCheck => cmd_ingest_check(cfg, &data)?,
        Command::Select => cmd_select(cfg, &data)?,
        Command::Train => cmd_train(cfg, &data)?,
        Command::Forecast => cmd_forecast(cfg, &data)?,
        Command::Evaluate => cmd_evaluate(cfg, &data)?,
        Command::Scenario => cmd_scenario(cfg, &data)?,
        Command::Pdp => cmd_pdp(cfg, &data)?,
        Command::Rank => cmd_rank(cfg, &data)?,
        Command::Lagscan => cmd_lagscan(cfg, &data)?,
        Command::Synth => unreachable!(),
    });
    Ok(written)
}

#[derive(Serialize)]
struct IngestReport {
    load_rows: usize,
    first: String,
    last: String,
    frequency: Frequency,
    raw_columns: Vec<String>,
    holidays: usize,
    catalog: String,
    candidate_rows: usize,
    candidate_columns: usize,
    aspect_counts: BTreeMap<FeatureAspect, usize>,
}

fn cmd_ingest_check(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    let ts = data.load.timestamps();
    let report = IngestReport {
        load_rows: data.load.len(),
        first: ts[0].to_string(),
        last: ts[ts.len() - 1].to_string(),
        frequency: data.load.frequency(),
        raw_columns: data.raw.columns().iter().map(|c| c.name.clone()).collect(),
        holidays: data.holidays,
        catalog: data.catalog.name.clone(),
        candidate_rows: data.matrix.n(),
        candidate_columns: data.matrix.p(),
        aspect_counts: data.matrix.aspect_counts().into_iter().collect(),
    };
    Ok(vec![write_out(&cfg.out, "ingest_report.json", json_bytes(&report)?)?])
}

fn cmd_select(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    let (_, report) = select_top_k(&data.matrix, &cfg.selection.to_config())?;
    let bytes = to_csv_bytes(|b| report.write_csv(b))?;
    Ok(vec![write_out(&cfg.out, "selection.csv", bytes)?])
}

fn cmd_train(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    let split = cfg.protocol.split(&data.matrix, cfg.seed)?;
    let (train, report) = select_top_k(&split.train, &cfg.selection.to_config())?;
    let mut written = vec![write_out(
        &cfg.out,
        "selection.csv",
        to_csv_bytes(|b| report.write_csv(b))?,
    )?];
    let names: Vec<String> = train.names().iter().map(|s| s.to_string()).collect();
    for kind in &cfg.models.kinds {
        let mut config = cfg.models.config_for(*kind).with_seed(cfg.seed);
        let axes = cfg.models.axes_for(*kind);
        if !axes.is_empty() {
            let result = grid_search(&config, &axes, train.x(), train.y(), &names, cfg.models.folds, cfg.seed)?;
            written.push(write_out(
                &cfg.out,
                &format!("grid_{kind}.csv"),
                to_csv_bytes(|b| result.write_csv(b))?,
            )?);
            config = result.best.clone();
        }
        let model = train_matrix(&config, &train)?;
        if let Some(w) = &model.info.warning {
            warn!("{kind}: {w}");
        }
        let path = cfg.out.join(format!("model_{kind}.json"));
        model.save(&path)?;
        written.push(path);
    }
    Ok(written)
}

fn load_model(cfg: &RunConfig) -> Result<TrainedModel> {
    let path = cfg.model_file.as_ref().expect("validated");
    let model = TrainedModel::load(path)?;
    let model_seed = match &model.config {
        ModelConfig::Svr(_) => None,
        ModelConfig::Gbrt(c) => Some(c.seed),
        ModelConfig::Mlp(c) => Some(c.seed),
    };
    if let Some(s) = model_seed.filter(|s| *s != cfg.seed) {
        warn!(
            "{} was trained with seed {s} but this run uses seed {}; pass --seed {s} to reproduce its split",
            path.display(),
            cfg.seed
        );
    }
    Ok(model)
}

fn cmd_forecast(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    let model = load_model(cfg)?;
    let split = cfg.protocol.split(&data.matrix, cfg.seed)?;
    let test = project_for_model(&model, &split.test)?;
    let pred = model.predict_matrix(&test)?;
    let mut body = String::from("timestamp,actual,predicted\n");
    for ((t, y), p) in test.timestamps().iter().zip(test.y()).zip(&pred) {
        body.push_str(&format!("{t},{y},{p}\n"));
    }
    Ok(vec![write_out(&cfg.out, "predictions.csv", body)?])
}

fn experiment_outputs(cfg: &RunConfig, result: &ExperimentResult, stem: &str) -> Result<Vec<PathBuf>> {
    let mut written = vec![
        write_out(&cfg.out, &format!("{stem}.csv"), to_csv_bytes(|b| result.write_csv(b))?)?,
        write_out(&cfg.out, &format!("{stem}.json"), result.to_json()? + "\n")?,
    ];
    if cfg.timing {
        written.push(write_out(
            &cfg.out,
            &format!("{stem}_timing.csv"),
            to_csv_bytes(|b| result.write_timing_csv(b))?,
        )?);
    }
    Ok(written)
}

fn cmd_evaluate(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    if cfg.model_file.is_some() {
        let model = load_model(cfg)?;
        let split = cfg.protocol.split(&data.matrix, cfg.seed)?;
        let test = project_for_model(&model, &split.test)?;
        let report = MetricReport::compute(test.y(), &model.predict_matrix(&test)?)?;
        return Ok(vec![write_out(&cfg.out, "metrics.json", json_bytes(&report)?)?]);
    }
    let selection = cfg.selection.to_config();
    let models = cfg.models.configs();
    let result = runs_with_seeds(&cfg.protocol.seeds(cfg.seed), |seed| {
        let split = cfg.protocol.split(&data.matrix, seed)?;
        let (split, _) = select_on_train(&split, &selection)?;
        evaluate_models("MSF", &split.train, &split.test, &models, seed)
    })?;
    experiment_outputs(cfg, &result, "evaluation")
}

fn cmd_scenario(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    let specs = cfg.scenario.specs()?;
    let selection = cfg.selection.to_config();
    let models = cfg.models.configs();
    let seeds = cfg.protocol.seeds(cfg.seed);
    let result = runs_with_seeds(&seeds, |seed| {
        let split = cfg.protocol.split(&data.matrix, seed)?;
        let mut records: Vec<RunRecord> = Vec::new();
        for spec in &specs {
            records.extend(run_scenario(spec, &split, &selection, &models, seed)?.records);
        }
        Ok(records)
    })?;
    let mut written = experiment_outputs(cfg, &result, "scenarios")?;
    if cfg.scenario.combos {
        let combos = default_combos();
        let per_seed = seeds
            .iter()
            .map(|&seed| {
                let split = cfg.protocol.split(&data.matrix, seed)?;
                group_experiment(&split, &combos, &selection, &cfg.scenario.group_sizes, &models, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<GroupExperimentRow> = combos
            .iter()
            .enumerate()
            .map(|(i, combo)| {
                let mape = models
                    .iter()
                    .enumerate()
                    .map(|(m, cfg)| {
                        let sum: f64 = per_seed.iter().map(|rows| rows[i].mape[m].1).sum();
                        (cfg.kind(), sum / per_seed.len() as f64)
                    })
                    .collect();
                GroupExperimentRow {
                    combo: combo_label(combo),
                    features: per_seed[0][i].features.clone(),
                    mape,
                }
            })
            .collect();
        written.push(write_out(&cfg.out, "groups.csv", to_csv_bytes(|b| write_group_csv(&rows, b))?)?);
    }
    Ok(written)
}

#[derive(Serialize)]
struct BalanceReport<'a> {
    model: ModelKind,
    features: &'a [String],
    #[serde(flatten)]
    point: crate::interpret::BalancePoint,
}

fn cmd_pdp(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    let split = cfg.protocol.split(&data.matrix, cfg.seed)?;
    let feature = &cfg.pdp.feature;
    if split.train.index_of(feature).is_none() {
        return Err(Error::UnknownFeature(feature.clone()));
    }
    let names: Vec<String> = if cfg.pdp.features.is_empty() {
        let (_, mut kept) = select_on_train(&split, &cfg.selection.to_config())?;
        if !kept.contains(feature) {
            kept.push(feature.clone());
        }
        data.matrix
            .names()
            .into_iter()
            .filter(|n| kept.iter().any(|k| k == n))
            .map(str::to_string)
            .collect()
    } else {
        let mut names = cfg.pdp.features.clone();
        if !names.contains(feature) {
            names.push(feature.clone());
        }
        names
    };
    let train = split.train.select_columns(&names)?;
    let model = train_matrix(&cfg.models.config_for(cfg.pdp.model).with_seed(cfg.seed), &train)?;
    let curve = pdp(&model, &train, feature, &cfg.pdp.grid)?;
    let point = balance_point(&curve)?;
    let report = BalanceReport {
        model: cfg.pdp.model,
        features: &names,
        point,
    };
    Ok(vec![
        write_out(&cfg.out, "pdp.csv", to_csv_bytes(|b| curve.write_csv(b))?)?,
        write_out(&cfg.out, "balance_point.json", json_bytes(&report)?)?,
    ])
}

fn cmd_rank(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    let split = cfg.protocol.split(&data.matrix, cfg.seed)?;
    let features: Vec<String> = if cfg.rank.features.is_empty() {
        data.matrix
            .info()
            .iter()
            .filter(|c| c.aspect != FeatureAspect::HistoricalLoad)
            .map(|c| c.name.clone())
            .collect()
    } else {
        cfg.rank.features.clone()
    };
    let rows = rank_single_features(&features, &split, &cfg.models.configs(), cfg.seed)?;
    Ok(vec![write_out(&cfg.out, "rank.csv", to_csv_bytes(|b| write_rank_csv(&rows, b))?)?])
}

#[derive(Serialize)]
struct LagReport<'a> {
    feature: &'a str,
    max_lag: usize,
    best_lag: usize,
    best_r: f64,
}

fn cmd_lagscan(cfg: &RunConfig, data: &Dataset) -> Result<Vec<PathBuf>> {
    let feature = &cfg.lagscan.feature;
    let j = data
        .matrix
        .index_of(feature)
        .ok_or_else(|| Error::UnknownFeature(feature.clone()))?;
    let scan = lag_correlation_scan(&data.matrix.column_values(j).to_vec(), data.matrix.y(), cfg.lagscan.max_lag)?;
    let report = LagReport {
        feature,
        max_lag: cfg.lagscan.max_lag,
        best_lag: scan.best_lag,
        best_r: scan.best_r,
    };
    Ok(vec![
        write_out(&cfg.out, "lagscan.csv", to_csv_bytes(|b| scan.write_csv(b))?)?,
        write_out(&cfg.out, "lagscan.json", json_bytes(&report)?)?,
    ])
}

fn cmd_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let synth = SynthConfig {
        seed: cfg.seed,
        ..cfg.synth.clone()
    };
    let data = generate(&synth, &cfg.synth_location)?;
    let out = &cfg.out;
    let paths = [
        out.join("load.csv"),
        out.join("weather.csv"),
        out.join("holidays.csv"),
        out.join("tides.csv"),
    ];
    write_load_csv(&paths[0], &data.load)?;
    write_weather_csv(&paths[1], &data.weather)?;
    write_holiday_csv(&paths[2], &data.holidays)?;
    write_tide_csv(&paths[3], &data.tides)?;
    let mut written = paths.to_vec();
    written.push(write_out(out, "truth.json", json_bytes(&data.truth)?)?);
    Ok(written)
}

/// Applies command-line overrides on top of the configuration file.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

/// Process exit code for a command outcome: 0 success, 2 invalid
/// configuration or input, 1 runtime failure.
pub fn exit_code(result: &Result<Vec<PathBuf>>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) if e.is_validation() => 2,
        Err(_) => 1,
    }
}

/// Entry point shared by the binary and the tests.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let cfg = effective_config(cli)?;
    execute(cli.command, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_has_defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.selection.k, 55);
        assert_eq!(cfg.models.kinds, ModelKind::ALL.to_vec());
        assert!(cfg.validate(Command::Synth).is_ok());
        assert!(matches!(cfg.validate(Command::Select), Err(Error::Config(_))));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let text = r#"
            seed = 7
            [data]
            catalog = "c.toml"
            load = "load.csv"
            [selection]
            k = 12
            [models]
            kinds = ["gbrt"]
            [models.gbrt]
            n_trees = 20
            [[models.grid]]
            kind = "gbrt"
            param = "max_depth"
            values = [2, 3]
            [protocol]
            rule = "by_date"
            cutoff = "2014-01-01T00:00:00-05:00"
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.models.config_for(ModelKind::Gbrt), ModelConfig::Gbrt(GbrtConfig { n_trees: 20, ..GbrtConfig::default() }));
        assert_eq!(cfg.protocol.seeds(7), vec![7]);
        let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
        cfg.validate(Command::Train).unwrap();
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        let base = "[data]\ncatalog = \"c\"\nload = \"l\"\n";
        for extra in [
            "[selection]\nk = 0\n",
            "[protocol]\nrule = \"holdout\"\nfraction = 1.5\n",
            "[scenario]\nnames = [\"S9\"]\n",
            "[[models.grid]]\nkind = \"svr\"\nparam = \"depth\"\nvalues = [1]\n",
        ] {
            let cfg = RunConfig::from_toml_str(&format!("{base}{extra}")).unwrap();
            let err = cfg.validate(Command::Scenario).unwrap_err();
            assert!(err.is_validation(), "{extra}: {err}");
        }
        assert!(RunConfig::from_toml_str("unknown_key = 1").is_err());
    }

    #[test]
    fn holdout_seeds_are_consecutive() {
        let p = Protocol::Holdout {
            fraction: 0.2,
            iterations: 3,
        };
        assert_eq!(p.seeds(10), vec![10, 11, 12]);
    }
}
