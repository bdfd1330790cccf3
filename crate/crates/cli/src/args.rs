use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hotelwatt::ann::{InitScheme, TrainConfig};
use hotelwatt::features::{FeatureSpec, DEFAULT_REFERENCE_TEMPERATURE};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "hotelwatt",
    version,
    about = "Daily hotel electricity forecasting from weather and occupancy",
    after_help = "Every subcommand accepts --config FILE.json; its keys are long flag names and explicit flags take precedence."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download daily weather history into a weather CSV.
    FetchWeather(FetchWeatherArgs),
    /// Generate a synthetic hotel dataset from a known linear load model.
    Synth(SynthArgs),
    /// Export the feature matrix and print Pearson correlations against energy.
    Features(FeaturesArgs),
    /// Train one network and save the model document.
    Train(TrainArgs),
    /// Search hidden-layer widths and save the best model.
    Search(SearchArgs),
    /// Predict daily energy with a saved model.
    Predict(PredictArgs),
    /// Score a saved model on the train and test splits.
    Evaluate(EvaluateArgs),
}

/// Input data: either one joined CSV or a consumption/weather pair.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Joined daily CSV holding consumption and weather columns.
    #[arg(long, value_name = "CSV", conflicts_with_all = ["consumption", "weather"], required_unless_present = "consumption")]
    pub data: Option<PathBuf>,
    /// Daily consumption CSV (date, energy_kwh, occupancy_rate[, guests]).
    #[arg(long, value_name = "CSV", requires = "weather")]
    pub consumption: Option<PathBuf>,
    /// Daily weather CSV (date, temp_mean, temp_max, temp_min[, humidity, ...]).
    #[arg(long, value_name = "CSV", requires = "consumption")]
    pub weather: Option<PathBuf>,
    /// Label stored in reports; defaults to the input file stem.
    #[arg(long)]
    pub hotel_id: Option<String>,
}

impl DataArgs {
    pub fn inputs(&self) -> Vec<PathBuf> {
        [&self.data, &self.consumption, &self.weather]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Comma-separated feature list, e.g. RDD,temp_mean.
    #[arg(long, value_name = "LIST")]
    pub features: Option<String>,
    /// Reference temperature for cooling degree days, in degrees Celsius.
    #[arg(long, value_name = "C")]
    pub reference_temperature: Option<f64>,
    /// Clip negative degree days to zero.
    #[arg(long, value_name = "BOOL")]
    pub clip_negative_cdd: Option<bool>,
}

impl SpecArgs {
    pub fn spec(&self) -> CliResult<FeatureSpec> {
        let default = FeatureSpec::default();
        let features = match &self.features {
            Some(list) => FeatureSpec::parse_list(list).map_err(|e| CliError::from(e).into_usage())?,
            None => default.features,
        };
        FeatureSpec::new(
            features,
            self.reference_temperature.unwrap_or(DEFAULT_REFERENCE_TEMPERATURE),
            self.clip_negative_cdd.unwrap_or(default.clip_negative_cdd),
        )
        .map_err(|e| CliError::from(e).into_usage())
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    He,
    UniformSmall,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long, value_name = "RATE")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Seed for initialization, shuffling and search trials.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Early-stopping patience in epochs; 0 disables early stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Chronological tail of the training split used for validation.
    #[arg(long, value_name = "FRACTION")]
    pub validation_fraction: Option<f64>,
    /// Reshuffle mini-batches every epoch.
    #[arg(long, value_name = "BOOL")]
    pub shuffle: Option<bool>,
}

impl TrainFlags {
    pub fn config(&self) -> CliResult<TrainConfig> {
        let d = TrainConfig::default();
        let config = TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed: self.seed.unwrap_or(d.seed),
            init_scheme: match self.init {
                Some(InitArg::He) => InitScheme::He,
                Some(InitArg::UniformSmall) => InitScheme::UniformSmall,
                None => d.init_scheme,
            },
            momentum: self.momentum.unwrap_or(d.momentum),
            early_stop_patience: match self.patience {
                Some(0) => None,
                Some(p) => Some(p),
                None => d.early_stop_patience,
            },
            validation_fraction: self.validation_fraction.unwrap_or(d.validation_fraction),
            shuffle_each_epoch: self.shuffle.unwrap_or(d.shuffle_each_epoch),
        };
        config.validate().map_err(|e| CliError::from(e).into_usage())?;
        Ok(config)
    }
}

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;

pub fn check_train_fraction(f: Option<f64>) -> CliResult<f64> {
    let f = f.unwrap_or(DEFAULT_TRAIN_FRACTION);
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(CliError::usage(format!(
            "--train-fraction must lie strictly between 0 and 1, got {f}"
        )))
    }
}

#[derive(Debug, Args)]
pub struct FetchWeatherArgs {
    /// Place name or "lat,lon" understood by the provider.
    #[arg(long)]
    pub location: String,
    /// First day, YYYY-MM-DD.
    #[arg(long)]
    pub start: NaiveDate,
    /// Last day (inclusive), YYYY-MM-DD.
    #[arg(long)]
    pub end: NaiveDate,
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    #[arg(long, value_name = "DIR", default_value = ".hotelwatt-cache")]
    pub cache_dir: PathBuf,
    #[arg(long, value_name = "URL", default_value = hotelwatt_weather::DEFAULT_BASE_URL)]
    pub base_url: String,
    #[arg(long, value_name = "SECS", default_value_t = 30.0)]
    pub timeout_secs: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1200)]
    pub days: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the Gaussian noise added to energy, in kWh.
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub intercept: Option<f64>,
    #[arg(long)]
    pub rdd_coef: Option<f64>,
    #[arg(long)]
    pub temp_coef: Option<f64>,
    #[arg(long)]
    pub reference_temperature: Option<f64>,
    #[arg(long)]
    pub start: Option<NaiveDate>,
    #[arg(long)]
    pub hotel_id: Option<String>,
    /// Joined CSV output.
    #[arg(long, value_name = "CSV", required_unless_present_any = ["consumption_out", "weather_out"])]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub consumption_out: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub weather_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Feature matrix CSV output.
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    /// Also write the joined daily dataset.
    #[arg(long, value_name = "CSV")]
    pub joined_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Hidden-layer widths h1,h2,h3.
    #[arg(long, value_name = "H1,H2,H3", default_value = "32,16,8")]
    pub hidden: String,
    /// Leading share of days used for training; the rest is the test split.
    #[arg(long, value_name = "FRACTION")]
    pub train_fraction: Option<f64>,
    #[arg(long, value_name = "JSON")]
    pub model_out: PathBuf,
    /// Per-epoch loss CSV; defaults to the model path with a .loss.csv suffix.
    #[arg(long, value_name = "CSV")]
    pub loss_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    Random,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Width candidates for every hidden layer.
    #[arg(long, value_name = "LIST")]
    pub widths: Option<String>,
    /// Width candidates for layer 1 (overrides --widths).
    #[arg(long, value_name = "LIST")]
    pub h1: Option<String>,
    #[arg(long, value_name = "LIST")]
    pub h2: Option<String>,
    #[arg(long, value_name = "LIST")]
    pub h3: Option<String>,
    #[arg(long, value_enum, default_value = "random")]
    pub mode: ModeArg,
    /// Trial count for random mode.
    #[arg(long, default_value_t = hotelwatt::search::DEFAULT_TRIALS)]
    pub trials: usize,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "FRACTION")]
    pub train_fraction: Option<f64>,
    /// Trial log CSV output.
    #[arg(long, value_name = "CSV")]
    pub log_out: PathBuf,
    #[arg(long, value_name = "JSON")]
    pub model_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "JSON")]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Predictions CSV output (date, predicted_kwh).
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "JSON")]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_name = "FRACTION")]
    pub train_fraction: Option<f64>,
    #[arg(long, value_name = "JSON")]
    pub report_out: PathBuf,
    /// Forecast CSV output (date, actual_kwh, predicted_kwh), one row per test day.
    #[arg(long, value_name = "CSV")]
    pub forecast_out: PathBuf,
    /// Optional SVG chart of actual versus predicted test-day energy.
    #[arg(long, value_name = "SVG")]
    pub svg: Option<PathBuf>,
}

/// Parses a comma-separated list of positive integers. An empty string is an
/// empty list.
pub fn parse_widths(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| CliError::usage(format!("invalid width `{s}`")))
        })
        .collect()
}

pub fn parse_hidden(text: &str) -> CliResult<[usize; 3]> {
    let widths = parse_widths(text)?;
    let hidden: [usize; 3] = widths
        .try_into()
        .map_err(|w: Vec<usize>| CliError::usage(format!("--hidden needs three widths, got {}", w.len())))?;
    if hidden.contains(&0) {
        return Err(CliError::usage("hidden widths must be at least 1"));
    }
    Ok(hidden)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn hidden_parsing() {
        assert_eq!(parse_hidden("32, 16,8").unwrap(), [32, 16, 8]);
        assert!(parse_hidden("32,16").is_err());
        assert!(parse_hidden("32,0,8").is_err());
        assert!(parse_hidden("a,b,c").is_err());
        assert!(parse_widths("").unwrap().is_empty());
    }

    #[test]
    fn patience_zero_disables_early_stopping() {
        let flags = TrainFlags {
            learning_rate: None,
            epochs: Some(5),
            batch_size: None,
            seed: None,
            init: Some(InitArg::UniformSmall),
            momentum: None,
            patience: Some(0),
            validation_fraction: None,
            shuffle: Some(false),
        };
        let c = flags.config().unwrap();
        assert_eq!(c.early_stop_patience, None);
        assert_eq!(c.epochs, 5);
        assert!(!c.shuffle_each_epoch);
        assert_eq!(c.init_scheme, InitScheme::UniformSmall);
    }

    #[test]
    fn train_fraction_bounds() {
        assert_eq!(check_train_fraction(None).unwrap(), 0.9);
        for bad in [0.0, 1.0, 1.5, f64::NAN] {
            assert!(check_train_fraction(Some(bad)).is_err());
        }
    }
}
