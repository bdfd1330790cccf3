//! Daily weather history from a remote timeline service or local CSV files.
//!
//! Remote responses are validated, converted to the weather CSV format and
//! cached under `{cache_dir}/{key}.csv`, where the key hashes the query.
//! A warm cache answers without touching the network or needing an API key.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use hotelwatt::dataset::{parse_weather_csv, weather_to_csv, WeatherRecord, DATE_FORMAT};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable holding the provider API key.
pub const API_KEY_ENV: &str = "HOTELWATT_WEATHER_KEY";

pub const DEFAULT_BASE_URL: &str =
    "https://weather.visualcrossing.com/VisualCrossingWebServices/rest/services/timeline";

pub type Result<T, E = WeatherError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("invalid query: {0}")]
    Argument(String),

    #[error("no API key: set {API_KEY_ENV} or warm the cache")]
    MissingKey,

    #[error("weather provider returned HTTP {status}: {message}")]
    Provider { status: u16, message: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("provider response is missing {} day(s): {}", missing.len(), format_dates(missing))]
    Incomplete { missing: Vec<NaiveDate> },

    #[error("unexpected provider payload: {0}")]
    Payload(String),

    #[error(transparent)]
    Data(#[from] hotelwatt::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_dates(dates: &[NaiveDate]) -> String {
    dates
        .iter()
        .map(|d| d.format(DATE_FORMAT).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WeatherError + '_ {
    move |source| WeatherError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Metric,
}

impl Units {
    fn as_str(self) -> &'static str {
        match self {
            Units::Metric => "metric",
        }
    }
}

/// An inclusive range of days at one location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeatherQuery {
    pub location: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub units: Units,
}

impl WeatherQuery {
    pub fn new(location: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let location = location.into();
        if location.trim().is_empty() {
            return Err(WeatherError::Argument("location must not be empty".into()));
        }
        if start > end {
            return Err(WeatherError::Argument(format!("start {start} is after end {end}")));
        }
        Ok(WeatherQuery {
            location,
            start,
            end,
            units: Units::Metric,
        })
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        self.start.iter_days().take_while({
            let end = self.end;
            move |d| *d <= end
        })
    }

    /// Hex SHA-256 of location, dates and units.
    pub fn cache_key(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.location.trim().as_bytes());
        hasher.update(b"\n");
        hasher.update(self.start.format(DATE_FORMAT).to_string().as_bytes());
        hasher.update(b"\n");
        hasher.update(self.end.format(DATE_FORMAT).to_string().as_bytes());
        hasher.update(b"\n");
        hasher.update(self.units.as_str().as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Names of the provider's JSON fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    /// Top-level array of daily entries.
    pub days: String,
    pub date: String,
    pub temp_mean: String,
    pub temp_max: String,
    pub temp_min: String,
    pub humidity: String,
    /// `(provider field, extra column name)` pairs copied when numeric.
    pub extras: Vec<(String, String)>,
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            days: "days".into(),
            date: "datetime".into(),
            temp_mean: "temp".into(),
            temp_max: "tempmax".into(),
            temp_min: "tempmin".into(),
            humidity: "humidity".into(),
            extras: vec![
                ("windspeed".into(), "wind_speed".into()),
                ("precip".into(), "precipitation".into()),
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub cache_dir: PathBuf,
    pub fields: FieldMap,
}

impl ProviderConfig {
    /// Configuration with the API key taken from [`API_KEY_ENV`].
    pub fn from_env(base_url: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        ProviderConfig {
            base_url: base_url.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(30),
            cache_dir: cache_dir.into(),
            fields: FieldMap::default(),
        }
    }

    pub fn cache_path(&self, query: &WeatherQuery) -> PathBuf {
        self.cache_dir.join(format!("{}.csv", query.cache_key()))
    }

    fn validate(&self) -> Result<()> {
        if self.timeout.is_zero() {
            return Err(WeatherError::Argument("timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Cache,
    Network,
}

#[derive(Debug, Clone)]
pub struct Fetched {
    pub records: Vec<WeatherRecord>,
    pub source: Source,
    pub cache_path: PathBuf,
}

/// Reads a weather CSV file.
pub fn fetch_file(path: impl AsRef<Path>) -> Result<Vec<WeatherRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_weather_csv(&text)?)
}

/// Daily records for every day of `query`, from cache when present.
pub fn fetch_remote(query: &WeatherQuery, config: &ProviderConfig) -> Result<Vec<WeatherRecord>> {
    fetch(query, config).map(|f| f.records)
}

/// Like [`fetch_remote`] but also reports where the data came from.
pub fn fetch(query: &WeatherQuery, config: &ProviderConfig) -> Result<Fetched> {
    config.validate()?;
    let cache_path = config.cache_path(query);
    if cache_path.is_file() {
        let records = fetch_file(&cache_path)?;
        check_complete(query, &records)?;
        return Ok(Fetched {
            records,
            source: Source::Cache,
            cache_path,
        });
    }

    let key = config.api_key.as_deref().ok_or(WeatherError::MissingKey)?;
    let body = http_get(query, config, key)?;
    let records = records_from_json(&body, query, &config.fields)?;
    // Round-tripping through the CSV parser applies the same validation as file input.
    let csv = weather_to_csv(&records);
    let records = parse_weather_csv(&csv)?;
    write_atomic(&config.cache_dir, &cache_path, csv.as_bytes())?;
    Ok(Fetched {
        records,
        source: Source::Network,
        cache_path,
    })
}

fn encode_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.trim().bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

/// `{base_url}/{location}/{start}/{end}`.
pub fn request_url(query: &WeatherQuery, base_url: &str) -> String {
    format!(
        "{}/{}/{}/{}",
        base_url.trim_end_matches('/'),
        encode_segment(&query.location),
        query.start.format(DATE_FORMAT),
        query.end.format(DATE_FORMAT)
    )
}

fn http_get(query: &WeatherQuery, config: &ProviderConfig, key: &str) -> Result<String> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(config.timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut response = agent
        .get(&request_url(query, &config.base_url))
        .query("unitGroup", query.units.as_str())
        .query("key", key)
        .query("include", "days")
        .call()
        .map_err(|e| WeatherError::Transport(e.to_string()))?;
    let status = response.status().as_u16();
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|e| WeatherError::Transport(e.to_string()))?;
    if !(200..300).contains(&status) {
        let mut message = body.trim().to_string();
        message.truncate(200);
        return Err(WeatherError::Provider { status, message });
    }
    Ok(body)
}

fn number(day: &Value, field: &str) -> Option<f64> {
    day.get(field).and_then(Value::as_f64).filter(|v| v.is_finite())
}

/// Maps a provider JSON body onto records for the days in `query`. Days
/// outside the query range are ignored; missing days are an error.
pub fn records_from_json(body: &str, query: &WeatherQuery, fields: &FieldMap) -> Result<Vec<WeatherRecord>> {
    let root: Value = serde_json::from_str(body).map_err(|e| WeatherError::Payload(e.to_string()))?;
    let days = root
        .get(&fields.days)
        .and_then(Value::as_array)
        .ok_or_else(|| WeatherError::Payload(format!("no `{}` array in response", fields.days)))?;

    let mut by_date = BTreeMap::new();
    for day in days {
        let raw_date = day
            .get(&fields.date)
            .and_then(Value::as_str)
            .ok_or_else(|| WeatherError::Payload(format!("daily entry without `{}`", fields.date)))?;
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT)
            .map_err(|_| WeatherError::Payload(format!("malformed date `{raw_date}`")))?;
        if date < query.start || date > query.end {
            continue;
        }
        let required = |field: &str| {
            number(day, field).ok_or_else(|| WeatherError::Payload(format!("{date}: missing numeric `{field}`")))
        };
        let extra = fields
            .extras
            .iter()
            .filter_map(|(src, dst)| number(day, src).map(|v| (dst.clone(), v)))
            .collect();
        by_date.insert(
            date,
            WeatherRecord {
                date,
                temp_mean: required(&fields.temp_mean)?,
                temp_max: required(&fields.temp_max)?,
                temp_min: required(&fields.temp_min)?,
                humidity: number(day, &fields.humidity),
                extra,
            },
        );
    }
    let records: Vec<WeatherRecord> = by_date.into_values().collect();
    check_complete(query, &records)?;
    Ok(records)
}

fn check_complete(query: &WeatherQuery, records: &[WeatherRecord]) -> Result<()> {
    let have: std::collections::BTreeSet<NaiveDate> = records.iter().map(|r| r.date).collect();
    let missing: Vec<NaiveDate> = query.days().filter(|d| !have.contains(d)).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(WeatherError::Incomplete { missing })
    }
}

/// Writes to a temporary file in the same directory, then renames over `path`.
fn write_atomic(dir: &Path, path: &Path, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| WeatherError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}
