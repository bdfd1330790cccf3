//! Daily consumption and weather series: CSV ingestion, date join,
//! chronological split and a seeded synthetic generator.
//!
//! Every file uses ISO-8601 dates (`YYYY-MM-DD`) and one row per day.
//! Optional cells are left empty and read back as `None`.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// One day of metered electricity and occupancy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionRecord {
    pub date: NaiveDate,
    pub energy_kwh: f64,
    /// Daily occupancy rate (ORD), fraction of rooms occupied.
    pub occupancy_rate: f64,
    pub guests: Option<u32>,
}

/// One day of climatological observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub date: NaiveDate,
    pub temp_mean: f64,
    pub temp_max: f64,
    pub temp_min: f64,
    pub humidity: Option<f64>,
    /// Additional named scalars (wind speed, precipitation, ...). Absent cells are not stored.
    pub extra: BTreeMap<String, f64>,
}

/// A consumption record joined with the weather of the same day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub energy_kwh: f64,
    pub occupancy_rate: f64,
    pub guests: Option<u32>,
    pub temp_mean: f64,
    pub temp_max: f64,
    pub temp_min: f64,
    pub humidity: Option<f64>,
    pub extra: BTreeMap<String, f64>,
}

impl DailyRecord {
    pub fn from_parts(consumption: &ConsumptionRecord, weather: &WeatherRecord) -> Self {
        debug_assert_eq!(consumption.date, weather.date);
        DailyRecord {
            date: consumption.date,
            energy_kwh: consumption.energy_kwh,
            occupancy_rate: consumption.occupancy_rate,
            guests: consumption.guests,
            temp_mean: weather.temp_mean,
            temp_max: weather.temp_max,
            temp_min: weather.temp_min,
            humidity: weather.humidity,
            extra: weather.extra.clone(),
        }
    }

    pub fn consumption(&self) -> ConsumptionRecord {
        ConsumptionRecord {
            date: self.date,
            energy_kwh: self.energy_kwh,
            occupancy_rate: self.occupancy_rate,
            guests: self.guests,
        }
    }

    pub fn weather(&self) -> WeatherRecord {
        WeatherRecord {
            date: self.date,
            temp_mean: self.temp_mean,
            temp_max: self.temp_max,
            temp_min: self.temp_min,
            humidity: self.humidity,
            extra: self.extra.clone(),
        }
    }
}

/// A nonempty, strictly date-ordered series of daily records for one hotel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    hotel_id: String,
    records: Vec<DailyRecord>,
}

impl Dataset {
    pub fn new(hotel_id: impl Into<String>, records: Vec<DailyRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::argument("dataset must contain at least one record"));
        }
        for pair in records.windows(2) {
            if pair[1].date == pair[0].date {
                return Err(Error::DuplicateDate(pair[1].date));
            }
            if pair[1].date < pair[0].date {
                return Err(Error::Data(format!(
                    "dates must be strictly increasing: {} follows {}",
                    pair[1].date, pair[0].date
                )));
            }
        }
        Ok(Dataset {
            hotel_id: hotel_id.into(),
            records,
        })
    }

    pub fn hotel_id(&self) -> &str {
        &self.hotel_id
    }

    pub fn records(&self) -> &[DailyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.records[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.records[self.records.len() - 1].date
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.records.iter().map(|r| r.date)
    }

    /// Appends `later` after `self`. All dates of `later` must come after ours.
    pub fn concat(&self, later: &Dataset) -> Result<Dataset> {
        let mut records = self.records.clone();
        records.extend_from_slice(&later.records);
        Dataset::new(self.hotel_id.clone(), records)
    }

    pub fn into_records(self) -> Vec<DailyRecord> {
        self.records
    }
}

/// Result of [`join_on_date`]: the joined dataset plus the dates each side lost.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinOutcome {
    pub dataset: Dataset,
    pub dropped_consumption: Vec<NaiveDate>,
    pub dropped_weather: Vec<NaiveDate>,
}

// ---------------------------------------------------------------------------
// CSV parsing

struct Header {
    columns: Vec<String>,
}

impl Header {
    fn from_record(record: &csv::StringRecord) -> Self {
        Header {
            columns: record.iter().map(|c| c.trim().to_string()).collect(),
        }
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.position(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

struct Row<'a> {
    index: usize,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn cell(&self, column: usize) -> &str {
        self.record.get(column).map(str::trim).unwrap_or("")
    }

    fn error(&self, column: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            row: self.index,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn date(&self, column: usize, name: &str) -> Result<NaiveDate> {
        let raw = self.cell(column);
        NaiveDate::parse_from_str(raw, DATE_FORMAT)
            .map_err(|_| self.error(name, format!("malformed date `{raw}`, expected YYYY-MM-DD")))
    }

    fn number(&self, column: usize, name: &str) -> Result<f64> {
        let raw = self.cell(column);
        if raw.is_empty() {
            return Err(self.error(name, "missing value"));
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error(name, format!("non-numeric value `{raw}`"))),
        }
    }

    fn optional_number(&self, column: Option<usize>, name: &str) -> Result<Option<f64>> {
        match column {
            Some(c) if !self.cell(c).is_empty() => self.number(c, name).map(Some),
            _ => Ok(None),
        }
    }

    fn optional_count(&self, column: Option<usize>, name: &str) -> Result<Option<u32>> {
        match column {
            Some(c) if !self.cell(c).is_empty() => {
                let raw = self.cell(c);
                raw.parse::<u32>()
                    .map(Some)
                    .map_err(|_| self.error(name, format!("expected a nonnegative count, got `{raw}`")))
            }
            _ => Ok(None),
        }
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn read_rows<L, T>(
    text: &str,
    parse_header: impl FnOnce(&Header) -> Result<L>,
    mut parse_row: impl FnMut(&L, &Row<'_>) -> Result<T>,
) -> Result<Vec<T>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        row: 0,
        column: "header".into(),
        message: e.to_string(),
    })?;
    if headers.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::MissingColumn("date".into()));
    }
    let header = Header::from_record(headers);
    let layout = parse_header(&header)?;

    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let index = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row: index,
            column: "*".into(),
            message: e.to_string(),
        })?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        out.push(parse_row(&layout, &Row { index, record: &record })?);
    }
    Ok(out)
}

fn sort_unique<T>(mut items: Vec<T>, date: impl Fn(&T) -> NaiveDate) -> Result<Vec<T>> {
    items.sort_by_key(|item| date(item));
    for pair in items.windows(2) {
        if date(&pair[0]) == date(&pair[1]) {
            return Err(Error::DuplicateDate(date(&pair[0])));
        }
    }
    Ok(items)
}

fn check_occupancy(row: &Row<'_>, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(row.error("occupancy_rate", format!("{value} is outside [0, 1]")))
    }
}

fn check_energy(row: &Row<'_>, value: f64) -> Result<f64> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(row.error("energy_kwh", format!("{value} must be positive")))
    }
}

fn check_humidity(row: &Row<'_>, value: Option<f64>) -> Result<Option<f64>> {
    match value {
        Some(h) if !(0.0..=100.0).contains(&h) => Err(row.error("humidity", format!("{h} is outside [0, 100]"))),
        other => Ok(other),
    }
}

fn check_temperatures(row: &Row<'_>, mean: f64, max: f64, min: f64) -> Result<()> {
    if min > max {
        return Err(Error::Consistency {
            row: row.index,
            message: format!("temp_min {min} exceeds temp_max {max}"),
        });
    }
    if mean < min || mean > max {
        return Err(Error::Consistency {
            row: row.index,
            message: format!("temp_mean {mean} is outside [temp_min {min}, temp_max {max}]"),
        });
    }
    Ok(())
}

/// Parses `date,energy_kwh,occupancy_rate[,guests]`. Output is sorted by date.
pub fn parse_consumption_csv(text: &str) -> Result<Vec<ConsumptionRecord>> {
    let records = read_rows(
        text,
        |h| {
            Ok((
                h.require("date")?,
                h.require("energy_kwh")?,
                h.require("occupancy_rate")?,
                h.position("guests"),
            ))
        },
        |&(date, energy, occupancy, guests), row| {
            Ok(ConsumptionRecord {
                date: row.date(date, "date")?,
                energy_kwh: check_energy(row, row.number(energy, "energy_kwh")?)?,
                occupancy_rate: check_occupancy(row, row.number(occupancy, "occupancy_rate")?)?,
                guests: row.optional_count(guests, "guests")?,
            })
        },
    )?;
    sort_unique(records, |r| r.date)
}

const WEATHER_CORE: [&str; 5] = ["date", "temp_mean", "temp_max", "temp_min", "humidity"];

fn extra_columns(header: &Header, reserved: &[&str]) -> Vec<(usize, String)> {
    header
        .columns
        .iter()
        .enumerate()
        .filter(|(_, name)| !name.is_empty() && !reserved.contains(&name.as_str()))
        .map(|(i, name)| (i, name.clone()))
        .collect()
}

fn read_extras(row: &Row<'_>, extras: &[(usize, String)]) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for (column, name) in extras {
        if let Some(value) = row.optional_number(Some(*column), name)? {
            map.insert(name.clone(), value);
        }
    }
    Ok(map)
}

/// Parses `date,temp_mean,temp_max,temp_min[,humidity,...]`. Unknown columns
/// become named extras. Output is sorted by date.
pub fn parse_weather_csv(text: &str) -> Result<Vec<WeatherRecord>> {
    let records = read_rows(
        text,
        |h| {
            let cols = (
                h.require("date")?,
                h.require("temp_mean")?,
                h.require("temp_max")?,
                h.require("temp_min")?,
                h.position("humidity"),
            );
            Ok((cols, extra_columns(h, &WEATHER_CORE)))
        },
        |((date, mean, max, min, humidity), extras), row| {
            let (date, mean, max, min, humidity) = (*date, *mean, *max, *min, *humidity);
            let temp_mean = row.number(mean, "temp_mean")?;
            let temp_max = row.number(max, "temp_max")?;
            let temp_min = row.number(min, "temp_min")?;
            check_temperatures(row, temp_mean, temp_max, temp_min)?;
            Ok(WeatherRecord {
                date: row.date(date, "date")?,
                temp_mean,
                temp_max,
                temp_min,
                humidity: check_humidity(row, row.optional_number(humidity, "humidity")?)?,
                extra: read_extras(row, extras)?,
            })
        },
    )?;
    sort_unique(records, |r| r.date)
}

const JOINED_CORE: [&str; 9] = [
    "date",
    "energy_kwh",
    "occupancy_rate",
    "guests",
    "temp_mean",
    "temp_max",
    "temp_min",
    "humidity",
    "hotel_id",
];

/// Parses the joined export written by [`dataset_to_csv`].
pub fn parse_dataset_csv(text: &str, hotel_id: &str) -> Result<Dataset> {
    let records = read_rows(
        text,
        |h| {
            let mut cols = [0usize; 6];
            let required = [
                "date",
                "energy_kwh",
                "occupancy_rate",
                "temp_mean",
                "temp_max",
                "temp_min",
            ];
            for (slot, name) in cols.iter_mut().zip(required) {
                *slot = h.require(name)?;
            }
            let optional = (h.position("guests"), h.position("humidity"));
            Ok((cols, optional, extra_columns(h, &JOINED_CORE)))
        },
        |(cols, optional, extras), row| {
            let [date, energy, occupancy, mean, max, min] = *cols;
            let temp_mean = row.number(mean, "temp_mean")?;
            let temp_max = row.number(max, "temp_max")?;
            let temp_min = row.number(min, "temp_min")?;
            check_temperatures(row, temp_mean, temp_max, temp_min)?;
            Ok(DailyRecord {
                date: row.date(date, "date")?,
                energy_kwh: check_energy(row, row.number(energy, "energy_kwh")?)?,
                occupancy_rate: check_occupancy(row, row.number(occupancy, "occupancy_rate")?)?,
                guests: row.optional_count(optional.0, "guests")?,
                temp_mean,
                temp_max,
                temp_min,
                humidity: check_humidity(row, row.optional_number(optional.1, "humidity")?)?,
                extra: read_extras(row, extras)?,
            })
        },
    )?;
    let records = sort_unique(records, |r| r.date)?;
    if records.is_empty() {
        return Err(Error::Data("dataset file contains no rows".into()));
    }
    Dataset::new(hotel_id, records)
}

// ---------------------------------------------------------------------------
// CSV writing

fn opt<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn write_csv(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    wtr.write_record(&header).expect("in-memory write");
    for row in rows {
        wtr.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn extra_names<'a>(maps: impl Iterator<Item = &'a BTreeMap<String, f64>>) -> Vec<String> {
    let names: BTreeSet<&String> = maps.flat_map(|m| m.keys()).collect();
    names.into_iter().cloned().collect()
}

/// Writes consumption records. The `guests` column is emitted only when some record has it.
pub fn consumption_to_csv(records: &[ConsumptionRecord]) -> String {
    let with_guests = records.iter().any(|r| r.guests.is_some());
    let mut header = vec!["date".to_string(), "energy_kwh".into(), "occupancy_rate".into()];
    if with_guests {
        header.push("guests".into());
    }
    write_csv(
        header,
        records.iter().map(|r| {
            let mut row = vec![
                r.date.format(DATE_FORMAT).to_string(),
                r.energy_kwh.to_string(),
                r.occupancy_rate.to_string(),
            ];
            if with_guests {
                row.push(opt(r.guests));
            }
            row
        }),
    )
}

/// Writes weather records: fixed columns, then `humidity`, then extras in name order.
pub fn weather_to_csv(records: &[WeatherRecord]) -> String {
    let extras = extra_names(records.iter().map(|r| &r.extra));
    let mut header: Vec<String> = WEATHER_CORE.iter().map(|s| s.to_string()).collect();
    header.extend(extras.iter().cloned());
    write_csv(
        header,
        records.iter().map(|r| {
            let mut row = vec![
                r.date.format(DATE_FORMAT).to_string(),
                r.temp_mean.to_string(),
                r.temp_max.to_string(),
                r.temp_min.to_string(),
                opt(r.humidity),
            ];
            row.extend(extras.iter().map(|name| opt(r.extra.get(name))));
            row
        }),
    )
}

/// Writes the joined dataset with the union of consumption and weather columns.
pub fn dataset_to_csv(dataset: &Dataset) -> String {
    let extras = extra_names(dataset.records.iter().map(|r| &r.extra));
    let mut header: Vec<String> = [
        "date",
        "energy_kwh",
        "occupancy_rate",
        "guests",
        "temp_mean",
        "temp_max",
        "temp_min",
        "humidity",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(extras.iter().cloned());
    write_csv(
        header,
        dataset.records.iter().map(|r| {
            let mut row = vec![
                r.date.format(DATE_FORMAT).to_string(),
                r.energy_kwh.to_string(),
                r.occupancy_rate.to_string(),
                opt(r.guests),
                r.temp_mean.to_string(),
                r.temp_max.to_string(),
                r.temp_min.to_string(),
                opt(r.humidity),
            ];
            row.extend(extras.iter().map(|name| opt(r.extra.get(name))));
            row
        }),
    )
}

// ---------------------------------------------------------------------------
// Join and split

/// Inner join on date. Unmatched days on either side are dropped and reported.
pub fn join_on_date(
    hotel_id: &str,
    consumption: &[ConsumptionRecord],
    weather: &[WeatherRecord],
) -> Result<JoinOutcome> {
    if consumption.is_empty() || weather.is_empty() {
        return Err(Error::argument("join requires nonempty consumption and weather series"));
    }
    let by_date: BTreeMap<NaiveDate, &WeatherRecord> = weather.iter().map(|w| (w.date, w)).collect();

    let mut matched = BTreeSet::new();
    let mut records = Vec::new();
    let mut dropped_consumption = Vec::new();
    for c in consumption {
        match by_date.get(&c.date) {
            Some(w) => {
                matched.insert(c.date);
                records.push(DailyRecord::from_parts(c, w));
            }
            None => dropped_consumption.push(c.date),
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyJoin);
    }
    records.sort_by_key(|r| r.date);
    let dropped_weather = weather
        .iter()
        .map(|w| w.date)
        .filter(|d| !matched.contains(d))
        .collect();
    dropped_consumption.sort();

    Ok(JoinOutcome {
        dataset: Dataset::new(hotel_id, records)?,
        dropped_consumption,
        dropped_weather,
    })
}

/// Number of leading records that go to training for a given fraction.
///
/// A small tolerance absorbs binary rounding so that e.g. `0.29 * 100` yields 29.
pub fn train_len(n: usize, train_fraction: f64) -> usize {
    ((n as f64) * train_fraction + 1e-9).floor() as usize
}

/// Splits into the first `floor(n * train_fraction)` days and the remainder.
pub fn chronological_split(dataset: &Dataset, train_fraction: f64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::argument(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::argument("at least two records are needed to split"));
    }
    let cut = train_len(n, train_fraction);
    if cut == 0 || cut == n {
        return Err(Error::argument(format!(
            "train fraction {train_fraction} over {n} records leaves an empty partition"
        )));
    }
    let (head, tail) = dataset.records.split_at(cut);
    Ok((
        Dataset::new(dataset.hotel_id.clone(), head.to_vec())?,
        Dataset::new(dataset.hotel_id.clone(), tail.to_vec())?,
    ))
}

// ---------------------------------------------------------------------------
// Synthetic generator

/// Coefficients of the synthetic linear generator
/// `energy = intercept + rdd_coef * RDD + temp_coef * temp_mean + N(0, noise_sd)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub hotel_id: String,
    pub start: NaiveDate,
    pub intercept: f64,
    pub rdd_coef: f64,
    pub temp_coef: f64,
    pub noise_sd: f64,
    /// Daily mean temperature stays within this range (°C).
    pub temp_range: (f64, f64),
    /// Amplitude of uniform day-to-day jitter around the seasonal curve (°C).
    pub temp_jitter: f64,
    /// Occupancy is drawn uniformly from this band.
    pub occupancy_band: (f64, f64),
    pub reference_temperature: f64,
    pub clip_negative_cdd: bool,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            hotel_id: "synthetic".into(),
            start: NaiveDate::from_ymd_opt(2011, 1, 1).expect("valid date"),
            intercept: 500.0,
            rdd_coef: 12.0,
            temp_coef: 3.0,
            noise_sd: 10.0,
            temp_range: (22.0, 32.0),
            temp_jitter: 1.5,
            occupancy_band: (0.4, 0.95),
            reference_temperature: features::DEFAULT_REFERENCE_TEMPERATURE,
            clip_negative_cdd: true,
        }
    }
}

pub const MIN_SYNTHETIC_DAYS: usize = 30;

/// Day of year at which the seasonal temperature curve peaks (early August).
const SEASON_PEAK_DAY: f64 = 214.0;

/// Generates a deterministic synthetic hotel series. Identical inputs give
/// bit-identical output.
pub fn generate_synthetic(days: usize, params: &SyntheticParams, seed: u64) -> Result<Dataset> {
    if days < MIN_SYNTHETIC_DAYS {
        return Err(Error::argument(format!(
            "synthetic series needs at least {MIN_SYNTHETIC_DAYS} days, got {days}"
        )));
    }
    if !(params.noise_sd.is_finite() && params.noise_sd >= 0.0) {
        return Err(Error::argument(
            "noise standard deviation must be finite and nonnegative",
        ));
    }
    let (t_lo, t_hi) = params.temp_range;
    let (o_lo, o_hi) = params.occupancy_band;
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo <= t_hi) {
        return Err(Error::argument("temperature range must be finite with low <= high"));
    }
    if !(0.0..=1.0).contains(&o_lo) || !(0.0..=1.0).contains(&o_hi) || o_lo > o_hi {
        return Err(Error::argument(
            "occupancy band must lie within [0, 1] with low <= high",
        ));
    }
    let mid = 0.5 * (t_lo + t_hi);
    let half_span = 0.5 * (t_hi - t_lo);
    let jitter = params.temp_jitter.clamp(0.0, half_span);
    let amplitude = half_span - jitter;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(days);
    for offset in 0..days {
        let date = params.start + Duration::days(offset as i64);
        let doy = date.ordinal() as f64;
        let phase = 2.0 * std::f64::consts::PI * (doy - SEASON_PEAK_DAY + 365.25 / 4.0) / 365.25;
        let wobble = if jitter > 0.0 {
            rng.random_range(-jitter..=jitter)
        } else {
            0.0
        };
        let temp_mean = mid + amplitude * phase.sin() + wobble;
        let temp_max = temp_mean + rng.random_range(2.0..5.0);
        let temp_min = temp_mean - rng.random_range(2.0..5.0);
        let humidity = rng.random_range(60.0..90.0);
        let occupancy_rate = if o_hi > o_lo {
            rng.random_range(o_lo..=o_hi)
        } else {
            o_lo
        };
        let z: f64 = rng.sample(StandardNormal);

        let cdd = features::cdd(temp_mean, params.reference_temperature, params.clip_negative_cdd);
        let rdd = cdd * occupancy_rate;
        let energy_kwh = params.intercept + params.rdd_coef * rdd + params.temp_coef * temp_mean + params.noise_sd * z;
        if !(energy_kwh.is_finite() && energy_kwh > 0.0) {
            return Err(Error::Generation(format!(
                "coefficients give non-positive energy {energy_kwh} on {date}"
            )));
        }
        records.push(DailyRecord {
            date,
            energy_kwh,
            occupancy_rate,
            guests: None,
            temp_mean,
            temp_max,
            temp_min,
            humidity: Some(humidity),
            extra: BTreeMap::new(),
        });
    }
    Dataset::new(params.hotel_id.clone(), records)
}
