//! Degree-day features, the model-ready feature matrix, min-max scaling and
//! Pearson correlation.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::{DailyRecord, Dataset, DATE_FORMAT};
use crate::error::{Error, Result};

/// Cooling base temperature in °C used when none is configured.
pub const DEFAULT_REFERENCE_TEMPERATURE: f64 = 24.0;

/// Daily cooling degree-days: `temp_mean - reference`, floored at zero when `clip` is set.
pub fn cdd(temp_mean: f64, reference: f64, clip: bool) -> f64 {
    let excess = temp_mean - reference;
    if clip {
        excess.max(0.0)
    } else {
        excess
    }
}

/// Room degree-days: cooling degree-days weighted by the daily occupancy rate.
pub fn rdd(cdd_value: f64, occupancy_rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&occupancy_rate) {
        return Err(Error::argument(format!(
            "occupancy rate {occupancy_rate} is outside [0, 1]"
        )));
    }
    Ok(cdd_value * occupancy_rate)
}

/// A model input column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    TempMean,
    TempMax,
    TempMin,
    Humidity,
    /// Daily occupancy rate.
    Occupancy,
    Guests,
    Cdd,
    Rdd,
    /// A named extra weather column.
    Extra(String),
}

impl Feature {
    pub fn name(&self) -> &str {
        match self {
            Feature::TempMean => "temp_mean",
            Feature::TempMax => "temp_max",
            Feature::TempMin => "temp_min",
            Feature::Humidity => "humidity",
            Feature::Occupancy => "ORD",
            Feature::Guests => "guests",
            Feature::Cdd => "CDD",
            Feature::Rdd => "RDD",
            Feature::Extra(name) => name,
        }
    }

    fn value(&self, record: &DailyRecord, spec: &FeatureSpec) -> Result<f64> {
        let missing = |feature: &str| Error::MissingFeature {
            date: record.date,
            feature: feature.to_string(),
        };
        let cdd_value = || cdd(record.temp_mean, spec.reference_temperature, spec.clip_negative_cdd);
        Ok(match self {
            Feature::TempMean => record.temp_mean,
            Feature::TempMax => record.temp_max,
            Feature::TempMin => record.temp_min,
            Feature::Humidity => record.humidity.ok_or_else(|| missing("humidity"))?,
            Feature::Occupancy => record.occupancy_rate,
            Feature::Guests => record.guests.ok_or_else(|| missing("guests"))? as f64,
            Feature::Cdd => cdd_value(),
            Feature::Rdd => rdd(cdd_value(), record.occupancy_rate)?,
            Feature::Extra(name) => *record.extra.get(name).ok_or_else(|| missing(name))?,
        })
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::argument("empty feature name"));
        }
        Ok(match s.to_ascii_lowercase().as_str() {
            "temp_mean" | "temp" => Feature::TempMean,
            "temp_max" => Feature::TempMax,
            "temp_min" => Feature::TempMin,
            "humidity" => Feature::Humidity,
            "ord" | "occupancy" | "occupancy_rate" => Feature::Occupancy,
            "guests" => Feature::Guests,
            "cdd" => Feature::Cdd,
            "rdd" => Feature::Rdd,
            _ => Feature::Extra(s.to_string()),
        })
    }
}

impl Serialize for Feature {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Which columns feed the model and how degree-days are computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub features: Vec<Feature>,
    /// Cooling base temperature in °C.
    pub reference_temperature: f64,
    pub clip_negative_cdd: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            features: vec![Feature::Rdd, Feature::TempMean],
            reference_temperature: DEFAULT_REFERENCE_TEMPERATURE,
            clip_negative_cdd: true,
        }
    }
}

impl FeatureSpec {
    pub fn new(features: Vec<Feature>, reference_temperature: f64, clip_negative_cdd: bool) -> Result<Self> {
        let spec = FeatureSpec {
            features,
            reference_temperature,
            clip_negative_cdd,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a comma-separated feature list such as `RDD,temp_mean`.
    pub fn parse_list(list: &str) -> Result<Vec<Feature>> {
        list.split(',').map(str::parse).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::argument("at least one feature must be selected"));
        }
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].contains(f) {
                return Err(Error::argument(format!("feature `{f}` is selected twice")));
            }
        }
        if !self.reference_temperature.is_finite() {
            return Err(Error::argument("reference temperature must be finite"));
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name().to_string()).collect()
    }
}

/// Row-major feature values with the energy target and the date of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    target: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, dates: Vec<NaiveDate>, values: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::shape("feature matrix needs at least one column"));
        }
        if dates.len() != target.len() || values.len() != target.len() * names.len() {
            return Err(Error::shape(format!(
                "{} dates, {} targets and {} values do not form a {}-column matrix",
                dates.len(),
                target.len(),
                values.len(),
                names.len()
            )));
        }
        if let Some(bad) = values.iter().chain(&target).find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite entry {bad} in feature matrix")));
        }
        Ok(FeatureMatrix {
            names,
            dates,
            values,
            target,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_cols())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Contiguous block of rows `range`.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> FeatureMatrix {
        let w = self.n_cols();
        FeatureMatrix {
            names: self.names.clone(),
            dates: self.dates[range.clone()].to_vec(),
            values: self.values[range.start * w..range.end * w].to_vec(),
            target: self.target[range].to_vec(),
        }
    }

    /// CSV with `date`, one column per feature and `energy_kwh`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        out.push_str(",energy_kwh\n");
        for (i, row) in self.rows().enumerate() {
            out.push_str(&self.dates[i].format(DATE_FORMAT).to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push(',');
            out.push_str(&self.target[i].to_string());
            out.push('\n');
        }
        out
    }
}

/// Resolves every selected feature for every day.
pub fn build_features(dataset: &Dataset, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    build_features_from(dataset.records(), spec)
}

pub fn build_features_from(records: &[DailyRecord], spec: &FeatureSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    let mut values = Vec::with_capacity(records.len() * spec.features.len());
    for record in records {
        for feature in &spec.features {
            values.push(feature.value(record, spec)?);
        }
    }
    FeatureMatrix::new(
        spec.names(),
        records.iter().map(|r| r.date).collect(),
        values,
        records.iter().map(|r| r.energy_kwh).collect(),
    )
}

/// Observed range of one column in original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub min: f64,
    pub max: f64,
}

impl ColumnRange {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("cannot fit a range to an empty column".into()));
        }
        let mut range = ColumnRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        for &v in values {
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite value {v} in column")));
            }
            range.min = range.min.min(v);
            range.max = range.max.max(v);
        }
        Ok(range)
    }

    pub fn is_constant(&self) -> bool {
        self.max == self.min
    }

    /// Affine map sending `min` to 0 and `max` to 1. Values outside the range
    /// extend linearly. A constant column maps to 0.
    pub fn scale(&self, x: f64) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    /// Inverse of [`scale`](Self::scale). A constant column returns its constant.
    pub fn unscale(&self, y: f64) -> f64 {
        if self.is_constant() {
            self.min
        } else {
            y * (self.max - self.min) + self.min
        }
    }
}

/// Min-max state for every feature column and the target, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub columns: Vec<String>,
    pub features: Vec<ColumnRange>,
    pub target: ColumnRange,
}

pub fn fit_normalization(matrix: &FeatureMatrix) -> Result<NormalizationParams> {
    if matrix.is_empty() {
        return Err(Error::Data("cannot fit normalization on an empty matrix".into()));
    }
    let features = (0..matrix.n_cols())
        .map(|j| ColumnRange::of(&matrix.column(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalizationParams {
        columns: matrix.names.clone(),
        features,
        target: ColumnRange::of(&matrix.target)?,
    })
}

impl NormalizationParams {
    fn check(&self, matrix: &FeatureMatrix) -> Result<()> {
        if matrix.n_cols() != self.features.len() {
            return Err(Error::shape(format!(
                "matrix has {} columns but normalization was fitted on {}",
                matrix.n_cols(),
                self.features.len()
            )));
        }
        Ok(())
    }

    fn map(&self, matrix: &FeatureMatrix, f: impl Fn(&ColumnRange, f64) -> f64) -> Result<FeatureMatrix> {
        self.check(matrix)?;
        let w = matrix.n_cols();
        let values = matrix
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(&self.features[k % w], v))
            .collect();
        let target = matrix.target.iter().map(|&v| f(&self.target, v)).collect();
        FeatureMatrix::new(matrix.names.clone(), matrix.dates.clone(), values, target)
    }

    /// Scales features and target into the fitted unit range.
    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.map(matrix, ColumnRange::scale)
    }

    /// Maps a normalized matrix back to original units.
    pub fn invert(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.map(matrix, ColumnRange::unscale)
    }

    /// Maps normalized target values (model outputs) back to kWh.
    pub fn invert_target(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.target.unscale(v)).collect()
    }
}

pub fn apply_normalization(matrix: &FeatureMatrix, params: &NormalizationParams) -> Result<FeatureMatrix> {
    params.apply(matrix)
}

pub fn invert_normalization(matrix: &FeatureMatrix, params: &NormalizationParams) -> Result<FeatureMatrix> {
    params.invert(matrix)
}

/// Sample Pearson correlation. Fails when either series is constant, since
/// the coefficient is then undefined.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::shape("correlation needs at least two observations"));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(Error::UndefinedCorrelation);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson r between one feature column and energy; `None` where undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub feature: String,
    pub r: Option<f64>,
}

/// Correlation of every column of `matrix` against its target.
pub fn correlation_table(matrix: &FeatureMatrix) -> Vec<FeatureCorrelation> {
    (0..matrix.n_cols())
        .map(|j| FeatureCorrelation {
            feature: matrix.names[j].clone(),
            r: pearson(&matrix.column(j), &matrix.target).ok(),
        })
        .collect()
}
