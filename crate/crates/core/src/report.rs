//! Evaluation reports: fit RMSE on the training split, forecast MAPE on the
//! held-out split and feature correlations against energy.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ann::{TrainConfig, HIDDEN_LAYERS};
use crate::dataset::{Dataset, DATE_FORMAT};
use crate::error::Result;
use crate::features::{build_features, correlation_table, FeatureCorrelation};
use crate::metrics::{mape, rmse};
use crate::model::ModelBundle;
use crate::pipeline::predict_dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateSpan {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub days: usize,
}

impl DateSpan {
    pub fn of(dataset: &Dataset) -> Self {
        DateSpan {
            start: dataset.first_date(),
            end: dataset.last_date(),
            days: dataset.len(),
        }
    }
}

/// One row of the actual-versus-predicted series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub date: NaiveDate,
    pub actual_kwh: f64,
    pub predicted_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub hotel_id: String,
    pub hidden_sizes: [usize; HIDDEN_LAYERS],
    /// RMSE in kWh over the training split.
    pub fit_rmse: f64,
    pub fit_split: String,
    /// MAPE in percent over the held-out split.
    pub forecast_mape: f64,
    pub forecast_split: String,
    pub correlations: Vec<FeatureCorrelation>,
    pub reference_temperature: f64,
    pub clip_negative_cdd: bool,
    pub train_config: TrainConfig,
    pub train_dates: DateSpan,
    pub test_dates: DateSpan,
    #[serde(skip)]
    pub forecast: Vec<ForecastPoint>,
}

pub fn evaluate(bundle: &ModelBundle, train: &Dataset, test: &Dataset) -> Result<EvalReport> {
    let fitted = predict_dataset(bundle, train)?;
    let actual_train: Vec<f64> = train.records().iter().map(|r| r.energy_kwh).collect();
    let forecast = predict_dataset(bundle, test)?;
    let actual_test: Vec<f64> = test.records().iter().map(|r| r.energy_kwh).collect();

    let full = train.concat(test)?;
    let correlations = correlation_table(&build_features(&full, &bundle.spec)?);

    Ok(EvalReport {
        hotel_id: train.hotel_id().to_string(),
        hidden_sizes: bundle.network.hidden_sizes(),
        fit_rmse: rmse(&fitted, &actual_train)?,
        fit_split: "train".into(),
        forecast_mape: mape(&forecast, &actual_test)?,
        forecast_split: "test".into(),
        correlations,
        reference_temperature: bundle.spec.reference_temperature,
        clip_negative_cdd: bundle.spec.clip_negative_cdd,
        train_config: bundle.train_config.clone(),
        train_dates: DateSpan::of(train),
        test_dates: DateSpan::of(test),
        forecast: test
            .records()
            .iter()
            .zip(forecast)
            .map(|(r, predicted_kwh)| ForecastPoint {
                date: r.date,
                actual_kwh: r.energy_kwh,
                predicted_kwh,
            })
            .collect(),
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn forecast_csv(&self) -> String {
        forecast_csv(&self.forecast)
    }
}

/// `date,actual_kwh,predicted_kwh` rows.
pub fn forecast_csv(points: &[ForecastPoint]) -> String {
    let mut out = String::from("date,actual_kwh,predicted_kwh\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.date.format(DATE_FORMAT),
            p.actual_kwh,
            p.predicted_kwh
        ));
    }
    out
}

/// Human-readable correlation table; undefined coefficients print as `n/a`.
pub fn format_correlations(table: &[FeatureCorrelation]) -> String {
    let width = table.iter().map(|c| c.feature.len()).max().unwrap_or(7).max(7);
    let mut out = format!("{:<width$}  pearson_r\n", "feature");
    for c in table {
        let r = c.r.map_or_else(|| "n/a".to_string(), |r| format!("{r:.3}"));
        out.push_str(&format!("{:<width$}  {r}\n", c.feature));
    }
    out
}
