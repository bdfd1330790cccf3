//! Daily hotel electricity forecasting.
//!
//! The pipeline joins daily consumption with weather observations, derives
//! cooling and room degree-day features, scales them into the unit range and
//! fits a feedforward network with three ReLU hidden layers. Fit accuracy is
//! reported as RMSE on the training split and forecast accuracy as MAPE on the
//! chronologically later test split.
//!
//! ```
//! use hotelwatt::{dataset, features::FeatureSpec, pipeline, ann::TrainConfig};
//!
//! let data = dataset::generate_synthetic(120, &Default::default(), 1).unwrap();
//! let (train, test) = dataset::chronological_split(&data, 0.9).unwrap();
//! let config = TrainConfig { epochs: 20, ..TrainConfig::default() };
//! let (model, _) = pipeline::fit_model(&train, &FeatureSpec::default(), [8, 8, 8], &config).unwrap();
//! let report = hotelwatt::report::evaluate(&model, &train, &test).unwrap();
//! assert!(report.forecast_mape.is_finite());
//! ```

pub mod ann;
pub mod dataset;
pub mod error;
pub mod features;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod search;
pub mod svg;

pub use error::{Error, Result};
