//! Browser demo: degree-day explorer, synthetic scatter and in-page training.
//!
//! The `*_view` functions hold the logic and run natively; the
//! `#[wasm_bindgen]` exports wrap them for JavaScript.

use hotelwatt::ann::TrainConfig;
use hotelwatt::dataset::{chronological_split, generate_synthetic, SyntheticParams};
use hotelwatt::features::{build_features, cdd, pearson, rdd, Feature, FeatureSpec};
use hotelwatt::pipeline::fit_model;
use hotelwatt::report::evaluate;
use hotelwatt::svg::{forecast_chart, line_chart, scatter_chart, Series, ACTUAL_COLOR, PREDICTED_COLOR};
use wasm_bindgen::prelude::*;

pub const MAX_DEMO_DAYS: usize = 3000;
pub const MAX_DEMO_EPOCHS: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDayCurve {
    pub temps: Vec<f64>,
    pub cdd: Vec<f64>,
    pub rdd: Vec<f64>,
}

/// CDD and RDD sampled at `steps` evenly spaced temperatures in `[t_lo, t_hi]`.
pub fn degree_day_curve(
    reference: f64,
    clip: bool,
    occupancy: f64,
    t_lo: f64,
    t_hi: f64,
    steps: usize,
) -> Result<DegreeDayCurve, String> {
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(format!("temperature range [{t_lo}, {t_hi}] is empty"));
    }
    if !reference.is_finite() {
        return Err("reference temperature must be finite".into());
    }
    if !(2..=500).contains(&steps) {
        return Err("steps must be between 2 and 500".into());
    }
    let temps: Vec<f64> = (0..steps)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / (steps - 1) as f64)
        .collect();
    let cdd: Vec<f64> = temps.iter().map(|&t| cdd(t, reference, clip)).collect();
    let rdd = cdd
        .iter()
        .map(|&c| rdd(c, occupancy))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(DegreeDayCurve { temps, cdd, rdd })
}

pub fn degree_day_view(
    reference: f64,
    clip: bool,
    occupancy: f64,
    t_lo: f64,
    t_hi: f64,
    steps: usize,
) -> Result<String, String> {
    let c = degree_day_curve(reference, clip, occupancy, t_lo, t_hi, steps)?;
    let labels: Vec<String> = c.temps.iter().map(|t| format!("{t:.1}")).collect();
    let title = format!("Degree days, reference {reference} C, occupancy {occupancy}");
    Ok(line_chart(
        &title,
        &labels,
        &[
            Series {
                name: "CDD",
                values: &c.cdd,
                color: ACTUAL_COLOR,
            },
            Series {
                name: "RDD",
                values: &c.rdd,
                color: PREDICTED_COLOR,
            },
        ],
        "degree days",
    ))
}

fn synthetic_params(noise_sd: f64, reference: f64) -> SyntheticParams {
    SyntheticParams {
        noise_sd,
        reference_temperature: reference,
        ..SyntheticParams::default()
    }
}

fn check_days(days: usize) -> Result<(), String> {
    if days > MAX_DEMO_DAYS {
        return Err(format!("at most {MAX_DEMO_DAYS} days in the demo"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    pub svg: String,
    pub r: f64,
}

/// Synthetic data plotted as energy against RDD, with Pearson r.
pub fn scatter_view(days: usize, noise_sd: f64, seed: u64, reference: f64) -> Result<Scatter, String> {
    check_days(days)?;
    let ds = generate_synthetic(days, &synthetic_params(noise_sd, reference), seed).map_err(|e| e.to_string())?;
    let spec = FeatureSpec::new(vec![Feature::Rdd], reference, true).map_err(|e| e.to_string())?;
    let m = build_features(&ds, &spec).map_err(|e| e.to_string())?;
    let x = m.column(0);
    let r = pearson(&x, m.target()).map_err(|e| e.to_string())?;
    let title = format!("Energy vs RDD ({days} days, r = {r:.3})");
    Ok(Scatter {
        svg: scatter_chart(&title, "RDD", "energy (kWh)", &x, m.target()),
        r,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub forecast_svg: String,
    pub loss_svg: String,
    pub fit_rmse: f64,
    pub forecast_mape: f64,
    pub epochs_run: usize,
}

/// Trains on the first 90% of a synthetic series and forecasts the rest.
pub fn training_view(
    days: usize,
    noise_sd: f64,
    seed: u64,
    hidden: [usize; 3],
    epochs: usize,
    learning_rate: f64,
) -> Result<Training, String> {
    check_days(days)?;
    if epochs > MAX_DEMO_EPOCHS {
        return Err(format!("at most {MAX_DEMO_EPOCHS} epochs in the demo"));
    }
    let ds = generate_synthetic(days, &synthetic_params(noise_sd, 24.0), seed).map_err(|e| e.to_string())?;
    let (train, test) = chronological_split(&ds, 0.9).map_err(|e| e.to_string())?;
    let config = TrainConfig {
        epochs,
        learning_rate,
        seed,
        ..TrainConfig::default()
    };
    let (bundle, result) = fit_model(&train, &FeatureSpec::default(), hidden, &config).map_err(|e| e.to_string())?;
    let report = evaluate(&bundle, &train, &test).map_err(|e| e.to_string())?;
    let labels: Vec<String> = (1..=result.loss_history.len()).map(|e| e.to_string()).collect();
    let mut series = vec![Series {
        name: "train MSE",
        values: &result.loss_history,
        color: ACTUAL_COLOR,
    }];
    if !result.validation_history.is_empty() {
        series.push(Series {
            name: "validation MSE",
            values: &result.validation_history,
            color: PREDICTED_COLOR,
        });
    }
    Ok(Training {
        forecast_svg: forecast_chart("Forecast vs actual (test days)", &report.forecast),
        loss_svg: line_chart("Training loss (normalized)", &labels, &series, "MSE"),
        fit_rmse: report.fit_rmse,
        forecast_mape: report.forecast_mape,
        epochs_run: result.epochs_run,
    })
}

// JavaScript bindings

#[wasm_bindgen]
pub fn degree_days(
    reference: f64,
    clip: bool,
    occupancy: f64,
    t_lo: f64,
    t_hi: f64,
    steps: usize,
) -> Result<String, JsError> {
    degree_day_view(reference, clip, occupancy, t_lo, t_hi, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct ScatterResult(Scatter);

#[wasm_bindgen]
impl ScatterResult {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.0.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn r(&self) -> f64 {
        self.0.r
    }
}

#[wasm_bindgen]
pub fn synthetic_scatter(days: usize, noise_sd: f64, seed: u32, reference: f64) -> Result<ScatterResult, JsError> {
    scatter_view(days, noise_sd, seed as u64, reference)
        .map(ScatterResult)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct TrainingResult(Training);

#[wasm_bindgen]
impl TrainingResult {
    #[wasm_bindgen(getter)]
    pub fn forecast_svg(&self) -> String {
        self.0.forecast_svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn loss_svg(&self) -> String {
        self.0.loss_svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn fit_rmse(&self) -> f64 {
        self.0.fit_rmse
    }

    #[wasm_bindgen(getter)]
    pub fn forecast_mape(&self) -> f64 {
        self.0.forecast_mape
    }

    #[wasm_bindgen(getter)]
    pub fn epochs_run(&self) -> usize {
        self.0.epochs_run
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn train_synthetic(
    days: usize,
    noise_sd: f64,
    seed: u32,
    h1: usize,
    h2: usize,
    h3: usize,
    epochs: usize,
    learning_rate: f64,
) -> Result<TrainingResult, JsError> {
    training_view(days, noise_sd, seed as u64, [h1, h2, h3], epochs, learning_rate)
        .map(TrainingResult)
        .map_err(|e| JsError::new(&e))
}
