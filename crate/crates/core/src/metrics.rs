//! Accuracy metrics in original kWh units.

use crate::error::{Error, Result};

fn check_pair(predictions: &[f64], actuals: &[f64]) -> Result<()> {
    if predictions.len() != actuals.len() {
        return Err(Error::shape(format!(
            "{} predictions vs {} actuals",
            predictions.len(),
            actuals.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::shape("metric over empty vectors"));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    crate::ann::mse(predictions, actuals).map(f64::sqrt)
}

/// Mean absolute percentage error, in percent. Every actual must be positive.
pub fn mape(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    check_pair(predictions, actuals)?;
    if let Some(bad) = actuals.iter().find(|&&a| a.is_nan() || a <= 0.0) {
        return Err(Error::MetricDomain(format!(
            "MAPE needs strictly positive actuals, found {bad}"
        )));
    }
    let sum: f64 = predictions.iter().zip(actuals).map(|(p, a)| (p - a).abs() / a).sum();
    Ok(100.0 * sum / actuals.len() as f64)
}
