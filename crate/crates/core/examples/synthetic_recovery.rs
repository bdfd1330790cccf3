//! Trains the default network on a synthetic hotel series and prints the
//! fit and forecast accuracy.
//!
//! cargo run --release -p hotelwatt --example synthetic_recovery

use std::time::Instant;

use hotelwatt::ann::TrainConfig;
use hotelwatt::dataset::{chronological_split, generate_synthetic, SyntheticParams};
use hotelwatt::features::FeatureSpec;
use hotelwatt::pipeline::fit_model;
use hotelwatt::report::{evaluate, format_correlations};
use hotelwatt::search::format_widths;

fn main() -> hotelwatt::Result<()> {
    let data = generate_synthetic(1200, &SyntheticParams::default(), 42)?;
    let (train, test) = chronological_split(&data, 0.9)?;
    let config = TrainConfig::default();

    let started = Instant::now();
    let (model, result) = fit_model(&train, &FeatureSpec::default(), [32, 16, 8], &config)?;
    let report = evaluate(&model, &train, &test)?;

    println!("widths        {}", format_widths(&report.hidden_sizes));
    println!("epochs run    {} (best {})", result.epochs_run, result.best_epoch);
    println!("fit RMSE      {:.2} kWh", report.fit_rmse);
    println!("forecast MAPE {:.2} %", report.forecast_mape);
    println!("elapsed       {:.1?}", started.elapsed());
    print!("{}", format_correlations(&report.correlations));
    Ok(())
}
