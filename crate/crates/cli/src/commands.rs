use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use hotelwatt::dataset::{
    chronological_split, consumption_to_csv, dataset_to_csv, generate_synthetic, join_on_date, parse_consumption_csv,
    parse_dataset_csv, parse_weather_csv, weather_to_csv, Dataset, SyntheticParams,
};
use hotelwatt::features::{build_features, correlation_table, fit_normalization};
use hotelwatt::model::{load_model, save_model, ModelBundle};
use hotelwatt::pipeline::{bundle_from, fit_model, predict_dataset};
use hotelwatt::report::{evaluate, format_correlations};
use hotelwatt::search::{
    format_widths, search, trial_log_csv, SearchMode, SearchSpace, ValidationPolicy, DEFAULT_WIDTHS,
};
use hotelwatt::svg::forecast_chart;
use hotelwatt_weather::{fetch, ProviderConfig, Source, WeatherQuery};

use crate::args::*;
use crate::error::{CliError, CliResult};

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::FetchWeather(a) => fetch_weather(a),
        Command::Synth(a) => synth(a),
        Command::Features(a) => features(a),
        Command::Train(a) => train(a),
        Command::Search(a) => search_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_cmd(a),
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a temporary file in the target directory so a failed run
/// never leaves a truncated output behind.
fn write_output(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Rejects outputs that would overwrite an input or each other.
fn guard_outputs(inputs: &[PathBuf], outputs: &[&Path]) -> CliResult<()> {
    for (i, out) in outputs.iter().enumerate() {
        if let Some(input) = inputs.iter().find(|p| same_file(p, out)) {
            return Err(CliError::usage(format!(
                "output {} would overwrite input {}",
                out.display(),
                input.display()
            )));
        }
        if outputs[..i].iter().any(|o| same_file(o, out)) {
            return Err(CliError::usage(format!("output {} given twice", out.display())));
        }
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "hotel".into())
}

fn load_dataset(args: &DataArgs) -> CliResult<Dataset> {
    if let Some(path) = &args.data {
        let hotel = args.hotel_id.clone().unwrap_or_else(|| stem(path));
        return Ok(parse_dataset_csv(&read(path)?, &hotel)?);
    }
    let (Some(c), Some(w)) = (&args.consumption, &args.weather) else {
        return Err(CliError::usage("pass --data or both --consumption and --weather"));
    };
    let consumption = parse_consumption_csv(&read(c)?)?;
    let weather = parse_weather_csv(&read(w)?)?;
    let hotel = args.hotel_id.clone().unwrap_or_else(|| stem(c));
    let joined = join_on_date(&hotel, &consumption, &weather)?;
    if !joined.dropped_consumption.is_empty() || !joined.dropped_weather.is_empty() {
        eprintln!(
            "joined {} days; dropped {} consumption and {} weather days without a match",
            joined.dataset.len(),
            joined.dropped_consumption.len(),
            joined.dropped_weather.len()
        );
    }
    Ok(joined.dataset)
}

fn fetch_weather(a: FetchWeatherArgs) -> CliResult<()> {
    let query = WeatherQuery::new(a.location.clone(), a.start, a.end)?;
    if !(a.timeout_secs.is_finite() && a.timeout_secs > 0.0) {
        return Err(CliError::usage("--timeout-secs must be positive"));
    }
    let mut config = ProviderConfig::from_env(a.base_url.clone(), a.cache_dir.clone());
    config.timeout = Duration::from_secs_f64(a.timeout_secs);
    let fetched = fetch(&query, &config)?;
    write_output(&a.out, &weather_to_csv(&fetched.records))?;
    let source = match fetched.source {
        Source::Cache => "cache",
        Source::Network => "network",
    };
    println!(
        "{} days written to {} ({source})",
        fetched.records.len(),
        a.out.display()
    );
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let outputs: Vec<&Path> = [&a.out, &a.consumption_out, &a.weather_out]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect();
    guard_outputs(&[], &outputs)?;
    let d = SyntheticParams::default();
    let params = SyntheticParams {
        hotel_id: a.hotel_id.unwrap_or(d.hotel_id),
        start: a.start.unwrap_or(d.start),
        intercept: a.intercept.unwrap_or(d.intercept),
        rdd_coef: a.rdd_coef.unwrap_or(d.rdd_coef),
        temp_coef: a.temp_coef.unwrap_or(d.temp_coef),
        noise_sd: a.noise_sd.unwrap_or(d.noise_sd),
        reference_temperature: a.reference_temperature.unwrap_or(d.reference_temperature),
        ..d
    };
    let dataset = generate_synthetic(a.days, &params, a.seed).map_err(|e| match e {
        hotelwatt::Error::Argument(_) => CliError::from(e),
        other => CliError::data(other.to_string()),
    })?;
    if let Some(path) = &a.out {
        write_output(path, &dataset_to_csv(&dataset))?;
    }
    let records = dataset.records();
    if let Some(path) = &a.consumption_out {
        let rows: Vec<_> = records.iter().map(|r| r.consumption()).collect();
        write_output(path, &consumption_to_csv(&rows))?;
    }
    if let Some(path) = &a.weather_out {
        let rows: Vec<_> = records.iter().map(|r| r.weather()).collect();
        write_output(path, &weather_to_csv(&rows))?;
    }
    println!(
        "generated {} days from {} to {}",
        dataset.len(),
        dataset.first_date(),
        dataset.last_date()
    );
    Ok(())
}

fn features(a: FeaturesArgs) -> CliResult<()> {
    let spec = a.spec.spec()?;
    let mut outputs: Vec<&Path> = vec![&a.out];
    outputs.extend(a.joined_out.as_deref());
    guard_outputs(&a.data.inputs(), &outputs)?;
    let dataset = load_dataset(&a.data)?;
    let matrix = build_features(&dataset, &spec)?;
    write_output(&a.out, &matrix.to_csv())?;
    if let Some(path) = &a.joined_out {
        write_output(path, &dataset_to_csv(&dataset))?;
    }
    print!("{}", format_correlations(&correlation_table(&matrix)));
    Ok(())
}

fn loss_csv(train: &[f64], validation: &[f64]) -> String {
    let mut out = String::from("epoch,train_mse,val_mse\n");
    for (i, t) in train.iter().enumerate() {
        let v = validation.get(i).map(f64::to_string).unwrap_or_default();
        out.push_str(&format!("{},{t},{v}\n", i + 1));
    }
    out
}

fn default_loss_path(model: &Path) -> PathBuf {
    let mut name = model.file_stem().unwrap_or_default().to_os_string();
    name.push(".loss.csv");
    model.with_file_name(name)
}

/// Prints fit and forecast accuracy for a freshly trained bundle.
fn print_scores(bundle: &ModelBundle, train: &Dataset, test: &Dataset) -> CliResult<()> {
    let report = evaluate(bundle, train, test)?;
    println!("fit RMSE (train, {} days): {:.4} kWh", train.len(), report.fit_rmse);
    println!("holdout MAPE (test, {} days): {:.4}%", test.len(), report.forecast_mape);
    Ok(())
}

fn train(a: TrainArgs) -> CliResult<()> {
    let spec = a.spec.spec()?;
    let config = a.train.config()?;
    let hidden = parse_hidden(&a.hidden)?;
    let fraction = check_train_fraction(a.train_fraction)?;
    let loss_out = a.loss_out.clone().unwrap_or_else(|| default_loss_path(&a.model_out));
    guard_outputs(&a.data.inputs(), &[&a.model_out, &loss_out])?;

    let dataset = load_dataset(&a.data)?;
    let (train_set, test_set) = chronological_split(&dataset, fraction)?;
    let (bundle, result) = fit_model(&train_set, &spec, hidden, &config)?;
    write_output(&a.model_out, &save_model(&bundle))?;
    write_output(&loss_out, &loss_csv(&result.loss_history, &result.validation_history))?;
    println!(
        "trained {} for {} epochs (best epoch {})",
        format_widths(&hidden),
        result.epochs_run,
        result.best_epoch
    );
    print_scores(&bundle, &train_set, &test_set)
}

fn search_cmd(a: SearchArgs) -> CliResult<()> {
    let spec = a.spec.spec()?;
    let base = a.train.config()?;
    let fraction = check_train_fraction(a.train_fraction)?;
    let all = match &a.widths {
        Some(list) => parse_widths(list)?,
        None => DEFAULT_WIDTHS.to_vec(),
    };
    let layer = |own: &Option<String>| -> CliResult<Vec<usize>> {
        match own {
            Some(list) => parse_widths(list),
            None => Ok(all.clone()),
        }
    };
    let space = SearchSpace {
        widths: [layer(&a.h1)?, layer(&a.h2)?, layer(&a.h3)?],
        mode: match a.mode {
            ModeArg::Exhaustive => SearchMode::Exhaustive,
            ModeArg::Random => SearchMode::Random { trials: a.trials },
        },
        seed: base.seed,
        base,
    };
    space.validate().map_err(|e| CliError::from(e).into_usage())?;
    let jobs = match a.jobs {
        Some(0) => return Err(CliError::usage("--jobs must be at least 1")),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    guard_outputs(&a.data.inputs(), &[&a.log_out, &a.model_out])?;

    let dataset = load_dataset(&a.data)?;
    let (train_set, test_set) = chronological_split(&dataset, fraction)?;
    let raw = build_features(&train_set, &spec)?;
    let normalized = fit_normalization(&raw)?.apply(&raw)?;
    let policy = ValidationPolicy {
        tail_fraction: space.base.validation_fraction,
    };
    let outcome = search(&space, &normalized, policy, jobs)?;
    let config = hotelwatt::ann::TrainConfig {
        seed: outcome.best.seed,
        ..space.base.clone()
    };
    let bundle = bundle_from(outcome.model.params.clone(), &train_set, &spec, &config)?;
    write_output(&a.log_out, &trial_log_csv(&outcome.trials))?;
    write_output(&a.model_out, &save_model(&bundle))?;
    println!(
        "{} trials; best {} (validation MSE {:.6})",
        outcome.trials.len(),
        format_widths(&outcome.best.hidden_sizes),
        outcome.best.val_mse
    );
    print_scores(&bundle, &train_set, &test_set)
}

fn load_bundle(path: &Path) -> CliResult<ModelBundle> {
    Ok(load_model(&read(path)?)?)
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let mut inputs = a.data.inputs();
    inputs.push(a.model.clone());
    guard_outputs(&inputs, &[&a.out])?;
    let bundle = load_bundle(&a.model)?;
    let dataset = load_dataset(&a.data)?;
    let predictions = predict_dataset(&bundle, &dataset)?;
    let mut out = String::from("date,predicted_kwh\n");
    for (date, p) in dataset.dates().zip(&predictions) {
        out.push_str(&format!("{date},{p}\n"));
    }
    write_output(&a.out, &out)?;
    println!("{} predictions written to {}", predictions.len(), a.out.display());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> CliResult<()> {
    let fraction = check_train_fraction(a.train_fraction)?;
    let mut inputs = a.data.inputs();
    inputs.push(a.model.clone());
    let mut outputs: Vec<&Path> = vec![&a.report_out, &a.forecast_out];
    outputs.extend(a.svg.as_deref());
    guard_outputs(&inputs, &outputs)?;

    let bundle = load_bundle(&a.model)?;
    let dataset = load_dataset(&a.data)?;
    let (train_set, test_set) = chronological_split(&dataset, fraction)?;
    let report = evaluate(&bundle, &train_set, &test_set)?;
    write_output(&a.report_out, &report.to_json())?;
    write_output(&a.forecast_out, &report.forecast_csv())?;
    if let Some(path) = &a.svg {
        let title = format!("{}: forecast vs actual", report.hotel_id);
        write_output(path, &forecast_chart(&title, &report.forecast))?;
    }
    println!("model {}", format_widths(&report.hidden_sizes));
    println!(
        "fit RMSE ({}, {} days): {:.4} kWh",
        report.fit_split, report.train_dates.days, report.fit_rmse
    );
    println!(
        "holdout MAPE ({}, {} days): {:.4}%",
        report.forecast_split, report.test_dates.days, report.forecast_mape
    );
    print!("{}", format_correlations(&report.correlations));
    Ok(())
}
