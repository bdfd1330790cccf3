use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use hotelwatt::dataset::parse_dataset_csv;
use hotelwatt_weather::{WeatherQuery, API_KEY_ENV};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn hotelwatt(dir: &Path, args: &[&str]) -> Run {
    hotelwatt_env(dir, args, &[])
}

fn hotelwatt_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hotelwatt"));
    cmd.current_dir(dir).args(args).env_remove(API_KEY_ENV);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ok(run: Run) -> Run {
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    run
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Writes a noiseless synthetic dataset as d.csv plus split c.csv / w.csv.
fn noiseless(dir: &Path, days: &str) {
    ok(hotelwatt(
        dir,
        &[
            "synth",
            "--days",
            days,
            "--seed",
            "5",
            "--noise-sd",
            "0",
            "--out",
            "d.csv",
            "--consumption-out",
            "c.csv",
            "--weather-out",
            "w.csv",
        ],
    ));
}

/// Two-pass Pearson r, written out independently of the library.
fn oracle_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn printed_value(stdout: &str, prefix: &str) -> f64 {
    let line = stdout
        .lines()
        .find(|l| l.starts_with(prefix))
        .unwrap_or_else(|| panic!("{prefix} in {stdout}"));
    let value = line.rsplit(": ").next().unwrap();
    value.trim_end_matches(['%', ' ', 'k', 'W', 'h']).parse().unwrap()
}

#[test]
fn help_and_usage_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hotelwatt(dir.path(), &["--help"]).code, 0);
    assert_eq!(hotelwatt(dir.path(), &["--version"]).code, 0);
    assert_eq!(hotelwatt(dir.path(), &[]).code, 1);
    assert_eq!(hotelwatt(dir.path(), &["frobnicate"]).code, 1);
    assert_eq!(hotelwatt(dir.path(), &["train", "--no-such-flag"]).code, 1);
    let names = hotelwatt(dir.path(), &["--help"]).stdout;
    for sub in [
        "fetch-weather",
        "synth",
        "features",
        "train",
        "search",
        "predict",
        "evaluate",
    ] {
        assert!(names.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn features_correlation_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    noiseless(d, "200");
    let run = ok(hotelwatt(
        d,
        &[
            "features",
            "--consumption",
            "c.csv",
            "--weather",
            "w.csv",
            "--features",
            "RDD",
            "--out",
            "f.csv",
        ],
    ));
    let ds = parse_dataset_csv(&read(d, "d.csv"), "h").unwrap();
    let x: Vec<f64> = ds
        .records()
        .iter()
        .map(|r| (r.temp_mean - 24.0).max(0.0) * r.occupancy_rate)
        .collect();
    let y: Vec<f64> = ds.records().iter().map(|r| r.energy_kwh).collect();
    let expected = oracle_r(&x, &y);
    assert!(expected > 0.9);
    let printed: f64 = run
        .stdout
        .lines()
        .nth(1)
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((printed - expected).abs() <= 5e-4, "{printed} vs {expected}");

    let csv = read(d, "f.csv");
    assert_eq!(csv.lines().next().unwrap(), "date,RDD,energy_kwh");
    assert_eq!(csv.lines().count(), 201);

    ok(hotelwatt(
        d,
        &[
            "features",
            "--consumption",
            "c.csv",
            "--weather",
            "w.csv",
            "--out",
            "f2.csv",
            "--joined-out",
            "j.csv",
        ],
    ));
    assert_eq!(
        parse_dataset_csv(&read(d, "j.csv"), "h").unwrap().records(),
        ds.records()
    );
}

#[test]
fn constant_occupancy_reports_na() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut c = String::from("date,energy_kwh,occupancy_rate\n");
    let mut w = String::from("date,temp_mean,temp_max,temp_min\n");
    for day in 1..=20 {
        c.push_str(&format!("2012-06-{day:02},{},0.7\n", 900 + day * 3));
        w.push_str(&format!("2012-06-{day:02},{},31,22\n", 25 + day % 4));
    }
    std::fs::write(d.join("c.csv"), c).unwrap();
    std::fs::write(d.join("w.csv"), w).unwrap();
    let run = ok(hotelwatt(
        d,
        &[
            "features",
            "--consumption",
            "c.csv",
            "--weather",
            "w.csv",
            "--features",
            "ORD,temp_mean",
            "--out",
            "f.csv",
        ],
    ));
    let ord = run.stdout.lines().find(|l| l.starts_with("ORD")).unwrap();
    assert!(ord.ends_with("n/a"), "{ord}");
}

#[test]
fn empty_join_and_bad_rows_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.csv"), "date,energy_kwh,occupancy_rate\n2012-01-01,100,0.5\n").unwrap();
    std::fs::write(
        d.join("w.csv"),
        "date,temp_mean,temp_max,temp_min\n2013-01-01,25,30,20\n",
    )
    .unwrap();
    let run = hotelwatt(
        d,
        &[
            "features",
            "--consumption",
            "c.csv",
            "--weather",
            "w.csv",
            "--out",
            "f.csv",
        ],
    );
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert!(!d.join("f.csv").exists());

    std::fs::write(d.join("c.csv"), "date,energy_kwh,occupancy_rate\n2013-01-01,100,1.5\n").unwrap();
    let run = hotelwatt(
        d,
        &[
            "features",
            "--consumption",
            "c.csv",
            "--weather",
            "w.csv",
            "--out",
            "f.csv",
        ],
    );
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("row"), "{}", run.stderr);
}

#[test]
fn train_recovers_noiseless_generator_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    noiseless(d, "400");
    let args = [
        "train",
        "--data",
        "d.csv",
        "--hidden",
        "8,8,8",
        "--epochs",
        "400",
        "--patience",
        "0",
        "--seed",
        "2",
    ];
    let first = ok(hotelwatt(d, &[&args[..], &["--model-out", "a/m.json"]].concat()));
    let second = ok(hotelwatt(d, &[&args[..], &["--model-out", "b/m.json"]].concat()));
    assert_eq!(first.stdout, second.stdout);
    let mape = printed_value(&first.stdout, "holdout MAPE");
    assert!(mape < 1.0, "MAPE {mape}");
    assert_eq!(read(d, "a/m.json"), read(d, "b/m.json"));
    let loss = read(d, "a/m.loss.csv");
    assert_eq!(loss, read(d, "b/m.loss.csv"));
    assert_eq!(loss.lines().count(), 401);
    assert!(loss.starts_with("epoch,train_mse,val_mse\n1,"));

    // The model predicts its own training file within 1%.
    ok(hotelwatt(
        d,
        &["predict", "--model", "a/m.json", "--data", "d.csv", "--out", "p.csv"],
    ));
    let ds = parse_dataset_csv(&read(d, "d.csv"), "h").unwrap();
    let preds = read(d, "p.csv");
    let mut lines = preds.lines();
    assert_eq!(lines.next(), Some("date,predicted_kwh"));
    for (line, r) in lines.zip(ds.records()) {
        let (date, p) = line.split_once(',').unwrap();
        assert_eq!(date, r.date.to_string());
        let p: f64 = p.parse().unwrap();
        assert!(
            (p - r.energy_kwh).abs() / r.energy_kwh < 0.01,
            "{date}: {p} vs {}",
            r.energy_kwh
        );
    }
}

#[test]
fn train_argument_and_training_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    noiseless(d, "60");
    for bad in [
        vec!["--train-fraction", "1.0"],
        vec!["--train-fraction", "0"],
        vec!["--hidden", "4,4"],
        vec!["--learning-rate", "-1"],
        vec!["--batch-size", "0"],
        vec!["--features", ""],
        vec!["--reference-temperature", "NaN"],
    ] {
        let run = hotelwatt(
            d,
            &[&["train", "--data", "d.csv", "--model-out", "m.json"][..], &bad].concat(),
        );
        assert_eq!(run.code, 1, "{bad:?}: {}", run.stderr);
        assert!(!d.join("m.json").exists());
    }
    // Unknown names are looked up as extra weather columns, so this is a data error.
    let run = hotelwatt(
        d,
        &[
            "train",
            "--data",
            "d.csv",
            "--model-out",
            "m.json",
            "--features",
            "nonsense",
        ],
    );
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("nonsense"), "{}", run.stderr);

    let run = hotelwatt(
        d,
        &[
            "train",
            "--data",
            "d.csv",
            "--model-out",
            "m.json",
            "--learning-rate",
            "1e6",
            "--hidden",
            "4,4,4",
        ],
    );
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert!(run.stderr.contains("epoch"), "{}", run.stderr);
    assert!(!d.join("m.json").exists());
}

#[test]
fn search_writes_ranked_log_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    noiseless(d, "120");
    let base = [
        "search",
        "--data",
        "d.csv",
        "--widths",
        "1,2",
        "--mode",
        "exhaustive",
        "--epochs",
        "30",
        "--seed",
        "9",
    ];
    let a = ok(hotelwatt(
        d,
        &[
            &base[..],
            &["--jobs", "1", "--log-out", "a.csv", "--model-out", "a.json"],
        ]
        .concat(),
    ));
    let b = ok(hotelwatt(
        d,
        &[
            &base[..],
            &["--jobs", "4", "--log-out", "b.csv", "--model-out", "b.json"],
        ]
        .concat(),
    ));
    let log = read(d, "a.csv");
    assert_eq!(log, read(d, "b.csv"));
    assert_eq!(read(d, "a.json"), read(d, "b.json"));
    assert_eq!(log.lines().next(), Some("h1,h2,h3,val_mse,seed,rank"));
    assert_eq!(log.lines().count(), 9);
    let ranks: Vec<&str> = log.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(ranks, ["1", "2", "3", "4", "5", "6", "7", "8"]);
    let best = log
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .take(3)
        .collect::<Vec<_>>()
        .join("; ");
    assert!(a.stdout.contains(&format!("[{best}]")), "{}", a.stdout);
    assert_eq!(a.stdout, b.stdout);

    let run = hotelwatt(
        d,
        &[
            "search",
            "--data",
            "d.csv",
            "--h2",
            "",
            "--log-out",
            "x.csv",
            "--model-out",
            "x.json",
        ],
    );
    assert_eq!(run.code, 1);
    let run = hotelwatt(
        d,
        &[
            "search",
            "--data",
            "d.csv",
            "--mode",
            "random",
            "--trials",
            "0",
            "--log-out",
            "x.csv",
            "--model-out",
            "x.json",
        ],
    );
    assert_eq!(run.code, 1);
    let run = hotelwatt(
        d,
        &[
            "search",
            "--data",
            "d.csv",
            "--widths",
            "2",
            "--learning-rate",
            "1e6",
            "--log-out",
            "x.csv",
            "--model-out",
            "x.json",
        ],
    );
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert!(!d.join("x.csv").exists());
}

#[test]
fn evaluate_writes_one_row_per_test_day_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    noiseless(d, "150");
    ok(hotelwatt(
        d,
        &[
            "train",
            "--data",
            "d.csv",
            "--hidden",
            "4,4,4",
            "--epochs",
            "60",
            "--model-out",
            "m.json",
        ],
    ));
    let eval = [
        "evaluate",
        "--model",
        "m.json",
        "--data",
        "d.csv",
        "--train-fraction",
        "0.8",
    ];
    let first = ok(hotelwatt(
        d,
        &[
            &eval[..],
            &["--report-out", "r1.json", "--forecast-out", "f1.csv", "--svg", "c1.svg"],
        ]
        .concat(),
    ));
    ok(hotelwatt(
        d,
        &[
            &eval[..],
            &["--report-out", "r2.json", "--forecast-out", "f2.csv", "--svg", "c2.svg"],
        ]
        .concat(),
    ));
    let forecast = read(d, "f1.csv");
    assert_eq!(forecast.lines().next(), Some("date,actual_kwh,predicted_kwh"));
    assert_eq!(forecast.lines().count(), 1 + 30);
    assert_eq!(forecast, read(d, "f2.csv"));
    assert_eq!(read(d, "r1.json"), read(d, "r2.json"));
    let svg = read(d, "c1.svg");
    assert!(svg.starts_with("<svg") && svg.contains("predicted"));
    assert_eq!(svg, read(d, "c2.svg"));
    let report: serde_json::Value = serde_json::from_str(&read(d, "r1.json")).unwrap();
    assert_eq!(report["fit_split"], "train");
    assert_eq!(report["forecast_split"], "test");
    assert_eq!(report["test_dates"]["days"], 30);
    assert!(first.stdout.contains("holdout MAPE"));

    ok(hotelwatt(
        d,
        &[&eval[..], &["--report-out", "r3.json", "--forecast-out", "f3.csv"]].concat(),
    ));
    assert!(!d.join("c3.svg").exists());
}

#[test]
fn model_feature_mismatch_names_the_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    noiseless(d, "80");
    ok(hotelwatt(
        d,
        &[
            "train",
            "--data",
            "d.csv",
            "--hidden",
            "2,2,2",
            "--epochs",
            "5",
            "--model-out",
            "m.json",
        ],
    ));
    let text = read(d, "c.csv");
    let stripped: String = text
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    std::fs::write(d.join("c.csv"), stripped).unwrap();
    let run = hotelwatt(
        d,
        &[
            "predict",
            "--model",
            "m.json",
            "--consumption",
            "c.csv",
            "--weather",
            "w.csv",
            "--out",
            "p.csv",
        ],
    );
    assert_ne!(run.code, 0);
    assert!(run.stderr.contains("occupancy_rate"), "{}", run.stderr);

    let run = hotelwatt(
        d,
        &[
            "train",
            "--data",
            "d.csv",
            "--features",
            "guests",
            "--model-out",
            "g.json",
        ],
    );
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("guests"), "{}", run.stderr);
}

#[test]
fn inputs_are_not_modified() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    noiseless(d, "60");
    let before = read(d, "d.csv");
    ok(hotelwatt(d, &["features", "--data", "d.csv", "--out", "f.csv"]));
    ok(hotelwatt(
        d,
        &[
            "train",
            "--data",
            "d.csv",
            "--epochs",
            "3",
            "--hidden",
            "2,2,2",
            "--model-out",
            "m.json",
        ],
    ));
    let model = read(d, "m.json");
    ok(hotelwatt(
        d,
        &[
            "evaluate",
            "--model",
            "m.json",
            "--data",
            "d.csv",
            "--report-out",
            "r.json",
            "--forecast-out",
            "f.csv",
        ],
    ));
    assert_eq!(read(d, "d.csv"), before);
    assert_eq!(read(d, "m.json"), model);
    let run = hotelwatt(
        d,
        &["train", "--data", "d.csv", "--epochs", "3", "--model-out", "d.csv"],
    );
    assert_eq!(run.code, 1);
    assert_eq!(read(d, "d.csv"), before);
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    noiseless(d, "60");
    std::fs::write(
        d.join("run.json"),
        r#"{"data": "d.csv", "hidden": [3, 2, 2], "epochs": 50, "patience": 0, "model_out": "m.json"}"#,
    )
    .unwrap();
    let run = ok(hotelwatt(d, &["train", "--config", "run.json", "--epochs", "7"]));
    assert!(run.stdout.contains("[3; 2; 2] for 7 epochs"), "{}", run.stdout);
    assert_eq!(read(d, "m.loss.csv").lines().count(), 8);

    std::fs::write(
        d.join("bad.json"),
        r#"{"data": "d.csv", "epochz": 5, "model_out": "m.json"}"#,
    )
    .unwrap();
    assert_eq!(hotelwatt(d, &["train", "--config", "bad.json"]).code, 1);
    assert_eq!(hotelwatt(d, &["train", "--config", "missing.json"]).code, 2);
}

/// Serves one canned HTTP response per connection and counts requests.
fn stub(status: u16, body: &'static str) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/timeline", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            while reader.read_line(&mut line).unwrap_or(0) > 0 && line != "\r\n" {
                line.clear();
            }
            counter.fetch_add(1, Ordering::SeqCst);
            let response = format!(
                "HTTP/1.1 {status} X\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (url, hits)
}

const DAYS: &str = r#"{"days":[
 {"datetime":"2011-07-01","temp":28.1,"tempmax":32.0,"tempmin":24.4,"humidity":78.5},
 {"datetime":"2011-07-02","temp":28.6,"tempmax":32.9,"tempmin":24.0,"humidity":75.1},
 {"datetime":"2011-07-03","temp":27.9,"tempmax":31.5,"tempmin":24.8,"humidity":80.0}]}"#;

fn fetch_args<'a>(url: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "fetch-weather",
        "--location",
        "Cienfuegos",
        "--start",
        "2011-07-01",
        "--end",
        "2011-07-03",
        "--out",
        out,
        "--cache-dir",
        "cache",
        "--base-url",
        url,
    ]
}

#[test]
fn fetch_weather_network_then_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (url, hits) = stub(200, DAYS);
    let run = hotelwatt_env(d, &fetch_args(&url, "w1.csv"), &[(API_KEY_ENV, "k")]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.starts_with("3 days"), "{}", run.stdout);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    // Warm cache: no key, no request.
    let run = ok(hotelwatt(d, &fetch_args(&url, "w2.csv")));
    assert!(run.stdout.contains("cache"));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    let text = read(d, "w2.csv");
    assert_eq!(text, read(d, "w1.csv"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn fetch_weather_reads_pre_seeded_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let date = |s: &str| chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
    let key = WeatherQuery::new("Cienfuegos", date("2011-07-01"), date("2011-07-03"))
        .unwrap()
        .cache_key();
    std::fs::create_dir(d.join("cache")).unwrap();
    std::fs::write(
        d.join("cache").join(format!("{key}.csv")),
        "date,temp_mean,temp_max,temp_min\n2011-07-01,28,31,24\n2011-07-02,28,31,24\n2011-07-03,28,31,24\n",
    )
    .unwrap();
    ok(hotelwatt(d, &fetch_args("http://127.0.0.1:9/unused", "w.csv")));
    assert_eq!(read(d, "w.csv").lines().count(), 4);
}

#[test]
fn fetch_weather_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (url, hits) = stub(401, "denied");

    let run = hotelwatt(d, &fetch_args(&url, "w.csv"));
    assert_eq!(run.code, 4);
    assert!(run.stderr.contains(API_KEY_ENV), "{}", run.stderr);

    let mut args = fetch_args(&url, "w.csv");
    args[4] = "2011-08-01";
    let run = hotelwatt_env(d, &args, &[(API_KEY_ENV, "k")]);
    assert_eq!(run.code, 1, "{}", run.stderr);
    assert_eq!(hits.load(Ordering::SeqCst), 0);

    let run = hotelwatt_env(d, &fetch_args(&url, "w.csv"), &[(API_KEY_ENV, "k")]);
    assert_eq!(run.code, 4);
    assert!(run.stderr.contains("401"), "{}", run.stderr);
    assert!(!d.join("w.csv").exists());
    assert_eq!(hits.load(Ordering::SeqCst), 1);

    let run = hotelwatt_env(
        d,
        &fetch_args("http://127.0.0.1:9/closed", "w.csv"),
        &[(API_KEY_ENV, "k")],
    );
    assert_eq!(run.code, 4, "{}", run.stderr);
}
