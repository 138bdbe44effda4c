use std::fs;
use std::io::Write;

use chrono::NaiveDate;
use crashlens::data_io::{export_fit, export_series, ingest_csv, read_csv, sidecar_path, CsvOptions, DateWindow};
use crashlens::fitting::{fit, FitSpec, Interval};
use crashlens::model::LpplParams;
use crashlens::simulation::gen_lppl_series;
use crashlens::{Error, PriceSeries};

fn read(text: &str) -> crashlens::Result<PriceSeries> {
    read_csv(text.as_bytes(), &CsvOptions::default())
}

#[test]
fn log_prices_of_powers_of_e() {
    let e = std::f64::consts::E;
    let text = format!("date,close\n2020-01-01,{}\n2020-01-02,{}\n2020-01-03,{}\n", e, e * e, e * e * e);
    let s = read(&text).unwrap();
    assert_eq!(s.times(), &[0.0, 1.0, 2.0]);
    for (got, want) in s.log_prices().iter().zip([1.0, 2.0, 3.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    assert_eq!(s.label(2), Some("2020-01-03"));
}

#[test]
fn zero_price_names_its_row() {
    let err = read("date,close\n2020-01-01,10\n2020-01-02,0\n2020-01-03,11\n").unwrap_err();
    match err {
        Error::Row { row, .. } => assert_eq!(row, 3),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(read("date,close\n2020-01-01,-2\n").unwrap_err(), Error::Row { row: 2, .. }));
}

#[test]
fn missing_column_and_bad_date() {
    assert!(matches!(read("date,price\n2020-01-01,10\n").unwrap_err(), Error::MissingColumn(c) if c == "close"));
    assert!(matches!(read("day,close\n2020-01-01,10\n").unwrap_err(), Error::MissingColumn(c) if c == "date"));
    assert!(matches!(read("date,close\n2020-01-01,10\n01/02/2020,11\n").unwrap_err(), Error::Row { row: 3, .. }));
    assert!(matches!(read("date,close\n2020-01-01,abc\n").unwrap_err(), Error::Row { row: 2, .. }));
    assert!(matches!(read("date,close\n2020-01-01,1\n2020-01-01,2\n").unwrap_err(), Error::Row { .. }));
}

#[test]
fn unsorted_rows_are_ordered_by_date() {
    let s = read("date,close\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n").unwrap();
    assert_eq!(s.labels().unwrap(), &["2020-01-01", "2020-01-02", "2020-01-03"]);
    assert!((s.log_prices()[2] - 3f64.ln()).abs() < 1e-15);
}

#[test]
fn window_filters_and_rebases() {
    let mut text = String::from("Date,Adj Close\n");
    for d in 1..=20 {
        text.push_str(&format!("2021-03-{d:02},{}\n", 100 + d));
    }
    let opts = CsvOptions {
        date_column: Some("Date".into()),
        price_column: "Adj Close".into(),
        window: DateWindow { from: NaiveDate::from_ymd_opt(2021, 3, 5), to: NaiveDate::from_ymd_opt(2021, 3, 9) },
    };
    let s = read_csv(text.as_bytes(), &opts).unwrap();
    assert_eq!(s.times(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
    assert_eq!(s.label(0), Some("2021-03-05"));
    assert!((s.log_prices()[0] - 105f64.ln()).abs() < 1e-15);

    let empty =
        CsvOptions { window: DateWindow { from: NaiveDate::from_ymd_opt(2030, 1, 1), to: None }, ..opts.clone() };
    assert!(matches!(read_csv(text.as_bytes(), &empty).unwrap_err(), Error::EmptyWindow));
}

#[test]
fn zero_price_outside_window_is_ignored() {
    let opts = CsvOptions {
        window: DateWindow { from: NaiveDate::from_ymd_opt(2020, 1, 2), to: None },
        ..CsvOptions::default()
    };
    let s = read_csv("date,close\n2020-01-01,0\n2020-01-02,5\n".as_bytes(), &opts).unwrap();
    assert_eq!(s.len(), 1);
}

#[test]
fn dateless_tables_keep_file_order() {
    let opts = CsvOptions { date_column: None, ..CsvOptions::default() };
    let s = read_csv("close\n3\n1\n2\n".as_bytes(), &opts).unwrap();
    assert!(s.labels().is_none());
    assert!((s.log_prices()[0] - 3f64.ln()).abs() < 1e-15);
}

#[test]
fn export_ingest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let labels: Vec<String> = (0..500).map(|i| (start + chrono::Days::new(i)).format("%Y-%m-%d").to_string()).collect();
    let log_prices: Vec<f64> = (0..500).map(|i| 4.0 + (i as f64 * 0.37).sin() * 0.3).collect();
    let original = PriceSeries::new((0..500).map(f64::from).collect(), log_prices, Some(labels)).unwrap();

    export_series(&original, &path).unwrap();
    let back = ingest_csv(&path, &CsvOptions::default()).unwrap();
    assert_eq!(back.len(), 500);
    assert_eq!(back.times(), original.times());
    assert_eq!(back.labels(), original.labels());
    for (a, b) in back.log_prices().iter().zip(original.log_prices()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn export_fit_writes_csv_and_sidecar() {
    let truth = LpplParams::new(8.8106, -0.0165957, -0.0444881, 0.554188, 672.319, 0.0, 19.5637).unwrap();
    let series = gen_lppl_series(&truth, 0.0, 408.0, 0.0, 0).unwrap();
    let mut spec = FitSpec::for_series(&series);
    spec.bounds.t_c = Interval::new(599.0, 700.0);
    spec.multistart = 4;
    let result = fit(&series, &spec, None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fit.csv");
    export_fit(&series, &result, &path).unwrap();

    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["time_index", "date_label", "observed_log_price", "fitted_log_price", "residual"]
    );
    let mut sse = 0.0;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let residual: f64 = rec[4].parse().unwrap();
        assert!(residual.abs() < 1e-4);
        sse += residual * residual;
        rows += 1;
    }
    assert_eq!(rows, 409);
    assert!((sse - result.sse).abs() <= 1e-9);

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(summary["df"], 402);
    assert_eq!(summary["n_observations"], 409);
}

#[test]
fn ingest_reports_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(ingest_csv(dir.path().join("nope.csv"), &CsvOptions::default()).unwrap_err(), Error::Io(_)));
    let path = dir.path().join("ts.csv");
    let mut f = fs::File::create(&path).unwrap();
    writeln!(f, "date,close\n2020-01-01T09:30:00Z,10\n2020-01-01T16:00:00Z,11").unwrap();
    let s = ingest_csv(&path, &CsvOptions::default()).unwrap();
    assert_eq!(s.len(), 2);
}
