mod common;

use std::fs::File;
use std::path::PathBuf;

use anonbench_core::protocol::{read_table3, read_table5, ListenerProfile};
use anonbench_service::report::{generate_report, Analysis, MatrixCell, MeanSd, Measure, Report, ReportInput};
use common::{roster, run_session, Fixture};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn fixture_input(with_roster: bool) -> ReportInput {
    let t3 = read_table3(File::open(fixture("table3.csv")).unwrap()).unwrap();
    let t5 = read_table5(File::open(fixture("table5.csv")).unwrap()).unwrap();
    let roster: Vec<ListenerProfile> = if with_roster {
        serde_json::from_reader(File::open(fixture("listeners.json")).unwrap()).unwrap()
    } else {
        Vec::new()
    };
    ReportInput::from_tables(t3, t5, roster)
}

fn fixture_report() -> Report {
    generate_report(&fixture_input(true)).unwrap()
}

/// Published listener averages and summary rows: per measure, the ten
/// listener averages then (label, six group cells, overall).
struct Published {
    measure: Measure,
    listeners: [&'static str; 10],
    summary: [(&'static str, [&'static str; 6], &'static str); 3],
}

const PUBLISHED: [Published; 4] = [
    Published {
        measure: Measure::ZeroShot,
        listeners: ["81 ± 6", "94 ± 7", "79 ± 7", "97 ± 4", "86 ± 13", "94 ± 6", "89 ± 8", "98 ± 3", "95 ± 5", "93 ± 5"],
        summary: [
            ("Avg - non-native", ["85 ± 16", "84 ± 13", "93 ± 8", "93 ± 5", "86 ± 5", "83 ± 10"], "87 ± 10"),
            ("Avg - native", ["92 ± 10", "97 ± 4", "96 ± 3", "98 ± 3", "91 ± 3", "89 ± 7"], "94 ± 6"),
            ("Avg - all", ["88 ± 13", "90 ± 11", "95 ± 6", "96 ± 4", "89 ± 5", "86 ± 9"], "91 ± 9"),
        ],
    },
    Published {
        measure: Measure::FewShot,
        listeners: ["86 ± 14", "96 ± 5", "82 ± 9", "97 ± 3", "90 ± 11", "97 ± 3", "88 ± 5", "98 ± 3", "96 ± 3", "96 ± 3"],
        summary: [
            ("Avg - non-native", ["85 ± 17", "85 ± 13", "93 ± 10", "97 ± 3", "91 ± 3", "89 ± 9"], "90 ± 10"),
            ("Avg - native", ["97 ± 4", "98 ± 3", "95 ± 7", "97 ± 3", "92 ± 3", "91 ± 7"], "95 ± 5"),
            ("Avg - all", ["91 ± 13", "92 ± 11", "94 ± 8", "97 ± 3", "92 ± 3", "90 ± 8"], "93 ± 8"),
        ],
    },
    Published {
        measure: Measure::Orig,
        listeners: ["89 ± 4", "95 ± 7", "77 ± 11", "67 ± 8", "78 ± 4", "97 ± 3", "75 ± 7", "88 ± 4", "95 ± 5", "70 ± 5"],
        summary: [
            ("Avg - non-native", ["78 ± 16", "85 ± 12", "82 ± 14", "84 ± 11", "79 ± 12", "79 ± 12"], "81 ± 12"),
            ("Avg - native", ["83 ± 12", "90 ± 11", "85 ± 14", "90 ± 11", "80 ± 12", "82 ± 14"], "85 ± 12"),
            ("Avg - all", ["80 ± 14", "87 ± 11", "83 ± 13", "87 ± 11", "80 ± 11", "81 ± 12"], "83 ± 12"),
        ],
    },
    Published {
        measure: Measure::Anon,
        listeners: ["64 ± 5", "71 ± 3", "61 ± 12", "40 ± 5", "57 ± 3", "74 ± 7", "45 ± 4", "69 ± 4", "65 ± 3", "45 ± 3"],
        summary: [
            ("Avg - non-native", ["54 ± 10", "57 ± 8", "56 ± 14", "60 ± 13", "61 ± 12", "63 ± 18"], "59 ± 12"),
            ("Avg - native", ["54 ± 13", "60 ± 13", "64 ± 13", "62 ± 15", "57 ± 14", "61 ± 16"], "60 ± 13"),
            ("Avg - all", ["54 ± 11", "58 ± 11", "60 ± 13", "61 ± 14", "59 ± 12", "62 ± 16"], "59 ± 13"),
        ],
    },
];

/// The published summaries were computed from unrounded per-listener scores,
/// while the fixture holds the printed integers, so a display may differ from
/// the published one by a unit in either the mean or the SD.
fn agrees(got: &MeanSd, published: &str) -> bool {
    let (m, s) = published.split_once(" ± ").unwrap();
    let near = |x: f64, shown: &str| (x.round() - shown.parse::<f64>().unwrap()).abs() <= 1.0;
    near(got.mean, m) && near(got.sd.unwrap(), s)
}

#[test]
fn fixture_tables_reproduce_published_averages() {
    let report = fixture_report();
    let sections: Vec<_> = report.accuracy.iter().chain(&report.quality).collect();
    for published in &PUBLISHED {
        let m = published.measure;
        let section = sections.iter().find(|s| s.measure == m).unwrap();
        for (row, want) in section.table.rows.iter().zip(published.listeners) {
            let got = row.average.as_ref().unwrap();
            assert!(agrees(got, want), "{m:?} {}: {} vs {want}", row.listener, got.display);
        }
        assert_eq!(section.table.summary.len(), 3);
        for (row, (label, cells, overall)) in section.table.summary.iter().zip(&published.summary) {
            assert_eq!(row.label, *label);
            for (got, want) in row.per_group.iter().zip(cells) {
                let got = got.as_ref().unwrap();
                assert!(agrees(got, want), "{m:?} {label}: {} vs {want}", got.display);
            }
            let got = row.overall.as_ref().unwrap();
            assert!(agrees(got, overall), "{m:?} {label}: {} vs {overall}", got.display);
        }
    }
    let all = |m: Measure| {
        let s = sections.iter().find(|s| s.measure == m).unwrap();
        s.table.summary.last().unwrap().overall.as_ref().unwrap().display.clone()
    };
    assert_eq!(all(Measure::ZeroShot), "91 ± 9");
    assert_eq!(all(Measure::Orig), "83 ± 12");
    assert_eq!(all(Measure::Anon), "59 ± 13");
}

const PUBLISHED_PAIRWISE: [(Measure, [[&str; 6]; 6]); 4] = [
    (
        Measure::ZeroShot,
        [
            ["NA", "0.630", "0.291", "0.165", "0.958", "0.676"],
            ["", "NA", "0.291", "0.205", "0.643", "0.322"],
            ["", "", "NA", "0.675", "0.002", "0.001"],
            ["", "", "", "NA", "0.001", "0.027"],
            ["", "", "", "", "NA", "0.417"],
            ["", "", "", "", "", "NA"],
        ],
    ),
    (
        Measure::FewShot,
        [
            ["NA", "0.953", "0.786", "0.430", "0.953", "0.953"],
            ["", "NA", "0.693", "0.430", "0.953", "0.899"],
            ["", "", "NA", "0.430", "0.430", "0.240"],
            ["", "", "", "NA", "< 0.001", "0.028"],
            ["", "", "", "", "NA", "0.693"],
            ["", "", "", "", "", "NA"],
        ],
    ),
    (
        Measure::Orig,
        [
            ["NA", "0.006", "0.266", "0.103", "0.981", "0.981"],
            ["", "NA", "0.212", "0.981", "0.046", "0.158"],
            ["", "", "NA", "0.212", "0.063", "0.380"],
            ["", "", "", "NA", "0.009", "0.046"],
            ["", "", "", "", "NA", "0.894"],
            ["", "", "", "", "", "NA"],
        ],
    ),
    (
        Measure::Anon,
        [
            ["NA", "0.077", "0.222", "0.145", "0.222", "0.222"],
            ["", "NA", "0.611", "0.289", "0.915", "0.452"],
            ["", "", "NA", "0.570", "0.661", "0.570"],
            ["", "", "", "NA", "0.289", "0.661"],
            ["", "", "", "", "NA", "0.259"],
            ["", "", "", "", "", "NA"],
        ],
    ),
];

#[test]
fn fixture_pairwise_matrices_match_published() {
    let report = fixture_report();
    for (measure, expected) in &PUBLISHED_PAIRWISE {
        let section = report.accuracy.iter().chain(&report.quality).find(|s| s.measure == *measure).unwrap();
        let Analysis::Ok { result: matrix } = &section.pairwise else { panic!("{measure:?} pairwise missing") };
        for (i, row) in expected.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                let got = match &matrix.cells[i][j] {
                    MatrixCell::NotApplicable(_) => "NA".to_string(),
                    MatrixCell::Blank(()) => String::new(),
                    MatrixCell::Entry(e) => e.display.clone(),
                };
                assert_eq!(&got, want, "{measure:?} [{i}][{j}]");
            }
        }
    }
}

fn ok(v: &Value) -> &Value {
    assert_eq!(v["status"], "ok", "{v}");
    &v["result"]
}

#[test]
fn fixture_omnibus_and_subgroup_tests() {
    let json: Value = serde_json::from_str(&fixture_report().to_json()).unwrap();
    let anova = |section: &str, i: usize| ok(&json[section][i]["repeated_measures_anova"]).clone();
    let zero = anova("accuracy", 0);
    assert!((zero["statistic"].as_f64().unwrap() - 3.65).abs() <= 0.05);
    assert!((zero["p_value"].as_f64().unwrap() - 0.007).abs() <= 0.002);
    assert_eq!(zero["df"], serde_json::json!([5.0, 45.0]));
    let few = anova("accuracy", 1);
    assert!((few["statistic"].as_f64().unwrap() - 1.39).abs() <= 0.05);
    assert!((few["p_value"].as_f64().unwrap() - 0.255).abs() <= 0.02);

    let qc = &json["quality_comparison"];
    let paired = ok(&qc["paired_overall"]);
    assert_eq!(paired["orig"]["display"], "83 ± 12");
    assert_eq!(paired["anon"]["display"], "59 ± 13");
    assert!(paired["test"]["p_value"].as_f64().unwrap() < 1e-3);
    for g in qc["paired_by_group"].as_array().unwrap() {
        assert!(ok(&g["result"])["test"]["p_value"].as_f64().unwrap() < 1e-3, "{g}");
    }
    let degradation = &ok(&qc["degradation"])["anova"];
    assert!((degradation["statistic"].as_f64().unwrap() - 3.86).abs() <= 0.05);
    assert!((degradation["p_value"].as_f64().unwrap() - 0.005).abs() <= 0.002);
    assert_eq!(degradation["df"], serde_json::json!([5.0, 54.0]));

    let published = [
        ("native", "zero_shot", "94 ± 6", "87 ± 10", 0.014),
        ("native", "few_shot", "95 ± 5", "90 ± 10", 0.083),
        ("expert", "zero_shot", "91 ± 9", "91 ± 9", 0.994),
        ("expert", "few_shot", "92 ± 8", "93 ± 9", 0.364),
    ];
    let comparisons = json["listener_comparisons"].as_array().unwrap();
    for (split, measure, members, others, p) in published {
        let c = comparisons.iter().find(|c| c["split"] == split && c["measure"] == measure).unwrap();
        let r = ok(&c["result"]);
        assert_eq!(r["members"]["display"], members, "{split} {measure}");
        assert_eq!(r["others"]["display"], others, "{split} {measure}");
        let cell = r["tests"].as_array().unwrap().iter().find(|t| t["granularity"] == "listener_group").unwrap();
        let got = ok(&cell["result"])["p_value"].as_f64().unwrap();
        assert!((got - p).abs() < 0.0005, "{split} {measure}: {got} vs {p}");
    }
}

#[test]
fn fixture_mode_marks_speaker_and_metric_analyses_unavailable() {
    let json: Value = serde_json::from_str(&fixture_report().to_json()).unwrap();
    assert_eq!(json["gender"]["status"], "insufficient_data");
    assert_eq!(json["correlations"]["status"], "insufficient_data");
}

#[test]
fn without_roster_only_the_all_row_is_reported() {
    let report = generate_report(&fixture_input(false)).unwrap();
    for s in report.accuracy.iter().chain(&report.quality) {
        let labels: Vec<&str> = s.table.summary.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["Avg - all"]);
    }
    let json: Value = serde_json::from_str(&report.to_json()).unwrap();
    for c in json["listener_comparisons"].as_array().unwrap() {
        assert_eq!(c["result"]["status"], "insufficient_data", "{c}");
    }
}

#[test]
fn report_is_deterministic() {
    let a = fixture_report().to_json();
    let b = fixture_report().to_json();
    assert_eq!(a, b);
}

#[test]
fn duplicate_cells_are_rejected() {
    let mut input = fixture_input(false);
    let dup = input.accuracy[0].clone();
    input.accuracy.push(dup);
    assert!(generate_report(&input).is_err());
}

#[tokio::test]
async fn single_listener_store_reports_insufficient_data() {
    let fx = Fixture::new(roster());
    let client = fx.client();
    run_session(&client, &fx.plan("P1"), |_, t| t != 1, |i| (i % 5 + 1) as u8).await;
    let a = client.get("/report").await.body;
    let b = client.get("/report").await.body;
    assert_eq!(a, b);
    let json: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(json["listeners"], serde_json::json!(["P1"]));
    for c in json["listener_comparisons"].as_array().unwrap() {
        assert_eq!(c["result"]["status"], "insufficient_data", "{c}");
    }
    for s in json["accuracy"].as_array().unwrap() {
        assert_eq!(s["repeated_measures_anova"]["status"], "insufficient_data");
        assert_eq!(s["pairwise"]["status"], "insufficient_data");
    }
}

#[tokio::test]
async fn store_report_includes_speaker_level_gender_analysis() {
    let fx = Fixture::new(roster());
    let client = fx.client();
    for l in ["P1", "P2", "P3", "P4"] {
        run_session(&client, &fx.plan(l), |_, t| t % 3 != 0, |_| 4).await;
    }
    let json: Value = serde_json::from_slice(&client.get("/report").await.body).unwrap();
    let gender = ok(&json["gender"]).as_array().unwrap();
    assert_eq!(gender.len(), 2);
    for section in gender {
        let rows = section["groups"].as_array().unwrap();
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert_eq!(r["male"]["n"], 1);
            assert_eq!(r["female"]["n"], 1);
        }
    }
}
