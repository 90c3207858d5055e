use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ccal_cli::io::{parse_first_stage, parse_second_stage};
use ccal_cli::report::CSV_HEADER;
use ccal_core::{fit_hetero, fit_usual, FirstStage, Options, SecondStage};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn ccal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fit_args<'a>(std: &'a str, sample: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["fit", "--standards", std, "--sample", sample];
    v.extend_from_slice(extra);
    v
}

fn analyte_paths(a: &str) -> (String, String) {
    (
        fixture(&format!("{a}_std.csv")).display().to_string(),
        fixture(&format!("{a}_sample.csv")).display().to_string(),
    )
}

#[test]
fn text_output_matches_golden_files() {
    for a in ["chromium", "cadmium", "lead"] {
        let (s, y) = analyte_paths(a);
        let out = ccal(&fit_args(&s, &y, &[]));
        assert_eq!(
            out.status.code(),
            Some(0),
            "{a}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let golden = std::fs::read_to_string(fixture(&format!("golden/{a}.txt"))).unwrap();
        assert_eq!(String::from_utf8(out.stdout).unwrap(), golden, "{a}");
    }
}

#[test]
fn formats_agree_at_full_precision() {
    let (s, y) = analyte_paths("chromium");
    let json = ccal(&fit_args(&s, &y, &["--format", "json"]));
    let csv_out = ccal(&fit_args(&s, &y, &["--format", "csv"]));
    let text = ccal(&fit_args(&s, &y, &["--format", "text"]));
    assert_eq!(json.status.code(), Some(0));

    let parsed: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let items = parsed.as_array().unwrap();
    assert_eq!(items.len(), 2);
    for key in [
        "model",
        "alpha",
        "beta",
        "x0",
        "var_x0",
        "ci",
        "expanded_uncertainty",
        "converged",
        "iterations",
    ] {
        assert!(items[0].get(key).is_some(), "missing {key}");
    }

    let mut rdr = csv::Reader::from_reader(csv_out.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>().join(","), CSV_HEADER);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);

    // Independent computation through the library.
    let first = parse_first_stage(&std::fs::read(&s).unwrap()).unwrap();
    let second = parse_second_stage(&std::fs::read(&y).unwrap()).unwrap();
    let fits = [
        fit_usual(&first, &second, 0.95).unwrap(),
        fit_hetero(&first, &second, &Options::default()).unwrap(),
    ];

    let text = String::from_utf8(text.stdout).unwrap();
    for ((item, row), fit) in items.iter().zip(&rows).zip(&fits) {
        let t = &fit.theta_hat;
        let expected = [
            ("alpha", 2, t.alpha),
            ("beta", 3, t.beta),
            ("x0", 4, t.x0),
            ("var_x0", 6, fit.var_x0),
            ("expanded_uncertainty", 9, fit.expanded_uncertainty),
        ];
        for (key, col, v) in expected {
            assert_eq!(item[key].as_f64().unwrap(), v, "json {key}");
            assert_eq!(row[col].parse::<f64>().unwrap(), v, "csv {key}");
        }
        assert_eq!(item["ci"][0].as_f64().unwrap(), fit.ci_lower);
        assert_eq!(item["ci"][1].as_f64().unwrap(), fit.ci_upper);
        assert_eq!(row[7].parse::<f64>().unwrap(), fit.ci_lower);
        assert_eq!(item["iterations"].as_u64().unwrap() as usize, fit.iterations);
        // Text mode shows the same numbers rounded to 7 significant figures.
        for v in [t.alpha, t.beta, t.x0, fit.expanded_uncertainty] {
            assert!(text.contains(&ccal_cli::report::sig_figs(v, 7)), "text lacks {v}");
        }
        assert!(text.contains(&ccal_cli::report::scientific(fit.var_x0, 7)));
    }
    assert_eq!(items[0]["model"], "usual");
    assert_eq!(items[1]["model"], "proposed");
    assert_eq!(&rows[1][1], "proposed");
}

#[test]
fn zero_uncertainty_gives_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let std = dir.path().join("std.csv");
    let sample = dir.path().join("sample.csv");
    std::fs::write(
        &std,
        "X,u,Y\n0.05,0,6455.900\n0.11,0,13042.933\n0.26,0,32621.733\n0.79,0,97364.500\n1.05,0,129178.100\n",
    )
    .unwrap();
    std::fs::write(&sample, "Y0\n10173.6\n10516.9\n10352.2\n").unwrap();
    let (s, y) = (std.display().to_string(), sample.display().to_string());
    let out = ccal(&fit_args(&s, &y, &["--format", "json"]));
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["alpha", "beta", "x0", "var_x0", "expanded_uncertainty"] {
        let (u, p) = (v[0][key].as_f64().unwrap(), v[1][key].as_f64().unwrap());
        assert!((u - p).abs() <= 1e-8 * u.abs(), "{key}: {u} vs {p}");
    }
}

#[test]
fn exit_codes_by_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.display().to_string()
    };
    let (cr_std, cr_sample) = analyte_paths("chromium");

    let missing = ccal(&fit_args("/nonexistent/std.csv", &cr_sample, &[]));
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/std.csv"));

    let bad = write("bad.csv", "X,u,Y\n0.1,0.001,1\n0.2,oops,2\n0.3,0.001,3\n");
    let out = ccal(&fit_args(&bad, &cr_sample, &[]));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3, column u"));

    let neg = write("neg.csv", "X,u,Y\n0.1,0.001,1\n0.2,-0.001,2\n0.3,0.001,3\n");
    assert_eq!(ccal(&fit_args(&neg, &cr_sample, &[])).status.code(), Some(1));

    let one = write("one.csv", "Y0\n5\n");
    assert_eq!(ccal(&fit_args(&cr_std, &one, &[])).status.code(), Some(1));

    let flat = write("flat.csv", "X,u,Y\n0.1,0.001,2\n0.2,0.001,2\n0.3,0.001,2\n");
    assert_eq!(ccal(&fit_args(&flat, &cr_sample, &[])).status.code(), Some(1));

    assert_eq!(
        ccal(&fit_args(&cr_std, &cr_sample, &["--level", "1.5"])).status.code(),
        Some(1)
    );

    // Identical replicates with noisy standards drive the variance to zero.
    let same = write("same.csv", "Y0\n10000\n10000\n10000\n");
    assert_eq!(
        ccal(&fit_args(&cr_std, &same, &["--model", "proposed"])).status.code(),
        Some(2)
    );
    assert_eq!(
        ccal(&fit_args(&cr_std, &same, &["--model", "usual"])).status.code(),
        Some(0)
    );

    assert_eq!(
        ccal(&fit_args(&cr_std, &cr_sample, &["--model", "proposed"]))
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn usual_model_reproduces_published_cadmium_and_lead_with_exchanged_intensities() {
    // The published cadmium and lead estimates follow from each analyte's
    // concentrations paired with the other analyte's intensities.
    let read = |name: &str| std::fs::read(fixture(name)).unwrap();
    let cd = parse_first_stage(&read("cadmium_std.csv")).unwrap();
    let pb = parse_first_stage(&read("lead_std.csv")).unwrap();
    let cd0 = parse_second_stage(&read("cadmium_sample.csv")).unwrap();
    let pb0 = parse_second_stage(&read("lead_sample.csv")).unwrap();
    let cd_x_pb_y = FirstStage::new(cd.x_fixed().to_vec(), pb.y().to_vec(), cd.delta_var().to_vec()).unwrap();
    let pb_x_cd_y = FirstStage::new(pb.x_fixed().to_vec(), cd.y().to_vec(), pb.delta_var().to_vec()).unwrap();

    let check = |first: &FirstStage, second: &SecondStage, want: [f64; 5]| {
        let f = fit_usual(first, second, 0.95).unwrap();
        let got = [
            f.theta_hat.alpha,
            f.theta_hat.beta,
            f.theta_hat.x0,
            f.var_x0,
            f.expanded_uncertainty,
        ];
        for (g, w) in got.iter().zip(want) {
            assert!(((g - w) / w).abs() < 5e-7, "{g} vs {w}");
        }
    };
    check(
        &cd_x_pb_y,
        &pb0,
        [0.454801, 10.54381, 0.08123556, 7.898643e-05, 0.01741936],
    );
    check(
        &pb_x_cd_y,
        &cd0,
        [-0.3822126, 94.29881, 0.05770535, 0.0001181068, 0.02130068],
    );
}

#[test]
fn simulate_writes_one_row_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.csv");
    std::fs::write(
        &scen,
        "n,k,x0,alpha,beta,sigma_eps2,n_reps,seed,delta_var\n\
         5,3,0.8,0.1,2,0,1,5,0;0;0;0;0\n\
         5,2,0.8,0.1,2,0.04,50,6,\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    let run = ccal(&[
        "simulate",
        "--scenarios",
        &scen.display().to_string(),
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    // Noise-free single replicate: no bias, no error.
    for name in ["usual_bias", "usual_mse", "proposed_bias", "proposed_mse"] {
        assert_eq!(rows[0][col(name)].parse::<f64>().unwrap(), 0.0, "{name}");
    }
    assert_eq!(&rows[1][col("status")], "ok");
    assert_eq!(&rows[1][col("n_reps")], "50");
}

#[test]
fn simulate_reports_bad_config_as_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.csv");
    std::fs::write(&scen, "n,k,x0\n5,2,0.8\n").unwrap();
    let out = dir.path().join("o.csv");
    let run = ccal(&[
        "simulate",
        "--scenarios",
        &scen.display().to_string(),
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(run.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn failed_scenario_is_reported_and_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.csv");
    // Without response noise the replicates coincide while the standards do
    // not, so no replicate has a proposed-model fit.
    std::fs::write(
        &scen,
        "n,k,x0,alpha,beta,sigma_eps2,n_reps,seed\n5,3,0.8,0.1,2,0,20,5\n5,2,0.8,0.1,2,0.04,20,6\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    let run = ccal(&[
        "simulate",
        "--scenarios",
        &scen.display().to_string(),
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(run.status.code(), Some(2));
    let body = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",all_replicates_failed"));
    assert!(lines[1].contains(",20,0,20,"));
    assert!(lines[2].ends_with(",ok"));
}
