use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use fvk_harness::{
    default_fits, fit_scaling, read_table, run_sweep, summary, write_report, Experiment, HarnessError, Model, Row,
    SweepConfig, CSV_COLUMNS,
};

fn fvk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fvk"))
}

fn row(experiment: Experiment, h: Option<f64>, delta: Option<f64>, big_delta: Option<f64>, energy: f64) -> Row {
    let text = format!(
        "{}\n{},{},{},{},,,,,,{energy},,,,,,,,,\n",
        CSV_COLUMNS.join(","),
        experiment,
        h.map_or(String::new(), |v| v.to_string()),
        delta.map_or(String::new(), |v| v.to_string()),
        big_delta.map_or(String::new(), |v| v.to_string()),
    );
    csv::Reader::from_reader(text.as_bytes()).deserialize().next().unwrap().unwrap()
}

/// Exit code with the child's output captured.
fn code(cmd: &mut Command) -> Option<i32> {
    cmd.output().unwrap().status.code()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn empty_parameter_list_is_rejected() {
    let cfg = SweepConfig::from_toml_str("experiment = \"cap-min\"\nh_values = []\ndelta_values = [1.0]\n").unwrap();
    let err = cfg.validate().unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)));
    assert!(err.to_string().contains("h_values"), "{err}");
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    assert!(SweepConfig::from_toml_str("experiment = \"circle\"\nDelta_values = [1.0]\nfoo = 1\n").is_err());
    let cfg = SweepConfig::from_toml_str("experiment = \"cap-min\"\nh_values = [0.7]\ndelta_values = [1.0]\n").unwrap();
    assert!(cfg.validate().is_err());
    let cfg = SweepConfig::from_toml_str("experiment = \"circle\"\nDelta_values = [1.0]\nh_values = [0.1]\n").unwrap();
    assert!(cfg.validate().unwrap_err().to_string().contains("not used"));
    let cfg = SweepConfig::from_toml_str(
        "experiment = \"econe-upper\"\nh_values = [0.1]\nDelta_values = [1.0]\nangular_n = 100\n",
    )
    .unwrap();
    assert!(cfg.validate().is_err());
}

#[test]
fn fits_recover_synthetic_parameters() {
    let hs: Vec<f64> = (3..=9).map(|k| 0.5f64.powi(k)).collect();
    let ds = [1.0, 0.5, 0.25, 0.125];

    let rows: Vec<Row> = hs
        .iter()
        .map(|&h| row(Experiment::EconeUpper, Some(h), None, Some(1.0), 3.0 * h * h * (1.0 / h).ln() + 0.7 * h * h))
        .collect();
    let f = fit_scaling(&rows, Model::LogLinear).unwrap();
    assert!((f.get("C1").unwrap() - 3.0).abs() <= 1e-10);
    assert!((f.get("C2").unwrap() - 0.7).abs() <= 1e-10);

    let rows: Vec<Row> = hs.iter().map(|&h| row(Experiment::CapMin, Some(h), Some(1.0), None, 2.5 * h.powf(1.5))).collect();
    let f = fit_scaling(&rows, Model::PowerH).unwrap();
    assert!((f.get("p").unwrap() - 1.5).abs() <= 1e-10);
    assert!((f.get("A").unwrap() - 2.5).abs() <= 1e-10);
    assert!(f.max_rel_residual <= 1e-10);

    let rows: Vec<Row> = hs
        .iter()
        .flat_map(|&h| ds.iter().map(move |&d| (h, d)))
        .map(|(h, d)| row(Experiment::CapMin, Some(h), Some(d), None, 0.8 * h.powf(1.4) * d.powf(1.6)))
        .collect();
    let f = fit_scaling(&rows, Model::PowerHDelta).unwrap();
    assert!((f.get("p").unwrap() - 1.4).abs() <= 1e-10);
    assert!((f.get("q").unwrap() - 1.6).abs() <= 1e-10);

    let rows: Vec<Row> = ds.iter().map(|&d| row(Experiment::CapMin, Some(0.01), Some(d), None, 0.3 * d.powf(1.5))).collect();
    let f = fit_scaling(&rows, Model::PowerDelta).unwrap();
    assert!((f.get("q").unwrap() - 1.5).abs() <= 1e-10);

    // an h² floor spoils the plain δ fit but not the excess fit
    let h: f64 = 0.01;
    let mut rows: Vec<Row> = ds
        .iter()
        .map(|&d| row(Experiment::CapMin, Some(h), Some(d), None, 4.0 * h * h + (d * h).powf(1.5)))
        .collect();
    rows.push(row(Experiment::CapMin, Some(h), Some(0.0), None, 4.0 * h * h));
    let plain = fit_scaling(&rows, Model::PowerDelta).unwrap().get("q").unwrap();
    let excess = fit_scaling(&rows, Model::ExcessPowerDelta).unwrap();
    assert!((excess.get("q").unwrap() - 1.5).abs() <= 1e-10);
    assert!((excess.get("A").unwrap() - h.powf(1.5)).abs() <= 1e-10 * h.powf(1.5));
    assert!(plain < 1.3, "plain q = {plain}");
}

#[test]
fn excess_fit_needs_a_baseline_at_one_thickness() {
    let rows: Vec<Row> =
        [1.0, 0.5, 0.25, 0.125].iter().map(|&d| row(Experiment::CapMin, Some(0.01), Some(d), None, d)).collect();
    assert!(fit_scaling(&rows, Model::ExcessPowerDelta).unwrap_err().to_string().contains("δ = 0"));
    let mut mixed = rows.clone();
    mixed.push(row(Experiment::CapMin, Some(0.02), Some(0.0), None, 0.1));
    assert!(fit_scaling(&mixed, Model::ExcessPowerDelta).unwrap_err().to_string().contains("single h"));
}

#[test]
fn rank_deficient_fit_names_the_direction() {
    let rows: Vec<Row> =
        [1.0, 0.5, 0.25, 0.125].iter().map(|&d| row(Experiment::CapMin, Some(0.01), Some(d), None, d * d)).collect();
    let err = fit_scaling(&rows, Model::PowerHDelta).unwrap_err();
    assert!(matches!(err, HarnessError::Fit(_)));
    assert!(err.to_string().contains("p (h exponent)"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn too_few_rows_is_a_fit_error() {
    let rows: Vec<Row> = [0.1, 0.05].iter().map(|&h| row(Experiment::CapMin, Some(h), Some(1.0), None, h)).collect();
    assert!(matches!(fit_scaling(&rows, Model::PowerH), Err(HarnessError::Fit(_))));
}

#[test]
fn failing_point_is_recorded_and_the_sweep_continues() {
    // δ = 0.1 at h = 1/8 admits no inversion; the other points still run
    let mut cfg = SweepConfig::new(Experiment::CapConstruct);
    cfg.h_values = vec![0.125];
    cfg.delta_values = vec![1.0, 0.1, 0.0];
    cfg.grid_n = Some(256);
    let result = run_sweep(&cfg, 2).unwrap();
    assert_eq!(result.rows.len(), 3);
    assert_eq!(result.failures(), 1);
    assert!(result.rows[1].error.is_some() && result.rows[1].energy.is_none());
    assert!(result.rows[0].energy.is_some() && result.rows[2].energy.is_some());
}

#[test]
fn zero_depth_construction_is_four_h_squared() {
    let mut cfg = SweepConfig::new(Experiment::CapConstruct);
    cfg.h_values = vec![0.125, 0.0625];
    cfg.delta_values = vec![0.0];
    cfg.grid_n = Some(4096);
    for r in run_sweep(&cfg, 1).unwrap().rows {
        let h = r.h.unwrap();
        assert!((r.energy.unwrap() - 4.0 * h * h).abs() <= 1e-4 * 4.0 * h * h);
        assert_eq!(r.tau, Some(0.0));
    }
}

#[test]
fn circle_sweep_has_one_row_per_angle() {
    let mut cfg = SweepConfig::new(Experiment::Circle);
    cfg.big_delta_values = vec![0.25, 0.5, 1.0];
    let result = run_sweep(&cfg, 0).unwrap();
    assert_eq!(result.rows.len(), 3);
    for (r, d) in result.rows.iter().zip([0.25, 0.5, 1.0]) {
        assert_eq!(r.big_delta, Some(d));
        assert!((r.ratio.unwrap() - 1.0).abs() <= 1e-3);
        assert!((r.reference.unwrap() - 6.0 * PI * d * d).abs() <= 1e-12);
    }
}

#[test]
fn tables_and_reports_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SweepConfig::new(Experiment::CapDiagnostics);
    cfg.h_values = vec![0.125, 0.0625, 0.03125, 0.015625];
    cfg.delta_values = vec![0.0, 1.0];
    cfg.grid_n = Some(256);
    let mut outputs = Vec::new();
    for (i, threads) in [1, 3, 1].into_iter().enumerate() {
        let table = dir.path().join(format!("run{i}.csv"));
        cfg.output_path = Some(table.clone());
        let result = run_sweep(&cfg, threads).unwrap();
        let rows = read_table(&table).unwrap();
        assert_eq!(rows, result.rows);
        let (summary_path, fits_path) = write_report(&rows, &default_fits(&rows), &table).unwrap();
        outputs.push((
            std::fs::read(&table).unwrap(),
            std::fs::read(summary_path).unwrap(),
            std::fs::read(fits_path).unwrap(),
            result.config_hash,
        ));
    }
    // the output path is part of the config, so only the data must agree
    for o in &outputs[1..] {
        assert_eq!(o.0, outputs[0].0);
        assert_eq!(o.1, outputs[0].1);
        assert_eq!(o.2, outputs[0].2);
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run0.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config_sha256"], outputs[0].3);
    assert_eq!(meta["rows"], 8);
    let timing = std::fs::read_to_string(dir.path().join("run0.timing.csv")).unwrap();
    assert_eq!(timing.lines().count(), 9);
}

#[test]
fn summary_lists_fits_with_their_expectation() {
    let rows: Vec<Row> = (3..=8)
        .map(|k| 0.5f64.powi(k))
        .map(|h| row(Experiment::CapMin, Some(h), Some(0.0), None, 4.0 * h * h))
        .collect();
    let fits = default_fits(&rows);
    let text = summary(&rows, &fits);
    assert!(text.contains("experiment: cap-min"));
    assert!(text.contains("p = 2.000000"), "{text}");
    assert!(text.contains("expected p = 2"));
}

#[test]
fn cli_sweep_fit_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "min.toml",
        "experiment = \"cap-min\"\nh_values = [0.125, 0.0625, 0.03125, 0.015625]\ndelta_values = [1.0]\ngrid_n = 256\n",
    );
    let table = dir.path().join("out/min.csv");
    let status = fvk()
        .args(["cap-min", "--threads", "2", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&table)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(read_table(&table).unwrap().len(), 4);

    let fit = fvk().arg("fit").arg(&table).args(["--model", "power-h"]).output().unwrap();
    assert!(fit.status.success());
    let json: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    assert_eq!(json["model"], "power-h");
    assert_eq!(json["samples"], 4);

    let report = fvk().arg("report").arg(&table).output().unwrap();
    assert!(report.status.success());
    assert!(dir.path().join("out/min.summary.txt").exists());
    assert!(dir.path().join("out/min.fits.json").exists());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let circle = write(dir.path(), "c.toml", "experiment = \"circle\"\nDelta_values = [1.0]\n");
    let out = dir.path().join("x.csv");

    // config for another experiment
    assert_eq!(code(fvk().args(["cap-min", "--config"]).arg(&circle).arg("--out").arg(&out)), Some(1));
    // unknown key
    let bad = write(dir.path(), "bad.toml", "experiment = \"circle\"\nDelta_values = [1.0]\nbogus = 2\n");
    assert_eq!(code(fvk().args(["circle", "--config"]).arg(&bad).arg("--out").arg(&out)), Some(1));
    // missing config file
    assert_eq!(code(fvk().args(["circle", "--config"]).arg(dir.path().join("none.toml"))), Some(1));
    // a failed row
    let infeasible = write(
        dir.path(),
        "inf.toml",
        "experiment = \"cap-construct\"\nh_values = [0.125]\ndelta_values = [0.1]\ngrid_n = 64\n",
    );
    assert_eq!(code(fvk().args(["cap-construct", "--config"]).arg(&infeasible).arg("--out").arg(&out)), Some(2));
    // too few rows to fit
    assert_eq!(code(fvk().arg("fit").arg(&out).args(["--model", "power-h"])), Some(2));
    assert_eq!(code(fvk().arg("fit").arg(&out).args(["--model", "nonsense"])), Some(1));
    // the experiment may come from the subcommand alone
    let bare = write(dir.path(), "bare.toml", "Delta_values = [0.5]\n");
    assert_eq!(code(fvk().args(["circle", "--config"]).arg(&bare).arg("--out").arg(&out)), Some(0));
    let help = fvk().arg("--help").output().unwrap();
    assert!(String::from_utf8_lossy(&help.stdout).contains("lb_sphere_ratio"));
}

#[test]
fn delta_exponent_of_minimized_energy() {
    // at h = 2⁻⁷ the h² floor is comparable to δ^1.5·h^1.5 over this δ range,
    // so the exponent is read off the energy in excess of the flat cap
    let mut cfg = SweepConfig::new(Experiment::CapMin);
    cfg.h_values = vec![0.0078125];
    cfg.delta_values = vec![0.0, 0.5, 0.25, 0.125, 0.0625];
    let rows = run_sweep(&cfg, 0).unwrap().rows;
    let q = fit_scaling(&rows, Model::ExcessPowerDelta).unwrap().get("q").unwrap();
    assert!((q - 1.5).abs() <= 0.2, "q = {q}");
}
