use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::error::HarnessError;
use crate::fit::{fit_scaling, Model, ScalingFit};
use crate::sweep::{sidecar_path, Row};

/// A fit together with the subset of rows it was computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    /// E.g. `δ = 1`.
    pub subset: String,
    /// Value of the parameter held fixed on the subset.
    pub value: Option<f64>,
    pub fit: ScalingFit,
}

pub fn read_table(path: &Path) -> Result<Vec<Row>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::Csv { path: path.to_path_buf(), source: e })?;
    reader
        .deserialize()
        .collect::<Result<Vec<Row>, _>>()
        .map_err(|e| HarnessError::Csv { path: path.to_path_buf(), source: e })
}

/// Groups rows by a parameter, keyed by its bit pattern so that the
/// iteration order is deterministic.
fn group_by(rows: &[Row], key: impl Fn(&Row) -> Option<f64>) -> BTreeMap<u64, (f64, Vec<Row>)> {
    let mut groups: BTreeMap<u64, (f64, Vec<Row>)> = BTreeMap::new();
    for r in rows {
        if let Some(k) = key(r) {
            groups.entry(k.to_bits()).or_insert_with(|| (k, Vec::new())).1.push(r.clone());
        }
    }
    groups
}

/// The fits a report makes by default: the log-linear model per `Δ` for the
/// e-cone, and per-`δ` h-exponents and per-`h` δ-exponents for the cap.
/// Subsets with too few usable rows are skipped.
pub fn default_fits(rows: &[Row]) -> Vec<LabeledFit> {
    let Some(experiment) = rows.first().map(|r| r.experiment) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut push = |subset: String, value: f64, rows: &[Row], model: Model| {
        if let Ok(fit) = fit_scaling(rows, model) {
            out.push(LabeledFit { subset, value: Some(value), fit });
        }
    };
    match experiment {
        Experiment::Circle => {}
        Experiment::EconeUpper => {
            for (_, (d, group)) in group_by(rows, |r| r.big_delta) {
                push(format!("Δ = {d}"), d, &group, Model::LogLinear);
            }
        }
        _ => {
            for (_, (d, group)) in group_by(rows, |r| r.delta) {
                push(format!("δ = {d}"), d, &group, Model::PowerH);
            }
            for (_, (h, group)) in group_by(rows, |r| r.h) {
                push(format!("h = {h}"), h, &group, Model::PowerDelta);
                push(format!("h = {h}"), h, &group, Model::ExcessPowerDelta);
            }
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

fn expectation(fit: &LabeledFit) -> String {
    match fit.fit.model {
        Model::LogLinear => {
            match (fit.value, fit.fit.get("C1")) {
                (Some(d), Some(c1)) => {
                    let target = 6.0 * PI * d * d;
                    format!("upper-bound coefficient: C1 should approach 6πΔ² = {target:.6}; C1/target = {:.6}", c1 / target)
                }
                _ => "upper-bound coefficient: C1 should approach 6πΔ²".into(),
            }
        }
        Model::PowerH => {
            if fit.value == Some(0.0) {
                "unindented cap: E ~ h², expected p = 2".into()
            } else {
                "cap scaling E ~ h² + δ^{3/2}h^{3/2}: expected p = 3/2 where the δ^{3/2}h^{3/2} term dominates, 2 where h² does".into()
            }
        }
        Model::PowerDelta => "cap scaling E ~ h² + δ^{3/2}h^{3/2}: expected q = 3/2 where the δ term dominates".into(),
        Model::ExcessPowerDelta => "cap scaling E ~ h² + δ^{3/2}h^{3/2} with the h² floor removed: expected q = 3/2".into(),
        Model::PowerHDelta => "cap scaling E ~ h² + δ^{3/2}h^{3/2}: expected p = q = 3/2 in the indented regime".into(),
    }
}

/// Plain-text summary of a table and its fits. Contains no timestamps or
/// timings, so identical inputs give identical bytes.
pub fn summary(rows: &[Row], fits: &[LabeledFit]) -> String {
    let mut s = String::new();
    let experiment = rows.first().map(|r| r.experiment);
    let failed = rows.iter().filter(|r| r.failed()).count();
    let _ = writeln!(s, "experiment: {}", experiment.map_or("-".into(), |e| e.to_string()));
    let _ = writeln!(s, "rows: {} ({failed} failed)", rows.len());
    let _ = writeln!(s);
    match experiment {
        Some(Experiment::Circle) => {
            let _ = writeln!(s, "{:>10} {:>14} {:>14} {:>14}", "Delta", "energy", "target 6πΔ²", "observed/target");
            for r in rows {
                let _ = writeln!(s, "{:>10} {:>14} {:>14} {:>14}", opt(r.big_delta), opt(r.energy), opt(r.reference), opt(r.ratio));
            }
        }
        Some(Experiment::EconeUpper) => {
            let _ = writeln!(s, "{:>14} {:>10} {:>14} {:>18} {:>14}", "h", "Delta", "energy", "6πΔ²h²ln(1/h)", "ratio");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{:>14} {:>10} {:>14} {:>18} {:>14}",
                    opt(r.h),
                    opt(r.big_delta),
                    opt(r.energy),
                    opt(r.reference),
                    opt(r.ratio)
                );
            }
        }
        Some(_) => {
            let _ = writeln!(
                s,
                "{:>14} {:>14} {:>14} {:>18} {:>14} {:>14} {:>9}",
                "h", "delta", "energy", "h²+δ^1.5·h^1.5", "ratio", "tau", "converged"
            );
            for r in rows {
                let _ = writeln!(
                    s,
                    "{:>14} {:>14} {:>14} {:>18} {:>14} {:>14} {:>9}",
                    opt(r.h),
                    opt(r.delta),
                    opt(r.energy),
                    opt(r.reference),
                    opt(r.ratio),
                    opt(r.tau),
                    r.converged.map_or("-".into(), |c| c.to_string())
                );
            }
            let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).filter(|v| v.is_finite() && *v > 0.0).collect();
            if !ratios.is_empty() {
                let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().cloned().fold(0.0, f64::max);
                let _ = writeln!(s);
                let _ = writeln!(s, "energy / (h²+δ^1.5·h^1.5) spans [{lo:.6}, {hi:.6}], a factor of {:.4}", hi / lo);
            }
        }
        None => {}
    }
    if failed > 0 {
        let _ = writeln!(s);
        let _ = writeln!(s, "failed rows:");
        for (i, r) in rows.iter().enumerate().filter(|(_, r)| r.failed()) {
            let _ = writeln!(
                s,
                "  row {i} (h = {}, δ = {}, Δ = {}): {}",
                opt(r.h),
                opt(r.delta),
                opt(r.big_delta),
                r.error.as_deref().unwrap_or("")
            );
        }
    }
    let _ = writeln!(s);
    if fits.is_empty() {
        let _ = writeln!(s, "fits: none");
    } else {
        let _ = writeln!(s, "fits:");
        for f in fits {
            let params: Vec<String> = f
                .fit
                .coefficients
                .iter()
                .chain(&f.fit.exponents)
                .map(|c| format!("{} = {:.6}", c.name, c.value))
                .collect();
            let _ = writeln!(s, "  {} [{}], {} rows: {}", f.fit.label, f.subset, f.fit.samples, params.join(", "));
            let _ = writeln!(s, "    max relative residual {:.3e}", f.fit.max_rel_residual);
            let _ = writeln!(s, "    tests: {}", expectation(f));
        }
    }
    s
}

/// Writes `<stem>.summary.txt` and `<stem>.fits.json` next to `table` and
/// returns their paths.
pub fn write_report(rows: &[Row], fits: &[LabeledFit], table: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
    let summary_path = sidecar_path(table, "summary.txt");
    let fits_path = sidecar_path(table, "fits.json");
    if let Some(dir) = table.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(&summary_path, summary(rows, fits)).map_err(|e| HarnessError::io(&summary_path, e))?;
    let json = serde_json::to_string_pretty(fits).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(&fits_path, json + "\n").map_err(|e| HarnessError::io(&fits_path, e))?;
    Ok((summary_path, fits_path))
}
