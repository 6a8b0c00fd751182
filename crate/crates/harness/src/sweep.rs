use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use fvk_core::cap::{self, build_inversion, cap_energy, choose_rl, lower_bound_report, minimize_cap_with, CapProfile};
use fvk_core::circle::{circle_settings, solve_circle_min_with};
use fvk_core::econe::{build_econe_pair, fvk_energy_polar, EConeConfig, PolarGrid};
use fvk_core::error::Error;
use fvk_core::grid::{EnergyBreakdown, RadialGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, SweepConfig};
use crate::error::HarnessError;

/// Column order of the result table.
pub const CSV_COLUMNS: [&str; 19] = [
    "experiment",
    "h",
    "delta",
    "Delta",
    "grid_n",
    "fourier_n",
    "membrane_u",
    "membrane_stretch",
    "bend",
    "energy",
    "reference",
    "ratio",
    "tau",
    "lb_tau_ratio",
    "lb_sphere_ratio",
    "ga_ratio_max",
    "converged",
    "iterations",
    "error",
];

/// One parameter tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub h: Option<f64>,
    pub delta: Option<f64>,
    pub big_delta: Option<f64>,
}

/// One table row. Columns that do not apply to the experiment are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: Experiment,
    pub h: Option<f64>,
    pub delta: Option<f64>,
    #[serde(rename = "Delta")]
    pub big_delta: Option<f64>,
    pub grid_n: Option<usize>,
    pub fourier_n: Option<usize>,
    pub membrane_u: Option<f64>,
    pub membrane_stretch: Option<f64>,
    pub bend: Option<f64>,
    pub energy: Option<f64>,
    /// Scaling-law reference value the energy is compared with.
    pub reference: Option<f64>,
    /// `energy / reference`.
    pub ratio: Option<f64>,
    pub tau: Option<f64>,
    /// `min{τ⁶, τ³h^{3/2}} / E`.
    pub lb_tau_ratio: Option<f64>,
    /// `h² / E`.
    pub lb_sphere_ratio: Option<f64>,
    /// Largest `‖g_a‖ / (a^{1/2}E^{1/2})` over the resolved dyadic scales.
    pub ga_ratio_max: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl Row {
    fn blank(experiment: Experiment, p: &Point) -> Self {
        Self {
            experiment,
            h: p.h,
            delta: p.delta,
            big_delta: p.big_delta,
            grid_n: None,
            fourier_n: None,
            membrane_u: None,
            membrane_stretch: None,
            bend: None,
            energy: None,
            reference: None,
            ratio: None,
            tau: None,
            lb_tau_ratio: None,
            lb_sphere_ratio: None,
            ga_ratio_max: None,
            converged: None,
            iterations: None,
            error: None,
        }
    }

    fn set_energy(&mut self, e: &EnergyBreakdown, reference: f64) {
        self.membrane_u = Some(e.membrane_u);
        self.membrane_stretch = Some(e.membrane_stretch);
        self.bend = Some(e.bend);
        self.energy = Some(e.total);
        self.reference = Some(reference);
        self.ratio = Some(e.total / reference);
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    /// Wall time per row in seconds, in row order.
    pub seconds: Vec<f64>,
    pub config_hash: String,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }
}

impl SweepConfig {
    /// Parameter tuples in output order.
    pub fn points(&self) -> Vec<Point> {
        let opt = |v: &[f64]| -> Vec<Option<f64>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().copied().map(Some).collect()
            }
        };
        let mut out = Vec::new();
        for h in opt(&self.h_values) {
            for delta in opt(&self.delta_values) {
                for big_delta in opt(&self.big_delta_values) {
                    out.push(Point { h, delta, big_delta });
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `stem.csv` → `stem.<suffix>`.
pub fn sidecar_path(table: &Path, suffix: &str) -> PathBuf {
    let stem = table.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    table.with_file_name(format!("{stem}.{suffix}"))
}

fn cap_reference(h: f64, delta: f64) -> f64 {
    h * h + (delta * h).powf(1.5)
}

fn circle_row(cfg: &SweepConfig, p: &Point) -> Result<Row, Error> {
    let big_delta = p.big_delta.unwrap_or(0.0);
    let tol = cfg.tol();
    let settings = cfg.optim.apply(circle_settings(big_delta, tol, cfg.seed));
    let mut row = Row::blank(Experiment::Circle, p);
    row.fourier_n = Some(cfg.fourier_n);
    let sol = solve_circle_min_with(big_delta, cfg.fourier_n, tol, &settings)?;
    let target = 6.0 * PI * big_delta * big_delta;
    row.energy = Some(sol.energy);
    row.bend = Some(sol.energy);
    row.reference = Some(target);
    row.ratio = Some(sol.energy / target);
    row.converged = Some(true);
    row.iterations = Some(sol.inner_iterations);
    Ok(row)
}

fn econe_row(cfg: &SweepConfig, p: &Point) -> Result<Row, Error> {
    let (h, big_delta) = (p.h.unwrap_or(0.0), p.big_delta.unwrap_or(0.0));
    let mut row = Row::blank(Experiment::EconeUpper, p);
    row.fourier_n = Some(cfg.fourier_n);
    let grid = PolarGrid::resolving(h, cfg.cells_per_h, cfg.grid_n(), cfg.angular_n)?;
    row.grid_n = Some(grid.nr());
    let econe = EConeConfig::minimizing(big_delta, h, cfg.fourier_n)?;
    let fields = build_econe_pair(&econe, &grid)?;
    let e = fvk_energy_polar(&fields, big_delta, h, &grid)?;
    row.set_energy(&e, 6.0 * PI * big_delta * big_delta * h * h * (1.0 / h).ln());
    Ok(row)
}

/// Inversion when it is feasible, otherwise the rescaled paraboloid.
fn cap_start(h: f64, delta: f64, grid: &RadialGrid) -> Result<CapProfile, Error> {
    if delta > 0.0 && choose_rl(h, delta)?.feasible {
        build_inversion(h, delta, grid)
    } else {
        CapProfile::paraboloid(grid.clone(), delta)
    }
}

fn cap_row(cfg: &SweepConfig, experiment: Experiment, p: &Point) -> Result<Row, Error> {
    let (h, delta) = (p.h.unwrap_or(0.0), p.delta.unwrap_or(0.0));
    let mut row = Row::blank(experiment, p);
    let grid = RadialGrid::cell_centered(cfg.grid_n())?;
    row.grid_n = Some(grid.len());
    let reference = cap_reference(h, delta);
    let profile = match experiment {
        Experiment::CapConstruct => {
            let profile = build_inversion(h, delta, &grid)?;
            row.set_energy(&cap_energy(&profile, h)?, reference);
            profile
        }
        _ => {
            let init = cap_start(h, delta, &grid)?;
            let settings = cfg.optim.apply(cap::cap_settings(cfg.tol()));
            let m = minimize_cap_with(h, delta, &init, &settings)?;
            row.set_energy(&m.energy, reference);
            row.converged = Some(m.converged);
            row.iterations = Some(m.iterations);
            m.profile
        }
    };
    row.tau = Some(cap::tau(&profile));
    if experiment != Experiment::CapMin {
        let report = lower_bound_report(&profile, h, delta)?;
        row.lb_tau_ratio = Some(report.exit.ratio);
        row.lb_sphere_ratio = Some(report.spherical.ratio);
        row.ga_ratio_max = report.max_ga_ratio();
    }
    Ok(row)
}

/// Evaluates one point. Errors and panics end up in the `error` column.
pub(crate) fn evaluate(cfg: &SweepConfig, experiment: Experiment, p: &Point) -> Row {
    let run = || match experiment {
        Experiment::Circle => circle_row(cfg, p),
        Experiment::EconeUpper => econe_row(cfg, p),
        _ => cap_row(cfg, experiment, p),
    };
    match catch_unwind(AssertUnwindSafe(run)) {
        Ok(Ok(row)) => row,
        Ok(Err(e)) => Row { error: Some(e.to_string()), ..Row::blank(experiment, p) },
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Row { error: Some(format!("panic: {msg}")), ..Row::blank(experiment, p) }
        }
    }
}

struct Sinks {
    table: csv::Writer<BufWriter<File>>,
    timing: BufWriter<File>,
    table_path: PathBuf,
    timing_path: PathBuf,
}

impl Sinks {
    fn open(path: &Path) -> Result<Self, HarnessError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        let timing_path = sidecar_path(path, "timing.csv");
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut table = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
        table
            .write_record(CSV_COLUMNS)
            .map_err(|e| HarnessError::Csv { path: path.to_path_buf(), source: e })?;
        let mut timing = BufWriter::new(File::create(&timing_path).map_err(|e| HarnessError::io(&timing_path, e))?);
        writeln!(timing, "row,seconds").map_err(|e| HarnessError::io(&timing_path, e))?;
        Ok(Self { table, timing, table_path: path.to_path_buf(), timing_path })
    }

    fn write(&mut self, index: usize, row: &Row, seconds: f64) -> Result<(), HarnessError> {
        let csv_err = |e| HarnessError::Csv { path: self.table_path.clone(), source: e };
        self.table.serialize(row).map_err(csv_err)?;
        self.table.flush().map_err(|e| HarnessError::io(&self.table_path, e))?;
        writeln!(self.timing, "{index},{seconds:.6}").map_err(|e| HarnessError::io(&self.timing_path, e))?;
        self.timing.flush().map_err(|e| HarnessError::io(&self.timing_path, e))
    }
}

fn write_meta(cfg: &SweepConfig, result: &SweepResult, path: &Path) -> Result<(), HarnessError> {
    let meta_path = sidecar_path(path, "meta.json");
    let meta = serde_json::json!({
        "config_sha256": result.config_hash,
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "tol": cfg.tol(),
        "grids": {
            "grid_n": cfg.grid_n(),
            "fourier_n": cfg.fourier_n,
            "angular_n": cfg.angular_n,
            "cells_per_h": cfg.cells_per_h,
        },
        "columns": CSV_COLUMNS,
        "rows": result.rows.len(),
        "failed_rows": result.failures(),
        "config": cfg,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(&meta_path, text + "\n").map_err(|e| HarnessError::io(&meta_path, e))
}

/// Runs every point of `cfg` on `threads` workers (0 picks the core count).
///
/// When `cfg.output_path` is set the table is written row by row in config
/// order by a single writer thread, with `.meta.json` and `.timing.csv`
/// sidecars. Wall times only go to the timing sidecar so that the table
/// itself is reproducible byte for byte.
pub fn run_sweep(cfg: &SweepConfig, threads: usize) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let experiment = cfg.experiment()?;
    let points = cfg.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let mut sinks = cfg.output_path.as_deref().map(Sinks::open).transpose()?;

    let (tx, rx) = mpsc::channel::<(usize, Row, f64)>();
    let collected = std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> Result<(Vec<Row>, Vec<f64>), HarnessError> {
            let mut pending = BTreeMap::new();
            let mut rows = Vec::new();
            let mut seconds = Vec::new();
            for (i, row, secs) in rx {
                pending.insert(i, (row, secs));
                while let Some((row, secs)) = pending.remove(&rows.len()) {
                    if let Some(s) = sinks.as_mut() {
                        s.write(rows.len(), &row, secs)?;
                    }
                    rows.push(row);
                    seconds.push(secs);
                }
            }
            Ok((rows, seconds))
        });
        pool.install(|| {
            points.par_iter().enumerate().for_each_with(tx, |tx, (i, p)| {
                let start = Instant::now();
                let row = evaluate(cfg, experiment, p);
                // a closed channel means the writer failed; its error is reported below
                let _ = tx.send((i, row, start.elapsed().as_secs_f64()));
            });
        });
        writer.join().unwrap_or_else(|_| Err(HarnessError::Pool("writer thread panicked".into())))
    })?;

    let (rows, seconds) = collected;
    let result = SweepResult { rows, seconds, config_hash: cfg.hash() };
    if let Some(path) = cfg.output_path.as_deref() {
        write_meta(cfg, &result, path)?;
    }
    Ok(result)
}
