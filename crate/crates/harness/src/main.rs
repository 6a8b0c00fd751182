use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fvk_harness::{
    default_fits, fit_scaling, read_table, run_sweep, write_report, Experiment, HarnessError, LabeledFit, Model,
    SweepConfig,
};

const COLUMNS_HELP: &str = "\
Sweep tables are CSV with one row per parameter tuple, in config order:

  experiment        circle | econe-upper | cap-construct | cap-min | cap-diagnostics
  h, delta, Delta   thickness, indentation depth, excess angle (empty if unused)
  grid_n            radial nodes actually used (cap grid / e-cone radii)
  fourier_n         Fourier order of the curve (circle, e-cone)
  membrane_u        ∫u²/r (cap), empty for the circle
  membrane_stretch  stretching term (cap) or full membrane term (e-cone)
  bend              h²-weighted bending term
  energy            total energy
  reference         6πΔ² (circle), 6πΔ²h²ln(1/h) (e-cone), h²+δ^1.5·h^1.5 (cap)
  ratio             energy / reference
  tau               last radius with w' outside both wells (cap)
  lb_tau_ratio      min{τ⁶, τ³h^1.5} / E (cap-construct, cap-diagnostics)
  lb_sphere_ratio   h² / E (cap-construct, cap-diagnostics)
  ga_ratio_max      max over dyadic a of ‖g_a‖ / (a^1/2·E^1/2)
  converged         solver met its tolerance
  iterations        solver steps
  error             message if the point failed (other columns empty)

Sidecars: <stem>.meta.json (config hash, version, grids), <stem>.timing.csv
(wall time per row). Exit codes: 0 success, 1 invalid input, 2 numeric or
convergence failure in at least one row or fit.";

#[derive(Debug, Parser)]
#[command(name = "fvk", version, about = "Thin-sheet energy sweeps, scaling fits and reports", after_help = COLUMNS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML sweep configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output table (overrides `output_path`; default `<experiment>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Overrides the config grid size.
    #[arg(long)]
    grid_n: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Constrained circle minimization.
    Circle(SweepArgs),
    /// Truncated e-cone construction energy.
    EconeUpper(SweepArgs),
    /// Spherical-inversion cap construction.
    CapConstruct(SweepArgs),
    /// Cap energy minimization.
    CapMin(SweepArgs),
    /// Cap minimization with the lower-bound ratio table.
    CapDiagnostics(SweepArgs),
    /// Fit a scaling model to a sweep table.
    Fit {
        table: PathBuf,
        /// log-linear, power-h, power-h-delta, power-delta or excess-power-delta.
        #[arg(long)]
        model: String,
        /// Only rows with this h.
        #[arg(long)]
        h: Option<f64>,
        /// Only rows with this δ.
        #[arg(long)]
        delta: Option<f64>,
        /// Only rows with this Δ.
        #[arg(long = "big-delta")]
        big_delta: Option<f64>,
        /// Write the fit as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write `<stem>.summary.txt` and `<stem>.fits.json` for a sweep table.
    Report {
        table: PathBuf,
        /// Base path for the report files (default: the table).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sweep(experiment: Experiment, args: SweepArgs) -> Result<ExitCode, HarnessError> {
    let mut cfg = SweepConfig::load(&args.config)?;
    match cfg.experiment {
        Some(e) if e != experiment => {
            return Err(HarnessError::Config(format!(
                "config is for {e} but the {experiment} subcommand was used"
            )));
        }
        _ => cfg.experiment = Some(experiment),
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.grid_n {
        cfg.grid_n = Some(n);
    }
    if let Some(out) = args.out {
        cfg.output_path = Some(out);
    }
    let out = cfg.output_path.get_or_insert_with(|| PathBuf::from(format!("{experiment}.csv"))).clone();
    let result = run_sweep(&cfg, args.threads)?;
    let failed = result.failures();
    println!("wrote {} rows to {} ({failed} failed)", result.rows.len(), out.display());
    for (i, row) in result.rows.iter().enumerate().filter(|(_, r)| r.failed()) {
        eprintln!("row {i}: {}", row.error.as_deref().unwrap_or(""));
    }
    Ok(if failed > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn matches(v: Option<f64>, want: Option<f64>) -> bool {
    want.is_none_or(|w| v == Some(w))
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Circle(a) => sweep(Experiment::Circle, a),
        Command::EconeUpper(a) => sweep(Experiment::EconeUpper, a),
        Command::CapConstruct(a) => sweep(Experiment::CapConstruct, a),
        Command::CapMin(a) => sweep(Experiment::CapMin, a),
        Command::CapDiagnostics(a) => sweep(Experiment::CapDiagnostics, a),
        Command::Fit { table, model, h, delta, big_delta, out } => {
            let model: Model = model.parse()?;
            let rows: Vec<_> = read_table(&table)?
                .into_iter()
                .filter(|r| matches(r.h, h) && matches(r.delta, delta) && matches(r.big_delta, big_delta))
                .collect();
            let fit = fit_scaling(&rows, model)?;
            let json = serde_json::to_string_pretty(&fit).map_err(|e| HarnessError::Fit(e.to_string()))? + "\n";
            match out {
                Some(path) => std::fs::write(&path, json).map_err(|e| HarnessError::Io { path, source: e })?,
                None => print!("{json}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { table, out } => {
            let rows = read_table(&table)?;
            let fits: Vec<LabeledFit> = default_fits(&rows);
            let (summary, fits_path) = write_report(&rows, &fits, out.as_deref().unwrap_or(&table))?;
            println!("wrote {} and {}", summary.display(), fits_path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
