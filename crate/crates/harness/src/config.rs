use std::fmt;
use std::path::{Path, PathBuf};

use fvk_core::grid::ModelParams;
use fvk_core::optim::OptimSettings;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Constrained circle minimization over `Delta_values`.
    Circle,
    /// Truncated e-cone construction energy over `h_values × Delta_values`.
    EconeUpper,
    /// Spherical-inversion construction over `h_values × delta_values`.
    CapConstruct,
    /// Cap energy minimization over `h_values × delta_values`.
    CapMin,
    /// Cap minimization plus the lower-bound ratio table.
    CapDiagnostics,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Circle,
        Experiment::EconeUpper,
        Experiment::CapConstruct,
        Experiment::CapMin,
        Experiment::CapDiagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Circle => "circle",
            Experiment::EconeUpper => "econe-upper",
            Experiment::CapConstruct => "cap-construct",
            Experiment::CapMin => "cap-min",
            Experiment::CapDiagnostics => "cap-diagnostics",
        }
    }

    fn uses_h(self) -> bool {
        self != Experiment::Circle
    }

    fn uses_delta(self) -> bool {
        matches!(self, Experiment::CapConstruct | Experiment::CapMin | Experiment::CapDiagnostics)
    }

    fn uses_big_delta(self) -> bool {
        matches!(self, Experiment::Circle | Experiment::EconeUpper)
    }

    pub(crate) fn default_tol(self) -> f64 {
        match self {
            Experiment::Circle => 1e-3,
            _ => 1e-9,
        }
    }

    pub(crate) fn default_grid_n(self) -> usize {
        match self {
            Experiment::Circle => 0,
            Experiment::EconeUpper => 64,
            _ => 2048,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional replacements for the solver's default optimizer settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimOverrides {
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub grad_tol: Option<f64>,
    pub constraint_tol: Option<f64>,
    pub armijo_c: Option<f64>,
    pub backtrack_factor: Option<f64>,
    pub penalty_init: Option<f64>,
    pub penalty_growth: Option<f64>,
}

impl OptimOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, base: OptimSettings) -> OptimSettings {
        OptimSettings {
            max_outer: self.max_outer.unwrap_or(base.max_outer),
            max_inner: self.max_inner.unwrap_or(base.max_inner),
            grad_tol: self.grad_tol.unwrap_or(base.grad_tol),
            constraint_tol: self.constraint_tol.unwrap_or(base.constraint_tol),
            armijo_c: self.armijo_c.unwrap_or(base.armijo_c),
            backtrack_factor: self.backtrack_factor.unwrap_or(base.backtrack_factor),
            penalty_init: self.penalty_init.unwrap_or(base.penalty_init),
            penalty_growth: self.penalty_growth.unwrap_or(base.penalty_growth),
            seed: base.seed,
        }
    }
}

/// One sweep. Parameter tuples are the Cartesian product of the lists the
/// experiment uses, `h` outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// May be left out when the experiment is given on the command line.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub h_values: Vec<f64>,
    #[serde(default)]
    pub delta_values: Vec<f64>,
    #[serde(default, rename = "Delta_values")]
    pub big_delta_values: Vec<f64>,
    /// Radial nodes for the cap; minimum radial count for the e-cone.
    #[serde(default)]
    pub grid_n: Option<usize>,
    /// Fourier order of the circle curve and of the e-cone profile.
    #[serde(default = "default_fourier_n", rename = "fourier_N", alias = "fourier_n")]
    pub fourier_n: usize,
    /// Angular samples of the e-cone grid (a power of two).
    #[serde(default = "default_angular_n")]
    pub angular_n: usize,
    /// Radial cells below `r = h` on the e-cone grid.
    #[serde(default = "default_cells_per_h")]
    pub cells_per_h: usize,
    /// Solver tolerance; the experiment's default when absent.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optim: OptimOverrides,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

fn default_fourier_n() -> usize {
    8
}

fn default_angular_n() -> usize {
    512
}

fn default_cells_per_h() -> usize {
    12
}

impl SweepConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment: Some(experiment),
            h_values: Vec::new(),
            delta_values: Vec::new(),
            big_delta_values: Vec::new(),
            grid_n: None,
            fourier_n: default_fourier_n(),
            angular_n: default_angular_n(),
            cells_per_h: default_cells_per_h(),
            tol: None,
            seed: 0,
            optim: OptimOverrides::default(),
            output_path: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn experiment(&self) -> Result<Experiment, HarnessError> {
        self.experiment.ok_or_else(|| HarnessError::Config("no experiment given".into()))
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n.unwrap_or_else(|| self.experiment.map_or(0, Experiment::default_grid_n))
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or_else(|| self.experiment.map_or(1e-9, Experiment::default_tol))
    }

    /// Checks every value before any computation starts.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let exp = self.experiment()?;
        let bad = |msg: String| Err(HarnessError::Config(msg));
        for (used, name, list) in [
            (exp.uses_h(), "h_values", &self.h_values),
            (exp.uses_delta(), "delta_values", &self.delta_values),
            (exp.uses_big_delta(), "Delta_values", &self.big_delta_values),
        ] {
            if used && list.is_empty() {
                return bad(format!("{name} must not be empty for {exp}"));
            }
            if !used && !list.is_empty() {
                return bad(format!("{name} is not used by {exp}"));
            }
        }
        // any in-range value stands in for the parameters this experiment ignores
        for &h in &self.h_values {
            if let Err(e) = ModelParams::new(h, 0.0, 1.0) {
                return bad(format!("h = {h}: {e}"));
            }
        }
        for &delta in &self.delta_values {
            if let Err(e) = ModelParams::new(0.5, delta, 1.0) {
                return bad(format!("δ = {delta}: {e}"));
            }
        }
        for &big_delta in &self.big_delta_values {
            if let Err(e) = ModelParams::new(0.5, 0.0, big_delta) {
                return bad(format!("Δ = {big_delta}: {e}"));
            }
        }
        match exp {
            Experiment::Circle | Experiment::EconeUpper if self.fourier_n < 4 => {
                return bad(format!("fourier_N must be at least 4, got {}", self.fourier_n));
            }
            Experiment::EconeUpper if self.angular_n < 8 || !self.angular_n.is_power_of_two() => {
                return bad(format!("angular_n must be a power of two >= 8, got {}", self.angular_n));
            }
            Experiment::EconeUpper if self.cells_per_h < 8 => {
                return bad(format!("cells_per_h must be at least 8, got {}", self.cells_per_h));
            }
            Experiment::CapConstruct | Experiment::CapMin | Experiment::CapDiagnostics if self.grid_n() < 16 => {
                return bad(format!("grid_n must be at least 16, got {}", self.grid_n()));
            }
            _ => {}
        }
        let tol = self.tol();
        if !(tol > 0.0 && tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {tol}"));
        }
        if let Err(e) = self.optim.apply(OptimSettings::default()).validate() {
            return bad(format!("[optim]: {e}"));
        }
        Ok(())
    }
}
