use std::fmt;
use std::str::FromStr;

use fvk_core::econe::fit_log_coefficient;
use fvk_core::error::Error;
use fvk_core::fit::least_squares;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::sweep::Row;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `E = C1·h²ln(1/h) + C2·h²`.
    LogLinear,
    /// `E = A·h^p`.
    PowerH,
    /// `E = A·h^p·δ^q`.
    PowerHDelta,
    /// `E = A·δ^q` (for sweeps at a single `h`).
    PowerDelta,
    /// `E − E(δ=0) = A·δ^q` at a single `h`: the unindented energy is
    /// subtracted so that the `h²` floor does not flatten the exponent.
    ExcessPowerDelta,
}

const ALL_MODELS: [Model; 5] =
    [Model::LogLinear, Model::PowerH, Model::PowerHDelta, Model::PowerDelta, Model::ExcessPowerDelta];

impl Model {
    pub fn label(self) -> &'static str {
        match self {
            Model::LogLinear => "C1·h²log(1/h)+C2·h²",
            Model::PowerH => "A·h^p",
            Model::PowerHDelta => "A·h^p·δ^q",
            Model::PowerDelta => "A·δ^q",
            Model::ExcessPowerDelta => "E−E(δ=0) = A·δ^q",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Model::LogLinear => "log-linear",
            Model::PowerH => "power-h",
            Model::PowerHDelta => "power-h-delta",
            Model::PowerDelta => "power-delta",
            Model::ExcessPowerDelta => "excess-power-delta",
        }
    }

    /// Names of the regression columns, in design order.
    fn columns(self) -> &'static [&'static str] {
        match self {
            Model::LogLinear => &["C1", "C2"],
            Model::PowerH => &["ln A", "p (h exponent)"],
            Model::PowerHDelta => &["ln A", "p (h exponent)", "q (δ exponent)"],
            Model::PowerDelta | Model::ExcessPowerDelta => &["ln A", "q (δ exponent)"],
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_MODELS.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = ALL_MODELS.iter().map(|m| m.name()).collect();
            HarnessError::Config(format!("unknown model {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: Model,
    pub label: String,
    /// Multiplicative and additive constants (`A`, or `C1` and `C2`).
    pub coefficients: Vec<Coefficient>,
    /// Fitted exponents (`p`, `q`); empty for the log-linear model.
    pub exponents: Vec<Coefficient>,
    /// Largest `|model − y| / y` over the fitted rows, `y` being the fitted
    /// energy (the excess energy for [`Model::ExcessPowerDelta`]).
    pub max_rel_residual: f64,
    pub samples: usize,
}

impl ScalingFit {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().chain(&self.exponents).find(|c| c.name == name).map(|c| c.value)
    }
}

fn coefficient(name: &str, value: f64) -> Coefficient {
    Coefficient { name: name.into(), value }
}

/// Rows usable by `model`: no error, positive finite energy, and positive
/// values of the parameters the model takes logarithms of.
fn usable(rows: &[Row], model: Model) -> Result<Vec<(f64, f64, f64)>, HarnessError> {
    if model == Model::ExcessPowerDelta {
        return excess(rows);
    }
    Ok(rows
        .iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| {
            let e = r.energy.filter(|e| *e > 0.0 && e.is_finite())?;
            let h = r.h.unwrap_or(f64::NAN);
            let d = r.delta.unwrap_or(f64::NAN);
            let needs_h = matches!(model, Model::LogLinear | Model::PowerH | Model::PowerHDelta);
            let needs_d = !needs_h || model == Model::PowerHDelta;
            if needs_h && !(h > 0.0 && h < 1.0) {
                return None;
            }
            if needs_d && !(d > 0.0) {
                return None;
            }
            Some((h, d, e))
        })
        .collect())
}

/// `(h, δ, E − E(δ=0))` for the rows with `δ > 0` and a positive excess.
fn excess(rows: &[Row]) -> Result<Vec<(f64, f64, f64)>, HarnessError> {
    let ok: Vec<&Row> = rows.iter().filter(|r| r.error.is_none() && r.energy.is_some_and(f64::is_finite)).collect();
    let h = ok.first().and_then(|r| r.h);
    if ok.iter().any(|r| r.h != h) {
        return Err(HarnessError::Fit("excess-power-delta needs rows at a single h".into()));
    }
    let base = ok
        .iter()
        .find(|r| r.delta == Some(0.0))
        .and_then(|r| r.energy)
        .ok_or_else(|| HarnessError::Fit("excess-power-delta needs a δ = 0 row".into()))?;
    Ok(ok
        .iter()
        .filter_map(|r| {
            let d = r.delta.filter(|d| *d > 0.0)?;
            let e = r.energy? - base;
            (e > 0.0).then_some((r.h.unwrap_or(f64::NAN), d, e))
        })
        .collect())
}

fn rank_message(model: Model, msg: &str) -> String {
    let column = msg
        .strip_prefix("design column ")
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|k| k.parse::<usize>().ok())
        .and_then(|k| model.columns().get(k));
    match column {
        Some(name) => format!("{model}: the samples do not determine {name} (rank-deficient design)"),
        None => format!("{model}: {msg}"),
    }
}

/// Regresses the energies of `rows` against `model`.
///
/// Power laws are fitted by linear least squares in log space; the
/// log-linear model fits `E/h²` against `ln(1/h)`. Rows with an error, a
/// non-positive energy, or (for power laws) a zero parameter are skipped.
/// At least four rows must remain (not counting the baseline row of the
/// excess model).
pub fn fit_scaling(rows: &[Row], model: Model) -> Result<ScalingFit, HarnessError> {
    let data = usable(rows, model)?;
    if data.len() < 4 {
        return Err(HarnessError::Fit(format!(
            "{model} needs at least 4 usable rows, found {}",
            data.len()
        )));
    }
    let fit_err = |e: Error| match e {
        Error::Fit(msg) => HarnessError::Fit(rank_message(model, &msg)),
        other => HarnessError::Fit(format!("{model}: {other}")),
    };
    if model == Model::LogLinear {
        let samples: Vec<(f64, f64)> = data.iter().map(|&(h, _, e)| (h, e)).collect();
        let f = fit_log_coefficient(&samples).map_err(fit_err)?;
        return Ok(ScalingFit {
            model,
            label: model.label().into(),
            coefficients: vec![coefficient("C1", f.c1), coefficient("C2", f.c2)],
            exponents: Vec::new(),
            max_rel_residual: f.max_rel_residual,
            samples: data.len(),
        });
    }
    let cols = model.columns().len();
    let mut design = Vec::with_capacity(cols * data.len());
    let mut y = Vec::with_capacity(data.len());
    for &(h, d, e) in &data {
        design.push(1.0);
        match model {
            Model::PowerH => design.push(h.ln()),
            Model::PowerHDelta => design.extend([h.ln(), d.ln()]),
            Model::PowerDelta | Model::ExcessPowerDelta => design.push(d.ln()),
            Model::LogLinear => unreachable!(),
        }
        y.push(e.ln());
    }
    let f = least_squares(&design, cols, &y).map_err(fit_err)?;
    let c = &f.coefficients;
    let predict = |h: f64, d: f64| -> f64 {
        match model {
            Model::PowerH => c[0] + c[1] * h.ln(),
            Model::PowerHDelta => c[0] + c[1] * h.ln() + c[2] * d.ln(),
            Model::PowerDelta | Model::ExcessPowerDelta => c[0] + c[1] * d.ln(),
            Model::LogLinear => unreachable!(),
        }
        .exp()
    };
    let max_rel_residual = data.iter().map(|&(h, d, e)| ((predict(h, d) - e) / e).abs()).fold(0.0, f64::max);
    let exponents = match model {
        Model::PowerH => vec![coefficient("p", c[1])],
        Model::PowerHDelta => vec![coefficient("p", c[1]), coefficient("q", c[2])],
        Model::PowerDelta | Model::ExcessPowerDelta => vec![coefficient("q", c[1])],
        Model::LogLinear => unreachable!(),
    };
    Ok(ScalingFit {
        model,
        label: model.label().into(),
        coefficients: vec![coefficient("A", c[0].exp())],
        exponents,
        max_rel_residual,
        samples: data.len(),
    })
}
