//! Unconstrained and equality-constrained minimization.
//!
//! [`descend`] is Armijo-backtracking steepest descent, [`augmented_lagrangian`]
//! wraps it in a method-of-multipliers outer loop for one scalar equality
//! constraint, and [`newton`] is a modified Newton method for objectives with
//! banded Hessians (the radial cap energy). [`gradient_check`] compares an
//! analytic gradient with central differences.

mod banded;
mod newton;

pub use banded::BandedSym;
pub use newton::{newton, SecondOrder};

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ConvergenceFailure, Error, Result};

/// Penalty above which the augmented Lagrangian gives up.
pub const PENALTY_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimSettings {
    pub max_outer: usize,
    pub max_inner: usize,
    pub grad_tol: f64,
    pub constraint_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub seed: u64,
}

impl Default for OptimSettings {
    fn default() -> Self {
        Self {
            max_outer: 60,
            max_inner: 20_000,
            grad_tol: 1e-10,
            constraint_tol: 1e-10,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            penalty_init: 1.0,
            penalty_growth: 2.0,
            seed: 0,
        }
    }
}

impl OptimSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::domain(format!("optimizer setting {what}")));
        if !(self.grad_tol > 0.0) || !(self.constraint_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.penalty_init > 0.0) {
            return bad("penalty_init must be positive");
        }
        if !(self.penalty_growth > 1.0) {
            return bad("penalty_growth must exceed 1");
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return bad("iteration budgets must be positive");
        }
        Ok(())
    }
}

/// A differentiable scalar functional: returns the value and writes the gradient.
pub trait Objective {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

/// Outcome of an unconstrained run.
#[derive(Debug, Clone, PartialEq)]
pub struct Descent {
    pub x: Vec<f64>,
    pub value: f64,
    /// Objective value after each accepted step.
    pub trace: Vec<f64>,
    pub grad_norm: f64,
    /// `true` when the gradient tolerance was met; `false` on budget exhaustion
    /// or line-search stall.
    pub converged: bool,
}

impl Descent {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Steepest descent with Armijo backtracking.
///
/// Each iteration starts the line search from twice the previously accepted
/// step. Stops when `‖∇f‖∞ < grad_tol`, after `max_inner` steps, or when the
/// step underflows.
pub fn descend<O: Objective + ?Sized>(
    objective: &O,
    init: &[f64],
    settings: &OptimSettings,
) -> Result<Descent> {
    settings.validate()?;
    let n = init.len();
    let mut x = init.to_vec();
    let mut g = vec![0.0; n];
    let mut value = objective.eval(&x, &mut g);
    if !value.is_finite() || !all_finite(&g) {
        return Err(Error::NonFinite { iteration: 0, iterate: x });
    }
    let mut trace = Vec::new();
    let mut step = 1.0;
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];

    for iter in 0..settings.max_inner {
        let gnorm = sup_norm(&g);
        if gnorm < settings.grad_tol {
            return Ok(Descent { x, value, trace, grad_norm: gnorm, converged: true });
        }
        let slope = dot(&g, &g);
        step *= 2.0;
        let accepted = loop {
            for i in 0..n {
                trial[i] = x[i] - step * g[i];
            }
            let v = objective.eval(&trial, &mut g_trial);
            if v.is_finite() && v <= value - settings.armijo_c * step * slope {
                if !all_finite(&g_trial) {
                    return Err(Error::NonFinite { iteration: iter + 1, iterate: trial });
                }
                break Some(v);
            }
            step *= settings.backtrack_factor;
            if step < 1e-300 || step * gnorm < 1e-300 {
                break None;
            }
        };
        match accepted {
            Some(v) => {
                core::mem::swap(&mut x, &mut trial);
                core::mem::swap(&mut g, &mut g_trial);
                value = v;
                trace.push(v);
            }
            None => {
                return Ok(Descent { x, value, trace, grad_norm: gnorm, converged: false });
            }
        }
    }
    let gnorm = sup_norm(&g);
    Ok(Descent { x, value, trace, grad_norm: gnorm, converged: gnorm < settings.grad_tol })
}

/// Result of [`augmented_lagrangian`].
#[derive(Debug, Clone, PartialEq)]
pub struct Constrained {
    pub x: Vec<f64>,
    pub value: f64,
    /// Multiplier `λ` of the Lagrangian `f + λ·c`.
    pub multiplier: f64,
    pub constraint: f64,
    pub penalty: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

struct Augmented<'a, F: ?Sized, C: ?Sized> {
    f: &'a F,
    c: &'a C,
    lambda: f64,
    rho: f64,
    scratch: core::cell::RefCell<Vec<f64>>,
}

impl<F: Objective + ?Sized, C: Objective + ?Sized> Objective for Augmented<'_, F, C> {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut gc = self.scratch.borrow_mut();
        let f = self.f.eval(x, grad);
        let c = self.c.eval(x, &mut gc);
        let coef = self.lambda + self.rho * c;
        for (g, dc) in grad.iter_mut().zip(gc.iter()) {
            *g += coef * dc;
        }
        f + self.lambda * c + 0.5 * self.rho * c * c
    }
}

/// Minimize `f` subject to `c(x) = 0` by the method of multipliers.
///
/// The inner problems minimize `f + λc + ρc²/2` with [`descend`]; after each
/// one `λ ← λ + ρc`, and `ρ` grows by `penalty_growth` whenever `|c|` fails to
/// halve (and is not yet within `constraint_tol`). The initial multiplier is the least-squares estimate
/// `-(∇f·∇c)/|∇c|²` at `init`, so a feasible stationary point is returned
/// unchanged.
pub fn augmented_lagrangian<F, C>(
    objective: &F,
    constraint: &C,
    init: &[f64],
    settings: &OptimSettings,
) -> Result<Constrained>
where
    F: Objective + ?Sized,
    C: Objective + ?Sized,
{
    settings.validate()?;
    let n = init.len();
    let mut gf = vec![0.0; n];
    let mut gc = vec![0.0; n];
    let mut x = init.to_vec();
    let f0 = objective.eval(&x, &mut gf);
    let c0 = constraint.eval(&x, &mut gc);
    if !f0.is_finite() || !c0.is_finite() {
        return Err(Error::NonFinite { iteration: 0, iterate: x });
    }
    let gc2 = dot(&gc, &gc);
    let mut lambda = if gc2 > 0.0 { -dot(&gf, &gc) / gc2 } else { 0.0 };
    let mut rho = settings.penalty_init;
    let mut prev = c0.abs();
    let mut inner_total = 0;

    let fail = |reason: String, x: Vec<f64>, value: f64, c: f64, rho: f64| {
        Err(Error::Convergence(Box::new(ConvergenceFailure {
            reason,
            iterate: x,
            value,
            constraint_residual: c,
            penalty: rho,
        })))
    };

    let mut value = f0;
    let mut c = c0;
    for outer in 0..settings.max_outer {
        let aug = Augmented {
            f: objective,
            c: constraint,
            lambda,
            rho,
            scratch: core::cell::RefCell::new(vec![0.0; n]),
        };
        let inner = descend(&aug, &x, settings)?;
        inner_total += inner.iterations();
        x = inner.x;
        value = objective.eval(&x, &mut gf);
        c = constraint.eval(&x, &mut gc);
        if c.abs() <= settings.constraint_tol && inner.converged {
            return Ok(Constrained {
                x,
                value,
                multiplier: lambda,
                constraint: c,
                penalty: rho,
                outer_iterations: outer + 1,
                inner_iterations: inner_total,
            });
        }
        lambda += rho * c;
        if c.abs() > settings.constraint_tol && c.abs() > 0.5 * prev {
            rho *= settings.penalty_growth;
        }
        if rho > PENALTY_LIMIT {
            return fail(format!("penalty exceeded {PENALTY_LIMIT:e} with |c| = {:e}", c.abs()), x, value, c, rho);
        }
        prev = c.abs();
    }
    fail(
        format!("outer budget of {} iterations exhausted", settings.max_outer),
        x,
        value,
        c,
        rho,
    )
}

/// Worst relative discrepancy between the analytic gradient and central
/// differences with the given step. Components are compared relative to
/// `max(|fd|, |analytic|, 1e-12·‖∇f‖∞)` so near-zero entries do not dominate.
pub fn gradient_check<O: Objective + ?Sized>(objective: &O, point: &[f64], step: f64) -> f64 {
    let n = point.len();
    let mut g = vec![0.0; n];
    objective.eval(point, &mut g);
    let scale = sup_norm(&g);
    let mut scratch = vec![0.0; n];
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        x[i] = point[i] + step;
        let fp = objective.eval(&x, &mut scratch);
        x[i] = point[i] - step;
        let fm = objective.eval(&x, &mut scratch);
        x[i] = point[i];
        let fd = (fp - fm) / (2.0 * step);
        let denom = fd.abs().max(g[i].abs()).max(1e-12 * scale).max(f64::MIN_POSITIVE);
        worst = worst.max((fd - g[i]).abs() / denom);
    }
    worst
}
