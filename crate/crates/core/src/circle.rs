//! The circle problem: minimize `∫₀^{2π}(α+α″)²dt` over 2π-periodic `α`
//! subject to `∫₀^{2π}(α′²−α²)dt = 2πΔ²`.
//!
//! Both functionals are diagonal in the Fourier basis, so they are evaluated
//! exactly from the coefficients. The minimum is `6πΔ²`, attained by
//! `√(2/3)·Δ·cos(2t − θ)` plus any mode-1 term.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;
use crate::optim::{self, OptimSettings};
use crate::rng::Uniform;

/// Truncated Fourier series `a0 + Σₙ aₙcos(nt) + bₙsin(nt)`, `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCurve {
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl FourierCurve {
    /// Fails unless `a` and `b` have equal length `N ≥ 2` and all entries are finite.
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Dimension { expected: a.len(), found: b.len() });
        }
        if a.len() < 2 {
            return Err(Error::domain(format!("Fourier order must be at least 2, got {}", a.len())));
        }
        if !a0.is_finite() || !a.iter().chain(&b).all(|v| v.is_finite()) {
            return Err(Error::domain("non-finite Fourier coefficient"));
        }
        Ok(Self { a0, a, b })
    }

    pub fn zeros(order: usize) -> Result<Self> {
        Self::new(0.0, vec![0.0; order], vec![0.0; order])
    }

    /// `amplitude·cos(n t)` truncated at `order`.
    pub fn cosine(order: usize, n: usize, amplitude: f64) -> Result<Self> {
        let mut c = Self::zeros(order)?;
        if n == 0 {
            c.a0 = amplitude;
        } else if n <= order {
            c.a[n - 1] = amplitude;
        } else {
            return Err(Error::domain(format!("mode {n} exceeds order {order}")));
        }
        Ok(c)
    }

    /// The canonical minimizer `√(2/3)·Δ·cos 2t`.
    pub fn minimizer(order: usize, big_delta: f64) -> Result<Self> {
        Self::cosine(order, 2, math::sqrt(2.0 / 3.0) * big_delta)
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Coefficients of mode `n` as `(cos, sin)`; mode 0 is `(a0, 0)`.
    pub fn mode(&self, n: usize) -> (f64, f64) {
        match n {
            0 => (self.a0, 0.0),
            n if n <= self.order() => (self.a[n - 1], self.b[n - 1]),
            _ => (0.0, 0.0),
        }
    }

    /// Flat coefficient vector `[a0, a1..aN, b1..bN]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.order() + 1);
        v.push(self.a0);
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() % 2 == 0 || x.len() < 5 {
            return Err(Error::domain(format!("coefficient vector of length {} is not [a0, a.., b..] with N ≥ 2", x.len())));
        }
        let n = (x.len() - 1) / 2;
        Self::new(x[0], x[1..=n].to_vec(), x[n + 1..].to_vec())
    }

    /// Adds `p·cos t + q·sin t`.
    pub fn add_mode_one(&self, p: f64, q: f64) -> Self {
        let mut c = self.clone();
        c.a[0] += p;
        c.b[0] += q;
        c
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            a0: self.a0 * s,
            a: self.a.iter().map(|v| v * s).collect(),
            b: self.b.iter().map(|v| v * s).collect(),
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.derivative_at(t, 0)
    }

    /// The `k`-th derivative of the series at `t`.
    pub fn derivative_at(&self, t: f64, k: u32) -> f64 {
        let mut s = if k == 0 { self.a0 } else { 0.0 };
        for n in 1..=self.order() {
            let nf = n as f64;
            let (c, sn) = (math::cos(nf * t), math::sin(nf * t));
            let (an, bn) = (self.a[n - 1], self.b[n - 1]);
            // d/dt rotates (cos, sin) coefficients by a quarter turn per derivative
            let scale = libm::pow(nf, k as f64);
            let v = match k % 4 {
                0 => an * c + bn * sn,
                1 => -an * sn + bn * c,
                2 => -an * c - bn * sn,
                _ => an * sn - bn * c,
            };
            s += scale * v;
        }
        s
    }

    /// `L²` mass `∫α²` of mode `n` (Parseval): `2π·a0²` for `n = 0`, `π(aₙ²+bₙ²)` otherwise.
    pub fn mode_mass(&self, n: usize) -> f64 {
        let (c, s) = self.mode(n);
        if n == 0 {
            2.0 * PI * c * c
        } else {
            PI * (c * c + s * s)
        }
    }

    pub fn total_mass(&self) -> f64 {
        (0..=self.order()).map(|n| self.mode_mass(n)).sum()
    }

    /// Fraction of `L²` mass carried by the listed modes; `1.0` for the zero curve.
    pub fn mass_fraction(&self, modes: &[usize]) -> f64 {
        let total = self.total_mass();
        if total == 0.0 {
            return 1.0;
        }
        modes.iter().map(|&n| self.mode_mass(n)).sum::<f64>() / total
    }

    /// Mode other than 1 carrying the most mass (mode 1 is energy- and
    /// constraint-neutral, so it is ignored). `None` if all such modes vanish.
    pub fn dominant_mode(&self) -> Option<usize> {
        let mut best = None;
        let mut best_mass = 0.0;
        for n in (0..=self.order()).filter(|&n| n != 1) {
            let m = self.mode_mass(n);
            if m > best_mass {
                best_mass = m;
                best = Some(n);
            }
        }
        best
    }
}

fn energy_weight(n: usize) -> f64 {
    if n == 0 {
        2.0 * PI
    } else {
        let q = 1.0 - (n * n) as f64;
        PI * q * q
    }
}

fn constraint_weight(n: usize) -> f64 {
    if n == 0 {
        -2.0 * PI
    } else {
        PI * ((n * n) as f64 - 1.0)
    }
}

fn quadratic(curve: &FourierCurve, weight: fn(usize) -> f64) -> f64 {
    let mut s = weight(0) * curve.a0 * curve.a0;
    for n in 1..=curve.order() {
        let (a, b) = curve.mode(n);
        s += weight(n) * (a * a + b * b);
    }
    s
}

/// `∫₀^{2π}(α+α″)²dt`.
pub fn circle_energy(curve: &FourierCurve) -> f64 {
    quadratic(curve, energy_weight)
}

/// `∫₀^{2π}(α′²−α²)dt`.
pub fn circle_constraint(curve: &FourierCurve) -> f64 {
    quadratic(curve, constraint_weight)
}

/// `(n, 2πΔ²(n²−1))` for `n = 2..=n_max`: the least energy of a curve built
/// from modes 1 and `n` that meets the constraint.
pub fn mode_energy_table(big_delta: f64, n_max: usize) -> Result<Vec<(usize, f64)>> {
    if n_max < 2 {
        return Err(Error::domain(format!("n_max must be at least 2, got {n_max}")));
    }
    if !big_delta.is_finite() {
        return Err(Error::domain("Δ must be finite"));
    }
    let d2 = big_delta * big_delta;
    Ok((2..=n_max).map(|n| (n, 2.0 * PI * d2 * ((n * n) as f64 - 1.0))).collect())
}

/// `L²[0,2π]` norm of `α⁗ + (2+λ)α″ + (1+λ)α`.
pub fn el_residual(curve: &FourierCurve, lambda: f64) -> f64 {
    let factor = |n: usize| {
        let n2 = (n * n) as f64;
        n2 * n2 - (2.0 + lambda) * n2 + (1.0 + lambda)
    };
    let mut s = 0.0;
    for n in 0..=curve.order() {
        let f = factor(n);
        s += f * f * curve.mode_mass(n);
    }
    math::sqrt(s)
}

/// Output of the constrained circle solver.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleSolution {
    pub curve: FourierCurve,
    pub energy: f64,
    /// `circle_constraint(curve) − 2πΔ²`.
    pub constraint_residual: f64,
    /// Multiplier `μ` of `energy + μ·(constraint − 2πΔ²)`; `−3` at the minimizer.
    pub multiplier: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

/// Solver settings for a circle solve at tolerance `tol`.
///
/// The energy error near the minimum is quadratic in the gradient, so the
/// gradient tolerance scales like `√tol·Δ`; much tighter values fall below
/// what a value-based line search can resolve in double precision.
pub fn circle_settings(big_delta: f64, tol: f64, seed: u64) -> OptimSettings {
    OptimSettings {
        max_outer: 80,
        max_inner: 50_000,
        grad_tol: (1e-2 * math::sqrt(tol) * big_delta).max(1e-300),
        constraint_tol: 1e-12 * (2.0 * PI * big_delta * big_delta).max(1e-300),
        seed,
        ..OptimSettings::default()
    }
}

/// Minimizes the circle energy over all curves of order `order` from a random
/// start drawn from `seed`.
pub fn solve_circle_min(big_delta: f64, order: usize, tol: f64, seed: u64) -> Result<CircleSolution> {
    solve_circle_min_with(big_delta, order, tol, &circle_settings(big_delta, tol, seed))
}

/// [`solve_circle_min`] with explicit settings; the random start is drawn
/// from `settings.seed`.
pub fn solve_circle_min_with(
    big_delta: f64,
    order: usize,
    tol: f64,
    settings: &OptimSettings,
) -> Result<CircleSolution> {
    if order < 4 {
        return Err(Error::domain(format!("circle solver needs order ≥ 4, got {order}")));
    }
    check_delta_tol(big_delta, tol)?;
    if big_delta == 0.0 {
        return solve_circle_min_from(0.0, &FourierCurve::zeros(order)?, tol, settings);
    }
    let mut rng = Uniform::new(settings.seed);
    let target = 2.0 * PI * big_delta * big_delta;
    let init = loop {
        let x: Vec<f64> = (0..2 * order + 1).map(|_| rng.sample(-big_delta, big_delta)).collect();
        let c = FourierCurve::from_slice(&x)?;
        let raw = circle_constraint(&c);
        if raw > 1e-6 * target {
            break c.scaled(math::sqrt(target / raw));
        }
    };
    solve_circle_min_from(big_delta, &init, tol, settings)
}

fn check_delta_tol(big_delta: f64, tol: f64) -> Result<()> {
    if !(big_delta >= 0.0) || !big_delta.is_finite() {
        return Err(Error::domain(format!("Δ must be finite and non-negative, got {big_delta}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain(format!("tol must lie in (0, 1), got {tol}")));
    }
    Ok(())
}

/// Constrained minimization from a given start (which need not be feasible).
///
/// The augmented-Lagrangian iterate is finally rescaled onto the constraint
/// set, so the reported energy is that of an exactly feasible curve. The
/// solution is checked against `tol` (energy within `tol·6πΔ²` of `6πΔ²`,
/// at most `tol` of the mass outside modes 1 and 2); failure is a
/// convergence error.
pub fn solve_circle_min_from(
    big_delta: f64,
    init: &FourierCurve,
    tol: f64,
    settings: &OptimSettings,
) -> Result<CircleSolution> {
    check_delta_tol(big_delta, tol)?;
    let order = init.order();
    if big_delta == 0.0 {
        return Ok(CircleSolution {
            curve: FourierCurve::zeros(order)?,
            energy: 0.0,
            constraint_residual: 0.0,
            multiplier: 0.0,
            outer_iterations: 0,
            inner_iterations: 0,
        });
    }
    let target = 2.0 * PI * big_delta * big_delta;
    // Work in diagonally rescaled coordinates x = s·y, with s chosen so every
    // mode has unit combined weight; plain gradient descent is then well
    // conditioned regardless of the truncation order.
    let ew = flat_weights(order, energy_weight);
    let cw = flat_weights(order, constraint_weight);
    let scale: Vec<f64> = ew
        .iter()
        .zip(&cw)
        .map(|(e, c)| {
            let m = e + c.abs();
            if m > 0.0 { 1.0 / math::sqrt(m) } else { 1.0 }
        })
        .collect();
    let ew_y: Vec<f64> = ew.iter().zip(&scale).map(|(w, s)| w * s * s).collect();
    let cw_y: Vec<f64> = cw.iter().zip(&scale).map(|(w, s)| w * s * s).collect();
    let f = |y: &[f64], g: &mut [f64]| quadratic_flat(&ew_y, y, g, 0.0);
    let c = |y: &[f64], g: &mut [f64]| quadratic_flat(&cw_y, y, g, target);
    let y0: Vec<f64> = init.to_vec().iter().zip(&scale).map(|(x, s)| x / s).collect();
    let out = optim::augmented_lagrangian(&f, &c, &y0, settings)?;
    let x: Vec<f64> = out.x.iter().zip(&scale).map(|(y, s)| y * s).collect();

    let mut curve = if out.inner_iterations == 0 { init.clone() } else { FourierCurve::from_slice(&x)? };
    let raw = circle_constraint(&curve);
    if !(raw > 0.0) {
        return Err(convergence("iterate left the feasible cone", &out.x, raw - target));
    }
    if (raw - target).abs() > 4.0 * f64::EPSILON * target {
        curve = curve.scaled(math::sqrt(target / raw));
    }
    let energy = circle_energy(&curve);
    let residual = circle_constraint(&curve) - target;
    let floor = 6.0 * PI * big_delta * big_delta;
    if energy > floor * (1.0 + tol) || 1.0 - curve.mass_fraction(&[1, 2]) > tol {
        return Err(convergence(
            &format!("energy {energy:e} not within tol of the minimum {floor:e}"),
            &curve.to_vec(),
            residual,
        ));
    }
    Ok(CircleSolution {
        curve,
        energy,
        constraint_residual: residual,
        multiplier: out.multiplier,
        outer_iterations: out.outer_iterations,
        inner_iterations: out.inner_iterations,
    })
}

fn convergence(reason: &str, x: &[f64], residual: f64) -> Error {
    Error::Convergence(alloc::boxed::Box::new(crate::error::ConvergenceFailure {
        reason: reason.into(),
        iterate: x.to_vec(),
        value: f64::NAN,
        constraint_residual: residual,
        penalty: f64::NAN,
    }))
}

fn flat_weights(order: usize, w: fn(usize) -> f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * order + 1);
    v.push(w(0));
    v.extend((1..=order).map(w));
    v.extend((1..=order).map(w));
    v
}

fn quadratic_flat(w: &[f64], x: &[f64], g: &mut [f64], shift: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += w[i] * x[i] * x[i];
        g[i] = 2.0 * w[i] * x[i];
    }
    s - shift
}
