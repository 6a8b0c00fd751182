//! Excess-cone test fields on a polar grid.
//!
//! The construction takes a curve `α` meeting the circle constraint and
//! builds `W = h·η(r/h)·α(φ)`, `U = h·η(r/h)·(u e_r + v e_φ)` with
//! `u = −α²/2` and `v′ = (Δ² + α² − α′²)/2`. Outside `r = h` the fields are
//! 1-homogeneous and the membrane term vanishes identically, so the energy is
//! `h²·ln(1/h)·∫(α+α″)² + O(h²)`.
//!
//! Radial derivatives use the stencils of [`crate::grid`]; angular
//! derivatives are spectral.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::circle::{circle_constraint, FourierCurve};
use crate::error::{check_len, Error, Result};
use crate::fit::least_squares;
use crate::grid::{check_thickness, d1_stencil, d2_stencil, trapezoid_weights, EnergyBreakdown, Stencil};
use crate::math;
use crate::spectral::Fft;

/// Tensor-product polar grid: `nr` uniformly spaced radii in `(0, 1]` times
/// `nt` equispaced periodic angles `t_j = 2πj/nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    r: Vec<f64>,
    spacing: f64,
    nt: usize,
}

impl PolarGrid {
    /// Disk grid `r_i = (i+1)/nr`: the origin is left out and `r[nr-1] = 1`.
    pub fn disk(nr: usize, nt: usize) -> Result<Self> {
        Self::check_counts(nr, nt)?;
        let spacing = 1.0 / nr as f64;
        let mut r: Vec<f64> = (1..=nr).map(|i| i as f64 * spacing).collect();
        r[nr - 1] = 1.0;
        Ok(Self { r, spacing, nt })
    }

    /// Annulus grid from `r_min` to `r_max` inclusive.
    pub fn annulus(r_min: f64, r_max: f64, nr: usize, nt: usize) -> Result<Self> {
        Self::check_counts(nr, nt)?;
        if !(r_min > 0.0 && r_min < r_max && r_max <= 1.0) {
            return Err(Error::domain(format!("annulus [{r_min}, {r_max}] must satisfy 0 < r_min < r_max <= 1")));
        }
        let spacing = (r_max - r_min) / (nr - 1) as f64;
        let mut r: Vec<f64> = (0..nr).map(|i| r_min + i as f64 * spacing).collect();
        r[nr - 1] = r_max;
        Ok(Self { r, spacing, nt })
    }

    /// Disk grid with a whole number of cells (at least `cells_per_h`) below
    /// `r = h` and at least `min_nr` radii. Keeping `h/Δr` fixed makes the
    /// discretization error of the truncation shell the same at every `h`.
    pub fn resolving(h: f64, cells_per_h: usize, min_nr: usize, nt: usize) -> Result<Self> {
        check_thickness(h)?;
        let cells = cells_per_h.max(math::ceil(min_nr as f64 * h) as usize);
        let nr = math::ceil(cells as f64 / h - 1e-9) as usize;
        Self::disk(nr, nt)
    }

    fn check_counts(nr: usize, nt: usize) -> Result<()> {
        if nr < 4 {
            return Err(Error::domain(format!("polar grid needs at least 4 radii, got {nr}")));
        }
        if nt < 8 || !nt.is_power_of_two() {
            return Err(Error::domain(format!("angular count must be a power of two >= 8, got {nt}")));
        }
        Ok(())
    }

    pub fn nr(&self) -> usize {
        self.r.len()
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn radial_spacing(&self) -> f64 {
        self.spacing
    }

    pub fn angular_spacing(&self) -> f64 {
        2.0 * PI / self.nt as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        self.angular_spacing() * j as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.t(j)).collect()
    }

    /// Index of the radius equal to `r` up to a small fraction of a cell.
    pub fn ring_index(&self, r: f64) -> Option<usize> {
        let x = (r - self.r[0]) / self.spacing;
        let i = libm::round(x);
        if i < 0.0 || i as usize >= self.nr() || (x - i).abs() > 1e-6 {
            return None;
        }
        Some(i as usize)
    }

    fn radial_stencils(&self, i: usize) -> (Stencil, Stencil) {
        let n = self.nr();
        (d1_stencil(n, i, self.spacing), d2_stencil(n, i, self.spacing))
    }
}

/// Scalar field sampled on a [`PolarGrid`], stored ring by ring.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    nr: usize,
    nt: usize,
    values: Vec<f64>,
}

impl PolarField {
    pub fn zeros(grid: &PolarGrid) -> Self {
        Self { nr: grid.nr(), nt: grid.nt(), values: vec![0.0; grid.nr() * grid.nt()] }
    }

    /// Samples `f(r, t)` at every node.
    pub fn from_fn(grid: &PolarGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.nr() * grid.nt());
        for &r in grid.r() {
            for j in 0..grid.nt() {
                values.push(f(r, grid.t(j)));
            }
        }
        Self { nr: grid.nr(), nt: grid.nt(), values }
    }

    /// `radial(r)·angular(t)` with the angular factor sampled once.
    pub fn separable(grid: &PolarGrid, radial: impl Fn(f64) -> f64, angular: &[f64]) -> Result<Self> {
        check_len(grid.nt(), angular.len())?;
        let mut values = Vec::with_capacity(grid.nr() * grid.nt());
        for &r in grid.r() {
            let s = radial(r);
            values.extend(angular.iter().map(|a| s * a));
        }
        Ok(Self { nr: grid.nr(), nt: grid.nt(), values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ring(&self, i: usize) -> &[f64] {
        &self.values[i * self.nt..(i + 1) * self.nt]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nt + j]
    }

    fn check_grid(&self, grid: &PolarGrid) -> Result<()> {
        check_len(grid.nr() * grid.nt(), self.values.len())?;
        if self.nr != grid.nr() || self.nt != grid.nt() {
            return Err(Error::Dimension { expected: grid.nr(), found: self.nr });
        }
        Ok(())
    }

    fn radial_derivative(&self, s: &Stencil, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, c) in s.entries() {
            for (o, v) in out.iter_mut().zip(self.ring(k)) {
                *o += c * v;
            }
        }
    }
}

/// Cut-off profile applied to the 1-homogeneous field near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// `0` on `[0, 1/2]`, `s` on `[1, ∞)`, and the C² quintic
    /// `8x³ − (23/2)x⁴ + (9/2)x⁵`, `x = 2s − 1`, in between.
    #[default]
    Quintic,
}

impl Truncation {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Truncation::Quintic => {
                if s <= 0.5 {
                    0.0
                } else if s >= 1.0 {
                    s
                } else {
                    let x = 2.0 * s - 1.0;
                    x * x * x * (8.0 + x * (-11.5 + 4.5 * x))
                }
            }
        }
    }

    /// Derivative with respect to `s`.
    pub fn derivative(self, s: f64) -> f64 {
        match self {
            Truncation::Quintic => {
                if s <= 0.5 {
                    0.0
                } else if s >= 1.0 {
                    1.0
                } else {
                    let x = 2.0 * s - 1.0;
                    2.0 * x * x * (24.0 + x * (-46.0 + 22.5 * x))
                }
            }
        }
    }
}

/// Parameters of the truncated excess-cone construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EConeConfig {
    pub alpha: FourierCurve,
    pub big_delta: f64,
    pub h: f64,
    pub eta: Truncation,
}

impl EConeConfig {
    pub fn new(alpha: FourierCurve, big_delta: f64, h: f64) -> Result<Self> {
        let cfg = Self { alpha, big_delta, h, eta: Truncation::Quintic };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration built on the canonical minimizer `√(2/3)·Δ·cos 2t`.
    pub fn minimizing(big_delta: f64, h: f64, order: usize) -> Result<Self> {
        Self::new(FourierCurve::minimizer(order, big_delta)?, big_delta, h)
    }

    pub fn validate(&self) -> Result<()> {
        check_thickness(self.h)?;
        if !(self.big_delta > 0.0 && self.big_delta.is_finite()) {
            return Err(Error::domain(format!("Δ must be positive, got {}", self.big_delta)));
        }
        let target = 2.0 * PI * self.big_delta * self.big_delta;
        let residual = circle_constraint(&self.alpha) - target;
        if residual.abs() > 1e-8 * target {
            return Err(Error::precondition(format!(
                "α misses the constraint by {residual:e}; the tangential displacement would not close up"
            )));
        }
        Ok(())
    }
}

/// Displacement and height fields of an e-cone construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EConeFields {
    pub u_r: PolarField,
    pub u_phi: PolarField,
    pub w: PolarField,
}

/// Complex Fourier coefficients `c_k`, `k = −N..=N`, stored at `k + N`.
fn complex_coefficients(curve: &FourierCurve) -> Vec<Complex64> {
    let n = curve.order();
    let mut c = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    c[n] = Complex64::new(curve.a0(), 0.0);
    for k in 1..=n {
        let (a, b) = curve.mode(k);
        c[n + k] = Complex64::new(0.5 * a, -0.5 * b);
        c[n - k] = Complex64::new(0.5 * a, 0.5 * b);
    }
    c
}

fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn eval_complex(c: &[Complex64], t: f64) -> f64 {
    let n = (c.len() - 1) / 2;
    let mut s = c[n].re;
    for k in 1..=n {
        let e = Complex64::new(math::cos(k as f64 * t), math::sin(k as f64 * t));
        s += 2.0 * (c[n + k] * e).re;
    }
    s
}

/// Angular profiles `(α, u, v)` at the grid angles, with `v` the mean-zero
/// periodic antiderivative of `(Δ² + α² − α′²)/2` computed from the exact
/// Fourier coefficients.
pub fn angular_profiles(alpha: &FourierCurve, grid: &PolarGrid) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = alpha.order();
    let c = complex_coefficients(alpha);
    let dc: Vec<Complex64> = c
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::new(0.0, i as f64 - n as f64))
        .collect();
    let aa = convolve(&c, &c);
    let dd = convolve(&dc, &dc);
    let m = 2 * n;
    let v: Vec<Complex64> = (0..=2 * m)
        .map(|i| {
            let k = i as f64 - m as f64;
            if i == m {
                Complex64::new(0.0, 0.0)
            } else {
                // g_k / (i k), g = (Δ² + α² − α′²)/2 (Δ² only enters the dropped mean)
                0.5 * (aa[i] - dd[i]) / Complex64::new(0.0, k)
            }
        })
        .collect();
    let mut a_vals = Vec::with_capacity(grid.nt());
    let mut u_vals = Vec::with_capacity(grid.nt());
    let mut v_vals = Vec::with_capacity(grid.nt());
    for j in 0..grid.nt() {
        let t = grid.t(j);
        let a = alpha.evaluate(t);
        a_vals.push(a);
        u_vals.push(-0.5 * a * a);
        v_vals.push(eval_complex(&v, t));
    }
    (a_vals, u_vals, v_vals)
}

fn count_below(grid: &PolarGrid, h: f64) -> usize {
    grid.r().iter().filter(|&&r| r < h).count()
}

/// Samples the truncated construction on `grid`.
///
/// Requires at least 8 radii below `h` unless the grid starts at or beyond `h`
/// (where the fields are exactly 1-homogeneous).
pub fn build_econe_pair(cfg: &EConeConfig, grid: &PolarGrid) -> Result<EConeFields> {
    cfg.validate()?;
    let h = cfg.h;
    if grid.r()[0] < h && count_below(grid, h) < 8 {
        return Err(Error::Resolution(format!(
            "{} radii below h = {h}; at least 8 are needed",
            count_below(grid, h)
        )));
    }
    let (a, u, v) = angular_profiles(&cfg.alpha, grid);
    let eta = cfg.eta;
    let radial = move |r: f64| h * eta.eval(r / h);
    Ok(EConeFields {
        u_r: PolarField::separable(grid, radial, &u)?,
        u_phi: PolarField::separable(grid, radial, &v)?,
        w: PolarField::separable(grid, radial, &a)?,
    })
}

/// Untruncated 1-homogeneous fields `r·(u, v)` and `r·α`.
pub fn homogeneous_fields(alpha: &FourierCurve, grid: &PolarGrid) -> Result<EConeFields> {
    let (a, u, v) = angular_profiles(alpha, grid);
    let radial = |r: f64| r;
    Ok(EConeFields {
        u_r: PolarField::separable(grid, radial, &u)?,
        u_phi: PolarField::separable(grid, radial, &v)?,
        w: PolarField::separable(grid, radial, &a)?,
    })
}

/// Per-ring derivative workspace.
struct RingWork {
    fft: Fft,
    scratch: Vec<Complex64>,
    buf: [Vec<f64>; 9],
}

impl RingWork {
    fn new(nt: usize) -> Self {
        Self {
            fft: Fft::new(nt),
            scratch: Vec::with_capacity(nt),
            buf: core::array::from_fn(|_| vec![0.0; nt]),
        }
    }
}

/// Pointwise energy densities on ring `i`: the membrane term
/// `|2 sym DU + ∇W⊗∇W − Δ² e_φ⊗e_φ|²` and the unweighted bending term `|∇²W|²`.
pub fn ring_densities(fields: &EConeFields, big_delta: f64, grid: &PolarGrid, i: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    for f in [&fields.u_r, &fields.u_phi, &fields.w] {
        f.check_grid(grid)?;
    }
    let mut work = RingWork::new(grid.nt());
    let mut mem = vec![0.0; grid.nt()];
    let mut bend = vec![0.0; grid.nt()];
    densities(fields, big_delta, grid, i, &mut work, &mut mem, &mut bend);
    Ok((mem, bend))
}

fn densities(
    fields: &EConeFields,
    big_delta: f64,
    grid: &PolarGrid,
    i: usize,
    work: &mut RingWork,
    mem: &mut [f64],
    bend: &mut [f64],
) {
    let r = grid.r()[i];
    let (s1, s2) = grid.radial_stencils(i);
    let [wr, wrr, wp, wpp, wrp, urr, upr, urp, upp] = &mut work.buf;
    fields.w.radial_derivative(&s1, wr);
    fields.w.radial_derivative(&s2, wrr);
    fields.u_r.radial_derivative(&s1, urr);
    fields.u_phi.radial_derivative(&s1, upr);
    work.fft.derivatives(fields.w.ring(i), &mut work.scratch, wp, wpp);
    work.fft.derivative(wr, &mut work.scratch, wrp);
    work.fft.derivative(fields.u_r.ring(i), &mut work.scratch, urp);
    work.fft.derivative(fields.u_phi.ring(i), &mut work.scratch, upp);
    let d2 = big_delta * big_delta;
    let ur = fields.u_r.ring(i);
    let up = fields.u_phi.ring(i);
    for j in 0..grid.nt() {
        let m_rr = 2.0 * urr[j] + wr[j] * wr[j];
        let m_pp = 2.0 * (upp[j] + ur[j]) / r + (wp[j] / r) * (wp[j] / r) - d2;
        let m_rp = urp[j] / r + upr[j] - up[j] / r + wr[j] * wp[j] / r;
        mem[j] = m_rr * m_rr + m_pp * m_pp + 2.0 * m_rp * m_rp;
        let twist = wrp[j] / r - wp[j] / (r * r);
        let lap = wr[j] / r + wpp[j] / (r * r);
        bend[j] = wrr[j] * wrr[j] + 2.0 * twist * twist + lap * lap;
    }
}

/// Membrane and bending integrals `∫|M|²` and `h²∫|∇²W|²` over the grid,
/// with area element `r dr dφ` (trapezoid in both directions). The whole
/// membrane contribution is reported as `membrane_stretch`.
pub fn fvk_energy_polar(fields: &EConeFields, big_delta: f64, h: f64, grid: &PolarGrid) -> Result<EnergyBreakdown> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("thickness must be finite and non-negative, got {h}")));
    }
    let (mem, bend) = integrate_densities(fields, big_delta, grid)?;
    Ok(EnergyBreakdown::new(0.0, mem, h * h * bend))
}

/// `∫|∇²W|²` over the grid.
pub fn bending_integral(w: &PolarField, grid: &PolarGrid) -> Result<f64> {
    let zero = PolarField::zeros(grid);
    let fields = EConeFields { u_r: zero.clone(), u_phi: zero, w: w.clone() };
    Ok(integrate_densities(&fields, 0.0, grid)?.1)
}

fn integrate_densities(fields: &EConeFields, big_delta: f64, grid: &PolarGrid) -> Result<(f64, f64)> {
    for f in [&fields.u_r, &fields.u_phi, &fields.w] {
        f.check_grid(grid)?;
    }
    let weights = trapezoid_weights(grid.nr(), grid.radial_spacing());
    let dt = grid.angular_spacing();
    let mut work = RingWork::new(grid.nt());
    let mut mem = vec![0.0; grid.nt()];
    let mut bend = vec![0.0; grid.nt()];
    let (mut m_total, mut b_total) = (0.0, 0.0);
    for (i, (&r, &wt)) in grid.r().iter().zip(&weights).enumerate() {
        densities(fields, big_delta, grid, i, &mut work, &mut mem, &mut bend);
        let scale = wt * r * dt;
        m_total += scale * mem.iter().sum::<f64>();
        b_total += scale * bend.iter().sum::<f64>();
    }
    Ok((m_total, b_total))
}

/// `κ(r) = ½∫₀^{2π}(W_r² − (W_φ/r)² + (W_r W_φ)_φ/r) dφ`, the integral of
/// `det ∇²W` over the disk of radius `r`, evaluated at grid radius `r`.
///
/// Returns 0 on rings where `W` vanishes (inside the truncation core).
pub fn gauss_curvature(w: &PolarField, r: f64, grid: &PolarGrid) -> Result<f64> {
    w.check_grid(grid)?;
    let i = grid
        .ring_index(r)
        .ok_or_else(|| Error::domain(format!("radius {r} is not a grid radius")))?;
    if w.ring(i).iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let nt = grid.nt();
    let rr = grid.r()[i];
    let (s1, _) = grid.radial_stencils(i);
    let mut wr = vec![0.0; nt];
    w.radial_derivative(&s1, &mut wr);
    let fft = Fft::new(nt);
    let mut scratch = Vec::with_capacity(nt);
    let mut wp = vec![0.0; nt];
    fft.derivative(w.ring(i), &mut scratch, &mut wp);
    let flux: Vec<f64> = wr.iter().zip(&wp).map(|(a, b)| a * b).collect();
    let mut dflux = vec![0.0; nt];
    fft.derivative(&flux, &mut scratch, &mut dflux);
    let mut s = 0.0;
    for j in 0..nt {
        s += wr[j] * wr[j] - (wp[j] / rr) * (wp[j] / rr) + dflux[j] / rr;
    }
    Ok(0.5 * s * grid.angular_spacing())
}

/// Fit of `E/h² = C1·ln(1/h) + C2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub c1: f64,
    pub c2: f64,
    /// Largest `|fitted − E|/E` over the samples.
    pub max_rel_residual: f64,
}

/// Least-squares fit of `energy/h²` against `ln(1/h)` over `(h, energy)` samples.
pub fn fit_log_coefficient(samples: &[(f64, f64)]) -> Result<LogFit> {
    if samples.len() < 4 {
        return Err(Error::domain(format!("need at least 4 samples, got {}", samples.len())));
    }
    let mut design = Vec::with_capacity(2 * samples.len());
    let mut y = Vec::with_capacity(samples.len());
    for &(h, e) in samples {
        if !(h > 0.0 && h < 1.0) || !e.is_finite() {
            return Err(Error::domain(format!("sample (h = {h}, E = {e}) outside 0 < h < 1")));
        }
        design.extend_from_slice(&[math::ln(1.0 / h), 1.0]);
        y.push(e / (h * h));
    }
    let fit = least_squares(&design, 2, &y)?;
    let (c1, c2) = (fit.coefficients[0], fit.coefficients[1]);
    let max_rel_residual = samples
        .iter()
        .map(|&(h, e)| {
            let model = h * h * (c1 * math::ln(1.0 / h) + c2);
            if e != 0.0 { ((model - e) / e).abs() } else { model.abs() }
        })
        .fold(0.0, f64::max);
    Ok(LogFit { c1, c2, max_rel_residual })
}
