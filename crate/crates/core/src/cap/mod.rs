//! Radially symmetric spherical cap.
//!
//! The energy of a profile `(u, w)` on `[0, 1]` is
//!
//! ```text
//! E_h = ∫ u²/r + r(u′ + w′² − 4r²)² + h²(r w″² + w′²/r) dr
//! ```
//!
//! over profiles with `w(0) = 0` and `w(1) = 1 − δ`. This module holds the
//! discrete energy and its derivatives on a cell-centered [`RadialGrid`], a
//! Newton minimizer, the spherical-inversion construction
//! ([`build_inversion`]) and the diagnostics used by the lower-bound analysis
//! ([`tau`], [`g_a_profile`], [`lower_bound_report`]).
//!
//! # Discretization
//!
//! With `G = D₁w`, `B = D₂w` and `S = D₁u + G² − 4r²` evaluated by the grid
//! stencils, the discrete energy is the trapezoid sum of
//! `u²/r + rS² + h²(rB² + G²/r)`. The node nearest the origin is not free:
//! `u₀ = u₁/3` extrapolates `u` linearly to `u(0) = 0` and `w₀ = w₁/9`
//! extrapolates `w` as an even function to `w(0) = 0`. The last height
//! `w_{n−1} = 1 − δ` is fixed. The remaining unknowns are interleaved as
//! `u₁, w₁, u₂, w₂, …, u_{n−2}, w_{n−2}, u_{n−1}`, which gives the Hessian a
//! bandwidth of five.

mod construct;
mod diagnostics;

pub use construct::{build_connector, build_inversion, choose_rl, ConnectorSpec, Inversion, RlBranch, RlChoice};
pub use diagnostics::{
    g_a_profile, in_well, lower_bound_report, tau, GaBound, GaProfile, L1Bound, LowerBoundReport, Ratio, Well,
    GA_MIN_NODES,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::grid::{check_depth, check_thickness, d1_stencil, d2_stencil, EnergyBreakdown, RadialGrid, Stencil};
use crate::optim::{self, BandedSym, Descent, Objective, OptimSettings, SecondOrder};

/// Tolerance on the `r → 0` extrapolations of a valid profile.
pub const ORIGIN_TOL: f64 = 1e-6;

/// Pin factor for `u₀ = u₁·U_PIN` (linear through the origin).
pub const U_PIN: f64 = 1.0 / 3.0;
/// Pin factor for `w₀ = w₁·W_PIN` (even through the origin).
pub const W_PIN: f64 = 1.0 / 9.0;

const BANDWIDTH: usize = 5;

/// Nodal values of `(u, w)` on a cell-centered grid, for depth `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapProfile {
    grid: RadialGrid,
    u: Vec<f64>,
    w: Vec<f64>,
    delta: f64,
}

impl CapProfile {
    /// Checks lengths, `w(1) = 1 − δ` and that both fields extrapolate to
    /// zero at the origin (`u` linearly, `w` evenly) within [`ORIGIN_TOL`].
    pub fn new(grid: RadialGrid, u: Vec<f64>, w: Vec<f64>, delta: f64) -> Result<Self> {
        check_depth(delta)?;
        check_len(grid.len(), u.len())?;
        check_len(grid.len(), w.len())?;
        if grid.len() < 4 {
            return Err(Error::domain(format!("cap profiles need at least 4 nodes, got {}", grid.len())));
        }
        if !cell_centered(&grid) {
            return Err(Error::domain("cap profiles live on cell-centered grids"));
        }
        if !u.iter().chain(&w).all(|v| v.is_finite()) {
            return Err(Error::domain("non-finite profile value"));
        }
        let p = Self { grid, u, w, delta };
        let last = *p.w.last().unwrap_or(&0.0);
        if (last - (1.0 - delta)).abs() > 1e-12 {
            return Err(Error::domain(format!("w(1) = {last} but 1 − δ = {}", 1.0 - delta)));
        }
        if p.w_at_origin().abs() > ORIGIN_TOL || p.u_at_origin().abs() > ORIGIN_TOL {
            return Err(Error::domain(format!(
                "profile does not vanish at the origin: u(0) ≈ {:e}, w(0) ≈ {:e}",
                p.u_at_origin(),
                p.w_at_origin()
            )));
        }
        Ok(p)
    }

    /// `u = 0`, `w = (1 − δ)r²`.
    pub fn paraboloid(grid: RadialGrid, delta: f64) -> Result<Self> {
        let u = vec![0.0; grid.len()];
        let mut w: Vec<f64> = grid.r().iter().map(|r| (1.0 - delta) * r * r).collect();
        if let Some(last) = w.last_mut() {
            *last = 1.0 - delta;
        }
        Self::new(grid, u, w, delta)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `u(0)` by linear extrapolation from the first two nodes.
    pub fn u_at_origin(&self) -> f64 {
        0.5 * (3.0 * self.u[0] - self.u[1])
    }

    /// `w(0)` by extrapolation in `r²` from the first two nodes.
    pub fn w_at_origin(&self) -> f64 {
        (9.0 * self.w[0] - self.w[1]) / 8.0
    }

    /// Nodal `w′`.
    pub fn slope(&self) -> Vec<f64> {
        crate::grid::d1(&self.w, &self.grid).unwrap_or_default()
    }
}

fn cell_centered(grid: &RadialGrid) -> bool {
    (grid.r0() - 0.5 * grid.spacing()).abs() <= 1e-12 * grid.spacing().max(1e-300) + 1e-15
}

/// Discrete cap energy for fixed `h` and `δ` as a function of the free nodal
/// values (see the module docs for the layout).
#[derive(Debug, Clone)]
pub struct CapObjective {
    grid: RadialGrid,
    h: f64,
    delta: f64,
    weights: Vec<f64>,
    s1: Vec<Stencil>,
    s2: Vec<Stencil>,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    U,
    W,
}

impl CapObjective {
    pub fn new(grid: RadialGrid, h: f64, delta: f64) -> Result<Self> {
        check_thickness(h)?;
        check_depth(delta)?;
        let n = grid.len();
        if n < 4 {
            return Err(Error::domain(format!("cap grid needs at least 4 nodes, got {n}")));
        }
        if !cell_centered(&grid) {
            return Err(Error::domain("cap energy needs a cell-centered grid"));
        }
        let dr = grid.spacing();
        Ok(Self {
            weights: grid.trapezoid_weights(),
            s1: (0..n).map(|i| d1_stencil(n, i, dr)).collect(),
            s2: (0..n).map(|i| d2_stencil(n, i, dr)).collect(),
            grid,
            h,
            delta,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of free unknowns, `2n − 3`.
    pub fn dofs(&self) -> usize {
        2 * self.grid.len() - 3
    }

    /// Unknown index and chain-rule factor of a nodal value; `None` for the
    /// fixed boundary height.
    fn dof(&self, field: Field, k: usize) -> Option<(usize, f64)> {
        let n = self.grid.len();
        match field {
            Field::U if k == 0 => Some((0, U_PIN)),
            Field::U => Some((2 * (k - 1), 1.0)),
            Field::W if k == 0 => Some((1, W_PIN)),
            Field::W if k == n - 1 => None,
            Field::W => Some((2 * k - 1, 1.0)),
        }
    }

    /// Expands unknowns to full nodal `(u, w)`.
    pub fn expand(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        let mut u = vec![0.0; n];
        let mut w = vec![0.0; n];
        for k in 1..n {
            u[k] = x[2 * (k - 1)];
        }
        for k in 1..n - 1 {
            w[k] = x[2 * k - 1];
        }
        u[0] = U_PIN * u[1];
        w[0] = W_PIN * w[1];
        w[n - 1] = 1.0 - self.delta;
        (u, w)
    }

    /// Extracts the unknowns of a profile (pinned values are recomputed on
    /// expansion, so the profile should already satisfy the pins).
    pub fn compress(&self, p: &CapProfile) -> Result<Vec<f64>> {
        check_len(self.grid.len(), p.u.len())?;
        let n = self.grid.len();
        let mut x = vec![0.0; self.dofs()];
        for k in 1..n {
            x[2 * (k - 1)] = p.u[k];
        }
        for k in 1..n - 1 {
            x[2 * k - 1] = p.w[k];
        }
        Ok(x)
    }

    pub fn profile(&self, x: &[f64]) -> Result<CapProfile> {
        check_len(self.dofs(), x.len())?;
        let (u, w) = self.expand(x);
        CapProfile::new(self.grid.clone(), u, w, self.delta)
    }

    fn breakdown_nodal(&self, u: &[f64], w: &[f64]) -> EnergyBreakdown {
        let h2 = self.h * self.h;
        let (mut mu, mut ms, mut bend) = (0.0, 0.0, 0.0);
        for (i, &r) in self.grid.r().iter().enumerate() {
            let om = self.weights[i];
            let g = self.s1[i].apply(w);
            let b = self.s2[i].apply(w);
            let s = self.s1[i].apply(u) + g * g - 4.0 * r * r;
            mu += om * u[i] * u[i] / r;
            ms += om * r * s * s;
            bend += om * h2 * (r * b * b + g * g / r);
        }
        EnergyBreakdown::new(mu, ms, bend)
    }

    pub fn breakdown(&self, x: &[f64]) -> EnergyBreakdown {
        let (u, w) = self.expand(x);
        self.breakdown_nodal(&u, &w)
    }

    /// Partial derivatives with respect to every nodal value (pins ignored).
    fn nodal_gradient(&self, u: &[f64], w: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        let h2 = self.h * self.h;
        let mut du = vec![0.0; n];
        let mut dw = vec![0.0; n];
        let mut e = 0.0;
        for (i, &r) in self.grid.r().iter().enumerate() {
            let om = self.weights[i];
            let g = self.s1[i].apply(w);
            let b = self.s2[i].apply(w);
            let s = self.s1[i].apply(u) + g * g - 4.0 * r * r;
            e += om * (u[i] * u[i] / r + r * s * s + h2 * (r * b * b + g * g / r));
            du[i] += 2.0 * om * u[i] / r;
            let a = 2.0 * om * r * s;
            let cg = 2.0 * a * g + 2.0 * om * h2 * g / r;
            let cb = 2.0 * om * h2 * r * b;
            for (k, c) in self.s1[i].entries() {
                du[k] += a * c;
                dw[k] += cg * c;
            }
            for (k, c) in self.s2[i].entries() {
                dw[k] += cb * c;
            }
        }
        (e, du, dw)
    }

    fn fold(&self, du: &[f64], dw: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.grid.len() {
            if let Some((j, c)) = self.dof(Field::U, k) {
                grad[j] += c * du[k];
            }
            if let Some((j, c)) = self.dof(Field::W, k) {
                grad[j] += c * dw[k];
            }
        }
    }

    fn mapped(&self, field: Field, st: &Stencil, scale: f64, out: &mut Vec<(usize, f64)>) {
        for (k, c) in st.entries() {
            if let Some((j, f)) = self.dof(field, k) {
                out.push((j, scale * c * f));
            }
        }
    }
}

fn add_outer(h: &mut BandedSym, v: &[(usize, f64)], scale: f64) {
    for &(i, a) in v {
        for &(j, b) in v {
            if i >= j {
                h.add(i, j, scale * a * b);
            }
        }
    }
}

impl Objective for CapObjective {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (u, w) = self.expand(x);
        let (e, du, dw) = self.nodal_gradient(&u, &w);
        self.fold(&du, &dw, grad);
        e
    }
}

impl SecondOrder for CapObjective {
    fn dim(&self) -> usize {
        self.dofs()
    }

    fn bandwidth(&self) -> usize {
        BANDWIDTH
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        Objective::eval(self, x, grad)
    }

    fn hessian(&self, x: &[f64], hess: &mut BandedSym) {
        hess.clear();
        let (u, w) = self.expand(x);
        let h2 = self.h * self.h;
        let mut ds = Vec::with_capacity(8);
        let mut sw = Vec::with_capacity(4);
        let mut single = Vec::with_capacity(1);
        for (i, &r) in self.grid.r().iter().enumerate() {
            let om = self.weights[i];
            let g = self.s1[i].apply(&w);
            let s = self.s1[i].apply(&u) + g * g - 4.0 * r * r;
            single.clear();
            if let Some((j, f)) = self.dof(Field::U, i) {
                single.push((j, f));
            }
            add_outer(hess, &single, 2.0 * om / r);
            ds.clear();
            self.mapped(Field::U, &self.s1[i], 1.0, &mut ds);
            self.mapped(Field::W, &self.s1[i], 2.0 * g, &mut ds);
            add_outer(hess, &ds, 2.0 * om * r);
            sw.clear();
            self.mapped(Field::W, &self.s1[i], 1.0, &mut sw);
            add_outer(hess, &sw, 4.0 * om * r * s + 2.0 * om * h2 / r);
            sw.clear();
            self.mapped(Field::W, &self.s2[i], 1.0, &mut sw);
            add_outer(hess, &sw, 2.0 * om * h2 * r);
        }
    }
}

/// Discrete cap energy of a profile, term by term.
pub fn cap_energy(p: &CapProfile, h: f64) -> Result<EnergyBreakdown> {
    let obj = CapObjective::new(p.grid.clone(), h, p.delta)?;
    Ok(obj.breakdown_nodal(&p.u, &p.w))
}

/// Gradient of the discrete energy with respect to the free nodal values,
/// returned as full-length `(du, dw)` with zeros at the pinned origin nodes
/// and at the fixed boundary height.
pub fn cap_gradient(p: &CapProfile, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let obj = CapObjective::new(p.grid.clone(), h, p.delta)?;
    let x = obj.compress(p)?;
    let mut g = vec![0.0; obj.dofs()];
    Objective::eval(&obj, &x, &mut g);
    let n = p.grid.len();
    let mut du = vec![0.0; n];
    let mut dw = vec![0.0; n];
    for k in 1..n {
        du[k] = g[2 * (k - 1)];
    }
    for k in 1..n - 1 {
        dw[k] = g[2 * k - 1];
    }
    Ok((du, dw))
}

/// `u′ + w′² − 4r²` at every node (the membrane strain of the stretch term).
pub fn membrane_strain(p: &CapProfile) -> Vec<f64> {
    let n = p.grid.len();
    let dr = p.grid.spacing();
    p.grid
        .r()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let g = d1_stencil(n, i, dr).apply(&p.w);
            d1_stencil(n, i, dr).apply(&p.u) + g * g - 4.0 * r * r
        })
        .collect()
}

/// Result of [`minimize_cap`].
#[derive(Debug, Clone, PartialEq)]
pub struct CapMinimum {
    pub profile: CapProfile,
    pub energy: EnergyBreakdown,
    /// Energy after each accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// `false` if the iteration budget ran out first (the best iterate is
    /// still returned).
    pub converged: bool,
}

/// Default settings for [`minimize_cap`]: `tol` bounds the gradient sup-norm.
pub fn cap_settings(tol: f64) -> OptimSettings {
    OptimSettings { max_inner: 400, grad_tol: tol, ..OptimSettings::default() }
}

/// Minimizes the discrete energy starting from `init` (which must be a
/// profile for the same `δ`). Uses Newton steps with Armijo backtracking, so
/// the energy trace is non-increasing.
pub fn minimize_cap(h: f64, delta: f64, init: &CapProfile, tol: f64) -> Result<CapMinimum> {
    minimize_cap_with(h, delta, init, &cap_settings(tol))
}

pub fn minimize_cap_with(h: f64, delta: f64, init: &CapProfile, settings: &OptimSettings) -> Result<CapMinimum> {
    if (init.delta - delta).abs() > 0.0 {
        return Err(Error::domain(format!("initial profile is for δ = {}, not {delta}", init.delta)));
    }
    let obj = CapObjective::new(init.grid.clone(), h, delta)?;
    let x0 = obj.compress(init)?;
    let Descent { x, trace, converged, .. } = optim::newton(&obj, &x0, settings)?;
    let profile = obj.profile(&x)?;
    let energy = obj.breakdown(&x);
    Ok(CapMinimum { profile, energy, iterations: trace.len(), trace, converged })
}
