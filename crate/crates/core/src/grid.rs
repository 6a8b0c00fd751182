//! Radial grids, trapezoid quadrature and second-order difference stencils.
//!
//! Every radial integrand in this crate carries a `1/r` factor somewhere, so
//! grids never contain `r = 0`. The default grid is cell-centered at the
//! origin: `r[i] = (i + 1/2)·Δr` with `r[n-1] = 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

/// Uniform radial grid on `[r0, 1]` with `r0 > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r: Vec<f64>,
    spacing: f64,
}

impl RadialGrid {
    /// Cell-centered grid: `r0 = Δr/2`, `r[n-1] = 1`, so `Δr = 1/(n - 1/2)`.
    pub fn cell_centered(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("radial grid needs n >= 2, got {n}")));
        }
        let spacing = 1.0 / (n as f64 - 0.5);
        let mut r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * spacing).collect();
        r[n - 1] = 1.0;
        Ok(Self { r, spacing })
    }

    /// Uniform grid from `r0` to 1 with `n` nodes.
    pub fn uniform(r0: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("radial grid needs n >= 2, got {n}")));
        }
        if !(r0 > 0.0 && r0 < 1.0) {
            return Err(Error::domain(format!("first radius must lie in (0, 1), got {r0}")));
        }
        let spacing = (1.0 - r0) / (n - 1) as f64;
        let mut r: Vec<f64> = (0..n).map(|i| r0 + i as f64 * spacing).collect();
        r[n - 1] = 1.0;
        Ok(Self { r, spacing })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn r0(&self) -> f64 {
        self.r[0]
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Composite trapezoid weights over `[r0, 1]`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.len(), self.spacing)
    }

    /// Index of the node equal to `r` (to within a fraction of a cell).
    pub fn index_of(&self, r: f64) -> Option<usize> {
        let x = (r - self.r0()) / self.spacing;
        let i = libm::round(x);
        if i < 0.0 || i as usize >= self.len() || (x - i).abs() > 1e-6 {
            return None;
        }
        Some(i as usize)
    }
}

pub(crate) fn trapezoid_weights(n: usize, spacing: f64) -> Vec<f64> {
    let mut w = vec![spacing; n];
    w[0] = 0.5 * spacing;
    w[n - 1] = 0.5 * spacing;
    w
}

/// Composite trapezoid integral of nodal `values` over `[r0, 1]`.
pub fn integrate(values: &[f64], grid: &RadialGrid) -> Result<f64> {
    check_len(grid.len(), values.len())?;
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    Ok(grid.spacing * (0.5 * (values[0] + values[n - 1]) + inner))
}

/// A difference stencil: `Σ coef[k]·f[start + k]` for `k < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub start: usize,
    pub coef: [f64; 4],
    pub len: usize,
}

impl Stencil {
    pub fn apply(&self, f: &[f64]) -> f64 {
        self.entries().map(|(j, c)| c * f[j]).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coef[..self.len]
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.start + k, c))
    }
}

/// First-derivative stencil at node `i` of an `n`-node uniform grid:
/// central in the interior, one-sided three-point at the ends.
pub fn d1_stencil(n: usize, i: usize, spacing: f64) -> Stencil {
    debug_assert!(n >= 3 && i < n);
    let s = 1.0 / spacing;
    if i == 0 {
        Stencil { start: 0, coef: [-1.5 * s, 2.0 * s, -0.5 * s, 0.0], len: 3 }
    } else if i == n - 1 {
        Stencil { start: n - 3, coef: [0.5 * s, -2.0 * s, 1.5 * s, 0.0], len: 3 }
    } else {
        Stencil { start: i - 1, coef: [-0.5 * s, 0.0, 0.5 * s, 0.0], len: 3 }
    }
}

/// Second-derivative stencil at node `i`: central in the interior,
/// one-sided four-point (second order) at the ends when `n >= 4`.
pub fn d2_stencil(n: usize, i: usize, spacing: f64) -> Stencil {
    debug_assert!(n >= 3 && i < n);
    let s = 1.0 / (spacing * spacing);
    if n == 3 {
        return Stencil { start: 0, coef: [s, -2.0 * s, s, 0.0], len: 3 };
    }
    if i == 0 {
        Stencil { start: 0, coef: [2.0 * s, -5.0 * s, 4.0 * s, -s], len: 4 }
    } else if i == n - 1 {
        Stencil { start: n - 4, coef: [-s, 4.0 * s, -5.0 * s, 2.0 * s], len: 4 }
    } else {
        Stencil { start: i - 1, coef: [s, -2.0 * s, s, 0.0], len: 3 }
    }
}

fn apply_all(
    values: &[f64],
    grid: &RadialGrid,
    stencil: fn(usize, usize, f64) -> Stencil,
) -> Result<Vec<f64>> {
    check_len(grid.len(), values.len())?;
    let n = values.len();
    if n < 3 {
        return Err(Error::Dimension { expected: 3, found: n });
    }
    Ok((0..n).map(|i| stencil(n, i, grid.spacing).apply(values)).collect())
}

/// Nodal first derivative.
pub fn d1(values: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    apply_all(values, grid, d1_stencil)
}

/// Nodal second derivative.
pub fn d2(values: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    apply_all(values, grid, d2_stencil)
}

/// Term-by-term energy decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    /// `∫u²/r` for the cap; zero for the e-cone.
    pub membrane_u: f64,
    /// `∫r(u′+w′²−4r²)²` for the cap, the full polar membrane term for the e-cone.
    pub membrane_stretch: f64,
    /// `h²`-weighted bending.
    pub bend: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(membrane_u: f64, membrane_stretch: f64, bend: f64) -> Self {
        Self {
            membrane_u,
            membrane_stretch,
            bend,
            total: membrane_u + membrane_stretch + bend,
        }
    }

    pub fn membrane(&self) -> f64 {
        self.membrane_u + self.membrane_stretch
    }
}

/// Sheet thickness `h`, indentation depth `delta` and excess-angle parameter `big_delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub h: f64,
    pub delta: f64,
    pub big_delta: f64,
}

impl ModelParams {
    pub fn new(h: f64, delta: f64, big_delta: f64) -> Result<Self> {
        let p = Self { h, delta, big_delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_thickness(self.h)?;
        check_depth(self.delta)?;
        if !(self.big_delta > 0.0 && self.big_delta.is_finite()) {
            return Err(Error::domain(format!("Delta must be positive, got {}", self.big_delta)));
        }
        Ok(())
    }
}

pub(crate) fn check_thickness(h: f64) -> Result<()> {
    if h > 0.0 && h <= 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("thickness h must lie in (0, 1/2], got {h}")))
    }
}

pub(crate) fn check_depth(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::domain(format!("indentation depth must lie in [0, 1], got {delta}")))
    }
}
