//! Well membership, exit radius `τ`, the functions `g_a`, and ratio tables for
//! the lower-bound inequalities.

use alloc::format;
use alloc::vec::Vec;

use super::{cap_energy, CapProfile};
use crate::error::{Error, Result};
use crate::grid::{check_thickness, EnergyBreakdown};
use crate::math;

/// Minimum number of grid nodes inside `[a, 2a]` for [`g_a_profile`].
pub const GA_MIN_NODES: usize = 16;

/// The two slope wells around `±2t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Well {
    /// `(3t/2, 5t/2)`.
    Plus,
    /// `(−5t/2, −3t/2)`.
    Minus,
}

/// Well containing `slope` at radius `t`, using open intervals.
pub fn in_well(slope: f64, t: f64) -> Option<Well> {
    if slope > 1.5 * t && slope < 2.5 * t {
        Some(Well::Plus)
    } else if slope < -1.5 * t && slope > -2.5 * t {
        Some(Well::Minus)
    } else {
        None
    }
}

/// Largest grid radius at which `w′` lies outside both wells; 0 if `w′` is
/// in a well at every node.
pub fn tau(p: &CapProfile) -> f64 {
    let slope = p.slope();
    p.grid()
        .r()
        .iter()
        .zip(&slope)
        .rev()
        .find(|&(&r, &s)| in_well(s, r).is_none())
        .map_or(0.0, |(&r, _)| r)
}

/// `g_a` sampled on `[a, 2a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaProfile {
    pub a: f64,
    /// `a`, the grid radii strictly inside `(a, 2a)`, and `2a`.
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    pub l2_norm: f64,
    /// `max g_a − min g_a` on the samples.
    pub oscillation: f64,
}

fn interp(r: &[f64], f: &[f64], x: f64) -> f64 {
    let i = match r.iter().position(|&v| v >= x) {
        Some(0) => return f[0],
        Some(i) => i,
        None => return f[f.len() - 1],
    };
    let t = (x - r[i - 1]) / (r[i] - r[i - 1]);
    f[i - 1] + t * (f[i] - f[i - 1])
}

fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2).zip(f.windows(2)).map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1])).sum()
}

/// Nodes of `[a, 2a]` with linearly interpolated end values of `f`.
fn subinterval(p: &CapProfile, f: &[f64], a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = p.grid().r();
    let inner: Vec<usize> = (0..r.len()).filter(|&i| r[i] > a && r[i] < b).collect();
    if inner.len() < GA_MIN_NODES || a < r[0] || b > 1.0 {
        return Err(Error::Resolution(format!(
            "[{a}, {b}] holds {} grid nodes; at least {GA_MIN_NODES} are needed",
            inner.len()
        )));
    }
    let mut xs = Vec::with_capacity(inner.len() + 2);
    let mut fs = Vec::with_capacity(inner.len() + 2);
    xs.push(a);
    fs.push(interp(r, f, a));
    for &i in &inner {
        xs.push(r[i]);
        fs.push(f[i]);
    }
    xs.push(b);
    fs.push(interp(r, f, b));
    Ok((xs, fs))
}

/// `g_a(r) = ∫_a^r (4t² − w′²)dt + c_a` on `I_a = [a, 2a]`, with `c_a` making
/// the mean zero, and its `L²(I_a)` norm.
pub fn g_a_profile(p: &CapProfile, a: f64) -> Result<GaProfile> {
    if !(a > 0.0 && a <= 0.5) {
        return Err(Error::domain(format!("a must lie in (0, 1/2], got {a}")));
    }
    let slope = p.slope();
    let integrand: Vec<f64> = p.grid().r().iter().zip(&slope).map(|(r, s)| 4.0 * r * r - s * s).collect();
    let (xs, fs) = subinterval(p, &integrand, a, 2.0 * a)?;
    let mut g = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    g.push(0.0);
    for k in 1..xs.len() {
        acc += 0.5 * (xs[k] - xs[k - 1]) * (fs[k] + fs[k - 1]);
        g.push(acc);
    }
    let mean = trapezoid(&xs, &g) / a;
    g.iter_mut().for_each(|v| *v -= mean);
    let sq: Vec<f64> = g.iter().map(|v| v * v).collect();
    let l2_norm = math::sqrt(trapezoid(&xs, &sq));
    let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(GaProfile { a, r: xs, values: g, l2_norm, oscillation: hi - lo })
}

/// Both sides of one inequality `lhs ≲ rhs` and their quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Ratio {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        Self { lhs, rhs, ratio }
    }
}

/// `‖w′‖_{L¹[0,s]} ≤ (s/h)·E^{1/2}` at one `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Bound {
    pub s: f64,
    pub bound: Ratio,
}

/// `g_a` norm and the two bounds available when `w′` stays in the wells on `I_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaBound {
    pub a: f64,
    /// `‖g_a‖ / (a^{1/2}E^{1/2})`.
    pub norm: Ratio,
    /// `∫_{I_a}(4t² − w′²)² / ((1/a + a/h)E)`, when `w′ ∈ W_t` on `I_a`.
    pub strain: Option<Ratio>,
    /// `osc g_a / ((1 + a^{1/2}/h^{1/4})E^{1/2})`, when `w′ ∈ W_t` on `I_a`.
    pub oscillation: Option<Ratio>,
}

/// Ratio table for the lower-bound inequalities at one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    pub energy: EnergyBreakdown,
    pub tau: f64,
    /// `min{τ⁶, τ³h^{3/2}} ≲ E`.
    pub exit: Ratio,
    /// `h² ≲ E`.
    pub spherical: Ratio,
    pub l1: Vec<L1Bound>,
    /// Dyadic `a = 2^{−k}` that the grid resolves.
    pub ga: Vec<GaBound>,
    /// `δ ≲ δ^{1/4}log(1/h)^{1/4}E^{1/4} + E^{1/2}/(δ^{1/2}h^{1/4}) + (1+log(1/δ))E/(δ^{3/2}h)`,
    /// when `h ≤ √δ` and `w′ ∈ W⁺` on `[√δ/8, 1]`.
    pub outer_plus: Option<Ratio>,
    /// `min{1, 1/(δ log(1/h))} ≲ E`, when `h ≤ √δ` and `w′ ∈ W⁻` on `[√δ/8, 1]`.
    pub outer_minus: Option<Ratio>,
}

impl LowerBoundReport {
    /// Largest `‖g_a‖/(a^{1/2}E^{1/2})` over the resolved scales.
    pub fn max_ga_ratio(&self) -> Option<f64> {
        self.ga.iter().map(|g| g.norm.ratio).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    pub fn max_l1_ratio(&self) -> Option<f64> {
        self.l1.iter().map(|b| b.bound.ratio).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

/// `∫_0^s |w′|` with `w′(0) = 0` and linear interpolation at `s`.
fn slope_l1(p: &CapProfile, slope: &[f64], s: f64) -> f64 {
    let r = p.grid().r();
    let mut xs = alloc::vec![0.0];
    let mut fs = alloc::vec![0.0];
    for (i, &ri) in r.iter().enumerate() {
        if ri >= s {
            break;
        }
        xs.push(ri);
        fs.push(slope[i].abs());
    }
    xs.push(s);
    fs.push(interp(r, slope, s).abs());
    trapezoid(&xs, &fs)
}

fn wells_on(p: &CapProfile, slope: &[f64], lo: f64, hi: f64) -> Option<Well> {
    let mut found = None;
    for (&r, &s) in p.grid().r().iter().zip(slope) {
        if r < lo || r > hi {
            continue;
        }
        let w = in_well(s, r)?;
        match found {
            None => found = Some(w),
            Some(f) if f != w => return None,
            _ => {}
        }
    }
    found
}

/// Evaluates both sides of every lower-bound inequality at `p`. This is a
/// table of ratios; thresholds belong to the caller.
pub fn lower_bound_report(p: &CapProfile, h: f64, delta: f64) -> Result<LowerBoundReport> {
    check_thickness(h)?;
    let energy = cap_energy(p, h)?;
    let e = energy.total;
    let t = tau(p);
    let slope = p.slope();
    let exit = Ratio::new((t * t * t) * (t * t * t).min(libm::pow(h, 1.5)), e);
    let spherical = Ratio::new(h * h, e);
    let mut ss: Vec<f64> = [h, 0.125, 0.25, 0.5].into_iter().filter(|&s| s <= 0.5).collect();
    ss.dedup();
    let l1 = ss
        .into_iter()
        .map(|s| L1Bound { s, bound: Ratio::new(slope_l1(p, &slope, s), s / h * math::sqrt(e)) })
        .collect();

    let mut ga = Vec::new();
    let mut a = 0.5;
    while let Ok(g) = g_a_profile(p, a) {
        let norm = Ratio::new(g.l2_norm, math::sqrt(a * e));
        let (strain, oscillation) = if wells_on(p, &slope, a, 2.0 * a).is_some() {
            let sq: Vec<f64> = p
                .grid()
                .r()
                .iter()
                .zip(&slope)
                .map(|(r, s)| {
                    let d = 4.0 * r * r - s * s;
                    d * d
                })
                .collect();
            let (xs, fs) = subinterval(p, &sq, a, 2.0 * a)?;
            (
                Some(Ratio::new(trapezoid(&xs, &fs), (1.0 / a + a / h) * e)),
                Some(Ratio::new(g.oscillation, (1.0 + math::sqrt(a) / libm::pow(h, 0.25)) * math::sqrt(e))),
            )
        } else {
            (None, None)
        };
        ga.push(GaBound { a, norm, strain, oscillation });
        a *= 0.5;
    }

    let (mut outer_plus, mut outer_minus) = (None, None);
    if delta > 0.0 && h <= math::sqrt(delta) {
        match wells_on(p, &slope, math::sqrt(delta) / 8.0, 1.0) {
            Some(Well::Plus) => {
                let rhs = libm::pow(delta, 0.25) * libm::pow(math::ln(1.0 / h) * e, 0.25)
                    + math::sqrt(e) / (math::sqrt(delta) * libm::pow(h, 0.25))
                    + (1.0 + math::ln(1.0 / delta)) * e / (libm::pow(delta, 1.5) * h);
                outer_plus = Some(Ratio::new(delta, rhs));
            }
            Some(Well::Minus) => {
                let lhs = (1.0 / (delta * math::ln(1.0 / h))).min(1.0);
                outer_minus = Some(Ratio::new(lhs, e));
            }
            None => {}
        }
    }
    Ok(LowerBoundReport { energy, tau: t, exit, spherical, l1, ga, outer_plus, outer_minus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use approx::assert_relative_eq;

    #[test]
    fn wells_are_open() {
        assert_eq!(in_well(2.0, 1.0), Some(Well::Plus));
        assert_eq!(in_well(-2.0, 1.0), Some(Well::Minus));
        assert_eq!(in_well(1.5, 1.0), None);
        assert_eq!(in_well(-2.5, 1.0), None);
        assert_eq!(in_well(0.0, 0.1), None);
    }

    #[test]
    fn tau_of_simple_profiles() {
        let grid = RadialGrid::cell_centered(64).unwrap();
        let p = CapProfile::paraboloid(grid.clone(), 0.0).unwrap();
        assert_eq!(tau(&p), 0.0);
        let n = grid.len();
        let flat = CapProfile::new(grid, alloc::vec![0.0; n], alloc::vec![0.0; n], 1.0).unwrap();
        assert_eq!(tau(&flat), 1.0);
    }

    #[test]
    fn g_a_of_flat_profile() {
        // w′ = 0: g_a = (4/3)(r³ − a³) − mean, whose L² norm is computed in closed form
        let grid = RadialGrid::cell_centered(4000).unwrap();
        let n = grid.len();
        let p = CapProfile::new(grid, alloc::vec![0.0; n], alloc::vec![0.0; n], 1.0).unwrap();
        let a = 0.25;
        let g = g_a_profile(&p, a).unwrap();
        let f = |r: f64| 4.0 / 3.0 * (r * r * r - a * a * a);
        // mean and second moment of f on [a, 2a] by exact antiderivatives
        let m1 = (4.0 / 3.0) * ((libm::pow(2.0 * a, 4.0) - libm::pow(a, 4.0)) / 4.0 - a * a * a * a) / a;
        let m2_int = {
            let k = 16.0 / 9.0;
            let a3 = a * a * a;
            let prim = |r: f64| k * (libm::pow(r, 7.0) / 7.0 - a3 * libm::pow(r, 4.0) / 2.0 + a3 * a3 * r);
            prim(2.0 * a) - prim(a)
        };
        let exact = math::sqrt(m2_int - a * m1 * m1);
        assert_relative_eq!(g.l2_norm, exact, max_relative = 1e-5);
        assert!((g.values[0] - (f(a) - m1)).abs() < 1e-6);
        assert!(g_a_profile(&p, 0.001).is_err());
    }

    #[test]
    fn paraboloid_report() {
        let grid = RadialGrid::cell_centered(1024).unwrap();
        let p = CapProfile::paraboloid(grid, 0.0).unwrap();
        let h = 0.05;
        let rep = lower_bound_report(&p, h, 0.0).unwrap();
        assert_eq!(rep.tau, 0.0);
        assert_eq!(rep.exit.lhs, 0.0);
        assert_relative_eq!(rep.spherical.ratio, 0.25, max_relative = 1e-5);
        for b in &rep.l1 {
            // s² against 2s
            assert_relative_eq!(b.bound.lhs, b.s * b.s, max_relative = 1e-5);
            assert_relative_eq!(b.bound.rhs, 2.0 * b.s, max_relative = 1e-5);
        }
        assert!(rep.ga.iter().all(|g| g.norm.lhs < 1e-12));
    }
}
