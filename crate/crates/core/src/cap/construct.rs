//! Spherical-inversion construction: the cap is mirrored (`w′ = −2r`) inside
//! radius `R − l`, left unchanged (`w′ = 2r`) outside `R + l`, and the two
//! branches are joined by a cubic connector in `x = (r − R)/l` chosen so that
//! the membrane strain vanishes identically.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::CapProfile;
use crate::error::{Error, Result};
use crate::grid::{check_depth, check_thickness, RadialGrid};
use crate::math;
use crate::poly::Poly;

/// Which formula produced `(R, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlBranch {
    /// `δ ≥ h`: `R = √((δ − h/2)/2)`, `l = √h/2`.
    Deep,
    /// `δ < h`: `R = (4/5)√(δ/2)`, `l = (3/5)√(δ/2)`.
    Shallow,
}

/// Connector center and half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlChoice {
    pub r: f64,
    pub l: f64,
    pub branch: RlBranch,
    /// `2l < R < 1/2`, i.e. the connector fits between the origin and the
    /// outer branch. The construction is skipped otherwise.
    pub feasible: bool,
}

/// Selects `(R, l)` for thickness `h` and depth `δ > 0`. Both branches give
/// `R² + l² = δ/2`. The `δ ≥ h` branch is used at `δ = h`.
///
/// The shallow branch always has `2l = 1.2·√(δ/2) > R`, so it is never
/// feasible; the deep branch is feasible for `δ > 5h/2` (and `δ` not too
/// close to 1 where `R` would reach 1/2).
pub fn choose_rl(h: f64, delta: f64) -> Result<RlChoice> {
    check_thickness(h)?;
    check_depth(delta)?;
    if delta == 0.0 {
        return Err(Error::domain("δ = 0 needs no connector"));
    }
    let (r, l, branch) = if delta >= h {
        (math::sqrt(0.5 * (delta - 0.5 * h)), 0.5 * math::sqrt(h), RlBranch::Deep)
    } else {
        let k = math::sqrt(0.5 * delta);
        (0.8 * k, 0.6 * k, RlBranch::Shallow)
    };
    let feasible = 2.0 * l < r && r + l < 1.0;
    Ok(RlChoice { r, l, branch, feasible })
}

/// Cubic connector slope `w₀′(x) = −l + (2R − s)x + 3l x² + s x³` on `[−1, 1]`.
///
/// Every member of the family has `w₀′(−1) = −2(R − l)`, `w₀′(1) = 2(R + l)`
/// and `∫w₀′ = 0`; the free coefficient `s` is the negative root of the
/// strain-balance condition `∫(4(R + l x)² − w₀′²)dx = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectorSpec {
    pub r: f64,
    pub l: f64,
    pub s: f64,
    slope: Poly,
    height: Poly,
    /// Antiderivative of `w₀′²` vanishing at `x = −1`.
    sq: Poly,
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

fn cubic(r: f64, l: f64, s: f64) -> Poly {
    Poly(vec![-l, 2.0 * r - s, 3.0 * l, s])
}

/// `∫_{−1}^{1}(4(R+lx)² − p(x)²)dx` by four-point Gauss–Legendre (exact for
/// the degree-six integrand).
fn balance(r: f64, l: f64, s: f64) -> f64 {
    let p = cubic(r, l, s);
    GAUSS4
        .iter()
        .map(|&(x, wt)| {
            let a = 2.0 * (r + l * x);
            let b = p.eval(x);
            wt * (a * a - b * b)
        })
        .sum()
}

/// Builds the connector for `0 < 2l < R`.
pub fn build_connector(r: f64, l: f64) -> Result<ConnectorSpec> {
    if !(l > 0.0 && 2.0 * l < r && r.is_finite()) {
        return Err(Error::Construction(format!("connector needs 0 < 2l < R, got R = {r}, l = {l}")));
    }
    // balance(0) > 0 and balance → −∞ as s → −∞: bracket the negative root
    let mut hi = 0.0;
    let mut lo = -r.max(l);
    let mut expand = 0;
    while balance(r, l, lo) >= 0.0 {
        hi = lo;
        lo *= 2.0;
        expand += 1;
        if expand > 200 || !lo.is_finite() {
            return Err(Error::Construction("could not bracket the connector parameter".into()));
        }
    }
    if balance(r, l, hi) <= 0.0 {
        return Err(Error::Construction("connector balance is not positive at s = 0".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if balance(r, l, mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s = if balance(r, l, lo).abs() < balance(r, l, hi).abs() { lo } else { hi };
    let slope = cubic(r, l, s);
    let anti = slope.antiderivative();
    let height = Poly({
        let mut c = anti.0.clone();
        c[0] -= anti.eval(-1.0);
        c
    });
    let sq_anti = slope.mul(&slope).antiderivative();
    let sq = Poly({
        let mut c = sq_anti.0.clone();
        c[0] -= sq_anti.eval(-1.0);
        c
    });
    Ok(ConnectorSpec { r, l, s, slope, height, sq })
}

impl ConnectorSpec {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.slope.0[0], self.slope.0[1], self.slope.0[2], self.slope.0[3]]
    }

    /// `w₀′(x)`.
    pub fn slope(&self, x: f64) -> f64 {
        self.slope.eval(x)
    }

    /// `w₀″(x)`.
    pub fn curvature(&self, x: f64) -> f64 {
        self.slope.derivative().eval(x)
    }

    /// `w₀(x)` with `w₀(−1) = 0`.
    pub fn height(&self, x: f64) -> f64 {
        self.height.eval(x)
    }

    /// `∫_{−1}^{x} w₀′²`.
    pub fn slope_sq_integral(&self, x: f64) -> f64 {
        self.sq.eval(x)
    }

    /// Largest violation of `w₀(±1) = 0`, `w₀′(1) = 2(R+l)`, `w₀′(−1) = −2(R−l)`.
    pub fn boundary_residual(&self) -> f64 {
        let (r, l) = (self.r, self.l);
        [
            self.height(-1.0),
            self.height(1.0),
            self.slope(1.0) - 2.0 * (r + l),
            self.slope(-1.0) + 2.0 * (r - l),
        ]
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫_{R−l}^{R+l}(4r² − w₀′((r−R)/l)²)dr`, evaluated exactly.
    pub fn balance_residual(&self) -> f64 {
        let (r, l) = (self.r, self.l);
        let outer = Poly(vec![2.0 * r, 2.0 * l]);
        let four_r2 = outer.mul(&outer).integral(-1.0, 1.0);
        l * (four_r2 - self.slope_sq_integral(1.0))
    }
}

/// Closed-form inversion profile for depth `δ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub choice: RlChoice,
    pub connector: ConnectorSpec,
}

impl Inversion {
    pub fn new(h: f64, delta: f64) -> Result<Self> {
        let choice = choose_rl(h, delta)?;
        if !choice.feasible {
            return Err(Error::Construction(format!(
                "(R, l) = ({:.6}, {:.6}) infeasible for h = {h}, δ = {delta}: need 2l < R and R + l < 1",
                choice.r, choice.l
            )));
        }
        let connector = build_connector(choice.r, choice.l)?;
        Ok(Self { choice, connector })
    }

    fn x(&self, r: f64) -> f64 {
        (r - self.choice.r) / self.choice.l
    }

    pub fn slope(&self, r: f64) -> f64 {
        let (c, l) = (self.choice.r, self.choice.l);
        if r <= c - l {
            -2.0 * r
        } else if r < c + l {
            self.connector.slope(self.x(r))
        } else {
            2.0 * r
        }
    }

    pub fn height(&self, r: f64) -> f64 {
        let (c, l) = (self.choice.r, self.choice.l);
        let (a, b) = (c - l, c + l);
        if r <= a {
            -r * r
        } else if r < b {
            -a * a + l * self.connector.height(self.x(r))
        } else {
            -a * a + r * r - b * b
        }
    }

    pub fn displacement(&self, r: f64) -> f64 {
        let (c, l) = (self.choice.r, self.choice.l);
        let a = c - l;
        if r <= a || r >= c + l {
            0.0
        } else {
            4.0 / 3.0 * (r * r * r - a * a * a) - l * self.connector.slope_sq_integral(self.x(r))
        }
    }
}

/// Samples the inversion construction for `(h, δ)` on `grid`. For `δ = 0`
/// this is the undeformed cap `u = 0`, `w = r²`.
pub fn build_inversion(h: f64, delta: f64, grid: &RadialGrid) -> Result<CapProfile> {
    check_thickness(h)?;
    check_depth(delta)?;
    if delta == 0.0 {
        return CapProfile::paraboloid(grid.clone(), 0.0);
    }
    let inv = Inversion::new(h, delta)?;
    let u: Vec<f64> = grid.r().iter().map(|&r| inv.displacement(r)).collect();
    let w: Vec<f64> = grid.r().iter().map(|&r| inv.height(r)).collect();
    CapProfile::new(grid.clone(), u, w, delta)
}
