use alloc::vec;

use super::{dot, sup_norm, BandedSym, Descent, OptimSettings};
use crate::error::{Error, Result};

/// An objective that can also assemble its (banded) Hessian.
pub trait SecondOrder {
    fn dim(&self) -> usize;
    fn bandwidth(&self) -> usize;
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;
    /// Overwrites `hess` with the Hessian at `x`.
    fn hessian(&self, x: &[f64], hess: &mut BandedSym);
}

/// Relative Newton decrement below which an iterate counts as stationary even
/// if `grad_tol` is not met (the gradient may be dominated by rounding).
const DECREMENT_TOL: f64 = 1e-14;

/// Modified Newton method with Armijo backtracking.
///
/// When the Hessian is not positive definite a multiple of the identity is
/// added, growing tenfold until the banded Cholesky factorization succeeds.
/// `max_inner` bounds the number of Newton steps.
pub fn newton<O: SecondOrder + ?Sized>(
    objective: &O,
    init: &[f64],
    settings: &OptimSettings,
) -> Result<Descent> {
    settings.validate()?;
    let n = objective.dim();
    crate::error::check_len(n, init.len())?;
    let mut x = init.to_vec();
    let mut g = vec![0.0; n];
    let mut value = objective.eval(&x, &mut g);
    if !value.is_finite() || !g.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { iteration: 0, iterate: x });
    }
    let mut hess = BandedSym::zeros(n, objective.bandwidth());
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut trace = alloc::vec::Vec::new();
    let mut shift = 0.0_f64;

    for iter in 0..settings.max_inner {
        let gnorm = sup_norm(&g);
        if gnorm < settings.grad_tol {
            return Ok(Descent { x, value, trace, grad_norm: gnorm, converged: true });
        }
        objective.hessian(&x, &mut hess);
        let scale = hess.diag_scale().max(f64::MIN_POSITIVE);
        let mut mu = if shift > 0.0 { shift * 0.1 } else { 0.0 };
        let factor = loop {
            let mut f = hess.clone();
            if mu > 0.0 {
                f.shift_diagonal(mu);
            }
            if f.cholesky() {
                break f;
            }
            mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
            if mu > 1e20 * scale {
                return Err(Error::NonFinite { iteration: iter, iterate: x });
            }
        };
        shift = mu;
        dir.copy_from_slice(&g);
        factor.cholesky_solve(&mut dir);
        // descent direction is -dir
        let decrement = dot(&g, &dir);
        if !(decrement > 0.0) || !decrement.is_finite() {
            return Err(Error::NonFinite { iteration: iter, iterate: x });
        }
        if 0.5 * decrement <= DECREMENT_TOL * value.abs().max(f64::MIN_POSITIVE) {
            return Ok(Descent { x, value, trace, grad_norm: gnorm, converged: true });
        }
        let mut step = 1.0;
        let accepted = loop {
            for i in 0..n {
                trial[i] = x[i] - step * dir[i];
            }
            let v = objective.eval(&trial, &mut g_trial);
            // a step that does not strictly decrease the value is treated as a
            // stall: once the predicted decrease is below rounding, Armijo
            // accepts zero-progress steps forever
            if v.is_finite() && v <= value - settings.armijo_c * step * decrement && v < value {
                break Some(v);
            }
            step *= settings.backtrack_factor;
            if step < 1e-20 {
                break None;
            }
        };
        match accepted {
            Some(v) => {
                if !g_trial.iter().all(|t| t.is_finite()) {
                    return Err(Error::NonFinite { iteration: iter + 1, iterate: trial });
                }
                core::mem::swap(&mut x, &mut trial);
                core::mem::swap(&mut g, &mut g_trial);
                value = v;
                trace.push(v);
            }
            None => {
                let stalled = 0.5 * decrement <= 1e-10 * value.abs();
                return Ok(Descent { x, value, trace, grad_norm: gnorm, converged: stalled });
            }
        }
    }
    let gnorm = sup_norm(&g);
    Ok(Descent { x, value, trace, grad_norm: gnorm, converged: gnorm < settings.grad_tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Σ (x_i - x_{i-1})² + Σ (x_i² - 1)² / 4 with x_{-1} = 0; tridiagonal Hessian.
    struct Chain(usize);

    impl SecondOrder for Chain {
        fn dim(&self) -> usize {
            self.0
        }
        fn bandwidth(&self) -> usize {
            1
        }
        fn eval(&self, x: &[f64], g: &mut [f64]) -> f64 {
            g.iter_mut().for_each(|v| *v = 0.0);
            let mut f = 0.0;
            for i in 0..self.0 {
                let prev = if i == 0 { 0.0 } else { x[i - 1] };
                let d = x[i] - prev;
                f += d * d;
                g[i] += 2.0 * d;
                if i > 0 {
                    g[i - 1] -= 2.0 * d;
                }
                let q = x[i] * x[i] - 1.0;
                f += 0.25 * q * q;
                g[i] += q * x[i];
            }
            f
        }
        fn hessian(&self, x: &[f64], h: &mut BandedSym) {
            h.clear();
            for i in 0..self.0 {
                h.add(i, i, 2.0 + 3.0 * x[i] * x[i] - 1.0);
                if i > 0 {
                    h.add(i - 1, i - 1, 2.0);
                    h.add(i, i - 1, -2.0);
                }
            }
        }
    }

    #[test]
    fn converges_from_indefinite_start() {
        let c = Chain(12);
        let init = vec![0.1; 12];
        let s = OptimSettings { grad_tol: 1e-12, max_inner: 200, ..Default::default() };
        let out = newton(&c, &init, &s).unwrap();
        assert!(out.converged);
        assert!(out.grad_norm < 1e-10 || out.iterations() < 200);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        let mut g = vec![0.0; 12];
        c.eval(&out.x, &mut g);
        assert!(sup_norm(&g) < 1e-8);
    }

    #[test]
    fn chain_hessian_matches_gradient() {
        let c = Chain(5);
        let x = [0.3, -0.2, 0.9, 1.4, -0.7];
        let mut h = BandedSym::zeros(5, 1);
        c.hessian(&x, &mut h);
        let mut gp = vec![0.0; 5];
        let mut gm = vec![0.0; 5];
        let eps = 1e-6;
        for j in 0..5 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += eps;
            xm[j] -= eps;
            c.eval(&xp, &mut gp);
            c.eval(&xm, &mut gm);
            for i in 0..5 {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                assert!((fd - h.get(i, j)).abs() < 1e-6, "({i},{j})");
            }
        }
    }
}
