//! Small dense least-squares solver used by the scaling fits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Least-squares solution of `A c ≈ y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    /// Coefficient of determination; `1.0` when `y` is constant and fitted exactly.
    pub r_squared: f64,
}

/// Relative column norm (after orthogonalization) below which the design is
/// treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Solves the least-squares problem for a row-major design matrix with
/// `columns` columns by Householder QR.
///
/// Fails with [`Error::Fit`] naming the first column that is (numerically) a
/// linear combination of the earlier ones.
pub fn least_squares(design: &[f64], columns: usize, y: &[f64]) -> Result<LinearFit> {
    let m = y.len();
    if columns == 0 || design.len() != m * columns {
        return Err(Error::Dimension { expected: m * columns, found: design.len() });
    }
    if m < columns {
        return Err(Error::Fit(format!(
            "{m} samples cannot determine {columns} coefficients"
        )));
    }
    if !design.iter().chain(y).all(|v| v.is_finite()) {
        return Err(Error::Fit("non-finite sample in fit".into()));
    }
    let mut a = design.to_vec();
    let mut b = y.to_vec();
    let col_norm = |a: &[f64], j: usize, from: usize| -> f64 {
        math::sqrt((from..m).map(|i| a[i * columns + j] * a[i * columns + j]).sum())
    };
    let original: Vec<f64> = (0..columns).map(|j| col_norm(&a, j, 0)).collect();

    for k in 0..columns {
        let norm = col_norm(&a, k, k);
        if original[k] == 0.0 || norm <= RANK_TOL * original[k] {
            return Err(Error::Fit(format!(
                "design column {k} is linearly dependent on the others"
            )));
        }
        let alpha = if a[k * columns + k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m];
        for i in k..m {
            v[i] = a[i * columns + k];
        }
        v[k] -= alpha;
        let vv: f64 = v[k..].iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..columns {
            let s: f64 = (k..m).map(|i| v[i] * a[i * columns + j]).sum::<f64>() * 2.0 / vv;
            for i in k..m {
                a[i * columns + j] -= s * v[i];
            }
        }
        let s: f64 = (k..m).map(|i| v[i] * b[i]).sum::<f64>() * 2.0 / vv;
        for i in k..m {
            b[i] -= s * v[i];
        }
    }
    let mut c = vec![0.0; columns];
    for k in (0..columns).rev() {
        let mut s = b[k];
        for j in k + 1..columns {
            s -= a[k * columns + j] * c[j];
        }
        c[k] = s / a[k * columns + k];
    }
    let mut ss_res = 0.0;
    for i in 0..m {
        let pred: f64 = (0..columns).map(|j| design[i * columns + j] * c[j]).sum();
        ss_res += (y[i] - pred) * (y[i] - pred);
    }
    let mean = y.iter().sum::<f64>() / m as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(LinearFit {
        coefficients: c,
        rms_residual: math::sqrt(ss_res / m as f64),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_plane() {
        let xs = [(0.0, 1.0), (1.0, 0.5), (2.0, -1.0), (3.0, 2.0), (-1.0, 0.0)];
        let mut design = Vec::new();
        let mut y = Vec::new();
        for &(p, q) in &xs {
            design.extend_from_slice(&[1.0, p, q]);
            y.push(0.5 - 2.0 * p + 3.0 * q);
        }
        let fit = least_squares(&design, 3, &y).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-12);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-12);
        assert!((fit.coefficients[2] - 3.0).abs() < 1e-12);
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn detects_collinear_columns() {
        let design = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        let err = least_squares(&design, 2, &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::Fit(ref m) if m.contains("column 1")));
    }

    #[test]
    fn too_few_samples() {
        assert!(least_squares(&[1.0, 2.0], 2, &[1.0]).is_err());
    }
}
