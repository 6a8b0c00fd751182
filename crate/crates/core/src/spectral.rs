//! Radix-2 FFT and spectral differentiation of periodic samples.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::math;

pub(crate) struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    /// `n` must be a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
                Complex64::new(math::cos(a), math::sin(a))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Self { n, twiddles, bitrev }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i];
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let mut tw = self.twiddles[k * stride];
                    if inverse {
                        tw = tw.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + len / 2] * tw;
                    data[start + k] = a + b;
                    data[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
        if inverse {
            let s = 1.0 / n as f64;
            for v in data.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    fn wavenumber(&self, k: usize) -> f64 {
        if k <= self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        }
    }

    /// Spectral derivatives of order 1 and 2 of real periodic samples on `[0, 2π)`.
    pub fn derivatives(&self, f: &[f64], scratch: &mut Vec<Complex64>, d1: &mut [f64], d2: &mut [f64]) {
        let n = self.n;
        scratch.clear();
        scratch.extend(f.iter().map(|&x| Complex64::new(x, 0.0)));
        self.forward(scratch);
        let spec: Vec<Complex64> = scratch.clone();
        for k in 0..n {
            let kk = self.wavenumber(k);
            // the Nyquist mode has no odd derivative for real data
            let ik = if 2 * k == n { 0.0 } else { kk };
            scratch[k] = spec[k] * Complex64::new(0.0, ik);
        }
        self.inverse(scratch);
        for (o, v) in d1.iter_mut().zip(scratch.iter()) {
            *o = v.re;
        }
        for k in 0..n {
            let kk = self.wavenumber(k);
            scratch[k] = spec[k] * (-kk * kk);
        }
        self.inverse(scratch);
        for (o, v) in d2.iter_mut().zip(scratch.iter()) {
            *o = v.re;
        }
    }

    /// Spectral first derivative.
    pub fn derivative(&self, f: &[f64], scratch: &mut Vec<Complex64>, out: &mut [f64]) {
        let n = self.n;
        scratch.clear();
        scratch.extend(f.iter().map(|&x| Complex64::new(x, 0.0)));
        self.forward(scratch);
        for k in 0..n {
            let ik = if 2 * k == n { 0.0 } else { self.wavenumber(k) };
            scratch[k] *= Complex64::new(0.0, ik);
        }
        self.inverse(scratch);
        for (o, v) in out.iter_mut().zip(scratch.iter()) {
            *o = v.re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn differentiates_trig_polynomials() {
        let n = 64;
        let fft = Fft::new(n);
        let t: Vec<f64> = (0..n).map(|j| 2.0 * core::f64::consts::PI * j as f64 / n as f64).collect();
        let f: Vec<f64> = t.iter().map(|&t| libm::sin(3.0 * t) + 0.5 * libm::cos(7.0 * t)).collect();
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        let mut scratch = Vec::new();
        fft.derivatives(&f, &mut scratch, &mut d1, &mut d2);
        for j in 0..n {
            let e1 = 3.0 * libm::cos(3.0 * t[j]) - 3.5 * libm::sin(7.0 * t[j]);
            let e2 = -9.0 * libm::sin(3.0 * t[j]) - 24.5 * libm::cos(7.0 * t[j]);
            assert!((d1[j] - e1).abs() < 1e-11);
            assert!((d2[j] - e2).abs() < 1e-10);
        }
    }
}
