use alloc::vec;
use alloc::vec::Vec;

/// Symmetric matrix stored by lower bands: `band[i*(bw+1) + k] = A[i][i-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bw: bandwidth, band: vec![0.0; n * (bandwidth + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.band.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds `v` to `A[i][j]` (and, implicitly, `A[j][i]`). Diagonal entries are
    /// added once; off-diagonal callers should add each unordered pair once.
    ///
    /// Panics if `|i - j|` exceeds the bandwidth.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        self.band[hi * (self.bw + 1) + k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bw {
            0.0
        } else {
            self.band[hi * (self.bw + 1) + k]
        }
    }

    pub fn shift_diagonal(&mut self, mu: f64) {
        for i in 0..self.n {
            self.band[i * (self.bw + 1)] += mu;
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            *o = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    /// Largest absolute diagonal entry.
    pub fn diag_scale(&self) -> f64 {
        (0..self.n).fold(0.0, |m, i| m.max(self.band[i * (self.bw + 1)].abs()))
    }

    /// In-place banded Cholesky `A = L Lᵀ`. Returns `false` if a pivot is not
    /// positive, leaving the storage partially overwritten.
    pub fn cholesky(&mut self) -> bool {
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let mut s = self.band[i * w + (i - j)];
                let kl = lo.max(j.saturating_sub(self.bw));
                for k in kl..j {
                    s -= self.band[i * w + (i - k)] * self.band[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return false;
                    }
                    self.band[i * w] = libm::sqrt(s);
                } else {
                    self.band[i * w + (i - j)] = s / self.band[j * w];
                }
            }
        }
        true
    }

    /// Solves `L Lᵀ x = b` in place after a successful [`cholesky`](Self::cholesky).
    pub fn cholesky_solve(&self, b: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.band[i * w + (i - k)] * b[k];
            }
            b[i] = s / self.band[i * w];
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let mut s = b[i];
            for k in i + 1..=hi {
                s -= self.band[k * w + (k - i)] * b[k];
            }
            b[i] = s / self.band[i * w];
        }
    }
}
