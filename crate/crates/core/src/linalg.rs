//! Band Cholesky factorization and transform helpers (2D FFT, DST-I).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Cholesky factor `L` of a symmetric positive definite band matrix,
/// `A = L Lᵀ`, stored row-major with `bw + 1` slots per row.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    dim: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Factors the matrix whose lower band entries are given by
    /// `entry(i, j)` for `i - bw <= j <= i`.
    pub fn factor(dim: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut data = vec![0.0; dim * w];
        for i in 0..dim {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                let mut s = entry(i, j);
                for k in lo..j {
                    s -= data[ri + k] * data[rj + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "matrix not positive definite at pivot {i}"
                        )));
                    }
                    data[ri + i] = s.sqrt();
                } else {
                    data[ri + j] = s / data[rj + j];
                }
            }
        }
        Ok(Self { dim, bw, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn row(&self, i: usize) -> (&[f64], usize) {
        let w = self.bw + 1;
        let lo = i.saturating_sub(self.bw);
        let start = i * w + self.bw - i + lo;
        (&self.data[start..=i * w + self.bw], lo)
    }

    /// Entry `L[i][j]` (zero outside the band).
    pub fn l(&self, i: usize, j: usize) -> f64 {
        if j > i || i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + self.bw - i + j]
        }
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        for i in 0..self.dim {
            let (row, lo) = self.row(i);
            let (off, diag) = row.split_at(row.len() - 1);
            let s: f64 = off.iter().zip(&b[lo..i]).map(|(l, y)| l * y).sum();
            b[i] = (b[i] - s) / diag[0];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper(&self, y: &mut [f64]) {
        for i in (0..self.dim).rev() {
            let (row, lo) = self.row(i);
            let (off, diag) = row.split_at(row.len() - 1);
            let xi = y[i] / diag[0];
            y[i] = xi;
            for (t, l) in y[lo..i].iter_mut().zip(off) {
                *t -= l * xi;
            }
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_upper(b);
    }
}

/// In-place 2D FFT of a row-major `side × side` array.
pub struct Fft2 {
    side: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(side: usize, inverse: bool) -> Self {
        let mut planner = FftPlanner::new();
        let fft = if inverse {
            planner.plan_fft_inverse(side)
        } else {
            planner.plan_fft_forward(side)
        };
        Self { side, fft }
    }

    /// Unnormalized transform.
    pub fn process(&self, data: &mut [Complex64]) {
        let n = self.side;
        assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        self.fft.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }
}

/// `cos(2π j / n)` for `j = 0..n`.
pub fn fourier_cosines(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect()
}

fn transpose<T: Copy>(data: &mut [T], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Orthonormal type-I discrete sine transform on vectors of length `m`:
/// `y_k = sqrt(2/(m+1)) Σ_i v_i sin(π i k / (m+1))`, `i, k = 1..m`.
/// The transform is its own inverse.
pub struct Dst1 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Dst1 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            fft: planner.plan_fft_forward(2 * (m + 1)),
            scale: (2.0 / (m + 1) as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Basis function value `φ_k(i)` for `i, k ∈ 1..=m`.
    pub fn basis(&self, k: usize, i: usize) -> f64 {
        let big_m = (self.m + 1) as f64;
        self.scale * (std::f64::consts::PI * (k * i) as f64 / big_m).sin()
    }

    fn scratch(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        (
            vec![Complex64::default(); 2 * (self.m + 1)],
            vec![Complex64::default(); self.fft.get_inplace_scratch_len()],
        )
    }

    fn apply(&self, v: &mut [f64], buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let m = self.m;
        let big = m + 1;
        buf[0] = Complex64::default();
        buf[big] = Complex64::default();
        for (i, &x) in v.iter().enumerate() {
            buf[i + 1] = Complex64::new(x, 0.0);
            buf[2 * big - 1 - i] = Complex64::new(-x, 0.0);
        }
        self.fft.process_with_scratch(buf, scratch);
        for (k, out) in v.iter_mut().enumerate() {
            *out = -0.5 * buf[k + 1].im * self.scale;
        }
    }

    /// Transforms one vector in place.
    pub fn transform(&self, v: &mut [f64]) {
        assert_eq!(v.len(), self.m);
        let (mut buf, mut scratch) = self.scratch();
        self.apply(v, &mut buf, &mut scratch);
    }

    /// Separable 2D transform of a row-major `m × m` array.
    pub fn transform2(&self, data: &mut [f64]) {
        let m = self.m;
        assert_eq!(data.len(), m * m);
        let (mut buf, mut scratch) = self.scratch();
        for row in data.chunks_mut(m) {
            self.apply(row, &mut buf, &mut scratch);
        }
        transpose(data, m);
        for row in data.chunks_mut(m) {
            self.apply(row, &mut buf, &mut scratch);
        }
        transpose(data, m);
    }
}
