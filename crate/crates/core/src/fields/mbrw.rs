//! Modified branching random walk.
//!
//! Scale `k` contributes `Σ_{B ∈ B_k(z)} b_{k,[B]}` where `[B]` is the torus
//! class of the side-`2^k` box `B` and the `b` are independent with variance
//! `2^{-2k}`. Indexing the noise by canonical lower-left corner turns each
//! scale layer into a circular box sum of a white-noise array, computed here
//! with separable running sums.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::lattice::{GridPoint, GridSpec};
use crate::rng::{stream, SimRng};

use super::{fill_normal, FieldKind, FieldSample, FieldSampler, ScaleWindow};

/// Per-scale white noise indexed by canonical box corner.
#[derive(Debug, Clone)]
pub struct NoiseBank {
    grid: GridSpec,
    window: ScaleWindow,
    /// `noise[k - k_lo]`, row-major over corners, variance `2^{-2k}`.
    noise: Vec<Vec<f64>>,
}

impl NoiseBank {
    pub fn draw(grid: GridSpec, window: ScaleWindow, rng: &mut SimRng) -> Self {
        let s2 = grid.len();
        let noise = (window.k_lo..=window.k_hi)
            .map(|k| {
                let mut v = vec![0.0; s2];
                fill_normal(rng, &mut v, (-(k as f64)).exp2());
                v
            })
            .collect();
        Self {
            grid,
            window,
            noise,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn window(&self) -> ScaleWindow {
        self.window
    }

    /// Noise variable `b_{k,B}` of the box with canonical corner `c`.
    pub fn noise(&self, k: u32, c: GridPoint) -> f64 {
        self.noise[(k - self.window.k_lo) as usize][c.index(self.grid.side())]
    }

    /// Scale-`k` layer on the whole grid: `Σ_{a,b < 2^k} noise(z - (a,b))`.
    pub fn layer(&self, k: u32) -> Vec<f64> {
        let side = self.grid.side();
        let len = 1usize << k;
        let src = &self.noise[(k - self.window.k_lo) as usize];
        let mut rows = vec![0.0; side * side];
        for (r, out) in rows.chunks_mut(side).enumerate() {
            window_sum(&src[r * side..(r + 1) * side], len, out);
        }
        let mut layer = vec![0.0; side * side];
        let mut acc = vec![0.0; side];
        for a in 0..len {
            let r = (side - a % side) % side;
            for (s, v) in acc.iter_mut().zip(&rows[r * side..(r + 1) * side]) {
                *s += v;
            }
        }
        for z1 in 0..side {
            if z1 > 0 {
                let add = z1;
                let sub = (z1 + side - len % side) % side;
                if !len.is_multiple_of(side) {
                    for c in 0..side {
                        acc[c] += rows[add * side + c] - rows[sub * side + c];
                    }
                }
            }
            layer[z1 * side..(z1 + 1) * side].copy_from_slice(&acc);
        }
        layer
    }

    /// All layers of the window.
    pub fn layers(&self) -> ScaleLayers {
        ScaleLayers {
            grid: self.grid,
            window: self.window,
            layers: (self.window.k_lo..=self.window.k_hi)
                .map(|k| self.layer(k))
                .collect(),
        }
    }

    /// Scale-`k` layer at a single site by explicit summation over the
    /// `2^{2k}` boxes containing it.
    pub fn layer_at(&self, k: u32, z: GridPoint) -> f64 {
        let side = self.grid.side();
        let len = 1i64 << k;
        let src = &self.noise[(k - self.window.k_lo) as usize];
        let mut s = 0.0;
        for a in 0..len {
            let r = (z.x1 - a).rem_euclid(side as i64) as usize;
            for b in 0..len {
                let c = (z.x2 - b).rem_euclid(side as i64) as usize;
                s += src[r * side + c];
            }
        }
        s
    }
}

/// Cyclic running sum `out[z] = Σ_{b < len} v[(z - b) mod n]`.
fn window_sum(v: &[f64], len: usize, out: &mut [f64]) {
    let n = v.len();
    if len >= n {
        let total: f64 = v.iter().sum();
        out.fill(total);
        return;
    }
    let mut s: f64 = (0..len).map(|b| v[(n - b) % n]).sum();
    out[0] = s;
    for z in 1..n {
        s += v[z] - v[(z + n - len) % n];
        out[z] = s;
    }
}

/// Scale layers of one realization.
#[derive(Debug, Clone)]
pub struct ScaleLayers {
    grid: GridSpec,
    window: ScaleWindow,
    layers: Vec<Vec<f64>>,
}

impl ScaleLayers {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn window(&self) -> ScaleWindow {
        self.window
    }

    pub fn layer(&self, k: u32) -> &[f64] {
        &self.layers[(k - self.window.k_lo) as usize]
    }

    /// Sum of the layers: the windowed MBRW field.
    pub fn field(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for l in &self.layers {
            for (o, v) in out.iter_mut().zip(l) {
                *o += v;
            }
        }
        out
    }

    /// Scale path at row-major site `idx`, written into `out` (length `n + 1`).
    /// Requires the full window.
    pub fn path_into(&self, idx: usize, out: &mut [f64]) {
        let n = self.grid.n();
        debug_assert_eq!(self.window, ScaleWindow::full(n));
        let mut s = 0.0;
        for (j, o) in out.iter_mut().enumerate() {
            s += self.layers[n as usize - j][idx];
            *o = s;
        }
    }

    pub fn path(&self, z: GridPoint) -> Result<ScalePath> {
        let n = self.grid.n();
        if self.window != ScaleWindow::full(n) {
            return Err(invalid("scale paths need the full window 0..=n"));
        }
        let mut values = vec![0.0; n as usize + 1];
        self.path_into(z.index(self.grid.side()), &mut values);
        Ok(ScalePath { site: z, values })
    }
}

/// `S_z(j) = Σ_{k=n-j}^{n}` (scale-`k` layer at `z`), `j = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalePath {
    pub site: GridPoint,
    pub values: Vec<f64>,
}

impl ScalePath {
    /// The full field value `S_z = S_z(n)`.
    pub fn end(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }
}

/// Scale path of `z` computed directly from the noise bank.
pub fn mbrw_scale_path(bank: &NoiseBank, z: GridPoint) -> Result<ScalePath> {
    let n = bank.grid().n();
    if bank.window() != ScaleWindow::full(n) {
        return Err(invalid("noise bank must cover scales 0..=n"));
    }
    if !z.in_box(bank.grid().side()) {
        return Err(invalid(format!("site {z:?} outside the grid")));
    }
    let mut s = 0.0;
    let values = (0..=n)
        .map(|j| {
            s += bank.layer_at(n - j, z);
            s
        })
        .collect();
    Ok(ScalePath { site: z, values })
}

/// Sampler of the (windowed) MBRW.
pub struct MbrwSampler {
    grid: GridSpec,
    window: ScaleWindow,
}

impl MbrwSampler {
    pub fn new(grid: GridSpec, window: ScaleWindow) -> Self {
        Self { grid, window }
    }

    pub fn bank(&self, rng: &mut SimRng) -> NoiseBank {
        NoiseBank::draw(self.grid, self.window, rng)
    }
}

impl FieldSampler for MbrwSampler {
    fn kind(&self) -> FieldKind {
        FieldKind::Mbrw
    }

    fn side(&self) -> usize {
        self.grid.side()
    }

    fn fill(&self, rng: &mut SimRng, out: &mut [f64]) {
        let bank = self.bank(rng);
        out.fill(0.0);
        for k in self.window.k_lo..=self.window.k_hi {
            for (o, v) in out.iter_mut().zip(bank.layer(k)) {
                *o += v;
            }
        }
    }
}

/// One MBRW sample over the given scale window (replicate 0 of `seed`).
pub fn sample_mbrw(grid: GridSpec, window: ScaleWindow, seed: u64) -> Result<FieldSample> {
    ScaleWindow::new(window.k_lo, window.k_hi, grid.n())?;
    Ok(MbrwSampler::new(grid, window).sample(&mut stream(seed, 0)))
}
